"""Anomaly detection by generating pseudo-anomalies.

Thin Python surface over the C++ core: adversarial training on normal data,
training-snapshot selection, pseudo-anomaly synthesis, a binary detector and
the evaluation metrics (F1 / ROC-AUC / frame-level EER / energy distance).
"""

from _g2d import (
    Detector,
    G2dError,
    GanRun,
    bce_loss,
    clip_weights,
    contaminate,
    energy_distance,
    equal_error_rate,
    extract_patches,
    f1_score,
    frame_scores,
    load_idx,
    pca_project,
    roc_auc,
    run_all,
    run_stage,
    synth_digits,
    synth_ring,
    synth_video,
    train_detector,
    train_gan,
)

__all__ = [
    "Detector",
    "G2dError",
    "GanRun",
    "bce_loss",
    "clip_weights",
    "contaminate",
    "energy_distance",
    "equal_error_rate",
    "extract_patches",
    "f1_score",
    "frame_scores",
    "load_idx",
    "pca_project",
    "roc_auc",
    "run_all",
    "run_stage",
    "synth_digits",
    "synth_ring",
    "synth_video",
    "train_detector",
    "train_gan",
]
