"""End-to-end smoke tests for the Python bindings."""

import math

import numpy as np
import pytest

import g2d


def test_metrics_against_hand_values():
    scores = [0.9, 0.8, 0.2, 0.1]
    labels = [1, 1, 0, 0]
    assert g2d.roc_auc(scores, labels) == 1.0
    assert g2d.equal_error_rate(scores, labels) == 0.0
    assert g2d.f1_score(scores, labels, 0.5) == 1.0
    assert g2d.f1_score([0.5] * 4, [0, 0, 0, 0], 0.5) == 1.0

    tied = [0.5, 0.5, 0.5, 0.5]
    assert g2d.roc_auc(tied, [1, 0, 1, 0]) == 0.5


def test_bce_loss():
    assert g2d.bce_loss(0.5, 1) == pytest.approx(math.log(2.0))
    assert g2d.bce_loss(0.9, 0) == pytest.approx(-math.log(0.1))


def test_energy_distance_identity():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(50, 3))
    assert g2d.energy_distance(a, a) == 0.0
    b = rng.normal(loc=4.0, size=(60, 3))
    assert g2d.energy_distance(a, b) > 1.0


def test_patch_extraction_matches_layout():
    frame = np.zeros((240, 360))
    patches, origins = g2d.extract_patches(frame, patch_size=30, overlap=5)
    assert patches.shape == (150, 1, 30, 30)
    assert len(origins) == 150
    assert origins[0] == (0, 0)


def test_frame_scores_max_rule():
    scores, labels, frames = g2d.frame_scores([0.1, 0.9, 0.3], [1, 1, 0], [0, 0, 1])
    assert scores == [0.9, 0.3]
    assert labels == [1, 0]
    assert frames == [0, 1]


def test_contaminate_composition():
    rng = np.random.default_rng(2)
    inliers = rng.normal(size=(90, 2))
    pool = rng.normal(loc=5.0, size=(60, 2))
    samples, labels = g2d.contaminate(inliers, pool, fraction=0.1, seed=3)
    assert samples.shape == (100, 2)
    assert sum(labels) == 10


def test_ring_micro_pipeline():
    normals = g2d.synth_ring(256, radius=1.0, width=0.05, seed=5)
    run = g2d.train_gan(normals, epochs=12, lr=5e-4, batch_size=32,
                        latent_dim=16, hidden=32, seed=6)
    assert run.epochs == 12
    epochs, loss_gen, loss_critic = run.trajectory()
    assert epochs == list(range(1, 13))
    assert len(loss_gen) == 12 and len(loss_critic) == 12

    batch = run.sample(12, count=7, seed=8)
    assert batch.shape == (7, 2)
    again = run.sample(12, count=7, seed=8)
    assert np.array_equal(batch, again)

    selected = run.select_epochs(k=2, include_noise_fraction=0.0)
    assert len(selected) == 2
    outliers = run.generate_outliers(selected, per_generator=64, seed=9)
    assert outliers.shape == (128, 2)

    samples = np.concatenate([normals, outliers])
    labels = [0] * len(normals) + [1] * len(outliers)
    detector = g2d.train_detector(samples, labels, epochs=15, hidden=32, seed=10)
    p_normal = detector.score(normals)
    assert len(p_normal) == len(normals)
    assert all(0.0 <= p <= 1.0 for p in p_normal)
    decisions = detector.classify(outliers, alpha=0.5)
    assert set(decisions) <= {0, 1}
    assert detector.epoch_losses[-1] < detector.epoch_losses[0]


def test_pca_projection_shape():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(50, 6))
    proj = g2d.pca_project(x, dim=2)
    assert proj.shape == (50, 2)


def test_synth_video_labels():
    frames, labels = g2d.synth_video(6, [2], seed=12, height=60, width=80)
    assert frames.shape == (6, 1, 60, 80)
    assert labels == [0, 0, 1, 0, 0, 0]


def test_errors_surface_as_exceptions():
    with pytest.raises(g2d.G2dError):
        g2d.roc_auc([0.5, 0.6], [1, 1])  # single class
    with pytest.raises(g2d.G2dError):
        g2d.synth_ring(0, 1.0, 0.05, seed=1)
