#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "g2d/tensor.hpp"

namespace g2d {

/// Per-sample anomaly scores (1 - p_normal) with ground truth and optional
/// frame grouping.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<int> frame_index;  // empty, or size scores.size()

  std::size_t size() const { return scores.size(); }
  void validate() const;
};

/// F1 of the anomaly class. A sample is predicted anomalous when its normal
/// probability 1 - score falls below alpha, matching the detector's decision
/// rule. The empty-positive/empty-truth case is defined as 1.
double f1_score(const ScoredSet& scored, double alpha);

/// Mann-Whitney AUC with ties counted one half.
double roc_auc(const ScoredSet& scored);

/// Equal error rate from a full threshold sweep, linearly interpolated
/// between the two thresholds bracketing the FPR/FNR crossing.
double equal_error_rate(const ScoredSet& scored);

/// Collapse patch scores to frame scores: a frame's anomaly score is the max
/// over its patches, so thresholding reproduces the any-patch rule. A frame's
/// label is the max of its patch labels.
ScoredSet frame_scores(const ScoredSet& patch_scored);

/// Energy distance 2 E||a-b|| - E||a-a'|| - E||b-b'|| over all pairs
/// (including self-pairs, so identical batches give exactly 0).
double energy_distance(const Tensor& a, const Tensor& b);

/// Projection onto the top principal components via power iteration with
/// deflation. Deterministic up to component sign.
Tensor pca_project(const Tensor& samples, std::size_t dim = 2);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC polyline from the same sweep the metrics use, sorted by FPR.
std::vector<RocPoint> roc_curve(const ScoredSet& scored);

struct FrameRow {
  int frame = 0;
  double score = 0.0;
  int label = 0;
  int predicted = 0;
};

struct EvalReport {
  double f1 = 0.0;
  double auc = 0.0;
  double eer = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<std::pair<std::string, double>> drift;  // named drift statistics
  std::vector<RocPoint> roc;
  std::vector<std::pair<double, double>> f1_vs_contamination;
  std::vector<FrameRow> frames;
};

/// Confusion counts under the same decision rule as f1_score.
void fill_confusion(const ScoredSet& scored, double alpha, EvalReport& report);

/// Writes metrics.csv, roc.csv, f1_vs_contamination.csv, frames.csv (when
/// frame rows exist) and plots.svg into out_dir.
void emit_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace g2d
