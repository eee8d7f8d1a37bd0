#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "g2d/gan.hpp"

namespace g2d {

/// Training-phase label for one epoch, keyed on the magnitude of the loss
/// delta L(i) = smoothed_loss(i) - smoothed_loss(i+h). Large deltas mean the
/// generator is still far from the data (noise), small ones mean it has
/// converged (inlier); the band in between the two is where the useful
/// boundary anomalies live. Transitional covers the gap between noise and
/// boundary and is never selected.
enum class Regime { Noise, Boundary, Inlier, Transitional };

const char* regime_name(Regime r);

/// eps1 > eps2 > eps3 > 0.
struct SelectionThresholds {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;

  void validate() const;
};

/// Per-epoch generator/critic losses plus the smoothing used for delta
/// queries. Smoothing is a centered moving average, edge-truncated.
class LossTrajectory {
 public:
  LossTrajectory() = default;
  explicit LossTrajectory(std::vector<EpochRecord> records, int smoothing_window = 3);

  const std::vector<EpochRecord>& records() const { return records_; }
  int smoothing_window() const { return smoothing_window_; }
  std::size_t epoch_count() const { return records_.size(); }
  int first_epoch() const;
  int last_epoch() const;

  /// Smoothed generator-loss series, same length as records().
  const std::vector<double>& smoothed() const { return smoothed_; }

  /// L = smoothed(i) - smoothed(i+h) for 1-based epoch i. Requires
  /// i + h <= last epoch.
  double loss_delta(int epoch, int h) const;

  /// Epochs for which loss_delta is defined.
  std::vector<int> delta_epochs(int h) const;

 private:
  std::size_t position(int epoch) const;

  std::vector<EpochRecord> records_;
  int smoothing_window_ = 3;
  std::vector<double> smoothed_;
};

/// Data-driven defaults: with L_max = max_i |loss_delta(i, h)|,
/// eps1 = 0.5 L_max, eps2 = 0.1 L_max, eps3 = 0.02 L_max. A flat trajectory
/// (L_max == 0) is an error.
SelectionThresholds default_thresholds(const LossTrajectory& traj, int h);

/// Band membership by |L|: >= eps1 noise; [eps2, eps1) transitional;
/// [eps3, eps2) boundary; < eps3 inlier.
Regime classify_epoch(double delta, const SelectionThresholds& thr);

/// Epoch numbers of the k pseudo-anomaly generators: ceil(k*(1-noise_fraction))
/// spaced evenly across the boundary band by epoch, the remainder evenly
/// across the noise band, in epoch order. Errors if no boundary epochs exist.
std::vector<int> select_epochs(const LossTrajectory& traj, const SelectionThresholds& thr,
                               std::size_t k, double include_noise_fraction, int h = 5);

/// select_epochs resolved against stored snapshots.
std::vector<ModelSnapshot> select_generators(const LossTrajectory& traj,
                                             const std::vector<ModelSnapshot>& snapshots,
                                             const SelectionThresholds& thr, std::size_t k,
                                             double include_noise_fraction, int h = 5);

struct RegimeRow {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> delta;  // empty for the trailing h epochs
  std::optional<Regime> regime;
};

std::vector<RegimeRow> regime_table(const LossTrajectory& traj, const SelectionThresholds& thr,
                                    int h);

/// CSV with header epoch,loss,delta,regime; delta/regime cells are empty
/// where the delta is undefined.
void write_regime_csv(const std::vector<RegimeRow>& rows, std::ostream& out);

/// Selected epoch numbers for a selection result (helper for manifests).
std::vector<int> epochs_of(const std::vector<ModelSnapshot>& snapshots);

}  // namespace g2d
