#include "g2d/snapshots.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "g2d/csv.hpp"
#include "g2d/error.hpp"

namespace g2d {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Noise: return "noise";
    case Regime::Boundary: return "boundary";
    case Regime::Inlier: return "inlier";
    case Regime::Transitional: return "transitional";
  }
  return "?";
}

void SelectionThresholds::validate() const {
  if (!(eps1 > eps2 && eps2 > eps3 && eps3 > 0.0)) {
    throw G2dError("thresholds must satisfy eps1 > eps2 > eps3 > 0, got (" +
                   std::to_string(eps1) + ", " + std::to_string(eps2) + ", " +
                   std::to_string(eps3) + ")");
  }
}

LossTrajectory::LossTrajectory(std::vector<EpochRecord> records, int smoothing_window)
    : records_(std::move(records)), smoothing_window_(smoothing_window) {
  if (smoothing_window_ < 1 || smoothing_window_ % 2 == 0) {
    throw G2dError("smoothing window must be a positive odd integer");
  }
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].epoch <= records_[i - 1].epoch) {
      throw G2dError("epoch indices must be strictly increasing");
    }
  }
  const std::size_t n = records_.size();
  smoothed_.resize(n);
  const int half = smoothing_window_ / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(half));
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += records_[j].loss_gen;
    smoothed_[i] = acc / static_cast<double>(hi - lo + 1);
  }
}

int LossTrajectory::first_epoch() const {
  if (records_.empty()) throw G2dError("empty trajectory");
  return records_.front().epoch;
}

int LossTrajectory::last_epoch() const {
  if (records_.empty()) throw G2dError("empty trajectory");
  return records_.back().epoch;
}

std::size_t LossTrajectory::position(int epoch) const {
  const auto it = std::lower_bound(
      records_.begin(), records_.end(), epoch,
      [](const EpochRecord& r, int e) { return r.epoch < e; });
  if (it == records_.end() || it->epoch != epoch) {
    throw G2dError("no record for epoch " + std::to_string(epoch));
  }
  return static_cast<std::size_t>(it - records_.begin());
}

double LossTrajectory::loss_delta(int epoch, int h) const {
  if (h < 1) throw G2dError("loss_delta: horizon h must be >= 1");
  if (records_.empty()) throw G2dError("loss_delta: empty trajectory");
  if (epoch < first_epoch() || epoch + h > last_epoch()) {
    throw G2dError("loss_delta: epoch " + std::to_string(epoch) + " with h=" +
                   std::to_string(h) + " outside [" + std::to_string(first_epoch()) + ", " +
                   std::to_string(last_epoch()) + "]");
  }
  return smoothed_[position(epoch)] - smoothed_[position(epoch + h)];
}

std::vector<int> LossTrajectory::delta_epochs(int h) const {
  std::vector<int> out;
  for (const EpochRecord& r : records_) {
    if (r.epoch + h <= last_epoch()) out.push_back(r.epoch);
  }
  return out;
}

SelectionThresholds default_thresholds(const LossTrajectory& traj, int h) {
  const std::vector<int> epochs = traj.delta_epochs(h);
  if (epochs.empty()) {
    throw G2dError("default_thresholds: trajectory shorter than h+1 epochs");
  }
  double l_max = 0.0;
  for (int e : epochs) l_max = std::max(l_max, std::abs(traj.loss_delta(e, h)));
  if (l_max == 0.0) {
    throw G2dError("default_thresholds: flat trajectory, cannot derive thresholds");
  }
  return SelectionThresholds{0.5 * l_max, 0.1 * l_max, 0.02 * l_max};
}

Regime classify_epoch(double delta, const SelectionThresholds& thr) {
  thr.validate();
  const double mag = std::abs(delta);
  if (mag >= thr.eps1) return Regime::Noise;
  if (mag >= thr.eps2) return Regime::Transitional;
  if (mag >= thr.eps3) return Regime::Boundary;
  return Regime::Inlier;
}

namespace {

// q elements spaced evenly across band (median for q == 1); repeats only when
// the band is smaller than the request
std::vector<int> pick_even(const std::vector<int>& band, std::size_t q) {
  std::vector<int> out;
  if (q == 0 || band.empty()) return out;
  const std::size_t len = band.size();
  if (q == 1) {
    out.push_back(band[(len - 1) / 2]);
    return out;
  }
  for (std::size_t j = 0; j < q; ++j) {
    const double pos = static_cast<double>(j) * static_cast<double>(len - 1) /
                       static_cast<double>(q - 1);
    out.push_back(band[static_cast<std::size_t>(std::llround(pos))]);
  }
  return out;
}

}  // namespace

std::vector<int> select_epochs(const LossTrajectory& traj, const SelectionThresholds& thr,
                               std::size_t k, double include_noise_fraction, int h) {
  thr.validate();
  if (k < 1) throw G2dError("select_generators: k must be >= 1");
  if (include_noise_fraction < 0.0 || include_noise_fraction > 0.5) {
    throw G2dError("select_generators: include_noise_fraction must lie in [0, 0.5]");
  }
  std::vector<int> boundary, noise;
  for (int e : traj.delta_epochs(h)) {
    switch (classify_epoch(traj.loss_delta(e, h), thr)) {
      case Regime::Boundary: boundary.push_back(e); break;
      case Regime::Noise: noise.push_back(e); break;
      default: break;
    }
  }
  if (boundary.empty()) {
    throw G2dError(
        "select_generators: no epochs fall in the boundary band; widen the thresholds "
        "(lower eps3 or raise eps2) and rerun selection");
  }
  std::size_t n_boundary = static_cast<std::size_t>(
      std::ceil(static_cast<double>(k) * (1.0 - include_noise_fraction)));
  n_boundary = std::min(n_boundary, k);
  std::size_t n_noise = k - n_boundary;
  if (noise.empty()) {
    n_boundary = k;
    n_noise = 0;
  }

  std::vector<int> chosen = pick_even(boundary, n_boundary);
  const std::vector<int> from_noise = pick_even(noise, n_noise);
  chosen.insert(chosen.end(), from_noise.begin(), from_noise.end());
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<ModelSnapshot> select_generators(const LossTrajectory& traj,
                                             const std::vector<ModelSnapshot>& snapshots,
                                             const SelectionThresholds& thr, std::size_t k,
                                             double include_noise_fraction, int h) {
  const std::vector<int> chosen = select_epochs(traj, thr, k, include_noise_fraction, h);
  std::vector<ModelSnapshot> out;
  out.reserve(chosen.size());
  for (int epoch : chosen) {
    const auto it = std::find_if(snapshots.begin(), snapshots.end(),
                                 [epoch](const ModelSnapshot& s) { return s.epoch == epoch; });
    if (it == snapshots.end()) {
      throw G2dError("select_generators: no snapshot stored for epoch " + std::to_string(epoch));
    }
    out.push_back(*it);
  }
  return out;
}

std::vector<RegimeRow> regime_table(const LossTrajectory& traj, const SelectionThresholds& thr,
                                    int h) {
  std::vector<RegimeRow> rows;
  rows.reserve(traj.epoch_count());
  for (const EpochRecord& r : traj.records()) {
    RegimeRow row;
    row.epoch = r.epoch;
    row.loss = r.loss_gen;
    if (r.epoch + h <= traj.last_epoch()) {
      row.delta = traj.loss_delta(r.epoch, h);
      row.regime = classify_epoch(*row.delta, thr);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_regime_csv(const std::vector<RegimeRow>& rows, std::ostream& out) {
  out << "epoch,loss,delta,regime\n";
  for (const RegimeRow& r : rows) {
    out << r.epoch << ',' << csv_double(r.loss) << ',';
    if (r.delta) out << csv_double(*r.delta);
    out << ',';
    if (r.regime) out << regime_name(*r.regime);
    out << '\n';
  }
}

std::vector<int> epochs_of(const std::vector<ModelSnapshot>& snapshots) {
  std::vector<int> out;
  out.reserve(snapshots.size());
  for (const ModelSnapshot& s : snapshots) out.push_back(s.epoch);
  return out;
}

}  // namespace g2d
