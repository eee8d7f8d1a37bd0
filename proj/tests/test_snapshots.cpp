#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "g2d/error.hpp"
#include "g2d/rng.hpp"
#include "g2d/snapshots.hpp"

using namespace g2d;

namespace {

LossTrajectory from_losses(const std::vector<double>& losses, int window = 1) {
  std::vector<EpochRecord> records;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    EpochRecord r;
    r.epoch = static_cast<int>(i + 1);
    r.loss_gen = losses[i];
    records.push_back(r);
  }
  return LossTrajectory(std::move(records), window);
}

// build a loss series realizing the requested delta per epoch (window 1)
LossTrajectory from_deltas(const std::vector<double>& deltas, int h) {
  const std::size_t n = deltas.size() + static_cast<std::size_t>(h);
  std::vector<double> losses(n, 0.0);
  for (std::size_t i = deltas.size(); i-- > 0;) {
    losses[i] = losses[i + static_cast<std::size_t>(h)] + deltas[i];
  }
  return from_losses(losses);
}

std::vector<ModelSnapshot> stub_snapshots(int count) {
  std::vector<ModelSnapshot> out;
  for (int e = 1; e <= count; ++e) out.push_back(ModelSnapshot{e, 0.0, {}});
  return out;
}

}  // namespace

TEST_CASE("loss_delta on constant and linear series") {
  const LossTrajectory constant = from_losses(std::vector<double>(12, 3.5));
  for (int i = 1; i <= 7; ++i) CHECK(constant.loss_delta(i, 5) == 0.0);

  std::vector<double> linear;
  for (int i = 1; i <= 20; ++i) linear.push_back(100.0 - i);
  const LossTrajectory traj = from_losses(linear);
  for (int i = 1; i <= 15; ++i) CHECK(traj.loss_delta(i, 5) == doctest::Approx(5.0));
}

TEST_CASE("loss_delta on the handcrafted series") {
  const LossTrajectory traj = from_losses({10, 8, 7, 6.5, 6.2, 6.1, 6.05});
  CHECK(traj.loss_delta(1, 5) == doctest::Approx(3.9));
  CHECK_THROWS_AS(traj.loss_delta(3, 5), G2dError);
  CHECK_THROWS_AS(traj.loss_delta(0, 5), G2dError);
}

TEST_CASE("smoothing is a centered, edge-truncated moving average") {
  const LossTrajectory traj = from_losses({9.0, 3.0, 6.0, 3.0, 9.0}, 3);
  const std::vector<double>& s = traj.smoothed();
  CHECK(s[0] == doctest::Approx(6.0));  // mean of first two
  CHECK(s[1] == doctest::Approx(6.0));
  CHECK(s[2] == doctest::Approx(4.0));
  CHECK(s[4] == doctest::Approx(6.0));
}

TEST_CASE("default thresholds derive from the largest delta magnitude") {
  // max |delta| = 10 on the first epoch, 0 elsewhere
  std::vector<double> losses(12, 10.0);
  losses[0] = 20.0;
  const SelectionThresholds thr = default_thresholds(from_losses(losses), 5);
  CHECK(thr.eps1 == doctest::Approx(5.0));
  CHECK(thr.eps2 == doctest::Approx(1.0));
  CHECK(thr.eps3 == doctest::Approx(0.2));

  std::vector<double> linear;
  for (int i = 1; i <= 30; ++i) linear.push_back(100.0 - i);
  const SelectionThresholds lin = default_thresholds(from_losses(linear), 5);
  CHECK(lin.eps1 == doctest::Approx(2.5));
  CHECK(lin.eps2 == doctest::Approx(0.5));
  CHECK(lin.eps3 == doctest::Approx(0.1));

  CHECK_THROWS_WITH_AS(static_cast<void>(default_thresholds(from_losses(
                           std::vector<double>(12, 1.0)), 5)),
                       doctest::Contains("flat"), G2dError);
}

TEST_CASE("classify_epoch partitions by delta magnitude") {
  const SelectionThresholds thr{5.0, 1.0, 0.2};
  CHECK(classify_epoch(9.0, thr) == Regime::Noise);
  CHECK(classify_epoch(-9.0, thr) == Regime::Noise);
  CHECK(classify_epoch(3.0, thr) == Regime::Transitional);
  CHECK(classify_epoch(0.5, thr) == Regime::Boundary);
  CHECK(classify_epoch(0.05, thr) == Regime::Inlier);
  // band edges: lower bounds are inclusive
  CHECK(classify_epoch(5.0, thr) == Regime::Noise);
  CHECK(classify_epoch(1.0, thr) == Regime::Transitional);
  CHECK(classify_epoch(0.2, thr) == Regime::Boundary);
  CHECK(classify_epoch(0.0, thr) == Regime::Inlier);

  CHECK_THROWS_AS(classify_epoch(1.0, SelectionThresholds{1.0, 2.0, 0.1}), G2dError);
}

TEST_CASE("select_generators spaces picks evenly over the boundary band") {
  // deltas: epochs 1..10 noise (6), 11..19 transitional (2),
  // 20..40 boundary (0.5), 41..45 inlier (0.05)
  std::vector<double> deltas;
  for (int i = 1; i <= 45; ++i) {
    if (i <= 10) deltas.push_back(6.0);
    else if (i <= 19) deltas.push_back(2.0);
    else if (i <= 40) deltas.push_back(0.5);
    else deltas.push_back(0.05);
  }
  const LossTrajectory traj = from_deltas(deltas, 5);
  const SelectionThresholds thr{5.0, 1.0, 0.2};

  const std::vector<int> three = select_epochs(traj, thr, 3, 0.0, 5);
  CHECK(three == std::vector<int>{20, 30, 40});

  const std::vector<int> one = select_epochs(traj, thr, 1, 0.0, 5);
  CHECK(one == std::vector<int>{30});  // median boundary epoch

  const std::vector<int> with_noise = select_epochs(traj, thr, 4, 0.25, 5);
  REQUIRE(with_noise.size() == 4);
  // one pick from the noise band, three from the boundary band, epoch order
  CHECK(with_noise[0] <= 10);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(with_noise[i] >= 20);
    CHECK(with_noise[i] <= 40);
  }

  const std::vector<ModelSnapshot> picked =
      select_generators(traj, stub_snapshots(50), thr, 3, 0.0, 5);
  CHECK(epochs_of(picked) == std::vector<int>{20, 30, 40});
}

TEST_CASE("select_generators requires a boundary band") {
  const LossTrajectory traj = from_deltas(std::vector<double>(20, 0.01), 5);
  const SelectionThresholds thr{5.0, 1.0, 0.2};
  CHECK_THROWS_WITH_AS(static_cast<void>(select_epochs(traj, thr, 2, 0.0, 5)),
                       doctest::Contains("thresholds"), G2dError);
}

TEST_CASE("monotone-delta trajectories produce contiguous ordered bands") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    // exponential decay: monotone-decreasing loss with non-increasing deltas,
    // long enough relative to tau that all bands get populated
    const double amplitude = rng.uniform(1.0, 50.0);
    const double tau = rng.uniform(5.0, 40.0);
    const double offset = rng.uniform(-2.0, 2.0);
    const std::size_t epochs = static_cast<std::size_t>(5.0 * tau) + 10 + rng.below(40);
    std::vector<double> losses;
    for (std::size_t i = 0; i < epochs; ++i) {
      losses.push_back(offset + amplitude * std::exp(-static_cast<double>(i) / tau));
    }
    const LossTrajectory traj = from_losses(losses, 3);
    const int h = 5;
    const SelectionThresholds thr = default_thresholds(traj, h);

    std::vector<Regime> regimes;
    for (int e : traj.delta_epochs(h)) {
      regimes.push_back(classify_epoch(traj.loss_delta(e, h), thr));
    }
    // contiguous bands in the fixed order, empty bands allowed
    const auto rank = [](Regime r) {
      switch (r) {
        case Regime::Noise: return 0;
        case Regime::Transitional: return 1;
        case Regime::Boundary: return 2;
        case Regime::Inlier: return 3;
      }
      return 4;
    };
    for (std::size_t i = 1; i < regimes.size(); ++i) {
      CHECK(rank(regimes[i]) >= rank(regimes[i - 1]));
    }

    const std::vector<int> chosen = select_epochs(traj, thr, 4, 0.25, h);
    for (int e : chosen) {
      const Regime r = classify_epoch(traj.loss_delta(e, h), thr);
      CHECK((r == Regime::Boundary || r == Regime::Noise));
    }
  }
}

TEST_CASE("regime table marks trailing epochs as undefined") {
  std::vector<double> linear;
  for (int i = 1; i <= 12; ++i) linear.push_back(100.0 - i);
  const LossTrajectory traj = from_losses(linear);
  const SelectionThresholds thr{5.0, 1.0, 0.2};
  const std::vector<RegimeRow> rows = regime_table(traj, thr, 5);
  REQUIRE(rows.size() == 12);
  CHECK(rows[6].delta.has_value());
  CHECK_FALSE(rows[7].delta.has_value());
  CHECK_FALSE(rows[11].regime.has_value());

  std::ostringstream out;
  write_regime_csv(rows, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("epoch,loss,delta,regime\n", 0) == 0);
  CHECK(csv.find("12,88,,\n") != std::string::npos);
}
