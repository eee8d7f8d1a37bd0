#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "g2d/error.hpp"
#include "g2d/metrics.hpp"
#include "g2d/rng.hpp"
#include "oracles.hpp"

using namespace g2d;

namespace {

ScoredSet make_scored(std::vector<double> scores, std::vector<int> labels,
                      std::vector<int> frames = {}) {
  ScoredSet s;
  s.scores = std::move(scores);
  s.labels = std::move(labels);
  s.frame_index = std::move(frames);
  return s;
}

ScoredSet random_scored(std::size_t n, std::uint64_t seed, bool with_ties = false) {
  Rng rng(seed);
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    double score = rng.uniform();
    if (with_ties) score = std::round(score * 20.0) / 20.0;
    s.scores.push_back(score);
    s.labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
  }
  // make sure both classes are present
  s.labels[0] = 0;
  s.labels[n - 1] = 1;
  return s;
}

}  // namespace

TEST_CASE("f1 examples") {
  CHECK(f1_score(make_scored({0.9, 0.9, 0.1, 0.1}, {1, 1, 0, 0}), 0.5) == 1.0);

  // TP=8, FP=2, FN=2 -> 2*8 / (16+2+2) = 0.8
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) { scores.push_back(0.9); labels.push_back(1); }
  for (int i = 0; i < 2; ++i) { scores.push_back(0.9); labels.push_back(0); }
  for (int i = 0; i < 2; ++i) { scores.push_back(0.1); labels.push_back(1); }
  for (int i = 0; i < 3; ++i) { scores.push_back(0.1); labels.push_back(0); }
  CHECK(f1_score(make_scored(scores, labels), 0.5) == doctest::Approx(0.8));

  // no positives anywhere is defined as perfect
  CHECK(f1_score(make_scored({0.1, 0.2}, {0, 0}), 0.5) == 1.0);
}

TEST_CASE("f1 equals the confusion-matrix oracle on random scores") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScoredSet s = random_scored(100, seed);
    for (double alpha : {0.3, 0.5, 0.7}) {
      CHECK(f1_score(s, alpha) == oracles::f1_from_confusion(s.scores, s.labels, alpha));
    }
  }
}

TEST_CASE("roc_auc on separated and tied scores") {
  CHECK(roc_auc(make_scored({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
  CHECK(roc_auc(make_scored({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})) == 0.5);
  CHECK_THROWS_AS(roc_auc(make_scored({0.5, 0.4}, {1, 1})), G2dError);
}

TEST_CASE("roc_auc matches the pairwise oracle within 1e-9") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ScoredSet s = random_scored(500, seed, /*with_ties=*/true);
    CHECK(std::abs(roc_auc(s) - oracles::auc_pairwise(s.scores, s.labels)) < 1e-9);
  }
}

TEST_CASE("roc_auc is invariant under strictly monotone score transforms") {
  const ScoredSet s = random_scored(300, 17, true);
  ScoredSet squared = s;
  for (double& v : squared.scores) v = v * v;  // strictly monotone on [0,1]
  CHECK(roc_auc(s) == doctest::Approx(roc_auc(squared)).epsilon(1e-12));
}

TEST_CASE("eer examples") {
  CHECK(equal_error_rate(make_scored({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 0.0);

  // labels independent of scores: close to 0.5
  Rng rng(5);
  ScoredSet s;
  for (int i = 0; i < 2000; ++i) {
    s.scores.push_back(rng.uniform());
    s.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
  }
  const double eer = equal_error_rate(s);
  CHECK(eer > 0.45);
  CHECK(eer < 0.55);
}

TEST_CASE("eer matches the exhaustive sweep oracle within 1e-6") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ScoredSet s = random_scored(1000, seed, /*with_ties=*/true);
    CHECK(std::abs(equal_error_rate(s) - oracles::eer_sweep(s.scores, s.labels)) < 1e-6);
  }
}

TEST_CASE("eer is symmetric under label flip with reversed scores") {
  const ScoredSet s = random_scored(400, 23, true);
  ScoredSet flipped;
  for (std::size_t i = 0; i < s.size(); ++i) {
    flipped.scores.push_back(1.0 - s.scores[i]);
    flipped.labels.push_back(1 - s.labels[i]);
  }
  CHECK(equal_error_rate(s) == doctest::Approx(equal_error_rate(flipped)).epsilon(1e-9));
}

TEST_CASE("frame_scores takes the max over patches") {
  const ScoredSet frames = frame_scores(make_scored({0.1, 0.9}, {1, 1}, {0, 0}));
  REQUIRE(frames.size() == 1);
  CHECK(frames.scores[0] == 0.9);

  const ScoredSet zeros = frame_scores(make_scored({0.0, 0.0, 0.0}, {0, 0, 0}, {4, 4, 4}));
  CHECK(zeros.scores[0] == 0.0);

  CHECK_THROWS_AS(frame_scores(make_scored({0.5}, {1})), G2dError);
}

TEST_CASE("thresholding frame scores equals OR over patch decisions") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    ScoredSet patches;
    const std::size_t n_frames = 3 + rng.below(5);
    for (std::size_t f = 0; f < n_frames; ++f) {
      const std::size_t n_patches = 1 + rng.below(6);
      const int label = rng.uniform() < 0.3 ? 1 : 0;
      for (std::size_t p = 0; p < n_patches; ++p) {
        patches.scores.push_back(rng.uniform());
        patches.labels.push_back(label);
        patches.frame_index.push_back(static_cast<int>(f));
      }
    }
    const double alpha = rng.uniform(0.05, 0.95);
    const ScoredSet frames = frame_scores(patches);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      bool any_patch_anomalous = false;
      for (std::size_t p = 0; p < patches.size(); ++p) {
        if (patches.frame_index[p] == frames.frame_index[i] &&
            (1.0 - patches.scores[p]) < alpha) {
          any_patch_anomalous = true;
        }
      }
      CHECK(((1.0 - frames.scores[i]) < alpha) == any_patch_anomalous);
    }
  }
}

TEST_CASE("energy distance identities") {
  Rng rng(31);
  Tensor a({50, 3});
  rng.fill_gaussian(a, 0.0, 1.0);
  CHECK(energy_distance(a, a) == 0.0);

  const Tensor p({1, 2}, {0.0, 0.0});
  const Tensor q({1, 2}, {3.0, 4.0});
  CHECK(energy_distance(p, q) == doctest::Approx(10.0));  // 2 * distance 5
}

TEST_CASE("energy distance matches the all-pairs oracle within 1e-9") {
  Rng rng(37);
  Tensor a({200, 4});
  Tensor b({200, 4});
  rng.fill_gaussian(a, 0.0, 1.0);
  rng.fill_gaussian(b, 3.0, 1.0);
  const double expected =
      oracles::energy_all_pairs(a.values(), 200, b.values(), 200, 4);
  CHECK(std::abs(energy_distance(a, b) - expected) < 1e-9);

  // symmetry and non-negativity
  CHECK(energy_distance(a, b) == doctest::Approx(energy_distance(b, a)).epsilon(1e-12));
  CHECK(energy_distance(a, b) >= 0.0);
}

TEST_CASE("pca on 2-d input preserves pairwise distances") {
  Rng rng(41);
  Tensor x({40, 2});
  rng.fill_gaussian(x, 0.0, 2.0);
  const Tensor proj = pca_project(x, 2);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = i + 1; j < 10; ++j) {
      const double dx0 = x[2 * i] - x[2 * j], dy0 = x[2 * i + 1] - x[2 * j + 1];
      const double dx1 = proj[2 * i] - proj[2 * j], dy1 = proj[2 * i + 1] - proj[2 * j + 1];
      CHECK(std::sqrt(dx0 * dx0 + dy0 * dy0) ==
            doctest::Approx(std::sqrt(dx1 * dx1 + dy1 * dy1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pca second component vanishes on rank-1 data") {
  Tensor x({20, 3});
  Rng rng(43);
  for (std::size_t i = 0; i < 20; ++i) {
    const double t = rng.gaussian();
    x[3 * i] = t;
    x[3 * i + 1] = 2.0 * t;
    x[3 * i + 2] = -t;
  }
  const Tensor proj = pca_project(x, 2);
  double var2 = 0.0, mean2 = 0.0;
  for (std::size_t i = 0; i < 20; ++i) mean2 += proj[2 * i + 1];
  mean2 /= 20.0;
  for (std::size_t i = 0; i < 20; ++i) {
    var2 += (proj[2 * i + 1] - mean2) * (proj[2 * i + 1] - mean2);
  }
  CHECK(var2 / 19.0 < 1e-12);

  Tensor flat({5, 2});
  CHECK_THROWS_AS(pca_project(flat, 2), G2dError);
}

TEST_CASE("pca top-2 reconstruction error matches the dense eigensolver") {
  Rng rng(47);
  const std::size_t n = 100, d = 10;
  Tensor x({n, d});
  // anisotropic data so the spectrum has structure
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      x[i * d + k] = rng.gaussian() * (1.0 + static_cast<double>(d - k));
    }
  }
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += x[i * d + k] / static_cast<double>(n);
  }
  std::vector<double> cov(d * d, 0.0);
  double total_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        cov[r * d + c] += (x[i * d + r] - mean[r]) * (x[i * d + c] - mean[c]) /
                          static_cast<double>(n - 1);
      }
    }
  }
  for (std::size_t r = 0; r < d; ++r) total_var += cov[r * d + r];

  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
  oracles::jacobi_eigen(cov, d, eigenvalues, eigenvectors);
  const double expected_residual = total_var - eigenvalues[0] - eigenvalues[1];

  const Tensor proj = pca_project(x, 2);
  double captured = 0.0;
  for (std::size_t comp = 0; comp < 2; ++comp) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += proj[2 * i + comp] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      v += (proj[2 * i + comp] - m) * (proj[2 * i + comp] - m);
    }
    captured += v / static_cast<double>(n - 1);
  }
  CHECK(total_var - captured == doctest::Approx(expected_residual).epsilon(1e-6));
}

TEST_CASE("emit_report writes parseable, exact CSV") {
  const auto dir = std::filesystem::temp_directory_path() / "g2d_report_test";
  std::filesystem::remove_all(dir);
  EvalReport report;
  report.f1 = 0.9;
  report.auc = 0.875;
  report.eer = 1.0 / 3.0;
  report.tp = 9;
  report.fn = 1;
  report.drift.emplace_back("drift_pseudo_anomalies_vs_train", 1.25);
  emit_report(report, dir);

  std::ifstream metrics(dir / "metrics.csv");
  std::string content((std::istreambuf_iterator<char>(metrics)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("f1,0.9\n") != std::string::npos);
  CHECK(content.find("auc,0.875\n") != std::string::npos);

  // eer round-trips exactly through the CSV text
  std::istringstream lines(content);
  std::string line;
  bool checked = false;
  while (std::getline(lines, line)) {
    if (line.rfind("eer,", 0) == 0) {
      CHECK(std::stod(line.substr(4)) == report.eer);
      checked = true;
    }
  }
  CHECK(checked);

  std::ifstream roc(dir / "roc.csv");
  std::string roc_content((std::istreambuf_iterator<char>(roc)),
                          std::istreambuf_iterator<char>());
  CHECK(roc_content == "fpr,tpr\n");
  std::filesystem::remove_all(dir);
}
