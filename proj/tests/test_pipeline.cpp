#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "g2d/checkpoint.hpp"
#include "g2d/config.hpp"
#include "g2d/error.hpp"
#include "g2d/pipeline.hpp"
#include "g2d/rng.hpp"

using namespace g2d;

namespace {

nlohmann::json minimal_ring_config() {
  return nlohmann::json{
      {"version", 1},
      {"seed", 7},
      {"out_dir", "unused"},
      {"dataset",
       {{"type", "ring"}, {"train_n", 192}, {"radius", 1.0}, {"width", 0.05},
        {"test_normals", 96}, {"test_outlier_fraction", 0.5}}},
      {"model", {{"latent_dim", 8}, {"hidden", 16}}},
      {"gan", {{"epochs", 30}, {"lr", 0.0005}, {"batch_size", 32}}},
      {"selection", {{"h", 5}, {"k", 2}, {"include_noise_fraction", 0.0}}},
      {"detector", {{"epochs", 10}}},
  };
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config parses and echoes back") {
  const RunConfig cfg = RunConfig::parse_json(minimal_ring_config());
  CHECK(cfg.seed == 7);
  CHECK(cfg.dataset.type == "ring");
  CHECK(cfg.gan.epochs == 30);
  CHECK(cfg.selection.k == 2);
  const RunConfig echoed = RunConfig::parse_json(cfg.to_json());
  CHECK(echoed.gan.epochs == cfg.gan.epochs);
  CHECK(echoed.dataset.train_n == cfg.dataset.train_n);
}

TEST_CASE("config validation reports every offending field at once") {
  nlohmann::json bad = minimal_ring_config();
  bad["typo_key"] = 1;
  bad["gan"]["learning_rate"] = 0.1;  // unknown key
  bad["gan"]["epochs"] = 0;
  bad.erase("seed");
  try {
    RunConfig::parse_json(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const auto& problems = e.problems();
    const auto has = [&](const std::string& needle) {
      for (const auto& p : problems) {
        if (p.find(needle) != std::string::npos) return true;
      }
      return false;
    };
    CHECK(has("typo_key"));
    CHECK(has("gan.learning_rate"));
    CHECK(has("gan.epochs"));
    CHECK(has("seed"));
    CHECK(problems.size() >= 4);
  }
}

TEST_CASE("config rejects unknown dataset types and bad thresholds") {
  nlohmann::json bad = minimal_ring_config();
  bad["dataset"] = {{"type", "images"}};
  CHECK_THROWS_AS(RunConfig::parse_json(bad), ConfigError);

  nlohmann::json thr = minimal_ring_config();
  thr["selection"]["thresholds"] = {{"eps1", 0.1}, {"eps2", 0.5}, {"eps3", 0.01}};
  CHECK_THROWS_AS(RunConfig::parse_json(thr), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const auto dir = std::filesystem::temp_directory_path() / "g2d_ckpt_test";
  std::filesystem::create_directories(dir);
  Rng rng(3);
  std::vector<Tensor> tensors;
  tensors.emplace_back(std::vector<std::size_t>{4, 3});
  tensors.emplace_back(std::vector<std::size_t>{5});
  for (Tensor& t : tensors) {
    rng.fill_gaussian(t, 0.0, 1.0);
    // checkpoint precision is float32; store at that precision up front
    for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
  }
  CheckpointInfo info;
  info.kind = "generator_snapshot";
  info.epoch = 17;
  info.loss = 0.12345;
  info.seed = 99;

  save_checkpoint(dir / "a", info, tensors);
  const Checkpoint loaded = load_checkpoint(dir / "a");
  CHECK(loaded.info.kind == info.kind);
  CHECK(loaded.info.epoch == 17);
  CHECK(loaded.info.loss == info.loss);
  CHECK(loaded.info.seed == 99);
  REQUIRE(loaded.tensors.size() == 2);
  for (std::size_t t = 0; t < 2; ++t) {
    REQUIRE(loaded.tensors[t].same_shape(tensors[t]));
    for (std::size_t i = 0; i < tensors[t].size(); ++i) {
      CHECK(loaded.tensors[t][i] == tensors[t][i]);
    }
  }

  // save -> load -> save produces identical bytes
  save_checkpoint(dir / "b", loaded.info, loaded.tensors);
  CHECK(read_file(dir / "a.bin") == read_file(dir / "b.bin"));
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));

  // blob length must match the manifest
  std::filesystem::resize_file(dir / "a.bin", 4);
  CHECK_THROWS_WITH_AS(static_cast<void>(load_checkpoint(dir / "a")),
                       doctest::Contains("shorter"), G2dError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run-all on a small ring config is reproducible byte for byte") {
  const auto base = std::filesystem::temp_directory_path() / "g2d_runall_test";
  std::filesystem::remove_all(base);
  nlohmann::json j = minimal_ring_config();

  RunConfig cfg = RunConfig::parse_json(j);
  cfg.out_dir = base / "run1";
  cmd_run_all(cfg);

  for (const char* name : {"trajectory.csv", "regimes.csv", "selected.json", "metrics.csv",
                           "roc.csv", "f1_vs_contamination.csv", "outliers_2d.csv",
                           "run_manifest.json", "detector.json", "detector.bin"}) {
    CHECK(std::filesystem::exists(cfg.out_dir / name));
  }

  RunConfig cfg2 = RunConfig::parse_json(j);
  cfg2.out_dir = base / "run2";
  cmd_run_all(cfg2);

  CHECK(read_file(cfg.out_dir / "metrics.csv") == read_file(cfg2.out_dir / "metrics.csv"));
  CHECK(read_file(cfg.out_dir / "trajectory.csv") ==
        read_file(cfg2.out_dir / "trajectory.csv"));
  CHECK(read_file(cfg.out_dir / "regimes.csv") == read_file(cfg2.out_dir / "regimes.csv"));

  // stages consume each other's files: a fresh evaluate over run1 reproduces
  // the same metrics
  const std::string before = read_file(cfg.out_dir / "metrics.csv");
  cmd_evaluate(cfg);
  CHECK(read_file(cfg.out_dir / "metrics.csv") == before);

  std::filesystem::remove_all(base);
}

TEST_CASE("trajectory csv parses back into the same records") {
  const auto base = std::filesystem::temp_directory_path() / "g2d_traj_test";
  std::filesystem::remove_all(base);
  nlohmann::json j = minimal_ring_config();
  RunConfig cfg = RunConfig::parse_json(j);
  cfg.out_dir = base;
  cmd_train_gan(cfg);
  const LossTrajectory traj = read_trajectory_csv(base / "trajectory.csv", 3);
  CHECK(traj.epoch_count() == cfg.gan.epochs);
  CHECK(traj.first_epoch() == 1);
  CHECK(traj.last_epoch() == static_cast<int>(cfg.gan.epochs));
  std::filesystem::remove_all(base);
}

TEST_CASE("cli binary maps error kinds to exit codes") {
  const char* bin = std::getenv("G2D_BIN");
  if (bin == nullptr) return;  // only wired up under ctest

  const auto dir = std::filesystem::temp_directory_path() / "g2d_cli_test";
  std::filesystem::create_directories(dir);

  const auto bad_config = dir / "bad.json";
  {
    std::ofstream out(bad_config);
    out << R"({"version": 1, "dataset": {"type": "ring"}, "gan": {"epochs": 1}})";
  }
  const std::string cmd = std::string(bin) + " run-all --config " + bad_config.string() +
                          " --out " + (dir / "out").string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);  // validation error: seed missing

  const std::string no_stage = std::string(bin) + " --config " + bad_config.string() +
                               " 2>/dev/null";
  const int status2 = std::system(no_stage.c_str());
  REQUIRE(WIFEXITED(status2));
  CHECK(WEXITSTATUS(status2) == 2);
  std::filesystem::remove_all(dir);
}
