#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "g2d/detector.hpp"
#include "g2d/gan.hpp"
#include "g2d/snapshots.hpp"

namespace g2d {

struct DatasetConfig {
  std::string type;  // ring | digits | idx | video

  // ring
  std::size_t train_n = 2000;
  double radius = 1.0;
  double width = 0.05;
  std::size_t test_normals = 1000;
  double test_outlier_fraction = 0.5;

  // digits / idx
  int target_class = 8;
  std::size_t train_normals = 2000;
  std::size_t outlier_pool_per_class = 250;
  double contamination = 0.5;
  std::vector<double> contamination_sweep;
  std::filesystem::path train_images, train_labels, test_images, test_labels;

  // video
  std::size_t train_frames = 50;
  std::size_t test_frames = 200;
  std::size_t anomaly_count = 20;
  std::size_t height = 120;
  std::size_t video_width = 160;
  std::size_t patch_size = 30;
  std::size_t overlap = 5;
};

struct SelectionConfig {
  int h = 5;
  int smoothing_window = 3;
  std::size_t k = 4;
  double include_noise_fraction = 0.25;
  std::optional<SelectionThresholds> thresholds;  // empty = data-driven defaults
};

struct SynthesisSection {
  double target_balance = 1.0;
  std::size_t augment_normals = 0;
};

struct ModelSection {
  std::size_t latent_dim = 64;
  std::size_t hidden = 64;
  std::size_t base_channels = 32;
};

/// One experiment, fully specified. Versioned schema; unknown keys are
/// rejected and all problems are reported together.
struct RunConfig {
  int version = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::filesystem::path config_path;  // source file, when loaded from disk

  DatasetConfig dataset;
  ModelSection model;
  double noise_mean = 0.0;
  double noise_stddev = 1.0;
  GanConfig gan;
  SelectionConfig selection;
  SynthesisSection synthesis;
  DetectorConfig detector;

  static RunConfig parse_json(const nlohmann::json& j);
  static RunConfig load_file(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::filesystem::path> out_override);

  nlohmann::json to_json() const;

  NoiseSpec noise_spec() const {
    return NoiseSpec{model.latent_dim, noise_mean, noise_stddev};
  }
};

/// FNV-1a 64-bit over a file's bytes, as a hex string. Used for the run
/// manifest's input hashes.
std::string hash_file(const std::filesystem::path& path);

}  // namespace g2d
