#include "g2d/config.hpp"

#include <fstream>
#include <set>

#include "g2d/error.hpp"

namespace g2d {

namespace {

/// Collects validation problems; parse helpers record instead of throwing so
/// one pass reports every offending field.
struct Problems {
  std::vector<std::string> list;

  void add(const std::string& p) { list.push_back(p); }

  void check_keys(const nlohmann::json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.count(key)) {
        add(where.empty() ? key + ": unknown key" : where + "." + key + ": unknown key");
      }
    }
  }

  template <typename T>
  bool get(const nlohmann::json& obj, const std::string& where, const std::string& key, T& out,
           bool required = false) {
    if (!obj.contains(key)) {
      if (required) add(field(where, key) + ": required");
      return false;
    }
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const nlohmann::json::exception&) {
      add(field(where, key) + ": wrong type");
      return false;
    }
  }

  static std::string field(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }
};

void parse_dataset(const nlohmann::json& j, DatasetConfig& d, Problems& p) {
  if (!p.get(j, "dataset", "type", d.type, true)) return;
  static const std::set<std::string> kCommon = {"type"};
  if (d.type == "ring") {
    std::set<std::string> allowed = kCommon;
    allowed.insert({"train_n", "radius", "width", "test_normals", "test_outlier_fraction"});
    p.check_keys(j, "dataset", allowed);
    p.get(j, "dataset", "train_n", d.train_n);
    p.get(j, "dataset", "radius", d.radius);
    p.get(j, "dataset", "width", d.width);
    p.get(j, "dataset", "test_normals", d.test_normals);
    p.get(j, "dataset", "test_outlier_fraction", d.test_outlier_fraction);
    if (d.train_n < 1) p.add("dataset.train_n: must be positive");
  } else if (d.type == "digits" || d.type == "idx") {
    std::set<std::string> allowed = kCommon;
    allowed.insert({"target_class", "train_normals", "test_normals", "contamination",
                    "contamination_sweep"});
    if (d.type == "digits") {
      allowed.insert("outlier_pool_per_class");
    } else {
      allowed.insert({"train_images", "train_labels", "test_images", "test_labels"});
    }
    p.check_keys(j, "dataset", allowed);
    p.get(j, "dataset", "target_class", d.target_class);
    p.get(j, "dataset", "train_normals", d.train_normals);
    p.get(j, "dataset", "test_normals", d.test_normals);
    p.get(j, "dataset", "contamination", d.contamination);
    p.get(j, "dataset", "contamination_sweep", d.contamination_sweep);
    p.get(j, "dataset", "outlier_pool_per_class", d.outlier_pool_per_class);
    if (d.target_class < 0 || d.target_class > 9) {
      p.add("dataset.target_class: must lie in 0..9");
    }
    if (d.type == "idx") {
      std::string s;
      if (p.get(j, "dataset", "train_images", s, true)) d.train_images = s;
      if (p.get(j, "dataset", "train_labels", s, true)) d.train_labels = s;
      if (p.get(j, "dataset", "test_images", s, true)) d.test_images = s;
      if (p.get(j, "dataset", "test_labels", s, true)) d.test_labels = s;
      for (const auto& [name, path] :
           {std::pair{"train_images", d.train_images}, {"train_labels", d.train_labels},
            {"test_images", d.test_images}, {"test_labels", d.test_labels}}) {
        if (!path.empty() && !std::filesystem::exists(path)) {
          p.add(std::string("dataset.") + name + ": file not found: " + path.string());
        }
      }
    }
  } else if (d.type == "video") {
    std::set<std::string> allowed = kCommon;
    allowed.insert({"train_frames", "test_frames", "anomaly_count", "height", "width",
                    "patch_size", "overlap"});
    p.check_keys(j, "dataset", allowed);
    p.get(j, "dataset", "train_frames", d.train_frames);
    p.get(j, "dataset", "test_frames", d.test_frames);
    p.get(j, "dataset", "anomaly_count", d.anomaly_count);
    p.get(j, "dataset", "height", d.height);
    p.get(j, "dataset", "width", d.video_width);
    p.get(j, "dataset", "patch_size", d.patch_size);
    p.get(j, "dataset", "overlap", d.overlap);
    if (d.anomaly_count > d.test_frames) {
      p.add("dataset.anomaly_count: exceeds test_frames");
    }
    if (d.overlap >= d.patch_size) {
      p.add("dataset.overlap: must be smaller than patch_size");
    }
  } else {
    p.add("dataset.type: unknown type \"" + d.type +
          "\" (expected ring, digits, idx or video)");
  }
}

}  // namespace

RunConfig RunConfig::parse_json(const nlohmann::json& j) {
  Problems p;
  RunConfig cfg;
  if (!j.is_object()) {
    throw ConfigError({"config root must be a JSON object"});
  }
  p.check_keys(j, "",
               {"version", "seed", "out_dir", "dataset", "model", "noise", "gan", "selection",
                "synthesis", "detector"});

  p.get(j, "", "version", cfg.version, true);
  if (j.contains("version") && cfg.version != 1) {
    p.add("version: unsupported schema version " + std::to_string(cfg.version));
  }
  if (!j.contains("seed")) {
    p.add("seed: required");
  } else {
    p.get(j, "", "seed", cfg.seed);
  }
  std::string out_dir;
  if (p.get(j, "", "out_dir", out_dir)) cfg.out_dir = out_dir;

  if (j.contains("dataset") && j.at("dataset").is_object()) {
    parse_dataset(j.at("dataset"), cfg.dataset, p);
  } else {
    p.add("dataset: required object");
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    p.check_keys(m, "model", {"latent_dim", "hidden", "base_channels"});
    p.get(m, "model", "latent_dim", cfg.model.latent_dim);
    p.get(m, "model", "hidden", cfg.model.hidden);
    p.get(m, "model", "base_channels", cfg.model.base_channels);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    p.check_keys(n, "noise", {"mean", "stddev"});
    p.get(n, "noise", "mean", cfg.noise_mean);
    p.get(n, "noise", "stddev", cfg.noise_stddev);
    if (!(cfg.noise_stddev > 0.0)) p.add("noise.stddev: must be positive");
  }
  if (j.contains("gan") && j.at("gan").is_object()) {
    const auto& g = j.at("gan");
    p.check_keys(g, "gan",
                 {"epochs", "lr", "beta1", "beta2", "batch_size", "critic_steps_per_gen",
                  "clip_c"});
    p.get(g, "gan", "epochs", cfg.gan.epochs, true);
    p.get(g, "gan", "lr", cfg.gan.lr);
    p.get(g, "gan", "beta1", cfg.gan.beta1);
    p.get(g, "gan", "beta2", cfg.gan.beta2);
    p.get(g, "gan", "batch_size", cfg.gan.batch_size);
    p.get(g, "gan", "critic_steps_per_gen", cfg.gan.critic_steps_per_gen);
    p.get(g, "gan", "clip_c", cfg.gan.clip_c);
    if (cfg.gan.epochs == 0) p.add("gan.epochs: must be positive");
    if (!(cfg.gan.lr > 0.0)) p.add("gan.lr: must be positive");
    if (!(cfg.gan.clip_c > 0.0)) p.add("gan.clip_c: must be positive");
  } else {
    p.add("gan: required object");
  }
  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    p.check_keys(s, "selection",
                 {"h", "smoothing_window", "k", "include_noise_fraction", "thresholds"});
    p.get(s, "selection", "h", cfg.selection.h);
    p.get(s, "selection", "smoothing_window", cfg.selection.smoothing_window);
    p.get(s, "selection", "k", cfg.selection.k);
    p.get(s, "selection", "include_noise_fraction", cfg.selection.include_noise_fraction);
    if (cfg.selection.h < 1) p.add("selection.h: must be >= 1");
    if (cfg.selection.smoothing_window < 1 || cfg.selection.smoothing_window % 2 == 0) {
      p.add("selection.smoothing_window: must be a positive odd integer");
    }
    if (cfg.selection.k < 1) p.add("selection.k: must be >= 1");
    if (cfg.selection.include_noise_fraction < 0.0 ||
        cfg.selection.include_noise_fraction > 0.5) {
      p.add("selection.include_noise_fraction: must lie in [0, 0.5]");
    }
    if (s.contains("thresholds") && !s.at("thresholds").is_null()) {
      const auto& t = s.at("thresholds");
      p.check_keys(t, "selection.thresholds", {"eps1", "eps2", "eps3"});
      SelectionThresholds thr;
      p.get(t, "selection.thresholds", "eps1", thr.eps1, true);
      p.get(t, "selection.thresholds", "eps2", thr.eps2, true);
      p.get(t, "selection.thresholds", "eps3", thr.eps3, true);
      if (!(thr.eps1 > thr.eps2 && thr.eps2 > thr.eps3 && thr.eps3 > 0.0)) {
        p.add("selection.thresholds: must satisfy eps1 > eps2 > eps3 > 0");
      }
      cfg.selection.thresholds = thr;
    }
  }
  if (j.contains("synthesis")) {
    const auto& s = j.at("synthesis");
    p.check_keys(s, "synthesis", {"target_balance", "augment_normals"});
    p.get(s, "synthesis", "target_balance", cfg.synthesis.target_balance);
    p.get(s, "synthesis", "augment_normals", cfg.synthesis.augment_normals);
    if (!(cfg.synthesis.target_balance > 0.0 && cfg.synthesis.target_balance <= 4.0)) {
      p.add("synthesis.target_balance: must lie in (0, 4]");
    }
  }
  if (j.contains("detector")) {
    const auto& dd = j.at("detector");
    p.check_keys(dd, "detector", {"epochs", "lr", "momentum", "batch_size", "alpha"});
    p.get(dd, "detector", "epochs", cfg.detector.epochs);
    p.get(dd, "detector", "lr", cfg.detector.lr);
    p.get(dd, "detector", "momentum", cfg.detector.momentum);
    p.get(dd, "detector", "batch_size", cfg.detector.batch_size);
    p.get(dd, "detector", "alpha", cfg.detector.alpha);
    if (cfg.detector.epochs == 0) p.add("detector.epochs: must be positive");
    if (!(cfg.detector.alpha > 0.0 && cfg.detector.alpha < 1.0)) {
      p.add("detector.alpha: must lie in (0, 1)");
    }
  }

  if (!p.list.empty()) throw ConfigError(p.list);
  return cfg;
}

RunConfig RunConfig::load_file(const std::filesystem::path& path,
                               std::optional<std::uint64_t> seed_override,
                               std::optional<std::filesystem::path> out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({"config " + path.string() + " is not valid JSON: " + e.what()});
  }
  RunConfig cfg = parse_json(j);
  cfg.config_path = path;
  if (seed_override) cfg.seed = *seed_override;
  if (out_override) cfg.out_dir = *out_override;
  if (cfg.out_dir.empty()) {
    throw ConfigError({"out_dir: required (set in config or pass --out)"});
  }
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["seed"] = seed;
  j["out_dir"] = out_dir.string();
  nlohmann::json d;
  d["type"] = dataset.type;
  if (dataset.type == "ring") {
    d["train_n"] = dataset.train_n;
    d["radius"] = dataset.radius;
    d["width"] = dataset.width;
    d["test_normals"] = dataset.test_normals;
    d["test_outlier_fraction"] = dataset.test_outlier_fraction;
  } else if (dataset.type == "digits" || dataset.type == "idx") {
    d["target_class"] = dataset.target_class;
    d["train_normals"] = dataset.train_normals;
    d["test_normals"] = dataset.test_normals;
    d["contamination"] = dataset.contamination;
    if (!dataset.contamination_sweep.empty()) {
      d["contamination_sweep"] = dataset.contamination_sweep;
    }
    if (dataset.type == "digits") {
      d["outlier_pool_per_class"] = dataset.outlier_pool_per_class;
    } else {
      d["train_images"] = dataset.train_images.string();
      d["train_labels"] = dataset.train_labels.string();
      d["test_images"] = dataset.test_images.string();
      d["test_labels"] = dataset.test_labels.string();
    }
  } else if (dataset.type == "video") {
    d["train_frames"] = dataset.train_frames;
    d["test_frames"] = dataset.test_frames;
    d["anomaly_count"] = dataset.anomaly_count;
    d["height"] = dataset.height;
    d["width"] = dataset.video_width;
    d["patch_size"] = dataset.patch_size;
    d["overlap"] = dataset.overlap;
  }
  j["dataset"] = d;
  j["model"] = {{"latent_dim", model.latent_dim},
                {"hidden", model.hidden},
                {"base_channels", model.base_channels}};
  j["noise"] = {{"mean", noise_mean}, {"stddev", noise_stddev}};
  j["gan"] = {{"epochs", gan.epochs},
              {"lr", gan.lr},
              {"beta1", gan.beta1},
              {"beta2", gan.beta2},
              {"batch_size", gan.batch_size},
              {"critic_steps_per_gen", gan.critic_steps_per_gen},
              {"clip_c", gan.clip_c}};
  nlohmann::json sel = {{"h", selection.h},
                        {"smoothing_window", selection.smoothing_window},
                        {"k", selection.k},
                        {"include_noise_fraction", selection.include_noise_fraction}};
  if (selection.thresholds) {
    sel["thresholds"] = {{"eps1", selection.thresholds->eps1},
                         {"eps2", selection.thresholds->eps2},
                         {"eps3", selection.thresholds->eps3}};
  }
  j["selection"] = sel;
  j["synthesis"] = {{"target_balance", synthesis.target_balance},
                    {"augment_normals", synthesis.augment_normals}};
  j["detector"] = {{"epochs", detector.epochs},
                   {"lr", detector.lr},
                   {"momentum", detector.momentum},
                   {"batch_size", detector.batch_size},
                   {"alpha", detector.alpha}};
  return j;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw G2dError("hash_file: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace g2d
