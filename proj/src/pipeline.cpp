#include "g2d/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "g2d/checkpoint.hpp"
#include "g2d/csv.hpp"
#include "g2d/data.hpp"
#include "g2d/detector.hpp"
#include "g2d/error.hpp"
#include "g2d/metrics.hpp"
#include "g2d/synthesis.hpp"

namespace g2d {

namespace {

// fixed streams derived from the run seed, one per consumer
enum SeedStream : std::uint64_t {
  kTrainData = 11,
  kGanTraining = 14,
  kSynthesis = 15,
  kAssemble = 16,
  kDetector = 17,
  kAugment = 18,
  kTestInliers = 21,
  kTestOutliers = 22,
  kContaminate = 23,
  kAnomalyFrames = 25,
  kTestVideo = 26,
  kDriftSample = 27,
  kSweepBase = 100,
};

std::filesystem::path ckpt_base(const RunConfig& cfg, int epoch) {
  char name[32];
  std::snprintf(name, sizeof(name), "gen_epoch_%04d", epoch);
  return cfg.out_dir / "checkpoints" / name;
}

void update_manifest(const RunConfig& cfg, const std::string& stage,
                     const nlohmann::json& entry,
                     const std::vector<std::string>& warnings = {}) {
  const auto path = cfg.out_dir / "run_manifest.json";
  nlohmann::json manifest;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception&) {
      manifest = nlohmann::json::object();
    }
  }
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.to_json();
  if (!cfg.config_path.empty()) {
    manifest["input_hashes"][cfg.config_path.string()] = hash_file(cfg.config_path);
  }
  if (cfg.dataset.type == "idx") {
    for (const auto& p : {cfg.dataset.train_images, cfg.dataset.train_labels,
                          cfg.dataset.test_images, cfg.dataset.test_labels}) {
      if (!p.empty() && std::filesystem::exists(p)) {
        manifest["input_hashes"][p.string()] = hash_file(p);
      }
    }
  }
  manifest["stages"][stage] = entry;
  for (const std::string& w : warnings) manifest["warnings"].push_back(w);
  std::ofstream out(path);
  if (!out) throw G2dError("cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- dataset assembly -------------------------------------------------------

struct EvalPools {
  Tensor inliers;       // test-time normals
  Tensor outlier_pool;  // real anomalies to contaminate with
};

DigitCorpus digit_corpus(const RunConfig& cfg) {
  std::vector<std::size_t> per_class(10, cfg.dataset.outlier_pool_per_class);
  per_class[static_cast<std::size_t>(cfg.dataset.target_class)] =
      cfg.dataset.train_normals + cfg.dataset.test_normals;
  return synth_digits(per_class, Rng::derive(cfg.seed, kTrainData));
}

Tensor select_class(const Tensor& images, const std::vector<int>& labels, int target,
                    bool match) {
  std::size_t count = 0;
  for (int y : labels) count += (y == target) == match ? 1 : 0;
  std::vector<std::size_t> shape = images.shape();
  shape[0] = count;
  Tensor out(shape);
  const std::size_t rs = images.row_size();
  std::size_t w = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((labels[i] == target) == match) {
      std::copy(images.data() + i * rs, images.data() + (i + 1) * rs, out.data() + w * rs);
      ++w;
    }
  }
  return out;
}

Tensor video_train_patches(const RunConfig& cfg) {
  const VideoSequence video =
      synth_video(cfg.dataset.train_frames, {}, Rng::derive(cfg.seed, kTrainData),
                  cfg.dataset.height, cfg.dataset.video_width);
  Tensor all;
  for (std::size_t f = 0; f < cfg.dataset.train_frames; ++f) {
    const Tensor frame = video.frames.slice_rows(f, f + 1).reshaped(
        {1, cfg.dataset.height, cfg.dataset.video_width});
    PatchSet set = extract_patches(frame, cfg.dataset.patch_size, cfg.dataset.overlap,
                                   static_cast<int>(f));
    all = concat_rows(all, set.patches);
  }
  return all;
}

}  // namespace

ModelSpec resolve_model_spec(const RunConfig& cfg) {
  ModelSpec spec;
  spec.latent_dim = cfg.model.latent_dim;
  spec.hidden = cfg.model.hidden;
  spec.base_channels = cfg.model.base_channels;
  if (cfg.dataset.type == "ring") {
    spec.sample_shape = {2};
  } else if (cfg.dataset.type == "digits" || cfg.dataset.type == "idx") {
    spec.sample_shape = {1, 28, 28};
  } else if (cfg.dataset.type == "video") {
    spec.sample_shape = {1, cfg.dataset.patch_size, cfg.dataset.patch_size};
  } else {
    throw G2dError("unknown dataset type " + cfg.dataset.type);
  }
  return spec;
}

LabeledDataset load_training_normals(const RunConfig& cfg) {
  if (cfg.dataset.type == "ring") {
    return LabeledDataset::from_samples(
        synth_ring(cfg.dataset.train_n, cfg.dataset.radius, cfg.dataset.width,
                   Rng::derive(cfg.seed, kTrainData)),
        0);
  }
  if (cfg.dataset.type == "digits") {
    const DigitCorpus corpus = digit_corpus(cfg);
    const Tensor targets = select_class(corpus.images, corpus.digits,
                                        cfg.dataset.target_class, true);
    if (targets.dim(0) < cfg.dataset.train_normals) {
      throw G2dError("digits: target class has " + std::to_string(targets.dim(0)) +
                     " samples, need " + std::to_string(cfg.dataset.train_normals));
    }
    return LabeledDataset::from_samples(targets.slice_rows(0, cfg.dataset.train_normals), 0);
  }
  if (cfg.dataset.type == "idx") {
    const Tensor images = load_idx(cfg.dataset.train_images);
    const std::vector<int> labels = load_idx_labels(cfg.dataset.train_labels);
    if (labels.size() != images.dim(0)) {
      throw G2dError("idx: image/label count mismatch");
    }
    const Tensor targets = select_class(images, labels, cfg.dataset.target_class, true);
    if (targets.dim(0) < cfg.dataset.train_normals) {
      throw G2dError("idx: target class has " + std::to_string(targets.dim(0)) +
                     " samples, need " + std::to_string(cfg.dataset.train_normals));
    }
    return LabeledDataset::from_samples(targets.slice_rows(0, cfg.dataset.train_normals), 0);
  }
  if (cfg.dataset.type == "video") {
    return LabeledDataset::from_samples(video_train_patches(cfg), 0);
  }
  throw G2dError("unknown dataset type " + cfg.dataset.type);
}

LossTrajectory read_trajectory_csv(const std::filesystem::path& path, int smoothing_window) {
  std::ifstream in(path);
  if (!in) throw G2dError("cannot open trajectory " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,loss_gen,loss_critic") {
    throw G2dError("trajectory " + path.string() + " has an unexpected header");
  }
  std::vector<EpochRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    EpochRecord rec;
    std::getline(row, cell, ',');
    rec.epoch = std::stoi(cell);
    std::getline(row, cell, ',');
    rec.loss_gen = std::stod(cell);
    std::getline(row, cell, ',');
    rec.loss_critic = std::stod(cell);
    records.push_back(rec);
  }
  return LossTrajectory(std::move(records), smoothing_window);
}

void cmd_train_gan(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir / "checkpoints");
  const LabeledDataset normals = load_training_normals(cfg);
  const ModelSpec spec = resolve_model_spec(cfg);
  const GanTrainResult result = train_gan(normals, spec, cfg.gan, cfg.noise_spec(),
                                          Rng::derive(cfg.seed, kGanTraining));

  std::string csv = "epoch,loss_gen,loss_critic\n";
  for (const EpochRecord& r : result.records) {
    csv += std::to_string(r.epoch) + "," + csv_double(r.loss_gen) + "," +
           csv_double(r.loss_critic) + "\n";
  }
  {
    const auto path = cfg.out_dir / "trajectory.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw G2dError("cannot write " + path.string());
    out << csv;
  }
  for (const ModelSnapshot& snap : result.snapshots) {
    CheckpointInfo info;
    info.kind = "generator_snapshot";
    info.epoch = snap.epoch;
    info.loss = snap.loss_gen;
    info.seed = cfg.seed;
    save_checkpoint(ckpt_base(cfg, snap.epoch), info, snap.state);
  }
  update_manifest(cfg, "train_gan",
                  {{"epochs", result.records.size()},
                   {"train_samples", normals.size()},
                   {"wall_time", elapsed_since(t0)}});
}

namespace {

SelectionThresholds resolve_thresholds(const RunConfig& cfg, const LossTrajectory& traj) {
  if (cfg.selection.thresholds) return *cfg.selection.thresholds;
  return default_thresholds(traj, cfg.selection.h);
}

}  // namespace

void cmd_select(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const LossTrajectory traj =
      read_trajectory_csv(cfg.out_dir / "trajectory.csv", cfg.selection.smoothing_window);
  const SelectionThresholds thr = resolve_thresholds(cfg, traj);
  const std::vector<RegimeRow> rows = regime_table(traj, thr, cfg.selection.h);
  {
    const auto path = cfg.out_dir / "regimes.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw G2dError("cannot write " + path.string());
    write_regime_csv(rows, out);
  }
  const std::vector<int> epochs = select_epochs(traj, thr, cfg.selection.k,
                                                cfg.selection.include_noise_fraction,
                                                cfg.selection.h);
  nlohmann::json selected;
  selected["epochs"] = epochs;
  selected["thresholds"] = {{"eps1", thr.eps1}, {"eps2", thr.eps2}, {"eps3", thr.eps3}};
  selected["h"] = cfg.selection.h;
  selected["k"] = cfg.selection.k;
  selected["include_noise_fraction"] = cfg.selection.include_noise_fraction;
  {
    const auto path = cfg.out_dir / "selected.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw G2dError("cannot write " + path.string());
    out << selected.dump(2) << "\n";
  }
  update_manifest(cfg, "select",
                  {{"selected_epochs", epochs}, {"wall_time", elapsed_since(t0)}});
}

namespace {

std::vector<ModelSnapshot> load_selected_snapshots(const RunConfig& cfg) {
  const auto path = cfg.out_dir / "selected.json";
  std::ifstream in(path);
  if (!in) throw G2dError("cannot open " + path.string() + "; run the select stage first");
  nlohmann::json selected;
  in >> selected;
  std::vector<ModelSnapshot> out;
  for (int epoch : selected.at("epochs").get<std::vector<int>>()) {
    Checkpoint ckpt = load_checkpoint(ckpt_base(cfg, epoch));
    out.push_back(ModelSnapshot{ckpt.info.epoch, ckpt.info.loss, std::move(ckpt.tensors)});
  }
  return out;
}

ModelSnapshot load_epoch_snapshot(const RunConfig& cfg, int epoch) {
  Checkpoint ckpt = load_checkpoint(ckpt_base(cfg, epoch));
  return ModelSnapshot{ckpt.info.epoch, ckpt.info.loss, std::move(ckpt.tensors)};
}

void save_dataset(const std::filesystem::path& base, const LabeledDataset& data,
                  const std::string& kind, std::uint64_t seed) {
  CheckpointInfo info;
  info.kind = kind;
  info.seed = seed;
  info.labels = data.labels;
  save_checkpoint(base, info, {data.samples});
}

LabeledDataset load_dataset(const std::filesystem::path& base) {
  Checkpoint ckpt = load_checkpoint(base);
  LabeledDataset out;
  out.samples = std::move(ckpt.tensors.at(0));
  out.labels = ckpt.info.labels;
  out.validate();
  return out;
}

}  // namespace

void cmd_synthesize(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec = resolve_model_spec(cfg);
  const std::vector<ModelSnapshot> selected = load_selected_snapshots(cfg);
  const LabeledDataset normals = load_training_normals(cfg);

  SynthesisConfig syn;
  syn.target_balance = cfg.synthesis.target_balance;
  syn.samples_per_generator = static_cast<std::size_t>(
      std::ceil(cfg.synthesis.target_balance * static_cast<double>(normals.size()) /
                static_cast<double>(selected.size())));
  syn.seed = Rng::derive(cfg.seed, kSynthesis);
  const LabeledDataset outliers = generate_outliers(selected, spec, syn, cfg.noise_spec());
  save_dataset(cfg.out_dir / "outliers", outliers, "dataset", cfg.seed);

  if (spec.is_image()) {
    const Tensor grid = tile_grid(outliers.samples, 8, 8);
    write_pgm(cfg.out_dir / "outliers_grid.pgm", grid);
  } else {
    std::string csv = "x,y\n";
    for (std::size_t i = 0; i < outliers.size(); ++i) {
      csv += csv_double(outliers.samples[2 * i]) + "," +
             csv_double(outliers.samples[2 * i + 1]) + "\n";
    }
    std::ofstream out(cfg.out_dir / "outliers_2d.csv", std::ios::binary);
    out << csv;
  }

  std::vector<std::string> warnings;
  if (cfg.synthesis.augment_normals > 0) {
    const LossTrajectory traj =
        read_trajectory_csv(cfg.out_dir / "trajectory.csv", cfg.selection.smoothing_window);
    const SelectionThresholds thr = resolve_thresholds(cfg, traj);
    const int last = traj.last_epoch();
    std::optional<Regime> regime;
    if (last - cfg.selection.h >= traj.first_epoch()) {
      regime = classify_epoch(traj.loss_delta(last - cfg.selection.h, cfg.selection.h), thr);
    }
    const ModelSnapshot converged = load_epoch_snapshot(cfg, last);
    const LabeledDataset augmented =
        augment_normals(converged, regime, spec, cfg.synthesis.augment_normals,
                        cfg.noise_spec(), Rng::derive(cfg.seed, kAugment), &warnings);
    save_dataset(cfg.out_dir / "augmented", augmented, "dataset", cfg.seed);
  }

  update_manifest(cfg, "synthesize",
                  {{"outliers", outliers.size()},
                   {"samples_per_generator", syn.samples_per_generator},
                   {"generators", selected.size()},
                   {"wall_time", elapsed_since(t0)}},
                  warnings);
}

void cmd_train_detector(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec = resolve_model_spec(cfg);
  LabeledDataset normals = load_training_normals(cfg);
  if (cfg.synthesis.augment_normals > 0 &&
      std::filesystem::exists(cfg.out_dir / "augmented.json")) {
    const LabeledDataset augmented = load_dataset(cfg.out_dir / "augmented");
    normals.samples = concat_rows(normals.samples, augmented.samples);
    normals.labels.insert(normals.labels.end(), augmented.labels.begin(),
                          augmented.labels.end());
  }
  const LabeledDataset outliers = load_dataset(cfg.out_dir / "outliers");

  std::vector<std::size_t> provenance;
  const LabeledDataset assembled =
      assemble(normals, outliers, Rng::derive(cfg.seed, kAssemble), &provenance);
  const DetectorModel model =
      train_detector(assembled, spec, cfg.detector, Rng::derive(cfg.seed, kDetector));

  CheckpointInfo info;
  info.kind = "detector";
  info.epoch = static_cast<int>(cfg.detector.epochs);
  info.loss = model.final_loss();
  info.seed = cfg.seed;
  save_checkpoint(cfg.out_dir / "detector", info, model.net.capture_state_f32());

  nlohmann::json entry = {{"train_samples", assembled.size()},
                          {"normals", normals.size()},
                          {"outliers", outliers.size()},
                          {"first_epoch_loss", model.epoch_loss.front()},
                          {"final_epoch_loss", model.final_loss()},
                          {"wall_time", elapsed_since(t0)}};
  // provenance: output row -> source row (normals first, then outliers)
  entry["provenance_hash"] = [&] {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t v : provenance) {
      h ^= v;
      h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }();
  update_manifest(cfg, "train_detector", entry);
}

namespace {

DetectorModel load_detector(const RunConfig& cfg, const ModelSpec& spec) {
  Checkpoint ckpt = load_checkpoint(cfg.out_dir / "detector");
  Rng dummy(0);
  DetectorModel model;
  model.spec = spec;
  model.seed = ckpt.info.seed;
  model.net = build_detector(spec, dummy);
  model.net.load_state(ckpt.tensors);
  model.net.set_training(false);
  model.epoch_loss = {ckpt.info.loss};
  return model;
}

ScoredSet score_dataset(const DetectorModel& model, const LabeledDataset& data) {
  const std::vector<double> p_normal = score_batch(model, data.samples);
  ScoredSet out;
  out.scores.resize(p_normal.size());
  for (std::size_t i = 0; i < p_normal.size(); ++i) out.scores[i] = 1.0 - p_normal[i];
  out.labels = data.labels;
  out.frame_index = data.frame_index;
  return out;
}

EvalPools ring_pools(const RunConfig& cfg) {
  EvalPools pools;
  pools.inliers = synth_ring(cfg.dataset.test_normals, cfg.dataset.radius, cfg.dataset.width,
                             Rng::derive(cfg.seed, kTestInliers));
  const double f = cfg.dataset.test_outlier_fraction;
  const std::size_t need = static_cast<std::size_t>(std::llround(
                               f / (1.0 - f) * static_cast<double>(cfg.dataset.test_normals))) +
                           16;
  // uniform box points kept clear of the ring band so labels are unambiguous
  Rng rng(Rng::derive(cfg.seed, kTestOutliers));
  const double box = 1.5 * cfg.dataset.radius;
  const double keep_out = 4.0 * cfg.dataset.width;
  Tensor pool({need, 2});
  std::size_t got = 0;
  while (got < need) {
    const double x = rng.uniform(-box, box);
    const double y = rng.uniform(-box, box);
    if (std::abs(std::sqrt(x * x + y * y) - cfg.dataset.radius) <= keep_out) continue;
    pool[2 * got] = x;
    pool[2 * got + 1] = y;
    ++got;
  }
  pools.outlier_pool = pool;
  return pools;
}

EvalPools image_pools(const RunConfig& cfg) {
  EvalPools pools;
  if (cfg.dataset.type == "digits") {
    const DigitCorpus corpus = digit_corpus(cfg);
    const Tensor targets = select_class(corpus.images, corpus.digits,
                                        cfg.dataset.target_class, true);
    if (targets.dim(0) < cfg.dataset.train_normals + cfg.dataset.test_normals) {
      throw G2dError("digits: not enough target-class samples for the test split");
    }
    pools.inliers = targets.slice_rows(cfg.dataset.train_normals,
                                       cfg.dataset.train_normals + cfg.dataset.test_normals);
    pools.outlier_pool = select_class(corpus.images, corpus.digits,
                                      cfg.dataset.target_class, false);
  } else {
    const Tensor images = load_idx(cfg.dataset.test_images);
    const std::vector<int> labels = load_idx_labels(cfg.dataset.test_labels);
    if (labels.size() != images.dim(0)) throw G2dError("idx: test image/label count mismatch");
    const Tensor targets = select_class(images, labels, cfg.dataset.target_class, true);
    if (targets.dim(0) < cfg.dataset.test_normals) {
      throw G2dError("idx: test split has " + std::to_string(targets.dim(0)) +
                     " target samples, need " + std::to_string(cfg.dataset.test_normals));
    }
    pools.inliers = targets.slice_rows(0, cfg.dataset.test_normals);
    pools.outlier_pool = select_class(images, labels, cfg.dataset.target_class, false);
  }
  return pools;
}

void add_drift_stats(const RunConfig& cfg, const ModelSpec& spec,
                     const LabeledDataset& train_normals, EvalReport& report) {
  const LabeledDataset outliers = load_dataset(cfg.out_dir / "outliers");
  const std::size_t cap = 512;
  const Tensor normals_ref = train_normals.samples.dim(0) > cap
                                 ? train_normals.samples.slice_rows(0, cap)
                                 : train_normals.samples;
  const Tensor outliers_ref =
      outliers.samples.dim(0) > cap ? outliers.samples.slice_rows(0, cap) : outliers.samples;
  report.drift.emplace_back("drift_pseudo_anomalies_vs_train",
                            energy_distance(outliers_ref, normals_ref));

  const LossTrajectory traj =
      read_trajectory_csv(cfg.out_dir / "trajectory.csv", cfg.selection.smoothing_window);
  for (const auto& [name, epoch] :
       {std::pair{"drift_first_epoch_vs_train", traj.first_epoch()},
        {"drift_final_epoch_vs_train", traj.last_epoch()}}) {
    const ModelSnapshot snap = load_epoch_snapshot(cfg, epoch);
    const Tensor gen = sample_generator(snap, spec, cap, cfg.noise_spec(),
                                        Rng::derive(cfg.seed, kDriftSample));
    report.drift.emplace_back(name, energy_distance(gen, normals_ref));
  }
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec = resolve_model_spec(cfg);
  const DetectorModel model = load_detector(cfg, spec);
  const double alpha = cfg.detector.alpha;
  EvalReport report;

  if (cfg.dataset.type == "video") {
    Rng frame_rng(Rng::derive(cfg.seed, kAnomalyFrames));
    const std::vector<std::size_t> perm = frame_rng.permutation(cfg.dataset.test_frames);
    std::set<std::size_t> anomaly_frames(perm.begin(),
                                         perm.begin() + cfg.dataset.anomaly_count);
    const VideoSequence video =
        synth_video(cfg.dataset.test_frames, anomaly_frames, Rng::derive(cfg.seed, kTestVideo),
                    cfg.dataset.height, cfg.dataset.video_width);

    // persist the sequence for inspection: per-frame PGM plus ground truth
    const auto video_dir = cfg.out_dir / "video";
    std::filesystem::create_directories(video_dir);
    nlohmann::json truth;
    truth["labels"] = video.labels;
    truth["anomaly_frames"] = std::vector<std::size_t>(anomaly_frames.begin(),
                                                       anomaly_frames.end());
    {
      std::ofstream out(video_dir / "ground_truth.json");
      out << truth.dump(2) << "\n";
    }

    LabeledDataset patches;
    for (std::size_t f = 0; f < cfg.dataset.test_frames; ++f) {
      const Tensor frame = video.frames.slice_rows(f, f + 1).reshaped(
          {1, cfg.dataset.height, cfg.dataset.video_width});
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%04d.pgm", static_cast<int>(f));
      write_pgm(video_dir / name, frame);
      PatchSet set = extract_patches(frame, cfg.dataset.patch_size, cfg.dataset.overlap,
                                     static_cast<int>(f));
      const std::size_t count = set.patches.dim(0);
      patches.samples = concat_rows(patches.samples, set.patches);
      patches.labels.insert(patches.labels.end(), count, video.labels[f]);
      patches.frame_index.insert(patches.frame_index.end(), count, static_cast<int>(f));
    }

    const ScoredSet patch_scored = score_dataset(model, patches);
    const ScoredSet by_frame = frame_scores(patch_scored);
    report.f1 = f1_score(by_frame, alpha);
    report.auc = roc_auc(by_frame);
    report.eer = equal_error_rate(by_frame);
    fill_confusion(by_frame, alpha, report);
    report.roc = roc_curve(by_frame);
    for (std::size_t i = 0; i < by_frame.size(); ++i) {
      FrameRow row;
      row.frame = by_frame.frame_index[i];
      row.score = by_frame.scores[i];
      row.label = by_frame.labels[i];
      row.predicted = (1.0 - by_frame.scores[i]) < alpha ? 1 : 0;
      report.frames.push_back(row);
    }
    report.drift.emplace_back("patch_eer", equal_error_rate(patch_scored));
  } else {
    const EvalPools pools =
        cfg.dataset.type == "ring" ? ring_pools(cfg) : image_pools(cfg);
    const double headline = cfg.dataset.type == "ring" ? cfg.dataset.test_outlier_fraction
                                                       : cfg.dataset.contamination;
    ContaminationSpec spec_c;
    spec_c.target_class = cfg.dataset.target_class;
    spec_c.outlier_fraction = headline;
    spec_c.seed = Rng::derive(cfg.seed, kContaminate);
    const LabeledDataset test_set = contaminate(pools.inliers, pools.outlier_pool, spec_c);
    const ScoredSet scored = score_dataset(model, test_set);
    report.f1 = f1_score(scored, alpha);
    report.auc = roc_auc(scored);
    report.eer = equal_error_rate(scored);
    fill_confusion(scored, alpha, report);
    report.roc = roc_curve(scored);

    std::vector<double> sweep = cfg.dataset.contamination_sweep;
    if (cfg.dataset.type == "ring") sweep.clear();
    if (sweep.empty()) {
      report.f1_vs_contamination.emplace_back(headline, report.f1);
    } else {
      for (std::size_t i = 0; i < sweep.size(); ++i) {
        ContaminationSpec cs = spec_c;
        cs.outlier_fraction = sweep[i];
        cs.seed = Rng::derive(cfg.seed, kSweepBase + i);
        const LabeledDataset sweep_set = contaminate(pools.inliers, pools.outlier_pool, cs);
        const ScoredSet sweep_scored = score_dataset(model, sweep_set);
        report.f1_vs_contamination.emplace_back(sweep[i], f1_score(sweep_scored, alpha));
      }
    }
  }

  const LabeledDataset train_normals = load_training_normals(cfg);
  add_drift_stats(cfg, spec, train_normals, report);
  emit_report(report, cfg.out_dir);
  update_manifest(cfg, "evaluate",
                  {{"f1", report.f1},
                   {"auc", report.auc},
                   {"eer", report.eer},
                   {"wall_time", elapsed_since(t0)}});
}

void cmd_run_all(const RunConfig& cfg) {
  cmd_train_gan(cfg);
  cmd_select(cfg);
  cmd_synthesize(cfg);
  cmd_train_detector(cfg);
  cmd_evaluate(cfg);
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> kNames = {"train-gan", "select", "synthesize",
                                                  "train-detector", "evaluate", "run-all"};
  return kNames;
}

void run_stage(const std::string& stage, const RunConfig& cfg) {
  if (stage == "train-gan") return cmd_train_gan(cfg);
  if (stage == "select") return cmd_select(cfg);
  if (stage == "synthesize") return cmd_synthesize(cfg);
  if (stage == "train-detector") return cmd_train_detector(cfg);
  if (stage == "evaluate") return cmd_evaluate(cfg);
  if (stage == "run-all") return cmd_run_all(cfg);
  throw G2dError("unknown stage \"" + stage + "\"");
}

}  // namespace g2d
