#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <set>

#include "g2d/data.hpp"
#include "g2d/detector.hpp"
#include "g2d/error.hpp"
#include "g2d/gan.hpp"
#include "g2d/grad_check.hpp"
#include "g2d/metrics.hpp"
#include "g2d/pipeline.hpp"
#include "g2d/snapshots.hpp"
#include "g2d/synthesis.hpp"

namespace py = pybind11;
using namespace g2d;

namespace {

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const NpArray& a) {
  std::vector<std::size_t> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) {
    shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
  }
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

ScoredSet to_scored(const std::vector<double>& scores, const std::vector<int>& labels,
                    const std::vector<int>& frames = {}) {
  ScoredSet s;
  s.scores = scores;
  s.labels = labels;
  s.frame_index = frames;
  return s;
}

/// One adversarial training run with its per-epoch snapshots.
struct GanRun {
  ModelSpec spec;
  NoiseSpec noise;
  GanTrainResult result;
  int smoothing_window = 3;
  int h = 5;

  LossTrajectory trajectory() const {
    return LossTrajectory(result.records, smoothing_window);
  }
};

}  // namespace

PYBIND11_MODULE(_g2d, m) {
  m.doc() = "Anomaly detection by generating pseudo-anomalies from pre-convergence GAN "
            "generators; C++ core bindings";

  // ---- metrics ----
  m.def(
      "f1_score",
      [](const std::vector<double>& scores, const std::vector<int>& labels, double alpha) {
        return f1_score(to_scored(scores, labels), alpha);
      },
      py::arg("anomaly_scores"), py::arg("labels"), py::arg("alpha") = 0.5);
  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return roc_auc(to_scored(scores, labels));
      },
      py::arg("anomaly_scores"), py::arg("labels"));
  m.def(
      "equal_error_rate",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return equal_error_rate(to_scored(scores, labels));
      },
      py::arg("anomaly_scores"), py::arg("labels"));
  m.def(
      "frame_scores",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<int>& frames) {
        const ScoredSet out = frame_scores(to_scored(scores, labels, frames));
        return py::make_tuple(out.scores, out.labels, out.frame_index);
      },
      py::arg("anomaly_scores"), py::arg("labels"), py::arg("frame_index"),
      "Collapse patch scores to per-frame (max) scores; returns (scores, labels, frames)");
  m.def(
      "energy_distance",
      [](const NpArray& a, const NpArray& b) {
        return energy_distance(to_tensor(a), to_tensor(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "pca_project",
      [](const NpArray& samples, std::size_t dim) {
        return to_array(pca_project(to_tensor(samples), dim));
      },
      py::arg("samples"), py::arg("dim") = 2);

  // ---- data ----
  m.def(
      "synth_ring",
      [](std::size_t n, double radius, double width, std::uint64_t seed) {
        return to_array(synth_ring(n, radius, width, seed));
      },
      py::arg("n"), py::arg("radius") = 1.0, py::arg("width") = 0.05, py::arg("seed") = 0);
  m.def(
      "synth_digits",
      [](const std::vector<std::size_t>& per_class, std::uint64_t seed) {
        const DigitCorpus corpus = synth_digits(per_class, seed);
        return py::make_tuple(to_array(corpus.images), corpus.digits);
      },
      py::arg("per_class"), py::arg("seed") = 0,
      "Procedural handwritten-style digit corpus; returns (images [N,1,28,28], digit ids)");
  m.def(
      "synth_video",
      [](std::size_t frames, const std::vector<std::size_t>& anomaly_frames, std::uint64_t seed,
         std::size_t height, std::size_t width) {
        const VideoSequence video = synth_video(
            frames, std::set<std::size_t>(anomaly_frames.begin(), anomaly_frames.end()), seed,
            height, width);
        return py::make_tuple(to_array(video.frames), video.labels);
      },
      py::arg("frames"), py::arg("anomaly_frames"), py::arg("seed") = 0,
      py::arg("height") = 120, py::arg("width") = 160);
  m.def(
      "extract_patches",
      [](const NpArray& frame, std::size_t patch_size, std::size_t overlap) {
        const PatchSet set = extract_patches(to_tensor(frame), patch_size, overlap);
        return py::make_tuple(to_array(set.patches), set.grid.origins);
      },
      py::arg("frame"), py::arg("patch_size") = 30, py::arg("overlap") = 5,
      "All patches of a [H,W] or [C,H,W] frame; returns (patches, origins)");
  m.def(
      "load_idx",
      [](const std::filesystem::path& path) { return to_array(load_idx(path)); },
      py::arg("path"));
  m.def(
      "contaminate",
      [](const NpArray& inliers, const NpArray& pool, double fraction, std::uint64_t seed,
         bool allow_any_fraction) {
        ContaminationSpec spec;
        spec.outlier_fraction = fraction;
        spec.seed = seed;
        spec.allow_any_fraction = allow_any_fraction;
        const LabeledDataset out = contaminate(to_tensor(inliers), to_tensor(pool), spec);
        return py::make_tuple(to_array(out.samples), out.labels);
      },
      py::arg("inliers"), py::arg("outlier_pool"), py::arg("fraction"), py::arg("seed") = 0,
      py::arg("allow_any_fraction") = false);

  // ---- nn primitives ----
  m.def("bce_loss", &bce_loss, py::arg("p_anomaly"), py::arg("label"));
  m.def(
      "clip_weights",
      [](const NpArray& params, double c) {
        Tensor t = to_tensor(params);
        clip_weights(t, c);
        return to_array(t);
      },
      py::arg("params"), py::arg("c"));

  // ---- gan ----
  py::class_<GanRun>(m, "GanRun")
      .def_property_readonly("epochs",
                             [](const GanRun& r) { return r.result.records.size(); })
      .def("trajectory",
           [](const GanRun& r) {
             std::vector<int> epochs;
             std::vector<double> loss_gen, loss_critic;
             for (const EpochRecord& rec : r.result.records) {
               epochs.push_back(rec.epoch);
               loss_gen.push_back(rec.loss_gen);
               loss_critic.push_back(rec.loss_critic);
             }
             return py::make_tuple(epochs, loss_gen, loss_critic);
           })
      .def(
          "sample",
          [](const GanRun& r, int epoch, std::size_t count, std::uint64_t seed) {
            for (const ModelSnapshot& s : r.result.snapshots) {
              if (s.epoch == epoch) {
                return to_array(sample_generator(s, r.spec, count, r.noise, seed));
              }
            }
            throw G2dError("no snapshot for epoch " + std::to_string(epoch));
          },
          py::arg("epoch"), py::arg("count"), py::arg("seed") = 0)
      .def(
          "select_epochs",
          [](const GanRun& r, std::size_t k, double include_noise_fraction) {
            const LossTrajectory traj = r.trajectory();
            return select_epochs(traj, default_thresholds(traj, r.h), k,
                                 include_noise_fraction, r.h);
          },
          py::arg("k") = 4, py::arg("include_noise_fraction") = 0.25)
      .def(
          "generate_outliers",
          [](const GanRun& r, const std::vector<int>& epochs, std::size_t per_generator,
             std::uint64_t seed) {
            std::vector<ModelSnapshot> picked;
            for (int e : epochs) {
              for (const ModelSnapshot& s : r.result.snapshots) {
                if (s.epoch == e) picked.push_back(s);
              }
            }
            SynthesisConfig cfg;
            cfg.samples_per_generator = per_generator;
            cfg.seed = seed;
            const LabeledDataset out = generate_outliers(picked, r.spec, cfg, r.noise);
            return to_array(out.samples);
          },
          py::arg("epochs"), py::arg("per_generator"), py::arg("seed") = 0);

  m.def(
      "train_gan",
      [](const NpArray& normals, std::size_t epochs, double lr, std::size_t batch_size,
         std::size_t critic_steps, double clip_c, std::size_t latent_dim, std::size_t hidden,
         std::size_t base_channels, std::uint64_t seed) {
        GanRun run;
        const Tensor samples = to_tensor(normals);
        run.spec.sample_shape.assign(samples.shape().begin() + 1, samples.shape().end());
        run.spec.latent_dim = latent_dim;
        run.spec.hidden = hidden;
        run.spec.base_channels = base_channels;
        run.noise.dim = latent_dim;
        GanConfig cfg;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.batch_size = batch_size;
        cfg.critic_steps_per_gen = critic_steps;
        cfg.clip_c = clip_c;
        run.result = train_gan(LabeledDataset::from_samples(samples, 0), run.spec, cfg,
                               run.noise, seed);
        return run;
      },
      py::arg("normals"), py::arg("epochs"), py::arg("lr") = 1e-4,
      py::arg("batch_size") = 64, py::arg("critic_steps") = 5, py::arg("clip_c") = 0.01,
      py::arg("latent_dim") = 64, py::arg("hidden") = 64, py::arg("base_channels") = 32,
      py::arg("seed") = 0,
      "Adversarial training on normal samples [N,...]; returns a GanRun with per-epoch "
      "snapshots");

  // ---- detector ----
  py::class_<DetectorModel>(m, "Detector")
      .def_property_readonly("epoch_losses",
                             [](const DetectorModel& d) { return d.epoch_loss; })
      .def(
          "score",
          [](const DetectorModel& d, const NpArray& batch) {
            return score_batch(d, to_tensor(batch));
          },
          py::arg("batch"), "Normal-class probability per sample of a batch [N,...]")
      .def(
          "classify",
          [](const DetectorModel& d, const NpArray& batch, double alpha) {
            const std::vector<double> p = score_batch(d, to_tensor(batch));
            std::vector<int> out(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= alpha ? 0 : 1;
            return out;
          },
          py::arg("batch"), py::arg("alpha") = 0.5,
          "0 = normal (score >= alpha), 1 = anomaly");

  m.def(
      "train_detector",
      [](const NpArray& samples, const std::vector<int>& labels, std::size_t epochs, double lr,
         double momentum, std::size_t batch_size, std::size_t hidden,
         std::size_t base_channels, std::uint64_t seed) {
        LabeledDataset data;
        data.samples = to_tensor(samples);
        data.labels = labels;
        ModelSpec spec;
        spec.sample_shape.assign(data.samples.shape().begin() + 1,
                                 data.samples.shape().end());
        spec.hidden = hidden;
        spec.base_channels = base_channels;
        DetectorConfig cfg;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.momentum = momentum;
        cfg.batch_size = batch_size;
        return train_detector(data, spec, cfg, seed);
      },
      py::arg("samples"), py::arg("labels"), py::arg("epochs") = 30, py::arg("lr") = 0.01,
      py::arg("momentum") = 0.9, py::arg("batch_size") = 32, py::arg("hidden") = 64,
      py::arg("base_channels") = 32, py::arg("seed") = 0);

  // ---- pipeline ----
  m.def(
      "run_stage",
      [](const std::string& stage, const std::filesystem::path& config,
         std::optional<std::uint64_t> seed, std::optional<std::filesystem::path> out) {
        const RunConfig cfg = RunConfig::load_file(config, seed, out);
        run_stage(stage, cfg);
        return cfg.out_dir.string();
      },
      py::arg("stage"), py::arg("config"), py::arg("seed") = std::nullopt,
      py::arg("out") = std::nullopt, "Run one pipeline stage; returns the output directory");
  m.def(
      "run_all",
      [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
         std::optional<std::filesystem::path> out) {
        const RunConfig cfg = RunConfig::load_file(config, seed, out);
        cmd_run_all(cfg);
        return cfg.out_dir.string();
      },
      py::arg("config"), py::arg("seed") = std::nullopt, py::arg("out") = std::nullopt);

  py::register_exception<G2dError>(m, "G2dError");
}
