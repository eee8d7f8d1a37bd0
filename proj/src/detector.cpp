#include "g2d/detector.hpp"

#include <algorithm>
#include <cmath>

#include "g2d/error.hpp"
#include "g2d/optim.hpp"
#include "g2d/parallel.hpp"
#include "g2d/rng.hpp"

namespace g2d {

namespace {

constexpr double kProbClamp = 1e-7;

// softmax over two logits; returns (p_normal, p_anomaly)
std::pair<double, double> softmax2(double logit_normal, double logit_anomaly) {
  const double m = std::max(logit_normal, logit_anomaly);
  const double e0 = std::exp(logit_normal - m);
  const double e1 = std::exp(logit_anomaly - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

void check_sample_shape(const DetectorModel& model, const Tensor& x) {
  std::vector<std::size_t> row_shape(x.shape().begin() + 1, x.shape().end());
  if (row_shape != model.spec.sample_shape) {
    throw G2dError("detector: sample shape " + Tensor::shape_str(row_shape) +
                   " does not match trained shape " +
                   Tensor::shape_str(model.spec.sample_shape));
  }
}

}  // namespace

void DetectorConfig::validate() const {
  if (!(lr > 0.0)) throw G2dError("detector: lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw G2dError("detector: momentum must lie in [0, 1)");
  if (batch_size == 0) throw G2dError("detector: batch_size must be positive");
  if (epochs == 0) throw G2dError("detector: epochs must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw G2dError("detector: alpha must lie in (0, 1)");
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

DetectorModel train_detector(const LabeledDataset& data, const ModelSpec& spec,
                             const DetectorConfig& cfg, std::uint64_t seed) {
  data.validate();
  cfg.validate();
  const std::size_t n = data.size();
  if (n == 0) throw G2dError("detector: empty training set");
  const bool has0 = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end();
  const bool has1 = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
  if (!has0 || !has1) {
    throw G2dError("detector: training data must contain both classes, got only label " +
                   std::string(has0 ? "0" : "1"));
  }
  {
    std::vector<std::size_t> row_shape(data.samples.shape().begin() + 1,
                                       data.samples.shape().end());
    if (row_shape != spec.sample_shape) {
      throw G2dError("detector: sample shape " + Tensor::shape_str(row_shape) +
                     " does not match model spec " + Tensor::shape_str(spec.sample_shape));
    }
  }

  Rng rng(seed);
  DetectorModel model;
  model.spec = spec;
  model.seed = seed;
  model.net = build_detector(spec, rng);
  model.net.set_training(true);
  SgdMomentum opt({cfg.lr, cfg.momentum});
  const auto params = model.net.params();
  const auto grads = model.net.grads();
  const std::size_t rs = data.samples.row_size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> perm = rng.permutation(n);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      std::vector<std::size_t> shape = data.samples.shape();
      shape[0] = b;
      Tensor batch(shape);
      std::vector<int> ys(b);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t src = perm[start + i];
        std::copy(data.samples.data() + src * rs, data.samples.data() + (src + 1) * rs,
                  batch.data() + i * rs);
        ys[i] = data.labels[src];
      }
      model.net.zero_grads();
      Tensor logits = model.net.forward(batch);  // [b, 2]
      Tensor upstream({b, 2});
      for (std::size_t i = 0; i < b; ++i) {
        const auto [p_norm, p_anom] = softmax2(logits[2 * i], logits[2 * i + 1]);
        loss_sum += bce_loss(p_anom, ys[i]);
        // softmax cross-entropy gradient, averaged over the batch
        const double y1 = ys[i] == 1 ? 1.0 : 0.0;
        upstream[2 * i] = (p_norm - (1.0 - y1)) / static_cast<double>(b);
        upstream[2 * i + 1] = (p_anom - y1) / static_cast<double>(b);
      }
      model.net.backward(upstream);
      opt.step(params, grads);
    }
    model.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    if (!std::isfinite(model.epoch_loss.back())) {
      throw G2dError("detector: non-finite training loss at epoch " + std::to_string(epoch + 1));
    }
  }
  model.net.set_training(false);
  return model;
}

double score(const DetectorModel& model, const Tensor& x) {
  Tensor batch = x;
  if (x.rank() == model.spec.sample_shape.size()) {
    std::vector<std::size_t> shape{1};
    shape.insert(shape.end(), x.shape().begin(), x.shape().end());
    batch = x.reshaped(shape);
  }
  check_sample_shape(model, batch);
  if (batch.dim(0) != 1) {
    throw G2dError("detector: score() takes a single sample, use score_batch for batches");
  }
  const Tensor logits = model.net.infer(batch);
  return softmax2(logits[0], logits[1]).first;
}

std::vector<double> score_batch(const DetectorModel& model, const Tensor& batch) {
  check_sample_shape(model, batch);
  const std::size_t n = batch.dim(0);
  std::vector<double> out(n);
  parallel_chunks(n, 256, [&](std::size_t begin, std::size_t end, std::size_t) {
    const Tensor sub = batch.slice_rows(begin, end);
    const Tensor logits = model.net.infer(sub);
    for (std::size_t i = 0; i < end - begin; ++i) {
      out[begin + i] = softmax2(logits[2 * i], logits[2 * i + 1]).first;
    }
  });
  return out;
}

Decision classify(const DetectorModel& model, const Tensor& x, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw G2dError("classify: alpha must lie in (0, 1)");
  }
  return score(model, x) >= alpha ? Decision::Normal : Decision::Anomaly;
}

}  // namespace g2d
