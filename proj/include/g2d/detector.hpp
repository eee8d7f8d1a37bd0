#pragma once

#include <cstdint>
#include <vector>

#include "g2d/dataset.hpp"
#include "g2d/gan.hpp"
#include "g2d/layers.hpp"

namespace g2d {

struct DetectorConfig {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  double alpha = 0.5;  // decision threshold on the normal-class probability

  void validate() const;
};

/// Binary classifier over (normal, anomaly); the network emits two logits and
/// score() applies the softmax.
struct DetectorModel {
  Network net;
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::vector<double> epoch_loss;  // mean BCE per epoch

  double final_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

/// Standard non-negative binary cross-entropy -[y log p + (1-y) log(1-p)]
/// with p clamped to [1e-7, 1-1e-7]. p is the predicted anomaly probability,
/// y the label (1 anomaly, 0 normal).
double bce_loss(double p, int y);

/// SGD-momentum training on a mixed normal/anomaly set. Deterministic given
/// seed. Errors on single-class data.
DetectorModel train_detector(const LabeledDataset& data, const ModelSpec& spec,
                             const DetectorConfig& cfg, std::uint64_t seed);

/// Normal-class probability for one sample shaped like spec.sample_shape.
double score(const DetectorModel& model, const Tensor& x);

/// Normal-class probabilities for a batch [N, ...]. Chunks may be scored on
/// separate threads; per-sample results do not depend on the chunking.
std::vector<double> score_batch(const DetectorModel& model, const Tensor& batch);

enum class Decision { Normal, Anomaly };

/// Normal iff score(x) >= alpha.
Decision classify(const DetectorModel& model, const Tensor& x, double alpha);

}  // namespace g2d
