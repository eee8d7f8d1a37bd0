#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "g2d/dataset.hpp"
#include "g2d/layers.hpp"
#include "g2d/tensor.hpp"

namespace g2d {

/// Latent noise distribution: dim-dimensional Gaussian.
struct NoiseSpec {
  std::size_t dim = 64;
  double mean = 0.0;
  double stddev = 1.0;

  void validate() const;
};

struct GanConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 64;
  std::size_t epochs = 0;
  std::size_t critic_steps_per_gen = 5;
  double clip_c = 0.01;

  void validate(std::size_t dataset_size) const;
};

struct EpochRecord {
  int epoch = 0;          // 1-based
  double loss_gen = 0.0;  // mean f(real) - f(fake) over the epoch's generator steps
  double loss_critic = 0.0;
  double wall_time = 0.0;  // seconds; informational, never serialized to CSV
};

/// Generator weights captured after one training epoch. Values are rounded
/// through float32 so a snapshot equals its on-disk form exactly.
struct ModelSnapshot {
  int epoch = 0;
  double loss_gen = 0.0;
  std::vector<Tensor> state;
};

/// Architecture parameters shared by generator, critic and detector builders.
/// 1-d sample shapes get small dense networks; [C,H,W] shapes get the
/// convolutional templates.
struct ModelSpec {
  std::vector<std::size_t> sample_shape;
  std::size_t latent_dim = 64;
  std::size_t hidden = 64;         // dense networks
  std::size_t base_channels = 32;  // convolutional networks

  bool is_image() const { return sample_shape.size() == 3; }
  std::size_t sample_size() const { return Tensor::shape_product(sample_shape); }
  void validate() const;
};

Network build_generator(const ModelSpec& spec, Rng& rng);
Network build_critic(const ModelSpec& spec, Rng& rng);
Network build_detector(const ModelSpec& spec, Rng& rng);

/// Mean(real) - mean(fake). The generator minimizes this through the fake
/// term only; the real term is constant with respect to the generator.
double generator_loss(std::span<const double> real_scores, std::span<const double> fake_scores);

/// Mean(fake) - mean(real); minimizing it maximizes the critic's Wasserstein
/// estimate mean(real) - mean(fake).
double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores);

struct LossTrajectory;  // defined in snapshots.hpp

/// Instrumentation hooks for tests and diagnostics; all optional.
struct GanHooks {
  std::function<void(const Network& critic, int epoch, int step)> after_critic_step;
};

struct GanTrainResult {
  std::vector<EpochRecord> records;
  std::vector<ModelSnapshot> snapshots;  // one per epoch, in epoch order
};

/// Adversarial training on normal data only. Deterministic given seed; the
/// critic's weights are clipped to [-clip_c, clip_c] after every critic step
/// and one generator snapshot is captured per epoch.
GanTrainResult train_gan(const LabeledDataset& normals, const ModelSpec& spec,
                         const GanConfig& cfg, const NoiseSpec& noise, std::uint64_t seed,
                         const GanHooks* hooks = nullptr);

/// Draw count samples from a snapshot's generator. Deterministic given
/// (snapshot, seed); batchnorm runs in inference mode so samples are
/// independent of batch composition.
Tensor sample_generator(const ModelSnapshot& snapshot, const ModelSpec& spec, std::size_t count,
                        const NoiseSpec& noise, std::uint64_t seed);

/// Latent batch [count, dim] drawn from the noise spec.
Tensor sample_noise(std::size_t count, const NoiseSpec& noise, Rng& rng);

}  // namespace g2d
