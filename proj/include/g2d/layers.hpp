#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "g2d/rng.hpp"
#include "g2d/tensor.hpp"

namespace g2d {

enum class LayerKind {
  Dense,
  Conv2d,
  Conv2dTranspose,
  LeakyRelu,
  Tanh,
  Sigmoid,
  BatchNorm2d,
  Flatten,
};

const char* layer_kind_name(LayerKind kind);

/// One differentiable layer. forward is a pure function of (params, input);
/// backward fills the layer's parameter gradients (accumulating) and returns
/// the input gradient. Layers keep no per-call activation state, so a single
/// instance can run forward concurrently, but backward mutates grads and must
/// not be shared across concurrent backward calls.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  /// Short description with dimensions, used in error messages.
  virtual std::string describe() const = 0;

  virtual Tensor forward(const Tensor& input) = 0;
  virtual Tensor backward(const Tensor& input, const Tensor& upstream) = 0;

  /// Trainable parameter tensors (empty for stateless kinds).
  virtual std::vector<Tensor*> params() { return {}; }
  /// Gradient tensors, shape-matched to params().
  virtual std::vector<Tensor*> grads() { return {}; }
  /// Parameters plus non-trainable state (batchnorm running stats); this is
  /// what snapshots and checkpoints persist.
  virtual std::vector<Tensor*> state() { return params(); }

  virtual void set_training(bool) {}

  void zero_grads();

 protected:
  [[noreturn]] void shape_error(const Tensor& input, const std::string& expected) const;
};

class Dense : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features, bool bias = true);

  LayerKind kind() const override { return LayerKind::Dense; }
  std::string describe() const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;
  std::vector<Tensor*> params() override;
  std::vector<Tensor*> grads() override;

  void init_gaussian(Rng& rng, double stddev);

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  bool has_bias_;
  Tensor weight_, bias_;        // weight [out, in], bias [out]
  Tensor weight_g_, bias_g_;
};

class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride = 1,
         std::size_t pad = 0);

  LayerKind kind() const override { return LayerKind::Conv2d; }
  std::string describe() const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;
  std::vector<Tensor*> params() override;
  std::vector<Tensor*> grads() override;

  void init_gaussian(Rng& rng, double stddev);

  Tensor& weight() { return weight_; }

  static std::size_t out_size(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t pad);

 private:
  std::size_t in_ch_, out_ch_, k_, stride_, pad_;
  Tensor weight_, bias_;        // weight [oc, ic, k, k], bias [oc]
  Tensor weight_g_, bias_g_;
};

class Conv2dTranspose : public Layer {
 public:
  Conv2dTranspose(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                  std::size_t stride = 1, std::size_t pad = 0);

  LayerKind kind() const override { return LayerKind::Conv2dTranspose; }
  std::string describe() const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;
  std::vector<Tensor*> params() override;
  std::vector<Tensor*> grads() override;

  void init_gaussian(Rng& rng, double stddev);

  static std::size_t out_size(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t pad);

 private:
  std::size_t in_ch_, out_ch_, k_, stride_, pad_;
  Tensor weight_, bias_;        // weight [ic, oc, k, k], bias [oc]
  Tensor weight_g_, bias_g_;
};

class LeakyRelu : public Layer {
 public:
  explicit LeakyRelu(double slope = 0.2) : slope_(slope) {}

  LayerKind kind() const override { return LayerKind::LeakyRelu; }
  std::string describe() const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;

 private:
  double slope_;
};

class TanhLayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Tanh; }
  std::string describe() const override { return "tanh"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;
};

class SigmoidLayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Sigmoid; }
  std::string describe() const override { return "sigmoid"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;
};

/// Per-channel normalization over (N, H, W). Training mode uses batch
/// statistics and updates running averages; inference mode uses the running
/// averages.
class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  LayerKind kind() const override { return LayerKind::BatchNorm2d; }
  std::string describe() const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;
  std::vector<Tensor*> params() override;
  std::vector<Tensor*> grads() override;
  std::vector<Tensor*> state() override;
  void set_training(bool training) override { training_ = training; }

 private:
  void batch_stats(const Tensor& input, std::vector<double>& mean,
                   std::vector<double>& var) const;

  std::size_t channels_;
  double momentum_, eps_;
  bool training_ = true;
  Tensor gamma_, beta_;
  Tensor gamma_g_, beta_g_;
  Tensor running_mean_, running_var_;
};

/// Shape adapter. Default-constructed it flattens [N, ...] to [N, F]; given a
/// row shape it restores [N, F] to [N, ...].
class Reshape : public Layer {
 public:
  Reshape() = default;
  explicit Reshape(std::vector<std::size_t> row_shape) : row_shape_(std::move(row_shape)) {}

  LayerKind kind() const override { return LayerKind::Flatten; }
  std::string describe() const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& input, const Tensor& upstream) override;

 private:
  std::vector<std::size_t> row_shape_;  // empty = flatten
};

/// Sequential stack of layers with cached activations for backprop.
class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  /// Forward pass caching each layer's input for a subsequent backward().
  Tensor forward(const Tensor& input);
  /// Forward pass without caching; usable from const contexts (inference).
  Tensor infer(const Tensor& input) const;
  /// Backprop through the stack. Accumulates parameter gradients and returns
  /// the gradient with respect to the network input.
  Tensor backward(const Tensor& upstream);

  std::vector<Tensor*> params();
  std::vector<Tensor*> grads();
  std::vector<Tensor*> state();
  void zero_grads();
  void set_training(bool training);

  /// Copies of all state tensors, each value rounded through float32. This is
  /// the precision snapshots and checkpoints carry, so a captured model equals
  /// its persisted form bit for bit.
  std::vector<Tensor> capture_state_f32() const;
  void load_state(const std::vector<Tensor>& state);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Tensor> inputs_;
};

/// Clamp every parameter entry to [-c, c]. Idempotent. c must be positive.
void clip_weights(Tensor& params, double c);

}  // namespace g2d
