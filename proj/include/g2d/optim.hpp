#pragma once

#include <cstdint>
#include <vector>

#include "g2d/tensor.hpp"

namespace g2d {

/// Adam with bias correction. Moment tensors are allocated lazily on the
/// first step and must then keep matching the parameter shapes.
class Adam {
 public:
  struct Config {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(Config cfg) : cfg_(cfg) {}

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

/// SGD with classical momentum: v <- momentum*v + g; p <- p - lr*v.
class SgdMomentum {
 public:
  struct Config {
    double lr = 0.01;
    double momentum = 0.9;
  };

  explicit SgdMomentum(Config cfg) : cfg_(cfg) {}

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  std::vector<Tensor> velocity_;
};

}  // namespace g2d
