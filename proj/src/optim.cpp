#include "g2d/optim.hpp"

#include <cmath>

#include "g2d/error.hpp"

namespace g2d {

namespace {

void check_pair(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
                const char* who) {
  if (params.size() != grads.size()) {
    throw G2dError(std::string(who) + ": parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i])) {
      throw G2dError(std::string(who) + ": tensor " + std::to_string(i) + " shapes differ: " +
                     Tensor::shape_str(params[i]->shape()) + " vs " +
                     Tensor::shape_str(grads[i]->shape()));
    }
  }
}

}  // namespace

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
  check_pair(params, grads, "adam");
  if (!(cfg_.lr > 0.0)) throw G2dError("adam: learning rate must be positive");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) {
    throw G2dError("adam: parameter set changed between steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void SgdMomentum::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
  check_pair(params, grads, "sgd_momentum");
  if (!(cfg_.lr > 0.0)) throw G2dError("sgd_momentum: learning rate must be positive");
  if (velocity_.empty()) {
    for (const Tensor* p : params) velocity_.emplace_back(p->shape());
  }
  if (velocity_.size() != params.size()) {
    throw G2dError("sgd_momentum: parameter set changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& vel = velocity_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      vel[j] = cfg_.momentum * vel[j] + g[j];
      p[j] -= cfg_.lr * vel[j];
    }
  }
}

}  // namespace g2d
