#include "g2d/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "g2d/error.hpp"
#include "g2d/rng.hpp"

namespace g2d {

namespace {

double weighted_sum(const Tensor& out, const Tensor& r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * r[i];
  return acc;
}

double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

double grad_check(Layer& layer, const Tensor& input, double step, std::uint64_t seed) {
  if (!(step >= 1e-6 && step <= 1e-4)) {
    throw G2dError("grad_check: step " + std::to_string(step) + " outside [1e-6, 1e-4]");
  }
  Rng rng(seed);
  Tensor probe = input;
  Tensor out = layer.forward(probe);
  Tensor weighting(out.shape());
  rng.fill_gaussian(weighting, 0.0, 1.0);

  layer.zero_grads();
  Tensor input_grad = layer.backward(probe, weighting);
  if (!input_grad.all_finite()) {
    throw G2dError("grad_check: non-finite analytic input gradient from " + layer.describe());
  }
  std::vector<Tensor> param_grads;
  for (Tensor* g : layer.grads()) {
    if (!g->all_finite()) {
      throw G2dError("grad_check: non-finite analytic parameter gradient from " +
                     layer.describe());
    }
    param_grads.push_back(*g);
  }

  double worst = 0.0;
  const auto probe_scalar = [&](double* slot) {
    const double saved = *slot;
    *slot = saved + step;
    const double hi = weighted_sum(layer.forward(probe), weighting);
    *slot = saved - step;
    const double lo = weighted_sum(layer.forward(probe), weighting);
    *slot = saved;
    return (hi - lo) / (2.0 * step);
  };

  std::vector<Tensor*> params = layer.params();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t j = 0; j < params[t]->size(); ++j) {
      const double numeric = probe_scalar(&(*params[t])[j]);
      worst = std::max(worst, rel_error(param_grads[t][j], numeric));
    }
  }
  for (std::size_t j = 0; j < probe.size(); ++j) {
    const double numeric = probe_scalar(&probe[j]);
    worst = std::max(worst, rel_error(input_grad[j], numeric));
  }
  return worst;
}

}  // namespace g2d
