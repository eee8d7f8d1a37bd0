#pragma once

#include <cstdint>

#include "g2d/layers.hpp"
#include "g2d/tensor.hpp"

namespace g2d {

/// Central finite-difference verification of a layer's backward pass.
///
/// A random weighting tensor R (seeded) turns the layer output into the
/// scalar sum(forward(x) * R); the analytic gradient is backward with
/// upstream R. Every parameter entry and every input entry is perturbed by
/// +/- step and compared against the analytic value.
///
/// Returns max over all entries of |analytic - numeric| /
/// max(|analytic|, |numeric|, 1e-12). step must lie in [1e-6, 1e-4] and the
/// computation runs in double precision throughout. A non-finite analytic
/// gradient raises an error.
double grad_check(Layer& layer, const Tensor& input, double step, std::uint64_t seed = 42);

}  // namespace g2d
