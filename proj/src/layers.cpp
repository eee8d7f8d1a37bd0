#include "g2d/layers.hpp"

#include <algorithm>
#include <cmath>

#include "g2d/error.hpp"

namespace g2d {

namespace {

using idx_t = std::ptrdiff_t;

idx_t div_ceil(idx_t a, idx_t b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
idx_t div_floor(idx_t a, idx_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Conv2dTranspose: return "conv2d_transpose";
    case LayerKind::LeakyRelu: return "leaky_relu";
    case LayerKind::Tanh: return "tanh";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::BatchNorm2d: return "batchnorm2d";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

void Layer::zero_grads() {
  for (Tensor* g : grads()) g->fill(0.0);
}

void Layer::shape_error(const Tensor& input, const std::string& expected) const {
  throw G2dError(describe() + ": input shape " + Tensor::shape_str(input.shape()) +
                 " incompatible, expected " + expected);
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in_features, std::size_t out_features, bool bias)
    : in_(in_features),
      out_(out_features),
      has_bias_(bias),
      weight_({out_features, in_features}),
      bias_(bias ? Tensor({out_features}) : Tensor({0})),
      weight_g_({out_features, in_features}),
      bias_g_(bias ? Tensor({out_features}) : Tensor({0})) {}

std::string Dense::describe() const {
  return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

void Dense::init_gaussian(Rng& rng, double stddev) {
  rng.fill_gaussian(weight_, 0.0, stddev);
  if (has_bias_) bias_.fill(0.0);
}

Tensor Dense::forward(const Tensor& input) {
  if (input.rank() != 2 || input.dim(1) != in_) {
    shape_error(input, "[N," + std::to_string(in_) + "]");
  }
  const std::size_t n = input.dim(0);
  Tensor out({n, out_});
  const double* x = input.data();
  const double* w = weight_.data();
  double* y = out.data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * in_;
    double* yr = y + r * out_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wr = w + o * in_;
      double acc = has_bias_ ? bias_[o] : 0.0;
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
  return out;
}

Tensor Dense::backward(const Tensor& input, const Tensor& upstream) {
  if (upstream.rank() != 2 || upstream.dim(1) != out_ || upstream.dim(0) != input.dim(0)) {
    throw G2dError(describe() + ": upstream shape " + Tensor::shape_str(upstream.shape()) +
                   " does not match output [N," + std::to_string(out_) + "]");
  }
  const std::size_t n = input.dim(0);
  Tensor dx({n, in_});
  const double* x = input.data();
  const double* u = upstream.data();
  const double* w = weight_.data();
  double* gx = dx.data();
  double* gw = weight_g_.data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * in_;
    const double* ur = u + r * out_;
    double* gxr = gx + r * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double uo = ur[o];
      const double* wr = w + o * in_;
      double* gwr = gw + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        gxr[i] += uo * wr[i];
        gwr[i] += uo * xr[i];
      }
      if (has_bias_) bias_g_[o] += uo;
    }
  }
  return dx;
}

std::vector<Tensor*> Dense::params() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

std::vector<Tensor*> Dense::grads() {
  if (has_bias_) return {&weight_g_, &bias_g_};
  return {&weight_g_};
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
               std::size_t pad)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      weight_({out_ch, in_ch, kernel, kernel}),
      bias_({out_ch}),
      weight_g_({out_ch, in_ch, kernel, kernel}),
      bias_g_({out_ch}) {}

std::string Conv2d::describe() const {
  return "conv2d(" + std::to_string(in_ch_) + "->" + std::to_string(out_ch_) + ",k" +
         std::to_string(k_) + ",s" + std::to_string(stride_) + ",p" + std::to_string(pad_) + ")";
}

void Conv2d::init_gaussian(Rng& rng, double stddev) {
  rng.fill_gaussian(weight_, 0.0, stddev);
  bias_.fill(0.0);
}

std::size_t Conv2d::out_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t pad) {
  if (in + 2 * pad < kernel) {
    throw G2dError("conv2d: input size " + std::to_string(in) + " smaller than kernel " +
                   std::to_string(kernel));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

Tensor Conv2d::forward(const Tensor& input) {
  if (input.rank() != 4 || input.dim(1) != in_ch_) {
    shape_error(input, "[N," + std::to_string(in_ch_) + ",H,W]");
  }
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = out_size(h, k_, stride_, pad_), ow = out_size(w, k_, stride_, pad_);
  Tensor out({n, out_ch_, oh, ow});
  const idx_t s = static_cast<idx_t>(stride_), p = static_cast<idx_t>(pad_);
  for (std::size_t ni = 0; ni < n; ++ni) {
    const double* xn = input.data() + ni * in_ch_ * h * w;
    double* yn = out.data() + ni * out_ch_ * oh * ow;
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
      double* yp = yn + oc * oh * ow;
      const double b = bias_[oc];
      for (std::size_t i = 0; i < oh * ow; ++i) yp[i] = b;
      for (std::size_t ic = 0; ic < in_ch_; ++ic) {
        const double* xp = xn + ic * h * w;
        const double* wk = weight_.data() + ((oc * in_ch_ + ic) * k_) * k_;
        for (std::size_t kh = 0; kh < k_; ++kh) {
          for (std::size_t kw = 0; kw < k_; ++kw) {
            const double wv = wk[kh * k_ + kw];
            if (wv == 0.0) continue;
            // valid output rows/cols for this kernel tap
            const idx_t oh_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kh), s));
            const idx_t oh_hi = std::min<idx_t>(static_cast<idx_t>(oh) - 1,
                                                div_floor(static_cast<idx_t>(h) - 1 + p -
                                                              static_cast<idx_t>(kh),
                                                          s));
            const idx_t ow_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kw), s));
            const idx_t ow_hi = std::min<idx_t>(static_cast<idx_t>(ow) - 1,
                                                div_floor(static_cast<idx_t>(w) - 1 + p -
                                                              static_cast<idx_t>(kw),
                                                          s));
            for (idx_t r = oh_lo; r <= oh_hi; ++r) {
              const idx_t ih = r * s - p + static_cast<idx_t>(kh);
              const double* xrow = xp + ih * static_cast<idx_t>(w);
              double* yrow = yp + r * static_cast<idx_t>(ow);
              idx_t iw = ow_lo * s - p + static_cast<idx_t>(kw);
              for (idx_t c = ow_lo; c <= ow_hi; ++c, iw += s) {
                yrow[c] += wv * xrow[iw];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& input, const Tensor& upstream) {
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = out_size(h, k_, stride_, pad_), ow = out_size(w, k_, stride_, pad_);
  if (upstream.rank() != 4 || upstream.dim(0) != n || upstream.dim(1) != out_ch_ ||
      upstream.dim(2) != oh || upstream.dim(3) != ow) {
    throw G2dError(describe() + ": upstream shape " + Tensor::shape_str(upstream.shape()) +
                   " does not match output " +
                   Tensor::shape_str({n, out_ch_, oh, ow}));
  }
  Tensor dx(input.shape());
  const idx_t s = static_cast<idx_t>(stride_), p = static_cast<idx_t>(pad_);
  for (std::size_t ni = 0; ni < n; ++ni) {
    const double* xn = input.data() + ni * in_ch_ * h * w;
    const double* un = upstream.data() + ni * out_ch_ * oh * ow;
    double* dxn = dx.data() + ni * in_ch_ * h * w;
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
      const double* up = un + oc * oh * ow;
      double bsum = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) bsum += up[i];
      bias_g_[oc] += bsum;
      for (std::size_t ic = 0; ic < in_ch_; ++ic) {
        const double* xp = xn + ic * h * w;
        double* dxp = dxn + ic * h * w;
        const double* wk = weight_.data() + ((oc * in_ch_ + ic) * k_) * k_;
        double* gk = weight_g_.data() + ((oc * in_ch_ + ic) * k_) * k_;
        for (std::size_t kh = 0; kh < k_; ++kh) {
          for (std::size_t kw = 0; kw < k_; ++kw) {
            const double wv = wk[kh * k_ + kw];
            double gacc = 0.0;
            const idx_t oh_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kh), s));
            const idx_t oh_hi = std::min<idx_t>(static_cast<idx_t>(oh) - 1,
                                                div_floor(static_cast<idx_t>(h) - 1 + p -
                                                              static_cast<idx_t>(kh),
                                                          s));
            const idx_t ow_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kw), s));
            const idx_t ow_hi = std::min<idx_t>(static_cast<idx_t>(ow) - 1,
                                                div_floor(static_cast<idx_t>(w) - 1 + p -
                                                              static_cast<idx_t>(kw),
                                                          s));
            for (idx_t r = oh_lo; r <= oh_hi; ++r) {
              const idx_t ih = r * s - p + static_cast<idx_t>(kh);
              const double* xrow = xp + ih * static_cast<idx_t>(w);
              double* dxrow = dxp + ih * static_cast<idx_t>(w);
              const double* urow = up + r * static_cast<idx_t>(ow);
              idx_t iw = ow_lo * s - p + static_cast<idx_t>(kw);
              for (idx_t c = ow_lo; c <= ow_hi; ++c, iw += s) {
                const double uv = urow[c];
                gacc += uv * xrow[iw];
                dxrow[iw] += uv * wv;
              }
            }
            gk[kh * k_ + kw] += gacc;
          }
        }
      }
    }
  }
  return dx;
}

std::vector<Tensor*> Conv2d::params() { return {&weight_, &bias_}; }
std::vector<Tensor*> Conv2d::grads() { return {&weight_g_, &bias_g_}; }

// ---------------------------------------------------------------------------
// Conv2dTranspose

Conv2dTranspose::Conv2dTranspose(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                                 std::size_t stride, std::size_t pad)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      weight_({in_ch, out_ch, kernel, kernel}),
      bias_({out_ch}),
      weight_g_({in_ch, out_ch, kernel, kernel}),
      bias_g_({out_ch}) {}

std::string Conv2dTranspose::describe() const {
  return "conv2d_transpose(" + std::to_string(in_ch_) + "->" + std::to_string(out_ch_) + ",k" +
         std::to_string(k_) + ",s" + std::to_string(stride_) + ",p" + std::to_string(pad_) + ")";
}

void Conv2dTranspose::init_gaussian(Rng& rng, double stddev) {
  rng.fill_gaussian(weight_, 0.0, stddev);
  bias_.fill(0.0);
}

std::size_t Conv2dTranspose::out_size(std::size_t in, std::size_t kernel, std::size_t stride,
                                      std::size_t pad) {
  const idx_t v = static_cast<idx_t>((in - 1) * stride + kernel) - 2 * static_cast<idx_t>(pad);
  if (in == 0 || v <= 0) {
    throw G2dError("conv2d_transpose: degenerate output size for input " + std::to_string(in));
  }
  return static_cast<std::size_t>(v);
}

Tensor Conv2dTranspose::forward(const Tensor& input) {
  if (input.rank() != 4 || input.dim(1) != in_ch_) {
    shape_error(input, "[N," + std::to_string(in_ch_) + ",H,W]");
  }
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = out_size(h, k_, stride_, pad_), ow = out_size(w, k_, stride_, pad_);
  Tensor out({n, out_ch_, oh, ow});
  const idx_t s = static_cast<idx_t>(stride_), p = static_cast<idx_t>(pad_);
  for (std::size_t ni = 0; ni < n; ++ni) {
    const double* xn = input.data() + ni * in_ch_ * h * w;
    double* yn = out.data() + ni * out_ch_ * oh * ow;
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
      double* yp = yn + oc * oh * ow;
      const double b = bias_[oc];
      for (std::size_t i = 0; i < oh * ow; ++i) yp[i] = b;
    }
    for (std::size_t ic = 0; ic < in_ch_; ++ic) {
      const double* xp = xn + ic * h * w;
      for (std::size_t oc = 0; oc < out_ch_; ++oc) {
        double* yp = yn + oc * oh * ow;
        const double* wk = weight_.data() + ((ic * out_ch_ + oc) * k_) * k_;
        for (std::size_t kh = 0; kh < k_; ++kh) {
          for (std::size_t kw = 0; kw < k_; ++kw) {
            const double wv = wk[kh * k_ + kw];
            if (wv == 0.0) continue;
            // input rows/cols whose contribution lands inside the output
            const idx_t ih_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kh), s));
            const idx_t ih_hi = std::min<idx_t>(static_cast<idx_t>(h) - 1,
                                                div_floor(static_cast<idx_t>(oh) - 1 + p -
                                                              static_cast<idx_t>(kh),
                                                          s));
            const idx_t iw_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kw), s));
            const idx_t iw_hi = std::min<idx_t>(static_cast<idx_t>(w) - 1,
                                                div_floor(static_cast<idx_t>(ow) - 1 + p -
                                                              static_cast<idx_t>(kw),
                                                          s));
            for (idx_t r = ih_lo; r <= ih_hi; ++r) {
              const idx_t orow = r * s - p + static_cast<idx_t>(kh);
              const double* xrow = xp + r * static_cast<idx_t>(w);
              double* yrow = yp + orow * static_cast<idx_t>(ow);
              idx_t ocol = iw_lo * s - p + static_cast<idx_t>(kw);
              for (idx_t c = iw_lo; c <= iw_hi; ++c, ocol += s) {
                yrow[ocol] += wv * xrow[c];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2dTranspose::backward(const Tensor& input, const Tensor& upstream) {
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = out_size(h, k_, stride_, pad_), ow = out_size(w, k_, stride_, pad_);
  if (upstream.rank() != 4 || upstream.dim(0) != n || upstream.dim(1) != out_ch_ ||
      upstream.dim(2) != oh || upstream.dim(3) != ow) {
    throw G2dError(describe() + ": upstream shape " + Tensor::shape_str(upstream.shape()) +
                   " does not match output " +
                   Tensor::shape_str({n, out_ch_, oh, ow}));
  }
  Tensor dx(input.shape());
  const idx_t s = static_cast<idx_t>(stride_), p = static_cast<idx_t>(pad_);
  for (std::size_t oc = 0; oc < out_ch_; ++oc) {
    double bsum = 0.0;
    for (std::size_t ni = 0; ni < n; ++ni) {
      const double* up = upstream.data() + (ni * out_ch_ + oc) * oh * ow;
      for (std::size_t i = 0; i < oh * ow; ++i) bsum += up[i];
    }
    bias_g_[oc] += bsum;
  }
  for (std::size_t ni = 0; ni < n; ++ni) {
    const double* xn = input.data() + ni * in_ch_ * h * w;
    const double* un = upstream.data() + ni * out_ch_ * oh * ow;
    double* dxn = dx.data() + ni * in_ch_ * h * w;
    for (std::size_t ic = 0; ic < in_ch_; ++ic) {
      const double* xp = xn + ic * h * w;
      double* dxp = dxn + ic * h * w;
      for (std::size_t oc = 0; oc < out_ch_; ++oc) {
        const double* up = un + oc * oh * ow;
        const double* wk = weight_.data() + ((ic * out_ch_ + oc) * k_) * k_;
        double* gk = weight_g_.data() + ((ic * out_ch_ + oc) * k_) * k_;
        for (std::size_t kh = 0; kh < k_; ++kh) {
          for (std::size_t kw = 0; kw < k_; ++kw) {
            const double wv = wk[kh * k_ + kw];
            double gacc = 0.0;
            const idx_t ih_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kh), s));
            const idx_t ih_hi = std::min<idx_t>(static_cast<idx_t>(h) - 1,
                                                div_floor(static_cast<idx_t>(oh) - 1 + p -
                                                              static_cast<idx_t>(kh),
                                                          s));
            const idx_t iw_lo = std::max<idx_t>(0, div_ceil(p - static_cast<idx_t>(kw), s));
            const idx_t iw_hi = std::min<idx_t>(static_cast<idx_t>(w) - 1,
                                                div_floor(static_cast<idx_t>(ow) - 1 + p -
                                                              static_cast<idx_t>(kw),
                                                          s));
            for (idx_t r = ih_lo; r <= ih_hi; ++r) {
              const idx_t orow = r * s - p + static_cast<idx_t>(kh);
              const double* xrow = xp + r * static_cast<idx_t>(w);
              double* dxrow = dxp + r * static_cast<idx_t>(w);
              const double* urow = un + oc * oh * ow + orow * static_cast<idx_t>(ow);
              idx_t ocol = iw_lo * s - p + static_cast<idx_t>(kw);
              for (idx_t c = iw_lo; c <= iw_hi; ++c, ocol += s) {
                const double uv = urow[ocol];
                gacc += uv * xrow[c];
                dxrow[c] += uv * wv;
              }
            }
            gk[kh * k_ + kw] += gacc;
          }
        }
      }
    }
  }
  return dx;
}

std::vector<Tensor*> Conv2dTranspose::params() { return {&weight_, &bias_}; }
std::vector<Tensor*> Conv2dTranspose::grads() { return {&weight_g_, &bias_g_}; }

// ---------------------------------------------------------------------------
// Activations

std::string LeakyRelu::describe() const {
  return "leaky_relu(slope=" + std::to_string(slope_) + ")";
}

Tensor LeakyRelu::forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) {
    if (v < 0.0) v *= slope_;
  }
  return out;
}

Tensor LeakyRelu::backward(const Tensor& input, const Tensor& upstream) {
  if (!upstream.same_shape(input)) {
    throw G2dError(describe() + ": upstream shape " + Tensor::shape_str(upstream.shape()) +
                   " does not match input " + Tensor::shape_str(input.shape()));
  }
  Tensor dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (input[i] < 0.0) dx[i] *= slope_;
  }
  return dx;
}

Tensor TanhLayer::forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

Tensor TanhLayer::backward(const Tensor& input, const Tensor& upstream) {
  if (!upstream.same_shape(input)) {
    throw G2dError("tanh: upstream shape mismatch");
  }
  Tensor dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double t = std::tanh(input[i]);
    dx[i] *= 1.0 - t * t;
  }
  return dx;
}

Tensor SigmoidLayer::forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

Tensor SigmoidLayer::backward(const Tensor& input, const Tensor& upstream) {
  if (!upstream.same_shape(input)) {
    throw G2dError("sigmoid: upstream shape mismatch");
  }
  Tensor dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double sig = 1.0 / (1.0 + std::exp(-input[i]));
    dx[i] *= sig * (1.0 - sig);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::size_t channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_({channels}),
      beta_({channels}),
      gamma_g_({channels}),
      beta_g_({channels}),
      running_mean_({channels}),
      running_var_({channels}) {
  gamma_.fill(1.0);
  running_var_.fill(1.0);
}

std::string BatchNorm2d::describe() const {
  return "batchnorm2d(" + std::to_string(channels_) + ")";
}

void BatchNorm2d::batch_stats(const Tensor& input, std::vector<double>& mean,
                              std::vector<double>& var) const {
  const std::size_t n = input.dim(0), hw = input.dim(2) * input.dim(3);
  const double m = static_cast<double>(n * hw);
  mean.assign(channels_, 0.0);
  var.assign(channels_, 0.0);
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const double* xp = input.data() + (ni * channels_ + c) * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += xp[i];
      mean[c] += acc;
    }
  }
  for (std::size_t c = 0; c < channels_; ++c) mean[c] /= m;
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const double* xp = input.data() + (ni * channels_ + c) * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        const double d = xp[i] - mean[c];
        acc += d * d;
      }
      var[c] += acc;
    }
  }
  for (std::size_t c = 0; c < channels_; ++c) var[c] /= m;
}

Tensor BatchNorm2d::forward(const Tensor& input) {
  if (input.rank() != 4 || input.dim(1) != channels_) {
    shape_error(input, "[N," + std::to_string(channels_) + ",H,W]");
  }
  const std::size_t n = input.dim(0), hw = input.dim(2) * input.dim(3);
  std::vector<double> mean(channels_), var(channels_);
  if (training_) {
    batch_stats(input, mean, var);
    for (std::size_t c = 0; c < channels_; ++c) {
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean[c];
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var[c];
    }
  } else {
    for (std::size_t c = 0; c < channels_; ++c) {
      mean[c] = running_mean_[c];
      var[c] = running_var_[c];
    }
  }
  Tensor out(input.shape());
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const double inv = 1.0 / std::sqrt(var[c] + eps_);
      const double g = gamma_[c], b = beta_[c], mu = mean[c];
      const double* xp = input.data() + (ni * channels_ + c) * hw;
      double* yp = out.data() + (ni * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) yp[i] = g * (xp[i] - mu) * inv + b;
    }
  }
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& input, const Tensor& upstream) {
  if (!upstream.same_shape(input)) {
    throw G2dError(describe() + ": upstream shape mismatch");
  }
  const std::size_t n = input.dim(0), hw = input.dim(2) * input.dim(3);
  const double m = static_cast<double>(n * hw);
  std::vector<double> mean(channels_), var(channels_);
  Tensor dx(input.shape());

  if (!training_) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const double inv = 1.0 / std::sqrt(running_var_[c] + eps_);
      const double g = gamma_[c], mu = running_mean_[c];
      double dg = 0.0, db = 0.0;
      for (std::size_t ni = 0; ni < n; ++ni) {
        const double* xp = input.data() + (ni * channels_ + c) * hw;
        const double* up = upstream.data() + (ni * channels_ + c) * hw;
        double* dxp = dx.data() + (ni * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          dg += up[i] * (xp[i] - mu) * inv;
          db += up[i];
          dxp[i] = up[i] * g * inv;
        }
      }
      gamma_g_[c] += dg;
      beta_g_[c] += db;
    }
    return dx;
  }

  batch_stats(input, mean, var);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double inv = 1.0 / std::sqrt(var[c] + eps_);
    const double g = gamma_[c], mu = mean[c];
    // accumulate the three reductions the training-mode gradient needs
    double sum_u = 0.0, sum_ux = 0.0;
    for (std::size_t ni = 0; ni < n; ++ni) {
      const double* xp = input.data() + (ni * channels_ + c) * hw;
      const double* up = upstream.data() + (ni * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_u += up[i];
        sum_ux += up[i] * (xp[i] - mu);
      }
    }
    gamma_g_[c] += sum_ux * inv;
    beta_g_[c] += sum_u;
    const double k1 = g * inv;
    const double k2 = sum_u / m;
    const double k3 = sum_ux * inv / m;
    for (std::size_t ni = 0; ni < n; ++ni) {
      const double* xp = input.data() + (ni * channels_ + c) * hw;
      const double* up = upstream.data() + (ni * channels_ + c) * hw;
      double* dxp = dx.data() + (ni * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        dxp[i] = k1 * (up[i] - k2 - (xp[i] - mu) * inv * k3);
      }
    }
  }
  return dx;
}

std::vector<Tensor*> BatchNorm2d::params() { return {&gamma_, &beta_}; }
std::vector<Tensor*> BatchNorm2d::grads() { return {&gamma_g_, &beta_g_}; }
std::vector<Tensor*> BatchNorm2d::state() {
  return {&gamma_, &beta_, &running_mean_, &running_var_};
}

// ---------------------------------------------------------------------------
// Reshape

std::string Reshape::describe() const {
  if (row_shape_.empty()) return "flatten";
  return "reshape(to " + Tensor::shape_str(row_shape_) + ")";
}

Tensor Reshape::forward(const Tensor& input) {
  if (input.rank() < 2) shape_error(input, "[N,...]");
  const std::size_t n = input.dim(0);
  if (row_shape_.empty()) {
    return input.reshaped({n, input.row_size()});
  }
  std::vector<std::size_t> shape{n};
  shape.insert(shape.end(), row_shape_.begin(), row_shape_.end());
  if (Tensor::shape_product(row_shape_) != input.row_size()) {
    shape_error(input, "[N," + std::to_string(Tensor::shape_product(row_shape_)) + "] total");
  }
  return input.reshaped(std::move(shape));
}

Tensor Reshape::backward(const Tensor& input, const Tensor& upstream) {
  if (upstream.size() != input.size()) {
    throw G2dError(describe() + ": upstream size mismatch");
  }
  return upstream.reshaped(input.shape());
}

// ---------------------------------------------------------------------------
// Network

Tensor Network::forward(const Tensor& input) {
  inputs_.clear();
  inputs_.reserve(layers_.size());
  Tensor x = input;
  for (auto& layer : layers_) {
    inputs_.push_back(x);
    x = layer->forward(x);
  }
  return x;
}

Tensor Network::infer(const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : layers_) {
    x = const_cast<Layer&>(*layer).forward(x);
  }
  return x;
}

Tensor Network::backward(const Tensor& upstream) {
  if (inputs_.size() != layers_.size()) {
    throw G2dError("network backward called without a preceding forward");
  }
  Tensor u = upstream;
  for (std::size_t i = layers_.size(); i > 0; --i) {
    u = layers_[i - 1]->backward(inputs_[i - 1], u);
  }
  return u;
}

std::vector<Tensor*> Network::params() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* t : layer->params()) out.push_back(t);
  }
  return out;
}

std::vector<Tensor*> Network::grads() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* t : layer->grads()) out.push_back(t);
  }
  return out;
}

std::vector<Tensor*> Network::state() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* t : layer->state()) out.push_back(t);
  }
  return out;
}

void Network::zero_grads() {
  for (auto& layer : layers_) layer->zero_grads();
}

void Network::set_training(bool training) {
  for (auto& layer : layers_) layer->set_training(training);
}

std::vector<Tensor> Network::capture_state_f32() const {
  std::vector<Tensor> out;
  for (const auto& layer : layers_) {
    for (Tensor* t : const_cast<Layer&>(*layer).state()) {
      Tensor copy = *t;
      for (double& v : copy.values()) v = static_cast<double>(static_cast<float>(v));
      out.push_back(std::move(copy));
    }
  }
  return out;
}

void Network::load_state(const std::vector<Tensor>& state) {
  std::vector<Tensor*> slots = this->state();
  if (slots.size() != state.size()) {
    throw G2dError("state tensor count mismatch: model has " + std::to_string(slots.size()) +
                   ", snapshot has " + std::to_string(state.size()));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]->same_shape(state[i])) {
      throw G2dError("state tensor " + std::to_string(i) + " shape " +
                     Tensor::shape_str(state[i].shape()) + " does not match model " +
                     Tensor::shape_str(slots[i]->shape()));
    }
    *slots[i] = state[i];
  }
}

// ---------------------------------------------------------------------------

void clip_weights(Tensor& params, double c) {
  if (!(c > 0.0)) {
    throw G2dError("clip_weights: clip constant must be positive, got " + std::to_string(c));
  }
  for (double& v : params.values()) {
    v = std::clamp(v, -c, c);
  }
}

}  // namespace g2d
