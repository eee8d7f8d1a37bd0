#include "g2d/gan.hpp"

#include <chrono>
#include <cmath>

#include "g2d/error.hpp"
#include "g2d/optim.hpp"

namespace g2d {

namespace {

std::size_t halvings_to_base(std::size_t size) {
  // number of exact x2 upsampling stages (at most the two middle stages)
  std::size_t base = size, count = 0;
  while (count < 2 && base % 2 == 0 && base / 2 >= 7) {
    base /= 2;
    ++count;
  }
  return count;
}

Tensor gather_rows(const Tensor& batch, const std::vector<std::size_t>& perm, std::size_t begin,
                   std::size_t count) {
  const std::size_t rs = batch.row_size();
  std::vector<std::size_t> shape = batch.shape();
  shape[0] = count;
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < count; ++i) {
    const double* src = batch.data() + perm[begin + i] * rs;
    std::copy(src, src + rs, out.data() + i * rs);
  }
  return out;
}

// cyclic shuffled stream of real batches
class BatchStream {
 public:
  BatchStream(const Tensor& data, std::size_t batch, Rng& rng)
      : data_(data), batch_(batch), rng_(rng), perm_(rng.permutation(data.dim(0))) {}

  Tensor next() {
    if (cursor_ + batch_ > perm_.size()) {
      perm_ = rng_.permutation(perm_.size());
      cursor_ = 0;
    }
    Tensor out = gather_rows(data_, perm_, cursor_, batch_);
    cursor_ += batch_;
    return out;
  }

 private:
  const Tensor& data_;
  std::size_t batch_;
  Rng& rng_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

std::vector<double> column(const Tensor& scores, std::size_t begin, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = scores[begin + i];
  return out;
}

}  // namespace

void NoiseSpec::validate() const {
  if (dim < 1) throw G2dError("noise: latent dimension must be >= 1");
  if (!(stddev > 0.0)) throw G2dError("noise: stddev must be positive");
}

void GanConfig::validate(std::size_t dataset_size) const {
  if (!(lr > 0.0)) throw G2dError("gan: lr must be positive");
  if (!(beta1 > 0.0) || !(beta2 > 0.0)) throw G2dError("gan: betas must be positive");
  if (batch_size == 0) throw G2dError("gan: batch_size must be positive");
  if (batch_size > dataset_size) {
    throw G2dError("gan: batch_size " + std::to_string(batch_size) +
                   " exceeds training-set size " + std::to_string(dataset_size));
  }
  if (epochs == 0) throw G2dError("gan: epochs must be positive");
  if (critic_steps_per_gen == 0) throw G2dError("gan: critic_steps_per_gen must be positive");
  if (!(clip_c > 0.0)) throw G2dError("gan: clip_c must be positive");
}

void ModelSpec::validate() const {
  if (sample_shape.size() != 1 && sample_shape.size() != 3) {
    throw G2dError("model: sample shape must be [D] or [C,H,W], got " +
                   Tensor::shape_str(sample_shape));
  }
  if (latent_dim < 1) throw G2dError("model: latent_dim must be >= 1");
  if (is_image()) {
    if (sample_shape[1] != sample_shape[2]) {
      throw G2dError("model: image samples must be square, got " + Tensor::shape_str(sample_shape));
    }
    if (sample_shape[1] < 7) {
      throw G2dError("model: image side must be >= 7, got " + Tensor::shape_str(sample_shape));
    }
    if (base_channels < 4) throw G2dError("model: base_channels must be >= 4");
  }
  if (Tensor::shape_product(sample_shape) == 0) {
    throw G2dError("model: empty sample shape");
  }
}

Network build_generator(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Network net;
  if (!spec.is_image()) {
    const std::size_t d = spec.sample_shape[0];
    auto& l1 = net.emplace<Dense>(spec.latent_dim, spec.hidden);
    l1.init_gaussian(rng, std::sqrt(2.0 / static_cast<double>(spec.latent_dim)));
    net.emplace<LeakyRelu>();
    auto& l2 = net.emplace<Dense>(spec.hidden, spec.hidden);
    l2.init_gaussian(rng, std::sqrt(2.0 / static_cast<double>(spec.hidden)));
    net.emplace<LeakyRelu>();
    // small output head: fresh generators emit a tight cloud near the origin,
    // clearly off-distribution, and expand toward the data as training runs
    auto& l3 = net.emplace<Dense>(spec.hidden, d);
    l3.init_gaussian(rng, 0.01);
    return net;
  }
  const std::size_t ch_out = spec.sample_shape[0];
  const std::size_t side = spec.sample_shape[1];
  const std::size_t ups = halvings_to_base(side);
  const std::size_t base_side = side >> ups;
  const std::size_t c0 = spec.base_channels;
  const std::size_t c1 = std::max<std::size_t>(4, c0 / 2);
  const std::size_t c2 = std::max<std::size_t>(4, c0 / 4);
  const double init = 0.02;

  auto& proj = net.emplace<Dense>(spec.latent_dim, c0 * base_side * base_side);
  proj.init_gaussian(rng, init);
  net.emplace<Reshape>(std::vector<std::size_t>{c0, base_side, base_side});

  const auto stage = [&](std::size_t in_c, std::size_t out_c, bool upsample) {
    auto& conv = upsample ? net.emplace<Conv2dTranspose>(in_c, out_c, 4, 2, 1)
                          : net.emplace<Conv2dTranspose>(in_c, out_c, 3, 1, 1);
    conv.init_gaussian(rng, init);
    net.emplace<BatchNorm2d>(out_c);
    net.emplace<LeakyRelu>();
  };
  stage(c0, c1, ups >= 1);
  stage(c1, c2, ups >= 2);
  auto& head = net.emplace<Conv2dTranspose>(c2, ch_out, 3, 1, 1);
  head.init_gaussian(rng, init);
  net.emplace<TanhLayer>();
  return net;
}

namespace {

// shared trunk: 3x (conv + leaky_relu) then flatten
std::size_t critic_trunk(Network& net, const ModelSpec& spec, Rng& rng, double init) {
  const std::size_t ch_in = spec.sample_shape[0];
  const std::size_t side = spec.sample_shape[1];
  const std::size_t q1 = std::max<std::size_t>(4, spec.base_channels / 4);
  const std::size_t q2 = std::max<std::size_t>(4, spec.base_channels / 2);
  const std::size_t q3 = spec.base_channels;
  std::size_t s = side;
  const std::size_t chans[4] = {ch_in, q1, q2, q3};
  for (int i = 0; i < 3; ++i) {
    auto& conv = net.emplace<Conv2d>(chans[i], chans[i + 1], 3, 2, 1);
    conv.init_gaussian(rng, init);
    net.emplace<LeakyRelu>();
    s = Conv2d::out_size(s, 3, 2, 1);
  }
  net.emplace<Reshape>();
  return q3 * s * s;
}

}  // namespace

Network build_critic(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Network net;
  if (!spec.is_image()) {
    const std::size_t d = spec.sample_shape[0];
    const double init = 0.01;  // inside the clip ball
    auto& l1 = net.emplace<Dense>(d, spec.hidden);
    l1.init_gaussian(rng, init);
    net.emplace<LeakyRelu>();
    auto& l2 = net.emplace<Dense>(spec.hidden, spec.hidden);
    l2.init_gaussian(rng, init);
    net.emplace<LeakyRelu>();
    auto& l3 = net.emplace<Dense>(spec.hidden, 1);
    l3.init_gaussian(rng, init);
    return net;
  }
  const double init = 0.01;
  const std::size_t flat = critic_trunk(net, spec, rng, init);
  auto& head = net.emplace<Dense>(flat, 1);
  head.init_gaussian(rng, init);
  return net;
}

Network build_detector(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Network net;
  if (!spec.is_image()) {
    const std::size_t d = spec.sample_shape[0];
    auto& l1 = net.emplace<Dense>(d, spec.hidden);
    l1.init_gaussian(rng, std::sqrt(2.0 / static_cast<double>(d)));
    net.emplace<LeakyRelu>();
    auto& l2 = net.emplace<Dense>(spec.hidden, 2);
    l2.init_gaussian(rng, std::sqrt(2.0 / static_cast<double>(spec.hidden)));
    return net;
  }
  const double init = 0.05;
  const std::size_t flat = critic_trunk(net, spec, rng, init);
  auto& head = net.emplace<Dense>(flat, 2);
  head.init_gaussian(rng, std::sqrt(2.0 / static_cast<double>(flat)));
  return net;
}

double generator_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) {
    throw G2dError("generator_loss: empty score vector");
  }
  double r = 0.0, f = 0.0;
  for (double v : real_scores) r += v;
  for (double v : fake_scores) f += v;
  return r / static_cast<double>(real_scores.size()) -
         f / static_cast<double>(fake_scores.size());
}

double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) {
    throw G2dError("critic_loss: empty score vector");
  }
  return -generator_loss(real_scores, fake_scores);
}

Tensor sample_noise(std::size_t count, const NoiseSpec& noise, Rng& rng) {
  Tensor z({count, noise.dim});
  rng.fill_gaussian(z, noise.mean, noise.stddev);
  return z;
}

GanTrainResult train_gan(const LabeledDataset& normals, const ModelSpec& spec,
                         const GanConfig& cfg, const NoiseSpec& noise, std::uint64_t seed,
                         const GanHooks* hooks) {
  normals.validate();
  for (int y : normals.labels) {
    if (y != 0) throw G2dError("gan: training set must contain only normal (label 0) samples");
  }
  const std::size_t n = normals.size();
  cfg.validate(n);
  spec.validate();
  noise.validate();
  {
    std::vector<std::size_t> row_shape(normals.samples.shape().begin() + 1,
                                       normals.samples.shape().end());
    if (row_shape != spec.sample_shape) {
      throw G2dError("gan: sample shape " + Tensor::shape_str(row_shape) +
                     " does not match model spec " + Tensor::shape_str(spec.sample_shape));
    }
  }

  Rng rng(seed);
  Network gen = build_generator(spec, rng);
  Network critic = build_critic(spec, rng);
  gen.set_training(true);
  critic.set_training(true);
  Adam gen_opt({cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  Adam critic_opt({cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  const auto gen_params = gen.params();
  const auto gen_grads = gen.grads();
  const auto critic_params = critic.params();
  const auto critic_grads = critic.grads();

  BatchStream stream(normals.samples, cfg.batch_size, rng);
  const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t cycles =
      std::max<std::size_t>(1, (batches_per_epoch + cfg.critic_steps_per_gen - 1) /
                                   cfg.critic_steps_per_gen);
  const std::size_t b = cfg.batch_size;
  const double inv_b = 1.0 / static_cast<double>(b);

  GanTrainResult result;
  result.records.reserve(cfg.epochs);
  result.snapshots.reserve(cfg.epochs);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_lc = 0.0, sum_lg = 0.0;
    for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
      Tensor real;
      for (std::size_t cs = 0; cs < cfg.critic_steps_per_gen; ++cs) {
        real = stream.next();
        Tensor z = sample_noise(b, noise, rng);
        Tensor fake = gen.infer(z);
        Tensor combined = concat_rows(real, fake);
        critic.zero_grads();
        Tensor scores = critic.forward(combined);
        const auto rs = column(scores, 0, b);
        const auto fs = column(scores, b, b);
        const double lc = critic_loss(rs, fs);
        if (!std::isfinite(lc)) {
          throw G2dError("gan: non-finite critic loss at epoch " + std::to_string(epoch));
        }
        sum_lc += lc;
        Tensor upstream({2 * b, 1});
        for (std::size_t i = 0; i < b; ++i) {
          upstream[i] = -inv_b;      // d loss / d f(real)
          upstream[b + i] = inv_b;   // d loss / d f(fake)
        }
        critic.backward(upstream);
        critic_opt.step(critic_params, critic_grads);
        for (Tensor* p : critic_params) clip_weights(*p, cfg.clip_c);
        if (hooks && hooks->after_critic_step) {
          hooks->after_critic_step(critic, static_cast<int>(epoch), static_cast<int>(cs));
        }
      }
      // generator step; the last critic batch supplies the constant real term
      Tensor z = sample_noise(b, noise, rng);
      gen.zero_grads();
      Tensor fake = gen.forward(z);
      Tensor combined = concat_rows(real, fake);
      critic.zero_grads();
      Tensor scores = critic.forward(combined);
      const auto rs = column(scores, 0, b);
      const auto fs = column(scores, b, b);
      const double lg = generator_loss(rs, fs);
      if (!std::isfinite(lg)) {
        throw G2dError("gan: non-finite generator loss at epoch " + std::to_string(epoch));
      }
      sum_lg += lg;
      Tensor upstream({2 * b, 1});
      for (std::size_t i = 0; i < b; ++i) {
        upstream[i] = 0.0;           // real term is constant for the generator
        upstream[b + i] = -inv_b;
      }
      Tensor d_combined = critic.backward(upstream);
      Tensor d_fake = d_combined.slice_rows(b, 2 * b);
      gen.backward(d_fake);
      gen_opt.step(gen_params, gen_grads);
      critic.zero_grads();
    }
    const auto t1 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = static_cast<int>(epoch);
    rec.loss_gen = sum_lg / static_cast<double>(cycles);
    rec.loss_critic = sum_lc / static_cast<double>(cycles * cfg.critic_steps_per_gen);
    rec.wall_time = std::chrono::duration<double>(t1 - t0).count();
    result.records.push_back(rec);
    result.snapshots.push_back(
        ModelSnapshot{rec.epoch, rec.loss_gen, gen.capture_state_f32()});
  }
  return result;
}

Tensor sample_generator(const ModelSnapshot& snapshot, const ModelSpec& spec, std::size_t count,
                        const NoiseSpec& noise, std::uint64_t seed) {
  if (count < 1) throw G2dError("sample_generator: count must be >= 1");
  noise.validate();
  Rng init_rng(0);
  Network gen = build_generator(spec, init_rng);
  gen.load_state(snapshot.state);
  gen.set_training(false);
  Rng rng(seed);
  Tensor z = sample_noise(count, noise, rng);
  return gen.infer(z);
}

}  // namespace g2d
