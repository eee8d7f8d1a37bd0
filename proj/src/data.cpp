#include "g2d/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "g2d/error.hpp"
#include "g2d/rng.hpp"

namespace g2d {

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), 4);
  if (!in) throw G2dError("idx: truncated header in " + path.string());
  return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

}  // namespace

Tensor load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw G2dError("idx: cannot open " + path.string());
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kIdxImages && magic != kIdxLabels) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    throw G2dError("idx: bad magic " + std::string(hex) + " in " + path.string());
  }
  const std::size_t ndims = magic == kIdxImages ? 3 : 1;
  std::vector<std::size_t> dims(ndims);
  for (std::size_t i = 0; i < ndims; ++i) dims[i] = read_be32(in, path);
  const std::size_t total = Tensor::shape_product(dims);
  std::vector<unsigned char> raw(total);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(total));
  if (static_cast<std::size_t>(in.gcount()) != total) {
    throw G2dError("idx: truncated data in " + path.string() + ", expected " +
                   std::to_string(total) + " bytes");
  }
  if (magic == kIdxLabels) {
    Tensor out({dims[0]});
    for (std::size_t i = 0; i < total; ++i) out[i] = static_cast<double>(raw[i]);
    return out;
  }
  Tensor out({dims[0], 1, dims[1], dims[2]});
  for (std::size_t i = 0; i < total; ++i) {
    out[i] = static_cast<double>(raw[i]) / 127.5 - 1.0;
  }
  return out;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const Tensor t = load_idx(path);
  if (t.rank() != 1) {
    throw G2dError("idx: " + path.string() + " is not a label file");
  }
  std::vector<int> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<int>(t[i]);
  return out;
}

void ContaminationSpec::validate() const {
  if (!(outlier_fraction > 0.0 && outlier_fraction < 1.0)) {
    throw G2dError("contaminate: outlier_fraction must lie in (0, 1)");
  }
  if (!allow_any_fraction && (outlier_fraction < 0.1 || outlier_fraction > 0.5)) {
    throw G2dError("contaminate: outlier_fraction " + std::to_string(outlier_fraction) +
                   " outside the supported [0.1, 0.5] range (set allow_any_fraction to override)");
  }
}

LabeledDataset contaminate(const Tensor& inliers, const Tensor& outlier_pool,
                           const ContaminationSpec& spec) {
  spec.validate();
  if (inliers.empty()) throw G2dError("contaminate: empty inlier set");
  const std::size_t n_in = inliers.dim(0);
  const double f = spec.outlier_fraction;
  const std::size_t n_out =
      static_cast<std::size_t>(std::llround(f / (1.0 - f) * static_cast<double>(n_in)));
  if (outlier_pool.empty() || outlier_pool.dim(0) < n_out) {
    throw G2dError("contaminate: outlier pool has " +
                   std::to_string(outlier_pool.empty() ? 0 : outlier_pool.dim(0)) +
                   " samples, need " + std::to_string(n_out));
  }
  Rng rng(spec.seed);
  const std::vector<std::size_t> perm = rng.permutation(outlier_pool.dim(0));

  LabeledDataset out;
  std::vector<std::size_t> shape = inliers.shape();
  shape[0] = n_in + n_out;
  out.samples = Tensor(shape);
  out.labels.assign(n_in + n_out, 0);
  const std::size_t rs = inliers.row_size();
  std::copy(inliers.data(), inliers.data() + n_in * rs, out.samples.data());
  for (std::size_t i = 0; i < n_out; ++i) {
    const std::size_t src = perm[i];
    std::copy(outlier_pool.data() + src * rs, outlier_pool.data() + (src + 1) * rs,
              out.samples.data() + (n_in + i) * rs);
    out.labels[n_in + i] = 1;
  }
  return out;
}

std::vector<std::size_t> patch_origins(std::size_t dim, std::size_t patch_size,
                                       std::size_t stride) {
  std::vector<std::size_t> origins;
  for (std::size_t o = 0; o + patch_size <= dim; o += stride) origins.push_back(o);
  const std::size_t flush = dim - patch_size;
  if (origins.empty() || origins.back() != flush) origins.push_back(flush);
  return origins;
}

PatchSet extract_patches(const Tensor& frame, std::size_t patch_size, std::size_t overlap,
                         int frame_index) {
  if (frame.rank() != 2 && frame.rank() != 3) {
    throw G2dError("extract_patches: frame must be [H,W] or [C,H,W], got " +
                   Tensor::shape_str(frame.shape()));
  }
  const std::size_t c = frame.rank() == 3 ? frame.dim(0) : 1;
  const std::size_t h = frame.rank() == 3 ? frame.dim(1) : frame.dim(0);
  const std::size_t w = frame.rank() == 3 ? frame.dim(2) : frame.dim(1);
  if (overlap >= patch_size) {
    throw G2dError("extract_patches: overlap " + std::to_string(overlap) +
                   " must be smaller than patch size " + std::to_string(patch_size));
  }
  if (h < patch_size || w < patch_size) {
    throw G2dError("extract_patches: frame " + std::to_string(h) + "x" + std::to_string(w) +
                   " smaller than patch size " + std::to_string(patch_size));
  }
  const std::size_t stride = patch_size - overlap;
  const std::vector<std::size_t> rows = patch_origins(h, patch_size, stride);
  const std::vector<std::size_t> cols = patch_origins(w, patch_size, stride);

  PatchSet out;
  out.grid.patch_size = patch_size;
  out.grid.overlap = overlap;
  out.grid.stride = stride;
  out.grid.frame_index = frame_index;
  out.patches = Tensor({rows.size() * cols.size(), c, patch_size, patch_size});
  std::size_t p = 0;
  for (std::size_t r : rows) {
    for (std::size_t col : cols) {
      out.grid.origins.emplace_back(r, col);
      double* dst = out.patches.data() + p * c * patch_size * patch_size;
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double* src = frame.data() + ci * h * w;
        for (std::size_t i = 0; i < patch_size; ++i) {
          std::memcpy(dst + (ci * patch_size + i) * patch_size,
                      src + (r + i) * w + col, patch_size * sizeof(double));
        }
      }
      ++p;
    }
  }
  return out;
}

Tensor synth_ring(std::size_t n, double radius, double width, std::uint64_t seed) {
  if (n < 1) throw G2dError("synth_ring: n must be >= 1");
  if (!(width >= 0.0)) throw G2dError("synth_ring: width must be non-negative");
  Rng rng(seed);
  Tensor out({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.gaussian(radius, width);
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out[2 * i] = r * std::cos(theta);
    out[2 * i + 1] = r * std::sin(theta);
  }
  return out;
}

namespace {

// soft-edged ellipse stamped additively onto a frame
void stamp_blob(double* img, std::size_t h, std::size_t w, double cx, double cy, double rx,
                double ry, double value) {
  const long x0 = std::max<long>(0, static_cast<long>(cx - rx - 2));
  const long x1 = std::min<long>(static_cast<long>(w) - 1, static_cast<long>(cx + rx + 2));
  const long y0 = std::max<long>(0, static_cast<long>(cy - ry - 2));
  const long y1 = std::min<long>(static_cast<long>(h) - 1, static_cast<long>(cy + ry + 2));
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      const double dx = (static_cast<double>(x) - cx) / rx;
      const double dy = (static_cast<double>(y) - cy) / ry;
      const double d = dx * dx + dy * dy;
      if (d < 1.0) {
        img[y * static_cast<long>(w) + x] += value * (1.0 - d);
      }
    }
  }
}

// bright checkerboard square, the anomalous texture family
void stamp_checker(double* img, std::size_t h, std::size_t w, double cx, double cy,
                   std::size_t side, std::size_t cell) {
  const long half = static_cast<long>(side) / 2;
  for (long dy = -half; dy < half; ++dy) {
    for (long dx = -half; dx < half; ++dx) {
      const long x = static_cast<long>(cx) + dx;
      const long y = static_cast<long>(cy) + dy;
      if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) continue;
      const bool on = ((dx + half) / static_cast<long>(cell) +
                       (dy + half) / static_cast<long>(cell)) % 2 == 0;
      img[y * static_cast<long>(w) + x] = on ? 0.95 : -0.1;
    }
  }
}

struct Sprite {
  double row, col, speed, rx, ry, shade;
};

}  // namespace

VideoSequence synth_video(std::size_t frames, const std::set<std::size_t>& anomaly_frames,
                          std::uint64_t seed, std::size_t height, std::size_t width) {
  for (std::size_t f : anomaly_frames) {
    if (f >= frames) {
      throw G2dError("synth_video: anomaly frame " + std::to_string(f) + " outside [0, " +
                     std::to_string(frames) + ")");
    }
  }
  Rng rng(seed);
  VideoSequence seq;
  seq.frames = Tensor({frames, 1, height, width});
  seq.labels.assign(frames, 0);

  // static background: smooth sinusoidal texture
  std::vector<double> background(height * width);
  const double phase_r = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_c = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      background[y * width + x] =
          -0.55 + 0.12 * std::sin(0.05 * static_cast<double>(y) + phase_r) +
          0.12 * std::cos(0.04 * static_cast<double>(x) + phase_c);
    }
  }

  // a fixed cast of soft dark blobs drifting horizontally
  const std::size_t n_sprites = 4;
  std::vector<Sprite> sprites;
  for (std::size_t i = 0; i < n_sprites; ++i) {
    Sprite s;
    s.row = rng.uniform(0.15, 0.85) * static_cast<double>(height);
    s.col = rng.uniform(0.0, 1.0) * static_cast<double>(width);
    s.speed = rng.uniform(1.0, 3.0) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    s.rx = rng.uniform(5.0, 9.0);
    s.ry = rng.uniform(8.0, 13.0);
    s.shade = rng.uniform(0.5, 0.8);
    sprites.push_back(s);
  }

  for (std::size_t f = 0; f < frames; ++f) {
    double* img = seq.frames.data() + f * height * width;
    std::copy(background.begin(), background.end(), img);
    for (const Sprite& s : sprites) {
      double col = s.col + s.speed * static_cast<double>(f);
      col = std::fmod(std::fmod(col, static_cast<double>(width)) + static_cast<double>(width),
                      static_cast<double>(width));
      stamp_blob(img, height, width, col, s.row, s.rx, s.ry, s.shade);
    }
    if (anomaly_frames.count(f)) {
      seq.labels[f] = 1;
      const double cx = rng.uniform(0.15, 0.85) * static_cast<double>(width);
      const double cy = rng.uniform(0.15, 0.85) * static_cast<double>(height);
      stamp_checker(img, height, width, cx, cy, 22, 3);
    }
    for (std::size_t i = 0; i < height * width; ++i) {
      img[i] = std::clamp(img[i] + rng.gaussian(0.0, 0.03), -1.0, 1.0);
    }
  }
  return seq;
}

namespace {

using Point = std::pair<double, double>;
using Polyline = std::vector<Point>;

std::vector<Polyline> loop(double cx, double cy, double rx, double ry, int segments = 14) {
  Polyline p;
  for (int i = 0; i <= segments; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / segments;
    p.emplace_back(cx + rx * std::sin(t), cy - ry * std::cos(t));
  }
  return {p};
}

std::vector<Polyline> digit_skeleton(int digit) {
  switch (digit) {
    case 0: return loop(0.5, 0.5, 0.2, 0.32);
    case 1: return {{{0.38, 0.28}, {0.52, 0.15}, {0.52, 0.85}}};
    case 2:
      return {{{0.3, 0.3}, {0.38, 0.18}, {0.62, 0.18}, {0.7, 0.32}, {0.62, 0.5},
               {0.35, 0.72}, {0.3, 0.85}, {0.7, 0.85}}};
    case 3:
      return {{{0.3, 0.22}, {0.6, 0.17}, {0.7, 0.3}, {0.55, 0.47}, {0.7, 0.64},
               {0.6, 0.82}, {0.3, 0.78}}};
    case 4: return {{{0.58, 0.15}, {0.3, 0.58}, {0.75, 0.58}}, {{0.62, 0.38}, {0.62, 0.85}}};
    case 5:
      return {{{0.68, 0.17}, {0.34, 0.17}, {0.32, 0.45}, {0.55, 0.42}, {0.69, 0.55},
               {0.67, 0.72}, {0.53, 0.83}, {0.3, 0.77}}};
    case 6:
      return {{{0.64, 0.17}, {0.45, 0.32}, {0.35, 0.52}, {0.34, 0.68}, {0.45, 0.82},
               {0.6, 0.8}, {0.67, 0.66}, {0.58, 0.53}, {0.42, 0.54}, {0.35, 0.64}}};
    case 7: return {{{0.3, 0.18}, {0.7, 0.18}, {0.45, 0.85}}};
    case 8: {
      auto upper = loop(0.5, 0.32, 0.16, 0.15);
      auto lower = loop(0.5, 0.66, 0.19, 0.18);
      upper.push_back(lower[0]);
      return upper;
    }
    case 9: {
      auto head = loop(0.5, 0.35, 0.17, 0.17);
      head.push_back({{0.66, 0.4}, {0.6, 0.62}, {0.47, 0.85}});
      return head;
    }
    default: throw G2dError("digit_skeleton: digit must lie in 0..9");
  }
}

double segment_distance(double px, double py, const Point& a, const Point& b) {
  const double vx = b.first - a.first, vy = b.second - a.second;
  const double wx = px - a.first, wy = py - a.second;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.first + t * vx), dy = py - (a.second + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

DigitCorpus synth_digits(const std::vector<std::size_t>& per_class, std::uint64_t seed) {
  if (per_class.size() != 10) {
    throw G2dError("synth_digits: per_class must list counts for all 10 digits");
  }
  constexpr std::size_t kSide = 28;
  std::size_t total = 0;
  for (std::size_t c : per_class) total += c;
  DigitCorpus corpus;
  corpus.images = Tensor({total, 1, kSide, kSide});
  corpus.images.fill(-1.0);
  corpus.digits.reserve(total);

  Rng rng(seed);
  std::size_t sample = 0;
  for (int digit = 0; digit < 10; ++digit) {
    const auto skeleton = digit_skeleton(digit);
    for (std::size_t rep = 0; rep < per_class[static_cast<std::size_t>(digit)]; ++rep) {
      // per-sample jitter: rotation, anisotropic scale, shear, translation
      const double rot = rng.uniform(-0.18, 0.18);
      const double sx = rng.uniform(0.85, 1.15);
      const double sy = rng.uniform(0.85, 1.15);
      const double shear = rng.uniform(-0.15, 0.15);
      const double tx = rng.uniform(-0.05, 0.05);
      const double ty = rng.uniform(-0.05, 0.05);
      const double half_width = rng.uniform(0.035, 0.06);
      const double cos_r = std::cos(rot), sin_r = std::sin(rot);

      double* img = corpus.images.data() + sample * kSide * kSide;
      for (std::size_t py = 0; py < kSide; ++py) {
        for (std::size_t px = 0; px < kSide; ++px) {
          // map pixel centre back into glyph coordinates
          double u = (static_cast<double>(px) + 0.5) / kSide - 0.5 - tx;
          double v = (static_cast<double>(py) + 0.5) / kSide - 0.5 - ty;
          const double ru = cos_r * u + sin_r * v;
          const double rv = -sin_r * u + cos_r * v;
          u = ru / sx;
          v = (rv - shear * ru) / sy;
          const double gx = u + 0.5, gy = v + 0.5;
          double dist = 1e9;
          for (const Polyline& line : skeleton) {
            for (std::size_t i = 0; i + 1 < line.size(); ++i) {
              dist = std::min(dist, segment_distance(gx, gy, line[i], line[i + 1]));
            }
          }
          const double ink = std::clamp((half_width - dist) / 0.025, 0.0, 1.0);
          img[py * kSide + px] = 2.0 * ink - 1.0;
        }
      }
      for (std::size_t i = 0; i < kSide * kSide; ++i) {
        img[i] = std::clamp(img[i] + rng.gaussian(0.0, 0.06), -1.0, 1.0);
      }
      corpus.digits.push_back(digit);
      ++sample;
    }
  }
  return corpus;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  std::size_t h = 0, w = 0;
  if (image.rank() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else if (image.rank() == 3 && image.dim(0) == 1) {
    h = image.dim(1);
    w = image.dim(2);
  } else {
    throw G2dError("write_pgm: image must be [H,W] or [1,H,W], got " +
                   Tensor::shape_str(image.shape()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw G2dError("write_pgm: cannot open " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  for (std::size_t i = 0; i < h * w; ++i) {
    const double v = std::clamp((image[i] + 1.0) * 127.5, 0.0, 255.0);
    const unsigned char byte = static_cast<unsigned char>(std::lround(v));
    out.write(reinterpret_cast<const char*>(&byte), 1);
  }
  if (!out) throw G2dError("write_pgm: write failed for " + path.string());
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw G2dError("read_pgm: cannot open " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255) {
    throw G2dError("read_pgm: unsupported format in " + path.string());
  }
  in.get();  // single whitespace after header
  std::vector<unsigned char> raw(w * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw G2dError("read_pgm: truncated data in " + path.string());
  }
  Tensor out({1, h, w});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<double>(raw[i]) / 127.5 - 1.0;
  }
  return out;
}

Tensor tile_grid(const Tensor& batch, std::size_t rows, std::size_t cols) {
  if (batch.rank() != 4 || batch.dim(1) != 1) {
    throw G2dError("tile_grid: batch must be [N,1,H,W]");
  }
  const std::size_t h = batch.dim(2), w = batch.dim(3);
  const std::size_t n = std::min(batch.dim(0), rows * cols);
  Tensor out({1, rows * h, cols * w});
  out.fill(-1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = i / cols, c = i % cols;
    const double* src = batch.data() + i * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      std::memcpy(out.data() + (r * h + y) * cols * w + c * w, src + y * w,
                  w * sizeof(double));
    }
  }
  return out;
}

}  // namespace g2d
