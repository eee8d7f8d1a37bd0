#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <utility>
#include <vector>

#include "g2d/dataset.hpp"
#include "g2d/tensor.hpp"

namespace g2d {

/// Big-endian IDX reader. Image files (magic 0x00000803) come back as
/// [N, 1, H, W] with pixels rescaled from [0, 255] to [-1, 1]; label files
/// (magic 0x00000801) come back as [N] with raw values.
Tensor load_idx(const std::filesystem::path& path);

std::vector<int> load_idx_labels(const std::filesystem::path& path);

struct ContaminationSpec {
  int target_class = 0;  // bookkeeping only; pools arrive already split
  double outlier_fraction = 0.1;
  std::uint64_t seed = 0;
  bool allow_any_fraction = false;  // lift the tested [0.1, 0.5] range

  void validate() const;
};

/// Mix outliers into an inlier set so they form round(fraction * N) of the
/// result. Outliers are drawn from the pool without replacement,
/// deterministically.
LabeledDataset contaminate(const Tensor& inliers, const Tensor& outlier_pool,
                           const ContaminationSpec& spec);

/// Sliding-window layout over one frame: origins at multiples of
/// stride = patch_size - overlap, plus a flush-edge origin per axis so every
/// pixel is covered.
struct PatchGrid {
  std::size_t patch_size = 30;
  std::size_t overlap = 5;
  std::size_t stride = 25;
  std::vector<std::pair<std::size_t, std::size_t>> origins;  // (row, col), row-major
  int frame_index = 0;
};

struct PatchSet {
  Tensor patches;  // [P, C, s, s]
  PatchGrid grid;
};

/// All s-by-s patches of a [H,W] or [C,H,W] frame with the given overlap.
PatchSet extract_patches(const Tensor& frame, std::size_t patch_size, std::size_t overlap,
                         int frame_index = 0);

/// Flush-edge origin sequence along one axis.
std::vector<std::size_t> patch_origins(std::size_t dim, std::size_t patch_size,
                                       std::size_t stride);

/// 2-d points on a noisy circle: radius ~ N(radius, width), angle uniform.
Tensor synth_ring(std::size_t n, double radius, double width, std::uint64_t seed);

struct VideoSequence {
  Tensor frames;            // [F, 1, H, W], values in [-1, 1]
  std::vector<int> labels;  // per frame, 1 = anomalous
};

/// Textured frames with soft moving blobs; anomalous frames additionally
/// carry a bright high-frequency square from a distinct texture family.
VideoSequence synth_video(std::size_t frames, const std::set<std::size_t>& anomaly_frames,
                          std::uint64_t seed, std::size_t height = 120, std::size_t width = 160);

struct DigitCorpus {
  Tensor images;            // [N, 1, 28, 28], values in [-1, 1]
  std::vector<int> digits;  // class id 0..9 per image
};

/// Procedurally rendered handwritten-style digits: per-class stroke skeletons
/// with random affine jitter, stroke width variation and pixel noise. A
/// deterministic desk-scale stand-in for handwritten-digit corpora.
DigitCorpus synth_digits(const std::vector<std::size_t>& per_class, std::uint64_t seed);

/// Binary 8-bit PGM (P5). Values are mapped from [-1, 1] to [0, 255].
void write_pgm(const std::filesystem::path& path, const Tensor& image);
Tensor read_pgm(const std::filesystem::path& path);

/// Tile the first rows*cols images of a batch [N, 1, H, W] into one image.
Tensor tile_grid(const Tensor& batch, std::size_t rows, std::size_t cols);

}  // namespace g2d
