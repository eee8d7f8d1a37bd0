#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "g2d/data.hpp"
#include "g2d/error.hpp"
#include "g2d/rng.hpp"
#include "oracles.hpp"

using namespace g2d;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("load_idx round-trips a handcrafted image fixture") {
  const auto path = temp_file("g2d_idx_fixture");
  std::vector<std::uint8_t> pixels(2 * 3 * 4);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(i * 10);
  }
  oracles::write_idx_images(path, pixels, 2, 3, 4);

  const Tensor images = load_idx(path);
  REQUIRE(images.shape() == std::vector<std::size_t>{2, 1, 3, 4});
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    CHECK(images[i] == static_cast<double>(pixels[i]) / 127.5 - 1.0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_idx reads label files") {
  const auto path = temp_file("g2d_idx_labels");
  oracles::write_idx_labels(path, {3, 1, 4, 1, 5});
  const std::vector<int> labels = load_idx_labels(path);
  CHECK(labels == std::vector<int>{3, 1, 4, 1, 5});
  std::filesystem::remove(path);
}

TEST_CASE("load_idx rejects bad magic and truncated files") {
  const auto path = temp_file("g2d_idx_bad");
  {
    std::ofstream out(path, std::ios::binary);
    const unsigned char bytes[8] = {0, 0, 9, 9, 0, 0, 0, 1};
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_idx(path)),
                       doctest::Contains("bad magic"), G2dError);

  oracles::write_idx_images(path, std::vector<std::uint8_t>(12, 0), 1, 3, 4);
  std::filesystem::resize_file(path, 12);  // chop the payload
  CHECK_THROWS_WITH_AS(static_cast<void>(load_idx(path)),
                       doctest::Contains("truncated"), G2dError);
  std::filesystem::remove(path);
}

TEST_CASE("contaminate hits the requested composition") {
  Rng rng(1);
  Tensor inliers({90, 2});
  Tensor pool({60, 2});
  rng.fill_gaussian(inliers, 0.0, 1.0);
  rng.fill_gaussian(pool, 5.0, 1.0);

  ContaminationSpec spec;
  spec.outlier_fraction = 0.1;
  spec.seed = 7;
  const LabeledDataset mixed = contaminate(inliers, pool, spec);
  CHECK(mixed.size() == 100);
  long outliers = 0;
  for (int y : mixed.labels) outliers += y;
  CHECK(outliers == 10);

  Tensor fifty({50, 2});
  rng.fill_gaussian(fifty, 0.0, 1.0);
  spec.outlier_fraction = 0.5;
  const LabeledDataset half = contaminate(fifty, pool, spec);
  CHECK(half.size() == 100);
  long half_outliers = 0;
  for (int y : half.labels) half_outliers += y;
  CHECK(half_outliers == 50);
}

TEST_CASE("contaminate is deterministic and never duplicates a pool sample") {
  Rng rng(2);
  Tensor inliers({40, 3});
  Tensor pool({100, 3});
  rng.fill_gaussian(inliers, 0.0, 1.0);
  rng.fill_gaussian(pool, 4.0, 1.0);
  ContaminationSpec spec;
  spec.outlier_fraction = 0.4;
  spec.seed = 99;

  const LabeledDataset a = contaminate(inliers, pool, spec);
  const LabeledDataset b = contaminate(inliers, pool, spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);

  // outlier rows are pairwise distinct (drawn without replacement)
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.labels[i] != 1) continue;
    std::vector<double> row(a.samples.data() + i * 3, a.samples.data() + (i + 1) * 3);
    for (const auto& seen : rows) CHECK(row != seen);
    rows.push_back(row);
  }

  ContaminationSpec hungry = spec;
  hungry.outlier_fraction = 0.5;
  Tensor tiny_pool({5, 3});
  CHECK_THROWS_AS(contaminate(inliers, tiny_pool, hungry), G2dError);

  ContaminationSpec out_of_range = spec;
  out_of_range.outlier_fraction = 0.01;
  CHECK_THROWS_AS(contaminate(inliers, pool, out_of_range), G2dError);
  out_of_range.allow_any_fraction = true;
  CHECK_NOTHROW(contaminate(inliers, pool, out_of_range));
}

TEST_CASE("extract_patches matches the documented layouts") {
  Tensor frame({240, 360});
  const PatchSet big = extract_patches(frame, 30, 5);
  CHECK(big.patches.dim(0) == 150);
  CHECK(big.grid.origins.size() == 150);
  CHECK(big.grid.stride == 25);

  Tensor exact({30, 30});
  const PatchSet one = extract_patches(exact, 30, 5);
  CHECK(one.patches.dim(0) == 1);
  CHECK(one.grid.origins[0] == std::pair<std::size_t, std::size_t>{0, 0});

  Tensor tall({55, 30});
  const PatchSet two = extract_patches(tall, 30, 5);
  CHECK(two.patches.dim(0) == 2);
  CHECK(two.grid.origins[0].first == 0);
  CHECK(two.grid.origins[1].first == 25);

  Tensor small({20, 40});
  CHECK_THROWS_AS(extract_patches(small, 30, 5), G2dError);
}

TEST_CASE("extract_patches covers every pixel and matches the counting oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 4 + rng.below(28);
    const std::size_t v = rng.below(s);
    const std::size_t h = s + rng.below(80);
    const std::size_t w = s + rng.below(80);
    Tensor frame({h, w});
    const PatchSet set = extract_patches(frame, s, v);
    const std::size_t stride = s - v;
    CHECK(set.patches.dim(0) ==
          oracles::patch_count_1d(h, s, stride) * oracles::patch_count_1d(w, s, stride));

    if (trial < 20) {
      std::vector<char> covered(h * w, 0);
      for (const auto& [r, c] : set.grid.origins) {
        for (std::size_t i = 0; i < s; ++i) {
          for (std::size_t j = 0; j < s; ++j) covered[(r + i) * w + c + j] = 1;
        }
      }
      bool all = true;
      for (char x : covered) all = all && x == 1;
      CHECK(all);
    }
  }
}

TEST_CASE("patch contents are exact crops") {
  Tensor frame({8, 8});
  for (std::size_t i = 0; i < 64; ++i) frame[i] = static_cast<double>(i) / 64.0;
  const PatchSet set = extract_patches(frame, 4, 1);
  for (std::size_t p = 0; p < set.grid.origins.size(); ++p) {
    const auto [r, c] = set.grid.origins[p];
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(set.patches[p * 16 + i * 4 + j] == frame[(r + i) * 8 + c + j]);
      }
    }
  }
}

TEST_CASE("synth_ring statistics and determinism") {
  const Tensor ring = synth_ring(1000, 1.0, 0.05, 11);
  double mean_norm = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    mean_norm += std::sqrt(ring[2 * i] * ring[2 * i] + ring[2 * i + 1] * ring[2 * i + 1]);
  }
  mean_norm /= 1000.0;
  CHECK(mean_norm > 0.95);
  CHECK(mean_norm < 1.05);

  const Tensor again = synth_ring(1000, 1.0, 0.05, 11);
  for (std::size_t i = 0; i < ring.size(); ++i) CHECK(ring[i] == again[i]);

  CHECK_THROWS_AS(synth_ring(0, 1.0, 0.05, 1), G2dError);
}

TEST_CASE("synth_video labels follow the anomaly set") {
  const VideoSequence video = synth_video(10, {3, 7}, 5, 60, 80);
  CHECK(video.labels == std::vector<int>{0, 0, 0, 1, 0, 0, 0, 1, 0, 0});
  CHECK(video.frames.shape() == std::vector<std::size_t>{10, 1, 60, 80});
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    CHECK(video.frames[i] >= -1.0);
    CHECK(video.frames[i] <= 1.0);
  }

  const VideoSequence empty = synth_video(4, {}, 5, 60, 80);
  CHECK(empty.labels == std::vector<int>{0, 0, 0, 0});

  const VideoSequence again = synth_video(10, {3, 7}, 5, 60, 80);
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    CHECK(video.frames[i] == again.frames[i]);
  }

  CHECK_THROWS_AS(synth_video(4, {9}, 5, 60, 80), G2dError);
}

TEST_CASE("synth_digits produces the requested counts per class") {
  std::vector<std::size_t> per_class(10, 3);
  per_class[8] = 5;
  const DigitCorpus corpus = synth_digits(per_class, 21);
  CHECK(corpus.images.dim(0) == 32);
  long eights = 0;
  for (int d : corpus.digits) eights += d == 8 ? 1 : 0;
  CHECK(eights == 5);
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    CHECK(corpus.images[i] >= -1.0);
    CHECK(corpus.images[i] <= 1.0);
  }
  const DigitCorpus again = synth_digits(per_class, 21);
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    CHECK(corpus.images[i] == again.images[i]);
  }
}

TEST_CASE("pgm writes and reads back") {
  const auto path = temp_file("g2d_test.pgm");
  Rng rng(31);
  Tensor img({1, 6, 9});
  rng.fill_gaussian(img, 0.0, 0.4);
  for (double& v : img.values()) v = std::clamp(v, -1.0, 1.0);
  write_pgm(path, img);
  const Tensor back = read_pgm(path);
  REQUIRE(back.shape() == img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) {
    CHECK(std::abs(back[i] - img[i]) < 1.0 / 127.5);  // 8-bit quantization
  }
  std::filesystem::remove(path);
}
