#include "g2d/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "g2d/error.hpp"

namespace g2d {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian float32; big-endian hosts need byte swaps");

std::filesystem::path manifest_path(const std::filesystem::path& base) {
  std::filesystem::path p = base;
  p += ".json";
  return p;
}

std::filesystem::path blob_path(const std::filesystem::path& base) {
  std::filesystem::path p = base;
  p += ".bin";
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& base, const CheckpointInfo& info,
                     const std::vector<Tensor>& tensors) {
  nlohmann::json manifest;
  manifest["format_version"] = info.format_version;
  manifest["kind"] = info.kind;
  manifest["epoch"] = info.epoch;
  manifest["loss"] = info.loss;
  manifest["seed"] = info.seed;
  nlohmann::json shapes = nlohmann::json::array();
  for (const Tensor& t : tensors) shapes.push_back(t.shape());
  manifest["tensors"] = shapes;
  if (!info.labels.empty()) manifest["labels"] = info.labels;

  {
    std::ofstream out(manifest_path(base), std::ios::binary);
    if (!out) throw G2dError("checkpoint: cannot open " + manifest_path(base).string());
    out << manifest.dump(2) << "\n";
    if (!out) throw G2dError("checkpoint: write failed for " + manifest_path(base).string());
  }
  {
    std::ofstream out(blob_path(base), std::ios::binary);
    if (!out) throw G2dError("checkpoint: cannot open " + blob_path(base).string());
    for (const Tensor& t : tensors) {
      for (double v : t.values()) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
      }
    }
    if (!out) throw G2dError("checkpoint: write failed for " + blob_path(base).string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& base) {
  std::ifstream manifest_in(manifest_path(base), std::ios::binary);
  if (!manifest_in) {
    throw G2dError("checkpoint: cannot open " + manifest_path(base).string());
  }
  nlohmann::json manifest;
  try {
    manifest_in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw G2dError("checkpoint: bad manifest " + manifest_path(base).string() + ": " + e.what());
  }

  Checkpoint ckpt;
  ckpt.info.format_version = manifest.at("format_version").get<int>();
  ckpt.info.kind = manifest.at("kind").get<std::string>();
  ckpt.info.epoch = manifest.at("epoch").get<int>();
  ckpt.info.loss = manifest.at("loss").get<double>();
  ckpt.info.seed = manifest.at("seed").get<std::uint64_t>();
  if (manifest.contains("labels")) {
    ckpt.info.labels = manifest.at("labels").get<std::vector<int>>();
  }
  std::vector<std::vector<std::size_t>> shapes =
      manifest.at("tensors").get<std::vector<std::vector<std::size_t>>>();

  std::size_t total = 0;
  for (const auto& s : shapes) total += Tensor::shape_product(s);

  std::ifstream blob(blob_path(base), std::ios::binary);
  if (!blob) throw G2dError("checkpoint: cannot open " + blob_path(base).string());
  std::vector<float> raw(total);
  blob.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
  if (static_cast<std::size_t>(blob.gcount()) != total * sizeof(float)) {
    throw G2dError("checkpoint: blob " + blob_path(base).string() + " shorter than manifest (" +
                   std::to_string(total * sizeof(float)) + " bytes expected)");
  }
  char extra;
  if (blob.read(&extra, 1); blob.gcount() != 0) {
    throw G2dError("checkpoint: blob " + blob_path(base).string() + " longer than manifest");
  }

  std::size_t offset = 0;
  for (const auto& s : shapes) {
    const std::size_t count = Tensor::shape_product(s);
    Tensor t(s);
    for (std::size_t i = 0; i < count; ++i) {
      t[i] = static_cast<double>(raw[offset + i]);
    }
    offset += count;
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace g2d
