#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "g2d/tensor.hpp"

namespace g2d {

/// Checkpoint = <base>.json manifest + <base>.bin weight blob. The blob holds
/// little-endian float32 values, tensors concatenated in manifest order, so
/// its length is always the sum of the manifest shape products times 4.
/// Tensor values captured through Network::capture_state_f32 round-trip
/// bit-exactly.
struct CheckpointInfo {
  std::string kind;          // e.g. "generator_snapshot", "detector", "dataset"
  int format_version = 1;
  int epoch = 0;
  double loss = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> labels;   // only used by dataset checkpoints
};

void save_checkpoint(const std::filesystem::path& base, const CheckpointInfo& info,
                     const std::vector<Tensor>& tensors);

struct Checkpoint {
  CheckpointInfo info;
  std::vector<Tensor> tensors;
};

Checkpoint load_checkpoint(const std::filesystem::path& base);

}  // namespace g2d
