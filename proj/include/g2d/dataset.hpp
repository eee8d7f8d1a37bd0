#pragma once

#include <vector>

#include "g2d/tensor.hpp"

namespace g2d {

/// Samples with binary labels (0 normal, 1 anomaly) and an optional frame
/// index per sample for video data.
struct LabeledDataset {
  Tensor samples;                 // [N, ...]
  std::vector<int> labels;        // size N, values in {0, 1}
  std::vector<int> frame_index;   // empty, or size N

  std::size_t size() const { return labels.size(); }
  bool has_frames() const { return !frame_index.empty(); }

  /// Throws unless labels/frame sizes line up with the sample batch and all
  /// labels are 0 or 1.
  void validate() const;

  static LabeledDataset from_samples(Tensor samples, int label);
};

}  // namespace g2d
