#include "g2d/dataset.hpp"

#include "g2d/error.hpp"

namespace g2d {

void LabeledDataset::validate() const {
  const std::size_t n = samples.empty() ? 0 : samples.dim(0);
  if (labels.size() != n) {
    throw G2dError("dataset: " + std::to_string(labels.size()) + " labels for " +
                   std::to_string(n) + " samples");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw G2dError("dataset: label " + std::to_string(y) + " outside {0,1}");
    }
  }
  if (!frame_index.empty() && frame_index.size() != n) {
    throw G2dError("dataset: frame index size " + std::to_string(frame_index.size()) +
                   " does not match " + std::to_string(n) + " samples");
  }
}

LabeledDataset LabeledDataset::from_samples(Tensor samples, int label) {
  LabeledDataset out;
  const std::size_t n = samples.empty() ? 0 : samples.dim(0);
  out.samples = std::move(samples);
  out.labels.assign(n, label);
  return out;
}

}  // namespace g2d
