#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "g2d/dataset.hpp"
#include "g2d/gan.hpp"
#include "g2d/snapshots.hpp"

namespace g2d {

struct SynthesisConfig {
  std::size_t samples_per_generator = 0;  // m
  std::uint64_t seed = 0;
  double target_balance = 1.0;  // |U| / |T|

  void validate() const;
};

/// m samples from each selected snapshot, labeled anomalous. Each snapshot
/// draws from its own derived noise stream so batches never repeat across
/// generators.
LabeledDataset generate_outliers(const std::vector<ModelSnapshot>& selected,
                                 const ModelSpec& spec, const SynthesisConfig& cfg,
                                 const NoiseSpec& noise);

/// count samples from a converged (inlier-regime) snapshot, labeled normal.
/// A non-inlier snapshot is allowed but recorded as a warning.
LabeledDataset augment_normals(const ModelSnapshot& converged, std::optional<Regime> regime,
                               const ModelSpec& spec, std::size_t count, const NoiseSpec& noise,
                               std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

/// Concatenate normals (all label 0) and outliers (all label 1), then shuffle
/// with a seeded permutation. provenance, when given, receives for each output
/// row its source index: 0..|T|-1 for normals, |T|..|T|+|U|-1 for outliers.
LabeledDataset assemble(const LabeledDataset& normals, const LabeledDataset& outliers,
                        std::uint64_t seed, std::vector<std::size_t>* provenance = nullptr);

}  // namespace g2d
