#include "g2d/synthesis.hpp"

#include <algorithm>

#include "g2d/error.hpp"
#include "g2d/rng.hpp"

namespace g2d {

void SynthesisConfig::validate() const {
  if (samples_per_generator < 1) {
    throw G2dError("synthesis: samples_per_generator must be >= 1");
  }
  if (!(target_balance > 0.0 && target_balance <= 4.0)) {
    throw G2dError("synthesis: target_balance must lie in (0, 4]");
  }
}

LabeledDataset generate_outliers(const std::vector<ModelSnapshot>& selected,
                                 const ModelSpec& spec, const SynthesisConfig& cfg,
                                 const NoiseSpec& noise) {
  if (selected.empty()) {
    throw G2dError("generate_outliers: no generators selected");
  }
  cfg.validate();
  Tensor all;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const std::uint64_t sub_seed = Rng::derive(cfg.seed, i);
    Tensor batch =
        sample_generator(selected[i], spec, cfg.samples_per_generator, noise, sub_seed);
    all = concat_rows(all, batch);
  }
  return LabeledDataset::from_samples(std::move(all), 1);
}

LabeledDataset augment_normals(const ModelSnapshot& converged, std::optional<Regime> regime,
                               const ModelSpec& spec, std::size_t count, const NoiseSpec& noise,
                               std::uint64_t seed, std::vector<std::string>* warnings) {
  if (regime && *regime != Regime::Inlier && warnings) {
    warnings->push_back("augment_normals: snapshot at epoch " +
                        std::to_string(converged.epoch) + " is in the " +
                        regime_name(*regime) +
                        " regime; augmented samples may not follow the normal distribution");
  }
  if (count == 0) {
    LabeledDataset empty;
    std::vector<std::size_t> shape{0};
    shape.insert(shape.end(), spec.sample_shape.begin(), spec.sample_shape.end());
    empty.samples = Tensor(std::move(shape));
    return empty;
  }
  Tensor batch = sample_generator(converged, spec, count, noise, seed);
  return LabeledDataset::from_samples(std::move(batch), 0);
}

LabeledDataset assemble(const LabeledDataset& normals, const LabeledDataset& outliers,
                        std::uint64_t seed, std::vector<std::size_t>* provenance) {
  normals.validate();
  outliers.validate();
  for (int y : normals.labels) {
    if (y != 0) throw G2dError("assemble: label contamination, anomalous sample in the normal set");
  }
  for (int y : outliers.labels) {
    if (y != 1) throw G2dError("assemble: normal sample found in the outlier set");
  }
  if (normals.size() == 0) {
    throw G2dError("assemble: cannot train binary detector without normal samples");
  }
  if (outliers.size() == 0) {
    throw G2dError("assemble: cannot train binary detector without anomalies");
  }

  const std::size_t n_t = normals.size(), n_u = outliers.size();
  const Tensor combined = concat_rows(normals.samples, outliers.samples);
  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(n_t + n_u);

  LabeledDataset out;
  std::vector<std::size_t> shape = combined.shape();
  out.samples = Tensor(shape);
  out.labels.resize(n_t + n_u);
  const std::size_t rs = combined.row_size();
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const std::size_t src = perm[i];
    std::copy(combined.data() + src * rs, combined.data() + (src + 1) * rs,
              out.samples.data() + i * rs);
    out.labels[i] = src < n_t ? 0 : 1;
  }
  if (provenance) *provenance = perm;
  return out;
}

}  // namespace g2d
