#pragma once

#include "g2d/config.hpp"

namespace g2d {

/// Pipeline stages. Each stage reads the previous stage's files from
/// cfg.out_dir and writes its own, so partial reruns work. All outputs are
/// reproducible from (config, seed); metrics and trajectory CSVs are
/// byte-identical across reruns.
void cmd_train_gan(const RunConfig& cfg);
void cmd_select(const RunConfig& cfg);
void cmd_synthesize(const RunConfig& cfg);
void cmd_train_detector(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_run_all(const RunConfig& cfg);

/// Stage names accepted by --stage, in pipeline order.
const std::vector<std::string>& stage_names();
void run_stage(const std::string& stage, const RunConfig& cfg);

/// Training normals for the configured dataset (label 0 everywhere).
LabeledDataset load_training_normals(const RunConfig& cfg);

/// Network shapes implied by the dataset type.
ModelSpec resolve_model_spec(const RunConfig& cfg);

/// Parse a trajectory.csv written by cmd_train_gan.
LossTrajectory read_trajectory_csv(const std::filesystem::path& path, int smoothing_window);

}  // namespace g2d
