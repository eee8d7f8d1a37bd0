#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "g2d/error.hpp"
#include "g2d/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string stage;
};

int run(const CliOptions& opts) {
  try {
    const g2d::RunConfig cfg = g2d::RunConfig::load_file(
        opts.config_path, opts.seed,
        opts.out_dir ? std::optional<std::filesystem::path>(*opts.out_dir) : std::nullopt);
    g2d::run_stage(opts.stage, cfg);
    return 0;
  } catch (const g2d::ConfigError& e) {
    std::cerr << "g2d: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "g2d: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"g2d: train a WGAN on normal data, harvest pre-convergence generators as "
               "pseudo-anomaly sources, train a binary anomaly detector and evaluate it"};
  app.require_subcommand(0, 1);

  CliOptions opts;
  app.add_option("--config", opts.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "override the config seed");
  app.add_option("--out", opts.out_dir, "override the config output directory");
  app.add_option("--stage", opts.stage, "pipeline stage to run")
      ->check(CLI::IsMember(g2d::stage_names()));

  for (const std::string& name : g2d::stage_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();  // --config/--seed/--out may follow the stage name
    sub->callback([&opts, name]() { opts.stage = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are validation errors
  }

  if (opts.stage.empty()) {
    std::cerr << "g2d: no stage given; pass a subcommand or --stage "
              << "(one of: ";
    for (std::size_t i = 0; i < g2d::stage_names().size(); ++i) {
      std::cerr << (i ? ", " : "") << g2d::stage_names()[i];
    }
    std::cerr << ")\n";
    return 2;
  }
  if (opts.config_path.empty()) {
    std::cerr << "g2d: --config is required\n";
    return 2;
  }
  return run(opts);
}
