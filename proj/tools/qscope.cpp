// qscope: simulate, reconstruct and analyze scanning photon-pair microscope
// acquisitions. Exit codes: 0 success, 2 config error, 3 data-format error,
// 4 numerical failure.

#include <CLI11.hpp>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "qscope/errors.hpp"
#include "qscope/pipeline.hpp"
#include "qscope/run_config.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", options.seed, "override source.rng_seed");
  cmd->add_option("--out", options.out_dir, "override run.out_dir");
}

qscope::RunConfig load_config(const CommonOptions& options) {
  qscope::RunConfig config = qscope::RunConfig::load(options.config_path);
  if (options.seed) config.source.rng_seed = *options.seed;
  if (options.out_dir) config.out_dir = *options.out_dir;
  config.validate();
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& warning : warnings)
    std::cerr << "warning: " << warning << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scanning photon-pair microscope toolkit"};
  app.require_subcommand(1);

  CommonOptions simulate_options, reconstruct_options, analyze_options;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "generate timetag streams for a scan over a sample");
  add_common(simulate, simulate_options);
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "build coincidence and singles images from timetag streams");
  add_common(reconstruct, reconstruct_options);
  CLI::App* analyze =
      app.add_subcommand("analyze", "SNR scaling and edge-response resolution analysis");
  add_common(analyze, analyze_options);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const qscope::RunConfig config = load_config(simulate_options);
      const auto result = qscope::run_simulate(config, config.out_dir);
      std::cout << "simulate: " << result.pairs_emitted << " pairs, "
                << result.signal.size() << " signal tags, " << result.idler.size()
                << " idler tags, " << result.triggers.size() << " triggers -> "
                << config.out_dir << '\n';
    } else if (reconstruct->parsed()) {
      const qscope::RunConfig config = load_config(reconstruct_options);
      const auto result = qscope::run_reconstruct(config, config.out_dir);
      print_warnings(result.warnings);
      std::cout << "reconstruct: " << result.coincidences.size() << " coincidences over "
                << result.timeline.frame_count() << " frames, delay "
                << result.delay_ps << " ps -> " << config.out_dir << '\n';
    } else if (analyze->parsed()) {
      const qscope::RunConfig config = load_config(analyze_options);
      const auto result = qscope::run_analyze(config, config.out_dir);
      print_warnings(result.warnings);
      std::cout << "analyze: " << result.snr_curve.size() << " SNR points";
      if (result.sqrt_fit_valid)
        std::cout << ", sqrt fit A=" << result.sqrt_fit.amplitude
                  << " R2=" << result.sqrt_fit.r_squared;
      if (result.converged_fits > 0)
        std::cout << ", resolution " << result.sigma_mean_um << " +- "
                  << result.sigma_std_um << " um (" << result.converged_fits << " fits)";
      std::cout << " -> " << config.out_dir << '\n';
    }
  } catch (const qscope::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const qscope::FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const qscope::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
