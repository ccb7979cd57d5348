#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qscope/analysis.hpp"
#include "qscope/pattern.hpp"
#include "qscope/scan.hpp"
#include "qscope/simulator.hpp"

namespace qscope {

/// Sample selection: a built-in generator or a reflectance map from CSV.
struct SampleParams {
  std::string type = "grating";  ///< "grating" | "uniform" | "csv"
  double field_um = 100.0;
  double square_size_um = 20.0;
  double gap_um = 10.0;
  double reflectance = 1.0;  ///< uniform level
  std::string file;          ///< csv reflectance map, values in [0, 1]
  double blur_sigma_um = 2.0;
  int resolution_px = 512;

  SamplePattern build(const std::filesystem::path& base_dir) const;
};

struct CoincidenceParams {
  std::int64_t bin_width_ps = 100;
  std::int64_t window_ps = 1000;
  std::int64_t lag_min_ps = -50'000;
  std::int64_t lag_max_ps = 50'000;
};

struct ReconstructParams {
  ReverseHandling reverse_handling = ReverseHandling::Fold;
  bool emit_frame_stack = true;
  /// Input QTT1 files; empty means signal.qtt, idler.qtt, triggers.qtt in the
  /// run directory. Channels are pooled across all listed files.
  std::vector<std::string> stream_files;
};

struct AnalysisParams {
  int linescan_count = 20;
  std::optional<EdgeRegion> edge_region;
  int snr_max_frames = 0;  ///< 0 = every frame in the stack
  double lambda_pump_nm = 772.3;
  double lambda_signal_nm = 1435.0;
  double confocal_lambda_um = 1.673;
  std::vector<double> confocal_na = {0.3, 0.5};
};

/// Whole-run configuration. Every field has a default; unknown JSON keys are
/// rejected so typos cannot silently fall back to defaults.
struct RunConfig {
  int schema_version = 1;
  ScanConfig scan;
  SourceModel source;
  SampleParams sample;
  CoincidenceParams coincidence;
  ReconstructParams reconstruct;
  AnalysisParams analysis;
  double duration_s = 1.0;
  std::string out_dir = ".";

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

}  // namespace qscope
