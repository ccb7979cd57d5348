#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qscope/analysis.hpp"
#include "qscope/coincidence.hpp"
#include "qscope/image.hpp"
#include "qscope/run_config.hpp"
#include "qscope/scan.hpp"
#include "qscope/simulator.hpp"

namespace qscope {

struct ReconstructionResult {
  CorrelationHistogram histogram;
  CoincidenceSet coincidences;
  ScanTimeline timeline;
  ImageGrid coincidence_image;
  ImageGrid idler_image;
  std::vector<ImageGrid> frame_grids;  ///< per-frame coincidence grids
  double delay_ps = 0.0;
  double delay_significance = 0.0;
  bool delay_estimated = false;  ///< false when the histogram was empty
  std::vector<std::string> warnings;
};

/// Full reconstruction: correlation histogram, delay estimate, coincidence
/// matching, timeline decode, pixel binning. Runs entirely in memory.
ReconstructionResult reconstruct_streams(const TagStream& signal, const TagStream& idler,
                                         const TagStream& triggers, const RunConfig& config);

struct AnalysisResult {
  std::vector<SnrPoint> snr_curve;
  SqrtFitResult sqrt_fit;
  bool sqrt_fit_valid = false;
  bool sqrt_fit_degenerate = false;  ///< fewer than two curve points
  std::vector<EdgeFitResult> edge_fits;
  std::vector<Linescan> linescans;
  int converged_fits = 0;
  double sigma_mean_um = 0.0;  ///< over converged fits
  double sigma_std_um = 0.0;
  double idler_wavelength_nm = 0.0;
  std::vector<std::pair<double, double>> confocal_limits_um;  ///< (NA, limit)
  std::vector<std::string> warnings;
};

/// Frame-resolved SNR curve with masks taken from the idler image, sqrt
/// scaling fit, edge-response fits over the configured region, and the
/// wavelength/confocal reference numbers. `stack` may be null when no
/// per-frame data exists (the curve then has one point per accumulated
/// image).
AnalysisResult analyze_images(const ImageGrid& coincidence_image,
                              const ImageGrid& idler_image, const FrameStack* stack,
                              const AnalysisParams& params);

// Filesystem entry points used by the CLI; every output is written to a
// temporary file and renamed into place.
SimulationResult run_simulate(const RunConfig& config, const std::filesystem::path& dir);
ReconstructionResult run_reconstruct(const RunConfig& config,
                                     const std::filesystem::path& dir);
AnalysisResult run_analyze(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace qscope
