#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "qscope/image.hpp"
#include "qscope/pattern.hpp"
#include "qscope/timetag.hpp"

namespace qscope {

/// Photon-pair source plus detection imperfections. Pair emission is a
/// homogeneous Poisson process; the idler arm sees the sample.
struct SourceModel {
  double pair_rate_hz = 1e5;
  double signal_efficiency = 0.1;
  double idler_path_efficiency = 0.1;
  double signal_dark_rate_hz = 1e3;
  double idler_dark_rate_hz = 1e3;
  std::int64_t inter_arm_delay_ps = 5000;
  double jitter_sigma_ps = 0.0;
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError on negative rates or probabilities outside [0, 1].
  void validate() const;
};

struct SimulationResult {
  TagStream signal;
  TagStream idler;
  TagStream triggers;
  ImageGrid ground_truth;          ///< rounded expected coincidence image
  Eigen::ArrayXXd expected_image;  ///< unrounded expectation, same shape
  std::int64_t pairs_emitted = 0;
};

/// Line triggers following the scan timing exactly: one trigger per line,
/// frames separated by the configured flyback.
TagStream make_trigger_train(const ScanConfig& config, std::int64_t duration_ps);

/// Generates signal/idler/trigger streams for a scan over `sample`.
///
/// Pair emissions are Poisson at pair_rate. The beam position at emission
/// time follows the same timeline rules the reconstruction uses; during
/// turnaround and flyback the beam parks on zero reflectance. The idler tag
/// survives with probability idler_path_efficiency * reflectance and is
/// emitted at t + inter_arm_delay + N(0, jitter_sigma); the signal tag
/// survives independently with signal_efficiency. Dark counts are
/// independent Poisson processes. Identical inputs and seed give
/// bit-identical streams.
SimulationResult simulate(const SamplePattern& sample, const SourceModel& source,
                          const ScanConfig& config, double duration_s);

}  // namespace qscope
