#include "qscope/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qscope/errors.hpp"
#include "qscope/scan.hpp"

namespace qscope {

namespace {

// std::mt19937_64 output is pinned by the standard; the transforms below are
// pinned here so streams stay bit-identical across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential_gap(std::mt19937_64& rng, double rate_hz) {
  return -std::log1p(-uniform01(rng)) / rate_hz;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void append_dark_counts(std::vector<TimeTag>& tags, std::uint16_t channel,
                        double rate_hz, std::int64_t duration_ps,
                        std::mt19937_64& rng) {
  if (!(rate_hz > 0.0)) return;
  std::int64_t t = 0;
  for (;;) {
    t += std::llround(exponential_gap(rng, rate_hz) * 1e12);
    if (t >= duration_ps) break;
    tags.push_back({t, channel});
  }
}

struct BeamSweep {
  const ScanTimeline& timeline;
  const ScanConfig& config;
  std::size_t cursor = 0;

  // Continuous beam coordinates for a monotonically increasing query time;
  // false while the beam is parked (turnaround, flyback, outside frames).
  bool position(std::int64_t t, double& x_um, double& y_um) {
    const auto& segments = timeline.segments;
    while (cursor < segments.size() && segments[cursor].t_end <= t) ++cursor;
    if (cursor >= segments.size() || t < segments[cursor].t_start) return false;
    const auto& seg = segments[cursor];
    const double progress =
        static_cast<double>(t - seg.t_start) / static_cast<double>(config.dwell_ps());
    x_um = seg.reverse ? (config.pixels_x - progress) * config.pixel_pitch_x_um()
                       : progress * config.pixel_pitch_x_um();
    y_um = (seg.row + 0.5) * config.pixel_pitch_y_um();
    return true;
  }
};

Eigen::ArrayXXd expected_coincidence_image(const SamplePattern& blurred_sample,
                                           const SourceModel& source,
                                           const ScanConfig& config,
                                           const ScanTimeline& timeline) {
  Eigen::ArrayXXd expected = Eigen::ArrayXXd::Zero(config.pixels_y, config.pixels_x);
  if (timeline.frame_count() == 0) return expected;

  Eigen::ArrayXd passes = Eigen::ArrayXd::Zero(config.pixels_y);
  for (const FrameRecord& frame : timeline.frames)
    for (const LineRecord& line : frame.lines)
      passes[line.line_index] += line.reverse ? 2.0 : 1.0;

  const double pair_per_dwell = source.pair_rate_hz * config.dwell_time_us * 1e-6;
  const double detect = source.signal_efficiency * source.idler_path_efficiency;
  constexpr int kSamplesPerPixel = 4;
  for (int row = 0; row < config.pixels_y; ++row) {
    const double y = (row + 0.5) * config.pixel_pitch_y_um();
    for (int col = 0; col < config.pixels_x; ++col) {
      double mean_reflectance = 0.0;
      for (int k = 0; k < kSamplesPerPixel; ++k) {
        const double x = (col + (k + 0.5) / kSamplesPerPixel) * config.pixel_pitch_x_um();
        mean_reflectance += blurred_sample.at(x, y);
      }
      mean_reflectance /= kSamplesPerPixel;
      expected(row, col) = pair_per_dwell * detect * mean_reflectance * passes[row];
    }
  }
  return expected;
}

}  // namespace

void SourceModel::validate() const {
  if (pair_rate_hz < 0 || signal_dark_rate_hz < 0 || idler_dark_rate_hz < 0)
    throw ConfigError("source rates must be non-negative");
  if (signal_efficiency < 0 || signal_efficiency > 1 || idler_path_efficiency < 0 ||
      idler_path_efficiency > 1)
    throw ConfigError("efficiencies must be in [0, 1]");
  if (jitter_sigma_ps < 0) throw ConfigError("jitter_sigma_ps must be non-negative");
}

TagStream make_trigger_train(const ScanConfig& config, std::int64_t duration_ps) {
  config.validate();
  TagStream triggers;
  const std::int64_t line_period = config.line_period_ps();
  const std::int64_t frame_period = config.frame_period_ps();
  for (std::int64_t frame_start = 0; frame_start < duration_ps;
       frame_start += frame_period) {
    for (int line = 0; line < config.pixels_y; ++line) {
      const std::int64_t t = frame_start + line * line_period;
      if (t >= duration_ps) break;
      triggers.tags.push_back({t, kChannelTrigger});
    }
  }
  return triggers;
}

SimulationResult simulate(const SamplePattern& sample, const SourceModel& source,
                          const ScanConfig& config, double duration_s) {
  config.validate();
  source.validate();
  if (duration_s < 0) throw std::invalid_argument("duration must be non-negative");
  if ((sample.reflectance < 0.0).any() || (sample.reflectance > 1.0).any())
    throw std::invalid_argument("sample reflectance must be in [0, 1]");

  const auto duration_ps = static_cast<std::int64_t>(std::llround(duration_s * 1e12));

  SimulationResult result;
  result.triggers = make_trigger_train(config, duration_ps);
  result.ground_truth.counts = CountArray::Zero(config.pixels_y, config.pixels_x);
  result.ground_truth.pixel_pitch_um = config.pixel_pitch_x_um();
  result.expected_image = Eigen::ArrayXXd::Zero(config.pixels_y, config.pixels_x);
  if (duration_ps == 0) return result;

  const ScanTimeline timeline = build_timeline(result.triggers, config);
  const SamplePattern probe = blurred(sample);

  std::mt19937_64 rng(source.rng_seed);
  BeamSweep beam{timeline, config};

  std::vector<TimeTag>& signal = result.signal.tags;
  std::vector<TimeTag>& idler = result.idler.tags;

  if (source.pair_rate_hz > 0.0) {
    std::int64_t t = 0;
    for (;;) {
      t += std::llround(exponential_gap(rng, source.pair_rate_hz) * 1e12);
      if (t >= duration_ps) break;
      ++result.pairs_emitted;

      double x = 0.0, y = 0.0;
      const double reflectance = beam.position(t, x, y) ? probe.at(x, y) : 0.0;

      const bool signal_survives = uniform01(rng) < source.signal_efficiency;
      const bool idler_survives =
          uniform01(rng) < source.idler_path_efficiency * reflectance;
      if (signal_survives) signal.push_back({t, kChannelSignal});
      if (idler_survives) {
        std::int64_t ti = t + source.inter_arm_delay_ps;
        if (source.jitter_sigma_ps > 0.0)
          ti += std::llround(source.jitter_sigma_ps * standard_normal(rng));
        if (ti >= 0) idler.push_back({ti, kChannelIdler});
      }
    }
  }

  append_dark_counts(signal, kChannelSignal, source.signal_dark_rate_hz, duration_ps, rng);
  append_dark_counts(idler, kChannelIdler, source.idler_dark_rate_hz, duration_ps, rng);

  auto by_time = [](const TimeTag& a, const TimeTag& b) { return a.time < b.time; };
  std::stable_sort(signal.begin(), signal.end(), by_time);
  std::stable_sort(idler.begin(), idler.end(), by_time);

  result.expected_image = expected_coincidence_image(probe, source, config, timeline);
  result.ground_truth.counts = result.expected_image.round().cast<std::int64_t>();
  result.ground_truth.frames_accumulated = static_cast<std::int64_t>(timeline.frame_count());
  return result;
}

}  // namespace qscope
