#include "qscope/timetag.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qscope/errors.hpp"

namespace qscope {

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream out;
  out << violations.size() << " violation(s)";
  for (std::size_t i = 0; i < violations.size() && i < 5; ++i)
    out << "; " << violations[i].message;
  if (violations.size() > 5) out << "; ...";
  return out.str();
}

ValidationReport validate_stream(const TagStream& stream) {
  ValidationReport report;
  auto add = [&](StreamViolation::Kind kind, std::size_t index, std::string msg) {
    report.violations.push_back({kind, index, std::move(msg)});
  };

  if (!(stream.resolution_ps > 0.0))
    add(StreamViolation::Kind::BadResolution, 0,
        "resolution must be positive, got " + std::to_string(stream.resolution_ps));

  for (std::size_t i = 0; i < stream.tags.size(); ++i) {
    const TimeTag& tag = stream.tags[i];
    if (tag.channel >= kChannelCount)
      add(StreamViolation::Kind::BadChannel, i,
          "tag " + std::to_string(i) + ": channel " + std::to_string(tag.channel) +
              " outside {0,1,2}");
    if (tag.time < 0)
      add(StreamViolation::Kind::NegativeTime, i,
          "tag " + std::to_string(i) + ": negative time " + std::to_string(tag.time));
    if (i > 0 && tag.time < stream.tags[i - 1].time)
      add(StreamViolation::Kind::NonMonotonic, i,
          "tag " + std::to_string(i) + ": time " + std::to_string(tag.time) +
              " precedes previous " + std::to_string(stream.tags[i - 1].time));
  }
  return report;
}

TagStream merge_streams(const TagStream& a, const TagStream& b) {
  if (a.resolution_ps != b.resolution_ps)
    throw FormatError("cannot merge streams with different resolutions (" +
                      std::to_string(a.resolution_ps) + " ps vs " +
                      std::to_string(b.resolution_ps) + " ps)");
  TagStream out;
  out.resolution_ps = a.resolution_ps;
  out.tags.reserve(a.tags.size() + b.tags.size());
  // std::merge is stable: on ties the element from `a` comes first.
  std::merge(a.tags.begin(), a.tags.end(), b.tags.begin(), b.tags.end(),
             std::back_inserter(out.tags),
             [](const TimeTag& x, const TimeTag& y) { return x.time < y.time; });
  return out;
}

TagStream select_channel(const TagStream& stream, std::uint16_t channel) {
  TagStream out;
  out.resolution_ps = stream.resolution_ps;
  for (const TimeTag& tag : stream.tags)
    if (tag.channel == channel) out.tags.push_back(tag);
  return out;
}

std::int64_t ScanConfig::dwell_ps() const { return std::llround(dwell_time_us * 1e6); }

std::int64_t ScanConfig::turnaround_ps() const {
  return std::llround(turnaround_time_us * 1e6);
}

std::int64_t ScanConfig::forward_duration_ps() const {
  return static_cast<std::int64_t>(pixels_x) * dwell_ps();
}

std::int64_t ScanConfig::line_period_ps() const {
  const std::int64_t scan = forward_duration_ps();
  return bidirectional ? 2 * (scan + turnaround_ps()) : scan + turnaround_ps();
}

std::int64_t ScanConfig::flyback_ps() const {
  return flyback_equals_frame ? static_cast<std::int64_t>(pixels_y) * line_period_ps()
                              : turnaround_ps();
}

std::int64_t ScanConfig::frame_period_ps() const {
  return static_cast<std::int64_t>(pixels_y) * line_period_ps() + flyback_ps();
}

double ScanConfig::pixel_pitch_x_um() const { return field_of_view_x_um / pixels_x; }

double ScanConfig::pixel_pitch_y_um() const { return field_of_view_y_um / pixels_y; }

void ScanConfig::validate() const {
  if (pixels_x <= 0 || pixels_y <= 0)
    throw ConfigError("scan pixel counts must be positive");
  if (!(dwell_time_us > 0)) throw ConfigError("dwell_time_us must be positive");
  if (turnaround_time_us < 0) throw ConfigError("turnaround_time_us must be non-negative");
  if (!(field_of_view_x_um > 0) || !(field_of_view_y_um > 0))
    throw ConfigError("field of view must be positive");
  if (!std::isfinite(pixel_pitch_x_um()) || !(pixel_pitch_x_um() > 0) ||
      !std::isfinite(pixel_pitch_y_um()) || !(pixel_pitch_y_um() > 0))
    throw ConfigError("pixel pitch must be finite and positive");
}

}  // namespace qscope
