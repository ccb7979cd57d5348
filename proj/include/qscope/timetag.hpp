#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qscope {

inline constexpr std::uint16_t kChannelSignal = 0;
inline constexpr std::uint16_t kChannelIdler = 1;
inline constexpr std::uint16_t kChannelTrigger = 2;
inline constexpr std::uint16_t kChannelCount = 3;

/// One detection or trigger event. Time is an integer timestamp in units of
/// the owning stream's resolution; the processing pipeline runs at 1 ps.
struct TimeTag {
  std::int64_t time = 0;
  std::uint16_t channel = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Time-ordered tag sequence. Ties across channels are permitted.
struct TagStream {
  std::vector<TimeTag> tags;
  double resolution_ps = 1.0;  ///< picoseconds per timestamp unit

  std::size_t size() const { return tags.size(); }
  bool empty() const { return tags.empty(); }
};

struct StreamViolation {
  enum class Kind { NonMonotonic, BadChannel, NegativeTime, BadResolution };
  Kind kind;
  std::size_t index = 0;  ///< offending tag; 0 for stream-level violations
  std::string message;
};

struct ValidationReport {
  std::vector<StreamViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks time ordering, channel range, non-negative times and a positive
/// resolution. Reports every violation; never throws, never mutates.
ValidationReport validate_stream(const TagStream& stream);

/// Time-ordered union of two valid streams. Ties keep tags of `a` first.
/// Throws FormatError when resolutions differ.
TagStream merge_streams(const TagStream& a, const TagStream& b);

/// Tags of one channel, as a stream with the same resolution.
TagStream select_channel(const TagStream& stream, std::uint16_t channel);

/// Raster scan geometry and timing.
///
/// Durations are stored in microseconds as configured; the picosecond
/// accessors are exact for the microsecond-scale values used throughout.
/// A line starts at its trigger, scans forward for pixels_x dwell times,
/// waits one turnaround, and (if bidirectional) scans the same line in
/// reverse followed by a second turnaround before the next trigger.
struct ScanConfig {
  int pixels_x = 96;
  int pixels_y = 96;
  double dwell_time_us = 10.0;
  double turnaround_time_us = 400.0;
  double field_of_view_x_um = 100.0;
  double field_of_view_y_um = 100.0;
  bool bidirectional = true;
  bool flyback_equals_frame = true;  ///< false: flyback lasts one turnaround

  std::int64_t dwell_ps() const;
  std::int64_t turnaround_ps() const;
  std::int64_t forward_duration_ps() const;
  std::int64_t line_period_ps() const;  ///< trigger-to-trigger within a frame
  std::int64_t flyback_ps() const;
  std::int64_t frame_period_ps() const;  ///< frame start to next frame start
  double pixel_pitch_x_um() const;
  double pixel_pitch_y_um() const;

  /// Throws ConfigError on non-positive pixel counts, dwell, or field of view,
  /// or a negative turnaround.
  void validate() const;
};

}  // namespace qscope
