#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qscope/coincidence.hpp"
#include "qscope/image.hpp"
#include "qscope/timetag.hpp"

namespace qscope {

/// Half-open time interval [t_start, t_end) in picoseconds.
struct LineSegment {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::int64_t duration() const { return t_end - t_start; }
  bool contains(std::int64_t t) const { return t >= t_start && t < t_end; }
};

struct LineRecord {
  int line_index = 0;  ///< image row, trigger ordinal mod pixels_y
  LineSegment forward;
  std::optional<LineSegment> reverse;  ///< absent for unidirectional scans
};

struct FrameRecord {
  std::vector<LineRecord> lines;
  std::optional<LineSegment> flyback;  ///< gap to the next frame's first trigger
  bool complete = false;               ///< pixels_y lines were triggered
};

/// Decoded acquisition timeline plus a flat, time-ordered segment index used
/// for event lookup.
struct ScanTimeline {
  struct SegmentRef {
    std::int64_t t_start = 0;
    std::int64_t t_end = 0;
    std::int32_t frame = 0;
    std::int32_t row = 0;
    bool reverse = false;
  };

  std::vector<FrameRecord> frames;
  std::vector<SegmentRef> segments;
  std::vector<std::int64_t> frame_starts;  ///< first trigger time of each frame

  std::size_t frame_count() const { return frames.size(); }
  /// Segment containing t, or nullptr when t falls in dead time.
  const SegmentRef* find(std::int64_t t) const;
  /// Frame whose [start, next start) interval contains t; times before the
  /// first trigger map to frame 0, times past the last frame to the last.
  std::size_t frame_of(std::int64_t t) const;
};

/// One line record per trigger. Triggers must be strictly increasing and
/// spaced at least one line's scan duration apart, otherwise FormatError
/// ("overlapping line segments"). Non-trigger channels in `triggers` are
/// ignored.
ScanTimeline build_timeline(const TagStream& triggers, const ScanConfig& config);

enum class ReverseHandling {
  Fold,         ///< mirror reverse-segment events onto the same row
  ForwardOnly,  ///< discard reverse-segment events
  ReverseOnly,  ///< discard forward-segment events (parity debugging)
};

/// Bins event times into pixels. Events in turnaround, flyback, or outside
/// any segment increment discarded_tags; sum(counts) + discarded_tags equals
/// the number of events presented. Bin edges are left-closed right-open.
ImageGrid assign_pixels(std::span<const std::int64_t> event_times,
                        const ScanTimeline& timeline, const ScanConfig& config,
                        ReverseHandling reverse = ReverseHandling::Fold);
ImageGrid assign_pixels(const CoincidenceSet& events, const ScanTimeline& timeline,
                        const ScanConfig& config,
                        ReverseHandling reverse = ReverseHandling::Fold);
ImageGrid assign_pixels(const TagStream& events, const ScanTimeline& timeline,
                        const ScanConfig& config,
                        ReverseHandling reverse = ReverseHandling::Fold);

/// One grid per frame; events before the first trigger count against frame 0.
/// Summing all per-frame grids reproduces assign_pixels exactly. Work is
/// split across min(worker_count(), frames) threads.
std::vector<ImageGrid> per_frame_grids(std::span<const std::int64_t> event_times,
                                       const ScanTimeline& timeline,
                                       const ScanConfig& config,
                                       ReverseHandling reverse = ReverseHandling::Fold);

/// Worker pool size: QSCOPE_THREADS when set (clamped to >= 1), otherwise the
/// hardware concurrency.
unsigned worker_count();

}  // namespace qscope
