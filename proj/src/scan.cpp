#include "qscope/scan.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "qscope/errors.hpp"

namespace qscope {

const ScanTimeline::SegmentRef* ScanTimeline::find(std::int64_t t) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](std::int64_t value, const SegmentRef& seg) {
                               return value < seg.t_start;
                             });
  if (it == segments.begin()) return nullptr;
  --it;
  return t < it->t_end ? &*it : nullptr;
}

std::size_t ScanTimeline::frame_of(std::int64_t t) const {
  auto it = std::upper_bound(frame_starts.begin(), frame_starts.end(), t);
  if (it == frame_starts.begin()) return 0;
  return static_cast<std::size_t>(std::distance(frame_starts.begin(), it)) - 1;
}

ScanTimeline build_timeline(const TagStream& triggers, const ScanConfig& config) {
  config.validate();

  std::vector<std::int64_t> trigger_times;
  for (const TimeTag& tag : triggers.tags)
    if (tag.channel == kChannelTrigger) trigger_times.push_back(tag.time);
  if (trigger_times.empty()) throw FormatError("no line triggers in stream");

  const std::int64_t forward = config.forward_duration_ps();
  const std::int64_t turnaround = config.turnaround_ps();
  // Minimum trigger spacing: forward + turnaround, plus the reverse scan when
  // the line is scanned both ways.
  const std::int64_t occupied =
      config.bidirectional ? 2 * forward + turnaround : forward + turnaround;

  ScanTimeline timeline;
  FrameRecord frame;
  std::int64_t previous_end = -1;

  for (std::size_t ordinal = 0; ordinal < trigger_times.size(); ++ordinal) {
    const std::int64_t t = trigger_times[ordinal];
    if (ordinal > 0 && t <= trigger_times[ordinal - 1])
      throw FormatError("line triggers must be strictly increasing (trigger " +
                        std::to_string(ordinal) + ")");
    if (previous_end >= 0 && t < previous_end)
      throw FormatError("overlapping line segments: trigger " + std::to_string(ordinal) +
                        " at " + std::to_string(t) + " ps arrives before " +
                        std::to_string(previous_end) + " ps");

    LineRecord line;
    line.line_index = static_cast<int>(ordinal % static_cast<std::size_t>(config.pixels_y));
    line.forward = {t, t + forward};
    if (config.bidirectional) {
      const std::int64_t rev_start = line.forward.t_end + turnaround;
      line.reverse = LineSegment{rev_start, rev_start + forward};
    }
    previous_end = t + occupied;

    if (line.line_index == 0 && !frame.lines.empty()) {
      // A wrapped ordinal starts the next frame; the gap since the previous
      // frame's last segment is its flyback.
      frame.complete = frame.lines.size() == static_cast<std::size_t>(config.pixels_y);
      const std::int64_t last_end = frame.lines.back().reverse
                                        ? frame.lines.back().reverse->t_end
                                        : frame.lines.back().forward.t_end;
      frame.flyback = LineSegment{last_end, t};
      timeline.frames.push_back(std::move(frame));
      frame = FrameRecord{};
    }
    if (frame.lines.empty()) timeline.frame_starts.push_back(t);
    frame.lines.push_back(line);
  }
  frame.complete = frame.lines.size() == static_cast<std::size_t>(config.pixels_y);
  timeline.frames.push_back(std::move(frame));

  for (std::size_t f = 0; f < timeline.frames.size(); ++f)
    for (const LineRecord& line : timeline.frames[f].lines) {
      timeline.segments.push_back({line.forward.t_start, line.forward.t_end,
                                   static_cast<std::int32_t>(f), line.line_index, false});
      if (line.reverse)
        timeline.segments.push_back({line.reverse->t_start, line.reverse->t_end,
                                     static_cast<std::int32_t>(f), line.line_index, true});
    }
  return timeline;
}

namespace {

void assign_range(std::span<const std::int64_t> times, const ScanTimeline& timeline,
                  const ScanConfig& config, ReverseHandling reverse, ImageGrid& grid) {
  const std::int64_t dwell = config.dwell_ps();
  const auto& segments = timeline.segments;
  std::size_t cursor = 0;
  if (!times.empty()) {
    auto it = std::upper_bound(segments.begin(), segments.end(), times.front(),
                               [](std::int64_t value, const ScanTimeline::SegmentRef& seg) {
                                 return value < seg.t_start;
                               });
    if (it != segments.begin()) cursor = static_cast<std::size_t>(it - segments.begin()) - 1;
  }
  std::int64_t previous = std::numeric_limits<std::int64_t>::min();

  for (const std::int64_t t : times) {
    if (t < previous) cursor = 0;  // unsorted input: rewind and rescan
    previous = t;
    while (cursor < segments.size() && segments[cursor].t_end <= t) ++cursor;
    const ScanTimeline::SegmentRef* seg =
        (cursor < segments.size() && segments[cursor].t_start <= t) ? &segments[cursor]
                                                                    : nullptr;
    if (!seg || (seg->reverse && reverse == ReverseHandling::ForwardOnly) ||
        (!seg->reverse && reverse == ReverseHandling::ReverseOnly)) {
      ++grid.discarded_tags;
      continue;
    }
    std::int64_t col = (t - seg->t_start) / dwell;
    if (seg->reverse) col = config.pixels_x - 1 - col;
    grid.counts(seg->row, col) += 1;
  }
}

ImageGrid make_empty_grid(const ScanConfig& config) {
  ImageGrid grid;
  grid.counts = CountArray::Zero(config.pixels_y, config.pixels_x);
  grid.pixel_pitch_um = config.pixel_pitch_x_um();
  return grid;
}

}  // namespace

ImageGrid assign_pixels(std::span<const std::int64_t> event_times,
                        const ScanTimeline& timeline, const ScanConfig& config,
                        ReverseHandling reverse) {
  ImageGrid grid = make_empty_grid(config);
  grid.frames_accumulated = static_cast<std::int64_t>(timeline.frame_count());
  assign_range(event_times, timeline, config, reverse, grid);
  return grid;
}

ImageGrid assign_pixels(const CoincidenceSet& events, const ScanTimeline& timeline,
                        const ScanConfig& config, ReverseHandling reverse) {
  return assign_pixels(std::span<const std::int64_t>(events.times), timeline, config,
                       reverse);
}

ImageGrid assign_pixels(const TagStream& events, const ScanTimeline& timeline,
                        const ScanConfig& config, ReverseHandling reverse) {
  std::vector<std::int64_t> times;
  times.reserve(events.tags.size());
  for (const TimeTag& tag : events.tags) times.push_back(tag.time);
  return assign_pixels(std::span<const std::int64_t>(times), timeline, config, reverse);
}

std::vector<ImageGrid> per_frame_grids(std::span<const std::int64_t> event_times,
                                       const ScanTimeline& timeline,
                                       const ScanConfig& config, ReverseHandling reverse) {
  const std::size_t n_frames = timeline.frame_count();
  std::vector<ImageGrid> grids(n_frames);
  for (ImageGrid& g : grids) {
    g = make_empty_grid(config);
    g.frames_accumulated = 1;
  }
  if (n_frames == 0) return grids;

  // Events are time-ordered, so each frame owns a contiguous slice.
  std::vector<std::size_t> first_event(n_frames + 1, event_times.size());
  first_event[0] = 0;
  for (std::size_t f = 1; f < n_frames; ++f) {
    const auto it = std::lower_bound(event_times.begin(), event_times.end(),
                                     timeline.frame_starts[f]);
    first_event[f] = static_cast<std::size_t>(std::distance(event_times.begin(), it));
  }

  const unsigned workers =
      std::max(1u, std::min(worker_count(), static_cast<unsigned>(n_frames)));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = n_frames * w / workers;
    const std::size_t hi = n_frames * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t f = lo; f < hi; ++f)
        assign_range(event_times.subspan(first_event[f], first_event[f + 1] - first_event[f]),
                     timeline, config, reverse, grids[f]);
    });
  }
  for (std::thread& t : pool) t.join();
  return grids;
}

unsigned worker_count() {
  if (const char* env = std::getenv("QSCOPE_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

}  // namespace qscope
