#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace qscope {

using CountArray = Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-pixel count accumulator. Row 0 is the first scanned line; counts has
/// shape (pixels_y, pixels_x).
struct ImageGrid {
  CountArray counts;
  std::int64_t frames_accumulated = 0;
  std::int64_t discarded_tags = 0;
  double pixel_pitch_um = 0.0;

  Eigen::Index height() const { return counts.rows(); }
  Eigen::Index width() const { return counts.cols(); }
  std::int64_t total_counts() const { return counts.size() ? counts.sum() : 0; }
};

/// Element-wise sum; frames_accumulated and discarded_tags add up.
/// Throws std::invalid_argument on dimension mismatch or an empty span.
ImageGrid accumulate_frames(std::span<const ImageGrid> grids);

// CSV image format: two comment lines
//   # width,height,frames,pixel_pitch_um
//   # <w>,<h>,<frames>,<pitch>
// followed by height rows of width comma-separated counts, row-major.
void write_image_csv(const ImageGrid& grid, std::ostream& out);
void write_image_csv(const ImageGrid& grid, const std::filesystem::path& path);
ImageGrid read_image_csv(std::istream& in);
ImageGrid read_image_csv(const std::filesystem::path& path);

struct PgmWriteStats {
  std::int64_t clamped_pixels = 0;
};

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Counts above
/// 65535 are clamped; the path overload writes a "<path>.warnings.txt"
/// sidecar when that happens.
PgmWriteStats write_image_pgm(const ImageGrid& grid, std::ostream& out);
PgmWriteStats write_image_pgm(const ImageGrid& grid, const std::filesystem::path& path);

// QFS1 per-frame count stack, little-endian:
//   8 bytes magic "QFS1\0\0\0\0", uint32 frames, uint32 height, uint32 width,
//   float64 pixel_pitch_um, then frames*height*width uint32 counts
//   (frame-major, row-major within a frame).
struct FrameStack {
  std::vector<CountArray> frames;
  double pixel_pitch_um = 0.0;
};

void write_frame_stack(const std::vector<ImageGrid>& frames,
                       const std::filesystem::path& path);
FrameStack read_frame_stack(const std::filesystem::path& path);

}  // namespace qscope
