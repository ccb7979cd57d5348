#include "qscope/image.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qscope/errors.hpp"

namespace qscope {

ImageGrid accumulate_frames(std::span<const ImageGrid> grids) {
  if (grids.empty()) throw std::invalid_argument("nothing to accumulate");
  ImageGrid total = grids.front();
  for (std::size_t i = 1; i < grids.size(); ++i) {
    const ImageGrid& g = grids[i];
    if (g.height() != total.height() || g.width() != total.width())
      throw std::invalid_argument("cannot accumulate grids of different dimensions");
    total.counts += g.counts;
    total.frames_accumulated += g.frames_accumulated;
    total.discarded_tags += g.discarded_tags;
  }
  return total;
}

void write_image_csv(const ImageGrid& grid, std::ostream& out) {
  char pitch[64];
  std::snprintf(pitch, sizeof pitch, "%.12g", grid.pixel_pitch_um);
  out << "# width,height,frames,pixel_pitch_um\n"
      << "# " << grid.width() << ',' << grid.height() << ',' << grid.frames_accumulated
      << ',' << pitch << '\n';
  for (Eigen::Index r = 0; r < grid.height(); ++r) {
    for (Eigen::Index c = 0; c < grid.width(); ++c) {
      if (c) out << ',';
      out << grid.counts(r, c);
    }
    out << '\n';
  }
}

void write_image_csv(const ImageGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_image_csv(grid, out);
}

ImageGrid read_image_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# width,height", 0) != 0)
    throw FormatError("image CSV missing header line");
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw FormatError("image CSV missing metadata line");

  ImageGrid grid;
  long long w = 0, h = 0, frames = 0;
  double pitch = 0.0;
  if (std::sscanf(line.c_str(), "# %lld,%lld,%lld,%lf", &w, &h, &frames, &pitch) != 4 ||
      w <= 0 || h <= 0)
    throw FormatError("image CSV metadata line is malformed: " + line);
  grid.frames_accumulated = frames;
  grid.pixel_pitch_um = pitch;
  grid.counts = CountArray::Zero(h, w);

  for (long long r = 0; r < h; ++r) {
    if (!std::getline(in, line))
      throw FormatError("image CSV truncated at row " + std::to_string(r));
    std::stringstream row(line);
    std::string cell;
    for (long long c = 0; c < w; ++c) {
      if (!std::getline(row, cell, ','))
        throw FormatError("image CSV row " + std::to_string(r) + " has too few columns");
      grid.counts(r, c) = std::stoll(cell);
    }
  }
  return grid;
}

ImageGrid read_image_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string() + " for reading");
  return read_image_csv(in);
}

PgmWriteStats write_image_pgm(const ImageGrid& grid, std::ostream& out) {
  PgmWriteStats stats;
  out << "P5\n" << grid.width() << ' ' << grid.height() << "\n65535\n";
  std::string buffer;
  buffer.reserve(static_cast<std::size_t>(grid.counts.size()) * 2);
  for (Eigen::Index r = 0; r < grid.height(); ++r) {
    for (Eigen::Index c = 0; c < grid.width(); ++c) {
      std::int64_t v = grid.counts(r, c);
      if (v > 65535) {
        v = 65535;
        ++stats.clamped_pixels;
      }
      if (v < 0) v = 0;
      // PGM samples above 255 are two bytes, most significant first.
      buffer.push_back(static_cast<char>((v >> 8) & 0xff));
      buffer.push_back(static_cast<char>(v & 0xff));
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw FormatError("write error while emitting PGM image");
  return stats;
}

PgmWriteStats write_image_pgm(const ImageGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const PgmWriteStats stats = write_image_pgm(grid, out);
  if (stats.clamped_pixels > 0) {
    std::ofstream warn(path.string() + ".warnings.txt");
    warn << stats.clamped_pixels << " pixel(s) exceeded 65535 and were clamped\n";
  }
  return stats;
}

namespace {

constexpr char kStackMagic[8] = {'Q', 'F', 'S', '1', 0, 0, 0, 0};

void put_u32le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t get_u32le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_frame_stack(const std::vector<ImageGrid>& frames,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");

  const Eigen::Index h = frames.empty() ? 0 : frames.front().height();
  const Eigen::Index w = frames.empty() ? 0 : frames.front().width();
  const double pitch = frames.empty() ? 0.0 : frames.front().pixel_pitch_um;

  unsigned char header[28];
  std::memcpy(header, kStackMagic, 8);
  put_u32le(header + 8, static_cast<std::uint32_t>(frames.size()));
  put_u32le(header + 12, static_cast<std::uint32_t>(h));
  put_u32le(header + 16, static_cast<std::uint32_t>(w));
  std::memcpy(header + 20, &pitch, 8);
  out.write(reinterpret_cast<const char*>(header), sizeof header);

  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 4);
  for (const ImageGrid& frame : frames) {
    if (frame.height() != h || frame.width() != w)
      throw std::invalid_argument("frame stack grids must share dimensions");
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const std::int64_t v = std::clamp<std::int64_t>(frame.counts(r, c), 0, 0xffffffffLL);
        put_u32le(row.data() + 4 * c, static_cast<std::uint32_t>(v));
      }
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw FormatError("write error while emitting frame stack");
}

FrameStack read_frame_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string() + " for reading");

  unsigned char header[28];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != sizeof header || std::memcmp(header, kStackMagic, 8) != 0)
    throw FormatError(path.string() + " is not a QFS1 frame stack");

  FrameStack stack;
  const std::uint32_t frames = get_u32le(header + 8);
  const std::uint32_t h = get_u32le(header + 12);
  const std::uint32_t w = get_u32le(header + 16);
  std::memcpy(&stack.pixel_pitch_um, header + 20, 8);

  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 4);
  stack.frames.reserve(frames);
  for (std::uint32_t f = 0; f < frames; ++f) {
    CountArray grid = CountArray::Zero(h, w);
    for (std::uint32_t r = 0; r < h; ++r) {
      in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
      if (in.gcount() != static_cast<std::streamsize>(row.size()))
        throw FormatError("truncated frame stack in " + path.string());
      for (std::uint32_t c = 0; c < w; ++c) grid(r, c) = get_u32le(row.data() + 4 * c);
    }
    stack.frames.push_back(std::move(grid));
  }
  return stack;
}

}  // namespace qscope
