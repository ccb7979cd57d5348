#include "qscope/stream_io.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "qscope/errors.hpp"

namespace qscope {

namespace {

constexpr std::array<unsigned char, 8> kMagic = {'Q', 'T', 'T', '1', 0, 0, 0, 0};
constexpr std::size_t kRecordSize = 16;

void put_u64le(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_stream(const TagStream& stream, std::ostream& out) {
  if (!(stream.resolution_ps > 0))
    throw FormatError("refusing to write stream with non-positive resolution");
  const auto resolution_fs =
      static_cast<std::uint64_t>(std::llround(stream.resolution_ps * 1000.0));
  if (resolution_fs == 0)
    throw FormatError("stream resolution rounds to zero femtoseconds");

  unsigned char header[16];
  std::memcpy(header, kMagic.data(), 8);
  put_u64le(header + 8, resolution_fs);
  out.write(reinterpret_cast<const char*>(header), sizeof header);

  unsigned char record[kRecordSize] = {};
  for (const TimeTag& tag : stream.tags) {
    put_u64le(record, static_cast<std::uint64_t>(tag.time));
    record[8] = static_cast<unsigned char>(tag.channel & 0xff);
    record[9] = static_cast<unsigned char>(tag.channel >> 8);
    out.write(reinterpret_cast<const char*>(record), kRecordSize);
  }
  if (!out) throw FormatError("write error while emitting timetag stream");
}

void write_stream(const TagStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_stream(stream, out);
}

TagStream read_stream(std::istream& in) {
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != sizeof header)
    throw FormatError("timetag file shorter than its header");
  if (std::memcmp(header, kMagic.data(), 8) != 0)
    throw FormatError("bad magic: not a QTT1 timetag file");
  const std::uint64_t resolution_fs = get_u64le(header + 8);
  if (resolution_fs == 0) throw FormatError("QTT1 header declares zero resolution");

  TagStream stream;
  stream.resolution_ps = static_cast<double>(resolution_fs) / 1000.0;

  unsigned char record[kRecordSize];
  for (std::size_t index = 0;; ++index) {
    in.read(reinterpret_cast<char*>(record), kRecordSize);
    const auto got = in.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(kRecordSize))
      throw FormatError("truncated QTT1 record at index " + std::to_string(index));
    for (int i = 10; i < 16; ++i)
      if (record[i] != 0)
        throw FormatError("nonzero reserved bytes in QTT1 record " + std::to_string(index));
    TimeTag tag;
    tag.time = static_cast<std::int64_t>(get_u64le(record));
    tag.channel = static_cast<std::uint16_t>(record[8] | (record[9] << 8));
    stream.tags.push_back(tag);
  }
  return stream;
}

TagStream read_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string() + " for reading");
  return read_stream(in);
}

}  // namespace qscope
