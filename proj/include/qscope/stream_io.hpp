#pragma once

#include <filesystem>
#include <iosfwd>

#include "qscope/timetag.hpp"

namespace qscope {

// QTT1 binary timetag format. Little-endian throughout:
//   8 bytes  magic "QTT1\0\0\0\0"
//   8 bytes  unsigned resolution in femtoseconds
//   N x 16-byte records: int64 time (resolution units), uint16 channel,
//                        6 reserved bytes (must be zero)

void write_stream(const TagStream& stream, std::ostream& out);
void write_stream(const TagStream& stream, const std::filesystem::path& path);

/// Throws FormatError on bad magic, zero resolution, nonzero reserved bytes,
/// or a truncated record.
TagStream read_stream(std::istream& in);
TagStream read_stream(const std::filesystem::path& path);

}  // namespace qscope
