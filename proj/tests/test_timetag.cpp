#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "qscope/errors.hpp"
#include "qscope/stream_io.hpp"
#include "qscope/timetag.hpp"

using namespace qscope;

namespace {

TagStream random_stream(std::mt19937_64& rng, std::size_t n, std::int64_t t_max,
                        int channels = 2) {
  TagStream stream;
  std::uniform_int_distribution<std::int64_t> time(0, t_max);
  std::uniform_int_distribution<int> channel(0, channels - 1);
  for (std::size_t i = 0; i < n; ++i)
    stream.tags.push_back({time(rng), static_cast<std::uint16_t>(channel(rng))});
  std::sort(stream.tags.begin(), stream.tags.end(),
            [](const TimeTag& a, const TimeTag& b) { return a.time < b.time; });
  return stream;
}

}  // namespace

TEST_CASE("empty stream validates ok") {
  CHECK(validate_stream(TagStream{}).ok());
}

TEST_CASE("ordering violation reported with its index") {
  TagStream stream;
  stream.tags = {{5, 0}, {3, 0}};
  const ValidationReport report = validate_stream(stream);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].index == 1);
  CHECK(report.violations[0].kind == StreamViolation::Kind::NonMonotonic);
}

TEST_CASE("bad channel, negative time and bad resolution all reported") {
  TagStream stream;
  stream.tags = {{-4, 0}, {2, 7}};
  stream.resolution_ps = 0.0;
  const ValidationReport report = validate_stream(stream);
  CHECK(report.violations.size() == 3);
}

TEST_CASE("random sorted tags validate ok") {
  std::mt19937_64 rng(7);
  const TagStream stream = random_stream(rng, 10'000, 1'000'000'000);
  CHECK(validate_stream(stream).ok());
}

TEST_CASE("merge with an empty stream is the identity") {
  std::mt19937_64 rng(11);
  const TagStream stream = random_stream(rng, 100, 1'000'000);
  const TagStream merged = merge_streams(stream, TagStream{});
  CHECK(merged.tags == stream.tags);
}

TEST_CASE("merge keeps first-stream tags first on ties") {
  TagStream a, b;
  a.tags = {{1, kChannelSignal}};
  b.tags = {{1, kChannelIdler}};
  const TagStream merged = merge_streams(a, b);
  REQUIRE(merged.tags.size() == 2);
  CHECK(merged.tags[0].channel == kChannelSignal);
  CHECK(merged.tags[1].channel == kChannelIdler);
  CHECK(merged.tags[0].time == 1);
}

TEST_CASE("merge equals stable sort of the concatenation") {
  std::mt19937_64 rng(23);
  for (int instance = 0; instance < 10; ++instance) {
    const TagStream a = random_stream(rng, 1000, 500'000);
    const TagStream b = random_stream(rng, 1000, 500'000);

    std::vector<TimeTag> expected = a.tags;
    expected.insert(expected.end(), b.tags.begin(), b.tags.end());
    std::stable_sort(expected.begin(), expected.end(),
                     [](const TimeTag& x, const TimeTag& y) { return x.time < y.time; });

    const TagStream merged = merge_streams(a, b);
    CHECK(merged.tags == expected);
    CHECK(validate_stream(merged).ok());
  }
}

TEST_CASE("merge rejects mismatched resolutions") {
  TagStream a, b;
  b.resolution_ps = 2.0;
  CHECK_THROWS_AS(merge_streams(a, b), FormatError);
}

TEST_CASE("select_channel splits a merged stream") {
  TagStream stream;
  stream.tags = {{1, 0}, {2, 1}, {3, 2}, {4, 0}};
  CHECK(select_channel(stream, 0).size() == 2);
  CHECK(select_channel(stream, 2).tags[0].time == 3);
}

TEST_CASE("qtt1 round trip reproduces tags bit-exactly") {
  std::mt19937_64 rng(31);
  TagStream stream = random_stream(rng, 2000, 1'000'000'000, 3);

  std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
  write_stream(stream, buffer);
  const TagStream loaded = read_stream(buffer);
  CHECK(loaded.tags == stream.tags);
  CHECK(loaded.resolution_ps == stream.resolution_ps);

  // Writing the loaded stream again must give identical bytes.
  std::stringstream again(std::ios::in | std::ios::out | std::ios::binary);
  write_stream(loaded, again);
  CHECK(again.str() == buffer.str());
}

TEST_CASE("qtt1 rejects bad magic") {
  std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
  write_stream(TagStream{}, buffer);
  std::string bytes = buffer.str();
  bytes[0] = 'X';
  std::stringstream bad(bytes, std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(read_stream(bad), FormatError);
}

TEST_CASE("qtt1 rejects nonzero reserved bytes") {
  TagStream stream;
  stream.tags = {{42, 1}};
  std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
  write_stream(stream, buffer);
  std::string bytes = buffer.str();
  bytes[16 + 15] = 1;  // last reserved byte of the first record
  std::stringstream bad(bytes, std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(read_stream(bad), FormatError);
}

TEST_CASE("qtt1 rejects truncated records") {
  TagStream stream;
  stream.tags = {{42, 1}};
  std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
  write_stream(stream, buffer);
  std::string bytes = buffer.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream bad(bytes, std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(read_stream(bad), FormatError);
}

TEST_CASE("scan config derives exact picosecond timing") {
  ScanConfig config;
  config.pixels_x = 100;
  config.dwell_time_us = 10.0;
  config.turnaround_time_us = 400.0;
  CHECK(config.dwell_ps() == 10'000'000);
  CHECK(config.forward_duration_ps() == 1'000'000'000);  // 1 ms line
  CHECK(config.turnaround_ps() == 400'000'000);
}

TEST_CASE("default geometry gives the expected pixel pitch") {
  ScanConfig config;  // 96 px over 100 um
  CHECK(config.pixel_pitch_x_um() == doctest::Approx(1.04).epsilon(0.01));
}

TEST_CASE("scan config validation") {
  ScanConfig config;
  config.dwell_time_us = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = ScanConfig{};
  config.pixels_x = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = ScanConfig{};
  config.turnaround_time_us = -1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
