#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "qscope/timetag.hpp"

namespace qscope {

inline constexpr std::int64_t kDefaultBinWidthPs = 100;
inline constexpr std::int64_t kDefaultWindowPs = 1000;

/// Signal-idler cross-correlation histogram over lags in [lag_min, lag_max).
/// Bin k covers [lag_min + k*bin_width, lag_min + (k+1)*bin_width).
struct CorrelationHistogram {
  std::int64_t bin_width_ps = kDefaultBinWidthPs;
  std::int64_t lag_min_ps = 0;
  std::int64_t lag_max_ps = 0;
  Eigen::ArrayX<std::int64_t> counts;

  Eigen::Index bin_count() const { return counts.size(); }
  std::int64_t bin_lower_ps(Eigen::Index k) const { return lag_min_ps + k * bin_width_ps; }
  double bin_center_ps(Eigen::Index k) const {
    return static_cast<double>(lag_min_ps) + (static_cast<double>(k) + 0.5) * bin_width_ps;
  }
  std::int64_t total() const { return counts.size() ? counts.sum() : 0; }
};

/// Delay-corrected coincidence events. Each timestamp is the idler tag's
/// original time, the photon that visited the sample.
struct CoincidenceSet {
  std::vector<std::int64_t> times;
  std::int64_t delay_applied_ps = 0;
  std::int64_t window_ps = kDefaultWindowPs;

  std::size_t size() const { return times.size(); }
};

/// counts[k] = number of (signal, idler) pairs with idler.time - signal.time
/// in bin k. Two-pointer sweep over the sorted streams.
/// Throws std::invalid_argument when the lag range is not a positive multiple
/// of bin_width.
CorrelationHistogram cross_correlation_histogram(const TagStream& signal,
                                                 const TagStream& idler,
                                                 std::int64_t bin_width_ps,
                                                 std::int64_t lag_min_ps,
                                                 std::int64_t lag_max_ps);

struct DelayEstimate {
  double delay_ps = 0.0;       ///< centroid of the peak bin and its neighbors
  double significance = 0.0;   ///< peak counts / median background counts
  std::int64_t peak_counts = 0;
};

/// Throws NumericalError("no correlation peak") on an all-zero histogram.
DelayEstimate estimate_delay(const CorrelationHistogram& histogram);

/// Greedy earliest-first one-to-one matching of delay-shifted idler tags to
/// signal tags within +-window/2.
CoincidenceSet match_coincidences(const TagStream& signal, const TagStream& idler,
                                  std::int64_t delay_ps, std::int64_t window_ps);

/// CSV export, header "lag_ps,counts"; one row per bin at its center lag.
void write_histogram_csv(const CorrelationHistogram& histogram, std::ostream& out);
void write_histogram_csv(const CorrelationHistogram& histogram,
                         const std::filesystem::path& path);

}  // namespace qscope
