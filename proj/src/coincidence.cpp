#include "qscope/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "qscope/errors.hpp"

namespace qscope {

CorrelationHistogram cross_correlation_histogram(const TagStream& signal,
                                                 const TagStream& idler,
                                                 std::int64_t bin_width_ps,
                                                 std::int64_t lag_min_ps,
                                                 std::int64_t lag_max_ps) {
  if (bin_width_ps <= 0) throw std::invalid_argument("histogram bin width must be positive");
  if (lag_max_ps <= lag_min_ps)
    throw std::invalid_argument("lag range must span at least one bin");
  if ((lag_max_ps - lag_min_ps) % bin_width_ps != 0)
    throw std::invalid_argument("lag range must be an exact multiple of the bin width");

  CorrelationHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.lag_min_ps = lag_min_ps;
  hist.lag_max_ps = lag_max_ps;
  const auto bins = static_cast<Eigen::Index>((lag_max_ps - lag_min_ps) / bin_width_ps);
  hist.counts = Eigen::ArrayX<std::int64_t>::Zero(bins);

  const auto& s = signal.tags;
  const auto& i = idler.tags;
  std::size_t lo = 0, hi = 0;
  for (const TimeTag& st : s) {
    const std::int64_t window_lo = st.time + lag_min_ps;
    const std::int64_t window_hi = st.time + lag_max_ps;
    while (lo < i.size() && i[lo].time < window_lo) ++lo;
    if (hi < lo) hi = lo;
    while (hi < i.size() && i[hi].time < window_hi) ++hi;
    for (std::size_t j = lo; j < hi; ++j) {
      const std::int64_t lag = i[j].time - st.time;
      hist.counts[(lag - lag_min_ps) / bin_width_ps] += 1;
    }
  }
  return hist;
}

DelayEstimate estimate_delay(const CorrelationHistogram& histogram) {
  if (histogram.bin_count() == 0 || histogram.total() == 0)
    throw NumericalError("no correlation peak");

  Eigen::Index peak = 0;
  histogram.counts.maxCoeff(&peak);

  DelayEstimate estimate;
  estimate.peak_counts = histogram.counts[peak];

  double weight_sum = 0.0, weighted_lag = 0.0;
  for (Eigen::Index k = std::max<Eigen::Index>(0, peak - 1);
       k <= std::min(histogram.bin_count() - 1, peak + 1); ++k) {
    const auto w = static_cast<double>(histogram.counts[k]);
    weight_sum += w;
    weighted_lag += w * histogram.bin_center_ps(k);
  }
  estimate.delay_ps = weighted_lag / weight_sum;

  // Background: every bin outside the peak and its two neighbors.
  std::vector<std::int64_t> background;
  background.reserve(static_cast<std::size_t>(histogram.bin_count()));
  for (Eigen::Index k = 0; k < histogram.bin_count(); ++k)
    if (k < peak - 1 || k > peak + 1) background.push_back(histogram.counts[k]);
  if (background.empty()) {
    estimate.significance = std::numeric_limits<double>::infinity();
    return estimate;
  }
  auto mid = background.begin() + background.size() / 2;
  std::nth_element(background.begin(), mid, background.end());
  double median = static_cast<double>(*mid);
  if (background.size() % 2 == 0) {
    auto lower = std::max_element(background.begin(), mid);
    median = (median + static_cast<double>(*lower)) / 2.0;
  }
  estimate.significance = median > 0
                              ? static_cast<double>(estimate.peak_counts) / median
                              : std::numeric_limits<double>::infinity();
  return estimate;
}

CoincidenceSet match_coincidences(const TagStream& signal, const TagStream& idler,
                                  std::int64_t delay_ps, std::int64_t window_ps) {
  if (window_ps <= 0) throw std::invalid_argument("coincidence window must be positive");

  CoincidenceSet set;
  set.delay_applied_ps = delay_ps;
  set.window_ps = window_ps;

  const auto& s = signal.tags;
  std::size_t si = 0;
  for (const TimeTag& it : idler.tags) {
    const std::int64_t shifted = it.time - delay_ps;
    // Signals earlier than shifted - window/2 can never match this or any
    // later idler tag; comparisons are doubled so odd windows stay exact.
    while (si < s.size() && 2 * (shifted - s[si].time) > window_ps) ++si;
    if (si < s.size() && 2 * std::llabs(shifted - s[si].time) <= window_ps) {
      set.times.push_back(it.time);
      ++si;
    }
  }
  return set;
}

void write_histogram_csv(const CorrelationHistogram& histogram, std::ostream& out) {
  out << "lag_ps,counts\n";
  char lag[64];
  for (Eigen::Index k = 0; k < histogram.bin_count(); ++k) {
    std::snprintf(lag, sizeof lag, "%.10g", histogram.bin_center_ps(k));
    out << lag << ',' << histogram.counts[k] << '\n';
  }
}

void write_histogram_csv(const CorrelationHistogram& histogram,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_histogram_csv(histogram, out);
}

}  // namespace qscope
