#include "qscope/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qscope/errors.hpp"

namespace qscope {

namespace {

struct MaskedStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  Eigen::Index pixels = 0;
};

MaskedStats masked_stats(const CountArray& counts, const MaskArray& mask) {
  MaskedStats stats;
  stats.pixels = mask.count();
  if (stats.pixels == 0) return stats;
  const Eigen::ArrayXXd values = counts.cast<double>();
  const double n = static_cast<double>(stats.pixels);
  stats.mean = mask.select(values, 0.0).sum() / n;
  stats.variance = mask.select((values - stats.mean).square(), 0.0).sum() / n;
  return stats;
}

}  // namespace

MaskPair threshold_mask(const ImageGrid& reference) {
  if (reference.counts.size() == 0)
    throw std::invalid_argument("cannot build masks from an empty image");
  const Eigen::ArrayXXd values = reference.counts.cast<double>();
  const double mean = values.mean();
  MaskPair masks;
  masks.bright = values > mean;
  masks.dark = !masks.bright;
  return masks;
}

double snr(const ImageGrid& image, const MaskPair& masks) {
  if (masks.bright.rows() != image.height() || masks.bright.cols() != image.width() ||
      masks.dark.rows() != image.height() || masks.dark.cols() != image.width())
    throw std::invalid_argument("mask dimensions do not match the image");

  const MaskedStats bright = masked_stats(image.counts, masks.bright);
  const MaskedStats dark = masked_stats(image.counts, masks.dark);
  if (bright.pixels == 0 || dark.pixels == 0)
    throw NumericalError("snr needs non-empty bright and dark regions");

  const double numerator = std::abs(bright.mean - dark.mean);
  if (numerator == 0.0) return 0.0;
  const double denominator = std::sqrt(bright.variance + dark.variance);
  return denominator > 0.0 ? numerator / denominator
                           : std::numeric_limits<double>::infinity();
}

SqrtFitResult fit_sqrt_scaling(std::span<const SnrPoint> points) {
  if (points.empty()) throw std::invalid_argument("sqrt fit needs at least one point");
  double sum_y_sqrtx = 0.0, sum_x = 0.0, sum_y = 0.0, sum_y2 = 0.0;
  bool any_nonzero = false;
  for (const SnrPoint& p : points) {
    if (p.frames < 1) throw std::invalid_argument("frame counts must be >= 1");
    if (p.snr != 0.0) any_nonzero = true;
    const double sqrtx = std::sqrt(static_cast<double>(p.frames));
    sum_y_sqrtx += p.snr * sqrtx;
    sum_x += static_cast<double>(p.frames);
    sum_y += p.snr;
    sum_y2 += p.snr * p.snr;
  }
  if (!any_nonzero) throw NumericalError("sqrt fit is degenerate: all values are zero");

  SqrtFitResult fit;
  fit.amplitude = sum_y_sqrtx / sum_x;

  const double mean_y = sum_y / static_cast<double>(points.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (const SnrPoint& p : points) {
    const double predicted = fit.amplitude * std::sqrt(static_cast<double>(p.frames));
    ss_res += (p.snr - predicted) * (p.snr - predicted);
    ss_tot += (p.snr - mean_y) * (p.snr - mean_y);
  }
  if (ss_tot == 0.0)
    fit.r_squared = ss_res <= 1e-12 * std::max(1.0, sum_y2)
                        ? 1.0
                        : -std::numeric_limits<double>::infinity();
  else
    fit.r_squared = 1.0 - ss_res / ss_tot;
  return fit;
}

double idler_wavelength(double lambda_pump_nm, double lambda_signal_nm) {
  if (!(lambda_pump_nm > 0)) throw std::invalid_argument("pump wavelength must be positive");
  if (!(lambda_signal_nm > lambda_pump_nm))
    throw std::invalid_argument(
        "signal wavelength must exceed the pump wavelength, or the idler is unphysical");
  return 1.0 / (1.0 / lambda_pump_nm - 1.0 / lambda_signal_nm);
}

double confocal_limit(double lambda_um, double numerical_aperture) {
  if (!(lambda_um > 0)) throw std::invalid_argument("wavelength must be positive");
  if (!(numerical_aperture > 0) || numerical_aperture > 1.6)
    throw std::invalid_argument("numerical aperture must be in (0, 1.6]");
  return 0.33 * lambda_um / numerical_aperture;
}

std::vector<Linescan> extract_linescans(const ImageGrid& image, const EdgeRegion& region,
                                        int count) {
  if (region.first_row < 0 || region.first_col < 0 || region.last_row >= image.height() ||
      region.last_col >= image.width() || region.first_row > region.last_row ||
      region.first_col > region.last_col)
    throw std::invalid_argument("linescan region outside image");
  if (count < 1) throw std::invalid_argument("linescan count must be >= 1");

  const bool vertical = region.orientation == EdgeOrientation::Vertical;
  const int lanes = vertical ? region.last_row - region.first_row + 1
                             : region.last_col - region.first_col + 1;
  const int first_lane = vertical ? region.first_row : region.first_col;
  if (count > lanes)
    throw std::invalid_argument("linescan count exceeds rows/columns in the region");

  const double pitch = image.pixel_pitch_um;
  std::vector<Linescan> scans;
  scans.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int lane =
        count == 1 ? first_lane
                   : first_lane + static_cast<int>(std::llround(
                                      static_cast<double>(i) * (lanes - 1) / (count - 1)));
    const int length = vertical ? region.last_col - region.first_col + 1
                                : region.last_row - region.first_row + 1;
    Linescan scan;
    scan.position_um.resize(length);
    scan.counts.resize(length);
    for (int j = 0; j < length; ++j) {
      const int r = vertical ? lane : region.first_row + j;
      const int c = vertical ? region.first_col + j : lane;
      scan.position_um[j] = ((vertical ? c : r) + 0.5) * pitch;
      scan.counts[j] = static_cast<double>(image.counts(r, c));
    }
    scans.push_back(std::move(scan));
  }
  return scans;
}

}  // namespace qscope
