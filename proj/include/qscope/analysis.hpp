#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "qscope/edge_fit.hpp"
#include "qscope/image.hpp"

namespace qscope {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Complementary pixel partitions; bright and dark never overlap and
/// together cover the image.
struct MaskPair {
  MaskArray bright;
  MaskArray dark;
};

/// bright = pixels strictly above the image mean, dark = the rest.
MaskPair threshold_mask(const ImageGrid& reference);

/// |mean(bright) - mean(dark)| / sqrt(var(bright) + var(dark)) with
/// population variances over pixels. Returns 0 when the means tie; throws
/// NumericalError when either region is empty.
double snr(const ImageGrid& image, const MaskPair& masks);

struct SnrPoint {
  int frames = 0;
  double snr = 0.0;
};

struct SqrtFitResult {
  double amplitude = 0.0;  ///< SNR per sqrt(frame)
  double r_squared = 0.0;
};

/// Closed-form least squares of f(x) = A*sqrt(x): A = sum(y*sqrt(x))/sum(x).
/// Throws NumericalError when every point is zero.
SqrtFitResult fit_sqrt_scaling(std::span<const SnrPoint> points);

/// Energy conservation for parametric down-conversion:
/// 1/lambda_i = 1/lambda_p - 1/lambda_s. Throws std::invalid_argument when
/// lambda_s <= lambda_p.
double idler_wavelength(double lambda_pump_nm, double lambda_signal_nm);

/// 20%-80% edge-response limit of a confocal microscope, 0.33 * lambda / NA.
double confocal_limit(double lambda_um, double numerical_aperture);

enum class EdgeOrientation {
  Vertical,    ///< edge runs along y; profiles run along x, one per row
  Horizontal,  ///< edge runs along x; profiles run along y, one per column
};

/// Pixel region crossing one edge; bounds are inclusive.
struct EdgeRegion {
  int first_row = 0;
  int last_row = 0;
  int first_col = 0;
  int last_col = 0;
  EdgeOrientation orientation = EdgeOrientation::Vertical;
};

/// `count` one-pixel-wide profiles perpendicular to the edge, picked evenly
/// across the region. Positions are micrometers from pixel_pitch_um.
std::vector<Linescan> extract_linescans(const ImageGrid& image, const EdgeRegion& region,
                                        int count);

/// Pearson correlation of two equally-shaped arrays.
template <typename DerivedA, typename DerivedB>
double pearson(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  const Eigen::ArrayXXd x = a.template cast<double>();
  const Eigen::ArrayXXd y = b.template cast<double>();
  const Eigen::ArrayXXd dx = x - x.mean();
  const Eigen::ArrayXXd dy = y - y.mean();
  const double denom = std::sqrt(dx.square().sum() * dy.square().sum());
  return denom > 0 ? (dx * dy).sum() / denom : 0.0;
}

}  // namespace qscope
