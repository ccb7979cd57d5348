#pragma once

#include <Eigen/Core>

namespace qscope {

/// Ground-truth reflectance map. Values live in [0, 1]; pixel (r, c) covers
/// the physical cell [c*dx, (c+1)*dx) x [r*dy, (r+1)*dy).
struct SamplePattern {
  Eigen::ArrayXXd reflectance;
  double size_x_um = 0.0;
  double size_y_um = 0.0;
  double blur_sigma_um = 0.0;  ///< optical blur applied before sampling; 0 = none

  double pitch_x_um() const { return size_x_um / reflectance.cols(); }
  double pitch_y_um() const { return size_y_um / reflectance.rows(); }

  /// Nearest-cell lookup; positions outside the map clamp to the border.
  double at(double x_um, double y_um) const;
};

/// Periodic grid of unit-reflectance squares separated by zero-reflectance
/// gaps, anchored with a square at the origin. Throws std::invalid_argument
/// on zero resolution or non-positive dimensions.
SamplePattern make_grating(double square_size_um, double gap_um, double field_um,
                           int resolution_px);

/// Constant-reflectance square field.
SamplePattern make_uniform(double reflectance, double field_um, int resolution_px);

/// Separable Gaussian convolution with replicated borders; sigma in pixels.
Eigen::ArrayXXd gaussian_blur(const Eigen::ArrayXXd& input, double sigma_px);

/// Copy of `pattern` with its optical blur baked into the map.
SamplePattern blurred(const SamplePattern& pattern);

}  // namespace qscope
