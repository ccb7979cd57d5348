#include "qscope/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qscope {

double SamplePattern::at(double x_um, double y_um) const {
  const auto cols = reflectance.cols();
  const auto rows = reflectance.rows();
  auto col = static_cast<Eigen::Index>(std::floor(x_um / pitch_x_um()));
  auto row = static_cast<Eigen::Index>(std::floor(y_um / pitch_y_um()));
  col = std::clamp<Eigen::Index>(col, 0, cols - 1);
  row = std::clamp<Eigen::Index>(row, 0, rows - 1);
  return reflectance(row, col);
}

SamplePattern make_grating(double square_size_um, double gap_um, double field_um,
                           int resolution_px) {
  if (resolution_px <= 0) throw std::invalid_argument("grating resolution must be positive");
  if (!(square_size_um > 0) || gap_um < 0 || !(field_um > 0))
    throw std::invalid_argument("grating dimensions must be positive");

  SamplePattern pattern;
  pattern.size_x_um = field_um;
  pattern.size_y_um = field_um;
  pattern.reflectance = Eigen::ArrayXXd::Zero(resolution_px, resolution_px);

  const double period = square_size_um + gap_um;
  const double pitch = field_um / resolution_px;
  for (int r = 0; r < resolution_px; ++r) {
    const double y = std::fmod((r + 0.5) * pitch, period);
    if (y >= square_size_um) continue;
    for (int c = 0; c < resolution_px; ++c) {
      const double x = std::fmod((c + 0.5) * pitch, period);
      if (x < square_size_um) pattern.reflectance(r, c) = 1.0;
    }
  }
  return pattern;
}

SamplePattern make_uniform(double reflectance, double field_um, int resolution_px) {
  if (resolution_px <= 0) throw std::invalid_argument("pattern resolution must be positive");
  if (reflectance < 0.0 || reflectance > 1.0)
    throw std::invalid_argument("reflectance must be in [0, 1]");
  SamplePattern pattern;
  pattern.size_x_um = field_um;
  pattern.size_y_um = field_um;
  pattern.reflectance =
      Eigen::ArrayXXd::Constant(resolution_px, resolution_px, reflectance);
  return pattern;
}

Eigen::ArrayXXd gaussian_blur(const Eigen::ArrayXXd& input, double sigma_px) {
  if (!(sigma_px > 0.0) || input.size() == 0) return input;

  const auto radius = static_cast<Eigen::Index>(std::ceil(4.0 * sigma_px));
  Eigen::ArrayXd kernel(2 * radius + 1);
  for (Eigen::Index k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (k / sigma_px) * (k / sigma_px));
  kernel /= kernel.sum();

  const Eigen::Index rows = input.rows(), cols = input.cols();
  auto clampi = [](Eigen::Index v, Eigen::Index n) {
    return std::clamp<Eigen::Index>(v, 0, n - 1);
  };

  Eigen::ArrayXXd horizontal(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * input(r, clampi(c + k, cols));
      horizontal(r, c) = acc;
    }

  Eigen::ArrayXXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * horizontal(clampi(r + k, rows), c);
      out(r, c) = acc;
    }
  return out;
}

SamplePattern blurred(const SamplePattern& pattern) {
  SamplePattern out = pattern;
  if (pattern.blur_sigma_um > 0.0 && pattern.reflectance.size() > 0) {
    const double sigma_px = pattern.blur_sigma_um / pattern.pitch_x_um();
    out.reflectance = gaussian_blur(pattern.reflectance, sigma_px);
    out.blur_sigma_um = 0.0;
  }
  return out;
}

}  // namespace qscope
