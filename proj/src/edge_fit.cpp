#include "qscope/edge_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qscope {

namespace {

double median_spacing(const Eigen::ArrayXd& x) {
  std::vector<double> dx(static_cast<std::size_t>(x.size() - 1));
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) dx[i] = x[i + 1] - x[i];
  auto mid = dx.begin() + dx.size() / 2;
  std::nth_element(dx.begin(), mid, dx.end());
  return *mid;
}

/// x where the piecewise-linear data first crosses `level`; NaN if never.
double first_crossing(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, double level) {
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double lo = std::min(y[i], y[i + 1]);
    const double hi = std::max(y[i], y[i + 1]);
    if (level < lo || level > hi) continue;
    if (y[i + 1] == y[i]) return x[i];
    return x[i] + (level - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i]);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Eigen::Vector4d initial_guess(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y,
                              double sigma_min) {
  const double ymin = y.minCoeff();
  const double ymax = y.maxCoeff();
  const double range = ymax - ymin;
  const Eigen::Index half = x.size() / 2;
  const bool rising = y.tail(x.size() - half).mean() >= y.head(half).mean();

  Eigen::Vector4d p;
  p[0] = rising ? range / 2.0 : -range / 2.0;  // amplitude
  p[1] = (ymax + ymin) / 2.0;                  // offset

  double center = first_crossing(x, y, p[1]);
  if (!std::isfinite(center)) center = 0.5 * (x[0] + x[x.size() - 1]);
  p[2] = center;

  const double x10 = first_crossing(x, y, ymin + 0.1 * range);
  const double x90 = first_crossing(x, y, ymin + 0.9 * range);
  double rise = std::isfinite(x10) && std::isfinite(x90) ? std::abs(x90 - x10)
                                                         : x[x.size() - 1] - x[0];
  if (!(rise > 0)) rise = x[x.size() - 1] - x[0];
  p[3] = std::max(rise / 4.0, sigma_min);
  return p;
}

}  // namespace

Eigen::ArrayXd edge_model(const Eigen::ArrayXd& x, const Eigen::Vector4d& params) {
  const double inv = 1.0 / (std::numbers::sqrt2 * params[3]);
  return params[0] * ((x - params[2]) * inv).unaryExpr([](double u) { return std::erf(u); }) +
         params[1];
}

Eigen::ArrayXd edge_fit_residuals(const Eigen::Vector4d& params, const Eigen::ArrayXd& x,
                                  const Eigen::ArrayXd& y, const Eigen::ArrayXd& weights) {
  return weights * (edge_model(x, params) - y);
}

Eigen::MatrixXd edge_fit_jacobian(const Eigen::Vector4d& params, const Eigen::ArrayXd& x,
                                  const Eigen::ArrayXd& weights) {
  const double amplitude = params[0];
  const double sigma = params[3];
  const Eigen::ArrayXd u = (x - params[2]) / (std::numbers::sqrt2 * sigma);
  // d/du erf(u) = 2/sqrt(pi) * exp(-u^2)
  const Eigen::ArrayXd gauss =
      (2.0 / std::sqrt(std::numbers::pi)) * (-u.square()).exp();

  Eigen::MatrixXd jac(x.size(), 4);
  jac.col(0) = (weights * u.unaryExpr([](double v) { return std::erf(v); })).matrix();
  jac.col(1) = weights.matrix();
  jac.col(2) = (weights * amplitude * gauss * (-1.0 / (std::numbers::sqrt2 * sigma))).matrix();
  jac.col(3) = (weights * amplitude * gauss * (-u / sigma)).matrix();
  return jac;
}

EdgeFitResult fit_edge(const Linescan& scan, const EdgeFitOptions& options) {
  const Eigen::ArrayXd& x = scan.position_um;
  const Eigen::ArrayXd& y = scan.counts;
  if (x.size() != y.size()) throw std::invalid_argument("linescan arrays differ in length");
  if (x.size() < 6) throw std::invalid_argument("edge fit needs at least 6 points");
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    if (!(x[i] < x[i + 1]))
      throw std::invalid_argument("linescan positions must be strictly increasing");

  const Eigen::ArrayXd weights = 1.0 / y.max(1.0).sqrt();
  const double sigma_min = options.sigma_bound_px * median_spacing(x);

  Eigen::Vector4d p = initial_guess(x, y, sigma_min);
  Eigen::ArrayXd residuals = edge_fit_residuals(p, x, y, weights);
  double cost = 0.5 * residuals.square().sum();

  Eigen::MatrixXd jac = edge_fit_jacobian(p, x, weights);
  Eigen::Vector4d gradient = jac.transpose() * residuals.matrix();
  const double gradient_scale = std::max(1.0, gradient.cwiseAbs().maxCoeff());

  EdgeFitResult result;
  double damping = 1e-3;
  int iteration = 0;
  bool converged =
      gradient.cwiseAbs().maxCoeff() <= options.gradient_tolerance * gradient_scale;

  while (!converged && iteration < options.max_iterations) {
    ++iteration;
    const Eigen::Matrix4d normal = jac.transpose() * jac;
    bool stepped = false;
    for (int attempt = 0; attempt < 32 && !stepped; ++attempt) {
      Eigen::Matrix4d damped = normal;
      damped.diagonal() += damping * normal.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d step = damped.ldlt().solve(-gradient);

      Eigen::Vector4d trial = p + step;
      trial[3] = std::max(trial[3], sigma_min);
      const Eigen::ArrayXd trial_residuals = edge_fit_residuals(trial, x, y, weights);
      const double trial_cost = 0.5 * trial_residuals.square().sum();
      const double step_norm = (trial - p).norm();
      if (trial_cost < cost) {
        p = trial;
        residuals = trial_residuals;
        cost = trial_cost;
        damping = std::max(damping / 3.0, 1e-12);
        stepped = true;
        if (step_norm <= 1e-14 * (1.0 + p.norm())) converged = true;
      } else {
        // A vanishing step that still fails to lower the cost means the
        // quadratic model has nothing left to gain: the minimum is reached.
        if (step_norm <= 1e-10 * (1.0 + p.norm())) {
          converged = true;
          break;
        }
        damping *= 4.0;
      }
    }
    if (!stepped) break;  // converged, or no downhill step at any damping
    jac = edge_fit_jacobian(p, x, weights);
    gradient = jac.transpose() * residuals.matrix();
    if (gradient.cwiseAbs().maxCoeff() <= options.gradient_tolerance * gradient_scale)
      converged = true;
  }

  result.amplitude = p[0];
  result.offset = p[1];
  result.center_um = p[2];
  result.sigma_um = p[3];
  result.residual_norm = std::sqrt(2.0 * cost);
  result.iterations = iteration;

  const Eigen::Matrix4d normal = jac.transpose() * jac;
  const Eigen::Matrix4d covariance = normal.fullPivLu().inverse();
  result.amplitude_se = std::sqrt(std::max(0.0, covariance(0, 0)));
  result.offset_se = std::sqrt(std::max(0.0, covariance(1, 1)));
  result.center_se = std::sqrt(std::max(0.0, covariance(2, 2)));
  result.sigma_se = std::sqrt(std::max(0.0, covariance(3, 3)));

  if (p[3] <= sigma_min)
    result.status = EdgeFitResult::Status::SigmaAtBound;
  else if (!converged)
    result.status = EdgeFitResult::Status::MaxIterations;
  else
    result.status = EdgeFitResult::Status::Converged;
  return result;
}

EdgeFitResult fit_edge(std::span<const double> position_um, std::span<const double> counts,
                       const EdgeFitOptions& options) {
  Linescan scan;
  scan.position_um = Eigen::Map<const Eigen::ArrayXd>(
      position_um.data(), static_cast<Eigen::Index>(position_um.size()));
  scan.counts = Eigen::Map<const Eigen::ArrayXd>(counts.data(),
                                                 static_cast<Eigen::Index>(counts.size()));
  return fit_edge(scan, options);
}

}  // namespace qscope
