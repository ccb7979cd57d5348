#pragma once

#include <Eigen/Core>
#include <span>

namespace qscope {

/// One-pixel-wide image profile; positions are micrometer coordinates of
/// pixel centers and strictly increase.
struct Linescan {
  Eigen::ArrayXd position_um;
  Eigen::ArrayXd counts;
};

/// Result of the edge-response fit
///   f(x) = A * erf((x - c) / (sqrt(2) * sigma)) + B.
/// Standard errors come from the weighted normal-equation covariance.
struct EdgeFitResult {
  enum class Status {
    Converged,
    MaxIterations,   ///< carries the best parameters found so far
    SigmaAtBound,    ///< step sharper than the sampling supports
  };

  double amplitude = 0.0;
  double offset = 0.0;
  double center_um = 0.0;
  double sigma_um = 0.0;
  double amplitude_se = 0.0;
  double offset_se = 0.0;
  double center_se = 0.0;
  double sigma_se = 0.0;
  double residual_norm = 0.0;  ///< weighted residual 2-norm at the solution
  int iterations = 0;
  Status status = Status::Converged;

  bool converged() const { return status == Status::Converged; }
};

/// Model values for parameters (A, B, c, sigma).
Eigen::ArrayXd edge_model(const Eigen::ArrayXd& x, const Eigen::Vector4d& params);

/// Weighted residuals w .* (f(x) - y).
Eigen::ArrayXd edge_fit_residuals(const Eigen::Vector4d& params, const Eigen::ArrayXd& x,
                                  const Eigen::ArrayXd& y, const Eigen::ArrayXd& weights);

/// Analytic Jacobian of the weighted residuals, one row per sample and one
/// column per parameter in (A, B, c, sigma) order.
Eigen::MatrixXd edge_fit_jacobian(const Eigen::Vector4d& params, const Eigen::ArrayXd& x,
                                  const Eigen::ArrayXd& weights);

struct EdgeFitOptions {
  double sigma_bound_px = 0.01;  ///< lower bound on sigma, in units of the sample spacing
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;  ///< relative to the initial residual gradient
};

/// Damped least-squares fit with Poisson weights 1/sqrt(max(counts, 1)).
/// Declared converged when the residual gradient shrinks below
/// gradient_tolerance of its initial value or the step collapses at the
/// minimum. Requires at least 6 strictly increasing positions.
EdgeFitResult fit_edge(const Linescan& scan, const EdgeFitOptions& options = {});
EdgeFitResult fit_edge(std::span<const double> position_um, std::span<const double> counts,
                       const EdgeFitOptions& options = {});

}  // namespace qscope
