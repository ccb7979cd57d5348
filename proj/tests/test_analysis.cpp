#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qscope/analysis.hpp"
#include "qscope/edge_fit.hpp"
#include "qscope/errors.hpp"

using namespace qscope;

namespace {

ImageGrid grid_from(const CountArray& counts, double pitch = 1.0) {
  ImageGrid grid;
  grid.counts = counts;
  grid.pixel_pitch_um = pitch;
  return grid;
}

Eigen::ArrayXd linspace_positions(int n, double pitch) {
  Eigen::ArrayXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) * pitch;
  return x;
}

}  // namespace

TEST_CASE("idler wavelength from energy conservation") {
  const double idler = idler_wavelength(772.3, 1435.0);
  CHECK(idler >= 1671.0);
  CHECK(idler <= 1674.0);
  CHECK(idler == doctest::Approx(1672.3).epsilon(0.001));
}

TEST_CASE("degenerate pair: signal at twice the pump") {
  CHECK(idler_wavelength(700.0, 1400.0) == doctest::Approx(1400.0).epsilon(1e-12));
}

TEST_CASE("idler wavelength is an involution") {
  const double lambda_p = 772.3;
  for (double lambda_s : {900.0, 1200.0, 1435.0, 2100.0}) {
    const double twice = idler_wavelength(lambda_p, idler_wavelength(lambda_p, lambda_s));
    CHECK(std::abs(twice - lambda_s) / lambda_s < 1e-9);
  }
}

TEST_CASE("signal at or below the pump is unphysical") {
  CHECK_THROWS_AS(idler_wavelength(800.0, 800.0), std::invalid_argument);
  CHECK_THROWS_AS(idler_wavelength(800.0, 700.0), std::invalid_argument);
}

TEST_CASE("confocal edge-response limits match the reference numbers") {
  CHECK(std::abs(confocal_limit(1.673, 0.3) - 1.87) / 1.87 < 0.03);
  CHECK(std::abs(confocal_limit(1.673, 0.5) - 1.12) / 1.12 < 0.03);
  CHECK(confocal_limit(1.0, 0.33) == doctest::Approx(1.0));
}

TEST_CASE("confocal limit is linear in wavelength and reciprocal in NA") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lambda(0.4, 2.5), na(0.1, 1.6);
  for (int i = 0; i < 100; ++i) {
    const double l = lambda(rng), a = na(rng);
    CHECK(confocal_limit(2.0 * l, a) == doctest::Approx(2.0 * confocal_limit(l, a)));
    CHECK(confocal_limit(l, a) * a == doctest::Approx(confocal_limit(l, 1.0)));
  }
  CHECK_THROWS_AS(confocal_limit(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(confocal_limit(1.0, 2.0), std::invalid_argument);
}

TEST_CASE("uniform image: strict threshold puts everything in dark") {
  const ImageGrid grid = grid_from(CountArray::Constant(8, 8, 42));
  const MaskPair masks = threshold_mask(grid);
  CHECK(masks.bright.count() == 0);
  CHECK(masks.dark.count() == 64);
}

TEST_CASE("two-level image: masks equal the level sets") {
  CountArray counts = CountArray::Zero(10, 10);
  counts.topRows(5) = 100;
  const MaskPair masks = threshold_mask(grid_from(counts));
  CHECK(masks.bright.count() == 50);
  CHECK((masks.bright.topRows(5)).all());
  CHECK((masks.dark.bottomRows(5)).all());
}

TEST_CASE("snr of a constant image under given masks is zero") {
  const ImageGrid grid = grid_from(CountArray::Constant(6, 6, 9));
  MaskPair masks;
  masks.bright = MaskArray::Constant(6, 6, false);
  masks.bright.leftCols(3) = true;
  masks.dark = !masks.bright;
  CHECK(snr(grid, masks) == 0.0);
}

TEST_CASE("snr needs both regions populated") {
  const ImageGrid grid = grid_from(CountArray::Constant(4, 4, 1));
  MaskPair masks;
  masks.bright = MaskArray::Constant(4, 4, false);
  masks.dark = !masks.bright;
  CHECK_THROWS_AS(snr(grid, masks), NumericalError);
}

TEST_CASE("poisson image with mean 100 vs 0 gives snr near 10") {
  std::mt19937_64 rng(17);
  std::poisson_distribution<std::int64_t> poisson(100.0);
  CountArray counts = CountArray::Zero(40, 50);  // 1000 pixels per half
  MaskPair masks;
  masks.bright = MaskArray::Constant(40, 50, false);
  masks.bright.leftCols(25) = true;
  masks.dark = !masks.bright;
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 25; ++c) counts(r, c) = poisson(rng);

  const double value = snr(grid_from(counts), masks);
  CHECK(std::abs(value - 10.0) / 10.0 < 0.10);
}

TEST_CASE("snr is invariant under constant shifts and integer scaling") {
  std::mt19937_64 rng(19);
  std::poisson_distribution<std::int64_t> bright(60.0), dark(5.0);
  CountArray counts = CountArray::Zero(20, 20);
  MaskPair masks;
  masks.bright = MaskArray::Constant(20, 20, false);
  masks.bright.topRows(10) = true;
  masks.dark = !masks.bright;
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) counts(r, c) = r < 10 ? bright(rng) : dark(rng);

  const double base = snr(grid_from(counts), masks);
  const double shifted = snr(grid_from(counts + 1000), masks);
  CHECK(shifted == doctest::Approx(base).epsilon(1e-12));

  // Deterministic scaling multiplies numerator and deviation alike.
  const double scaled = snr(grid_from(7 * counts), masks);
  CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("exact sqrt data fits with amplitude 2 and unit R^2") {
  const std::vector<SnrPoint> points = {{1, 2.0 * std::sqrt(1.0)},
                                        {4, 2.0 * std::sqrt(4.0)},
                                        {9, 2.0 * std::sqrt(9.0)}};
  const SqrtFitResult fit = fit_sqrt_scaling(points);
  CHECK(fit.amplitude == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("noisy sqrt data recovers the amplitude") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<SnrPoint> points;
  for (int x = 1; x <= 50; ++x)
    points.push_back({x, 2.0 * std::sqrt(static_cast<double>(x)) + noise(rng)});
  const SqrtFitResult fit = fit_sqrt_scaling(points);
  CHECK(std::abs(fit.amplitude - 2.0) <= 0.1);
  CHECK(fit.r_squared > 0.95);
}

TEST_CASE("single-point sqrt fit is exact with unit R^2") {
  const std::vector<SnrPoint> points = {{4, 3.0}};
  const SqrtFitResult fit = fit_sqrt_scaling(points);
  CHECK(fit.amplitude == doctest::Approx(3.0 / 2.0).epsilon(1e-12));
  CHECK(fit.r_squared == 1.0);
}

TEST_CASE("all-zero sqrt data is degenerate") {
  const std::vector<SnrPoint> points = {{1, 0.0}, {2, 0.0}};
  CHECK_THROWS_AS(fit_sqrt_scaling(points), NumericalError);
  const std::vector<SnrPoint> bad = {{0, 1.0}};
  CHECK_THROWS_AS(fit_sqrt_scaling(bad), std::invalid_argument);
}

TEST_CASE("noise-free edge recovers sigma within one percent") {
  const int n = 24;
  Linescan scan;
  scan.position_um = linspace_positions(n, 1.0);
  const Eigen::Vector4d truth(80.0, 90.0, 12.0, 2.0);
  scan.counts = edge_model(scan.position_um, truth);

  const EdgeFitResult fit = fit_edge(scan);
  CHECK(fit.converged());
  CHECK(std::abs(fit.sigma_um - 2.0) / 2.0 < 0.01);
  CHECK(fit.amplitude == doctest::Approx(80.0).epsilon(0.01));
  CHECK(fit.offset == doctest::Approx(90.0).epsilon(0.01));
  CHECK(fit.center_um == doctest::Approx(12.0).epsilon(0.01));
}

TEST_CASE("descending edges fit with a negative amplitude") {
  Linescan scan;
  scan.position_um = linspace_positions(20, 1.0);
  const Eigen::Vector4d truth(-45.0, 55.0, 10.0, 1.5);
  scan.counts = edge_model(scan.position_um, truth);
  const EdgeFitResult fit = fit_edge(scan);
  CHECK(fit.converged());
  CHECK(fit.amplitude < 0.0);
  CHECK(std::abs(fit.sigma_um - 1.5) / 1.5 < 0.02);
}

TEST_CASE("analytic jacobian matches central finite differences") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> amp(10.0, 100.0), off(0.0, 100.0),
      center(6.0, 14.0), width(0.5, 5.0);
  const Eigen::ArrayXd x = linspace_positions(16, 1.25);
  const Eigen::ArrayXd y = Eigen::ArrayXd::Zero(16);

  for (int draw = 0; draw < 100; ++draw) {
    Eigen::Vector4d p(amp(rng), off(rng), center(rng), width(rng));
    Eigen::ArrayXd weights(16);
    for (Eigen::Index i = 0; i < 16; ++i) weights[i] = 0.2 + 0.8 * (i % 5) / 4.0;

    const Eigen::MatrixXd analytic = edge_fit_jacobian(p, x, weights);
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
      Eigen::Vector4d lo = p, hi = p;
      lo[k] -= h;
      hi[k] += h;
      const Eigen::ArrayXd fd =
          (edge_fit_residuals(hi, x, y, weights) - edge_fit_residuals(lo, x, y, weights)) /
          (2.0 * h);
      const double scale = std::max(1.0, analytic.col(k).norm());
      CHECK((fd.matrix() - analytic.col(k)).norm() / scale < 1e-5);
    }
  }
}

TEST_CASE("poisson-noised edges: two-standard-error coverage of sigma") {
  std::mt19937_64 rng(31);
  const Eigen::ArrayXd x = linspace_positions(20, 1.0);
  const Eigen::Vector4d truth(200.0, 220.0, 10.0, 2.0);
  const Eigen::ArrayXd expected = edge_model(x, truth);

  int covered = 0, converged = 0;
  for (int repeat = 0; repeat < 100; ++repeat) {
    Linescan scan;
    scan.position_um = x;
    scan.counts.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::poisson_distribution<std::int64_t> poisson(expected[i]);
      scan.counts[i] = static_cast<double>(poisson(rng));
    }
    const EdgeFitResult fit = fit_edge(scan);
    if (!fit.converged()) continue;
    ++converged;
    if (std::abs(fit.sigma_um - 2.0) <= 2.0 * fit.sigma_se) ++covered;
  }
  REQUIRE(converged >= 95);
  CHECK(static_cast<double>(covered) / converged >= 0.90);
}

TEST_CASE("sigma pinned at its bound flags a step sharper than the sampling") {
  Linescan scan;
  scan.position_um = linspace_positions(20, 1.0);
  // True width far below the bound: the optimizer must ride the clamp.
  scan.counts = edge_model(scan.position_um, Eigen::Vector4d(120.0, 130.0, 10.0, 0.2));
  EdgeFitOptions options;
  options.sigma_bound_px = 0.5;
  const EdgeFitResult fit = fit_edge(scan, options);
  CHECK(fit.status == EdgeFitResult::Status::SigmaAtBound);
  CHECK(fit.sigma_um == doctest::Approx(0.5));
}

TEST_CASE("iteration cap reports best-so-far parameters") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> noise(0.0, 3.0);
  Linescan scan;
  scan.position_um = linspace_positions(20, 1.0);
  scan.counts = edge_model(scan.position_um, Eigen::Vector4d(60.0, 70.0, 9.0, 1.8));
  for (Eigen::Index i = 0; i < 20; ++i) scan.counts[i] += noise(rng);

  EdgeFitOptions options;
  options.max_iterations = 0;
  const EdgeFitResult fit = fit_edge(scan, options);
  CHECK(fit.status == EdgeFitResult::Status::MaxIterations);
  CHECK(fit.sigma_um > 0.0);  // initial-guess diagnostics still populated
  CHECK(fit.iterations == 0);
}

TEST_CASE("fit input contracts") {
  Linescan scan;
  scan.position_um = linspace_positions(5, 1.0);
  scan.counts = Eigen::ArrayXd::Zero(5);
  CHECK_THROWS_AS(fit_edge(scan), std::invalid_argument);  // too few points

  scan.position_um = linspace_positions(8, 1.0);
  scan.position_um[4] = scan.position_um[3];  // not strictly increasing
  scan.counts = Eigen::ArrayXd::Zero(8);
  CHECK_THROWS_AS(fit_edge(scan), std::invalid_argument);
}

TEST_CASE("twenty linescans over a twenty-row region, one per row") {
  CountArray counts = CountArray::Zero(32, 40);
  counts.rightCols(20) = 50;
  const ImageGrid grid = grid_from(counts, 1.04);

  EdgeRegion region;
  region.first_row = 5;
  region.last_row = 24;
  region.first_col = 10;
  region.last_col = 29;
  const auto scans = extract_linescans(grid, region, 20);
  REQUIRE(scans.size() == 20);
  for (const Linescan& scan : scans) {
    CHECK(scan.position_um.size() == 20);
    CHECK(scan.position_um[0] == doctest::Approx((10 + 0.5) * 1.04));
  }
}

TEST_CASE("a single linescan on a step image equals that row") {
  CountArray counts = CountArray::Zero(6, 12);
  counts.row(2).setConstant(7);
  const ImageGrid grid = grid_from(counts);
  EdgeRegion region;
  region.first_row = 2;
  region.last_row = 2;
  region.first_col = 0;
  region.last_col = 11;
  const auto scans = extract_linescans(grid, region, 1);
  REQUIRE(scans.size() == 1);
  CHECK((scans[0].counts == 7.0).all());
}

TEST_CASE("horizontal edges produce column profiles") {
  CountArray counts = CountArray::Zero(16, 8);
  counts.bottomRows(8) = 30;
  const ImageGrid grid = grid_from(counts, 2.0);
  EdgeRegion region;
  region.first_row = 0;
  region.last_row = 15;
  region.first_col = 1;
  region.last_col = 6;
  region.orientation = EdgeOrientation::Horizontal;
  const auto scans = extract_linescans(grid, region, 6);
  REQUIRE(scans.size() == 6);
  CHECK(scans[0].position_um.size() == 16);
  CHECK(scans[0].counts[0] == 0.0);
  CHECK(scans[0].counts[15] == 30.0);
}

TEST_CASE("linescan region and count validation") {
  const ImageGrid grid = grid_from(CountArray::Zero(10, 10));
  EdgeRegion region;
  region.first_row = 0;
  region.last_row = 12;  // outside
  region.first_col = 0;
  region.last_col = 9;
  CHECK_THROWS_AS(extract_linescans(grid, region, 1), std::invalid_argument);
  region.last_row = 4;
  CHECK_THROWS_AS(extract_linescans(grid, region, 6), std::invalid_argument);
}

TEST_CASE("pearson correlation sanity") {
  Eigen::ArrayXXd a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  CHECK(pearson(a, (-a).eval()) == doctest::Approx(-1.0));
}
