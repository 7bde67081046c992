#include "iouf/equilibrium_dimension.hpp"
#include "iouf/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace iouf;

namespace {

Eigen::MatrixXd uniform_segment(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0, StreamChannel::Auxiliary);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.cols(); ++i) x(0, i) = rng.uniform();
  return x;
}

Eigen::MatrixXd uniform_disk(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0, StreamChannel::Auxiliary);
  Eigen::MatrixXd x(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double r = std::sqrt(rng.uniform()), a = 2 * std::numbers::pi * rng.uniform();
    x(0, i) = r * std::cos(a);
    x(1, i) = r * std::sin(a);
  }
  return x;
}

}  // namespace

TEST_SUITE("equilibrium_dimension") {
  TEST_CASE("segment and disk oracles") {
    const auto seg = correlation_dimension(uniform_segment(5000, 1));
    CHECK(seg.accepted);
    CHECK(std::abs(seg.estimate - 1.0) < 0.05);
    const auto disk = correlation_dimension(uniform_disk(5000, 2));
    CHECK(disk.accepted);
    CHECK(std::abs(disk.estimate - 2.0) < 0.1);
    CHECK(disk.ci_halfwidth > 0.0);
    CHECK(disk.r_lo < disk.r_hi);
  }

  TEST_CASE("degenerate cloud gives zero") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 300, 0.25);
    x(0, 7) += 1e-14;
    const auto f = correlation_dimension(x);
    CHECK(f.degenerate);
    CHECK(f.estimate == 0.0);
  }

  // distances are binned on a log grid, so invariance holds to one bin
  TEST_CASE("similarity invariance") {
    const Eigen::MatrixXd x = uniform_disk(2000, 3);
    Eigen::Matrix2d rot;
    rot << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
    const Eigen::MatrixXd y = (7.5 * rot * x).colwise() + Eigen::Vector2d(3.0, -1.0);
    const auto a = correlation_dimension(x), b = correlation_dimension(y);
    CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-3));
    CHECK(b.r_lo == doctest::Approx(7.5 * a.r_lo).epsilon(2.5e-3));
  }

  TEST_CASE("pairwise distance quantile") {
    Eigen::MatrixXd x(1, 3);
    x << 0.0, 1.0, 3.0;
    // distances 1, 2, 3
    CHECK(pairwise_distance_quantile(x, 0.5) == doctest::Approx(2.0));
    CHECK(pairwise_distance_quantile(x, 1.0) == doctest::Approx(3.0));
  }

  TEST_CASE("negative top exponent predicts a point mass") {
    SimConfig cfg(CorrelationModel::gaussian_potential(2, 1.0, 0.5));
    cfg.dt = 0.005;
    cfg.override_dt_guard = true;
    const auto rep = equilibrium_report(cfg, {2.0}, 200);
    CHECK(rep.dirac_prediction);
    CHECK(rep.D_closed == 0.0);
    CHECK(rep.fits.empty());
    REQUIRE(rep.diameter_q95.size() == 1);
  }
}
