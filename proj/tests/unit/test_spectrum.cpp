#include "iouf/errors.hpp"
#include "iouf/spectrum.hpp"

#include <doctest.h>

#include <cmath>

using namespace iouf;

TEST_SUITE("spectrum") {
  TEST_CASE("closed form for the gaussian families") {
    const auto sol = closed_form_spectrum(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5));
    REQUIRE(sol.exponents.size() == 2);
    CHECK(sol.exponents[0] == doctest::Approx(0.5));
    CHECK(sol.exponents[1] == doctest::Approx(-1.5));
    const auto pot = closed_form_spectrum(CorrelationModel::gaussian_potential(2, 1.0, 0.5));
    CHECK(pot.exponents[0] == doctest::Approx(-1.5));
    CHECK(pot.exponents[1] == doctest::Approx(-3.5));
    const auto mix = closed_form_spectrum(CorrelationModel::gaussian_mixture(0.5, 2, 1.0, 0.5));
    CHECK(mix.exponents[0] == doctest::Approx(-0.5));
    // sum of exponents is the mean divergence -d c minus the potential part
    const auto s3 = closed_form_spectrum(2.0, 3.0, 0.25, 3);
    CHECK(s3.exponents[0] == doctest::Approx(3.0 - 1.0 - 0.25));
    CHECK(s3.exponents[2] == doctest::Approx(-3.0 - 0.25));
  }

  TEST_CASE("lyapunov dimension") {
    LyapunovSpectrum s;
    s.exponents = {1.0, -2.0};
    s.multiplicities = {1, 1};
    CHECK(lyapunov_dimension(s) == doctest::Approx(1.5));
    s.exponents = {0.5, -1.5};
    CHECK(lyapunov_dimension(s) == doctest::Approx(4.0 / 3.0));
    s.exponents = {-0.5, -1.5};
    const auto neg = lyapunov_dimension_detail(s.exponents, s.multiplicities);
    CHECK(neg.D == 0.0);
    CHECK(neg.k == 0);
    s.exponents = {0.0, -1.0};
    const auto edge = lyapunov_dimension_detail(s.exponents, s.multiplicities);
    CHECK(edge.D == 0.0);
    CHECK(edge.boundary);
    // all partial sums positive: D = d
    s.exponents = {2.0, -1.0};
    CHECK(lyapunov_dimension(s) == doctest::Approx(2.0));
    // multiplicities count toward k
    const auto m = lyapunov_dimension_detail({1.0, -3.0}, {2, 1});
    CHECK(m.k == 1);  // distinct exponents used
    CHECK(m.D == doctest::Approx(2.0 + 2.0 / 3.0));
    CHECK(lyapunov_dimension_detail({1.0, -1.5}, {2, 1}).D == doctest::Approx(3.0));
  }

  TEST_CASE("qr accumulator on a fixed linear map") {
    QrAccumulator acc(2);
    Eigen::Matrix2d A;
    A << 2.0, 1.0,
         0.0, 0.5;
    Eigen::MatrixXd frame = Eigen::MatrixXd::Identity(2, 2);
    for (int i = 0; i < 50; ++i) {
      frame = A * frame;
      acc.reorthonormalize(frame);
    }
    CHECK(acc.log_sums()(0) / 50 == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    CHECK(acc.log_sums()(1) / 50 == doctest::Approx(std::log(0.5)).epsilon(1e-3));
  }

  TEST_CASE("zero noise spectrum is -c") {
    SimConfig cfg(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.7));
    cfg.noise_amplitude = 0.0;
    cfg.T = 1.0;
    cfg.dt = 1e-3;
    const auto s = estimate_spectrum_qr(cfg, 2);
    for (double e : s.exponents) CHECK(e == doctest::Approx(-0.7).epsilon(1e-9));
  }

  TEST_CASE("short qr run lands near the closed form") {
    SimConfig cfg(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5));
    cfg.T = 40.0;
    cfg.dt = 2e-3;
    cfg.seed = 9;
    const auto s = estimate_spectrum_qr(cfg, 8);
    REQUIRE(s.stderrs.size() == 2);
    CHECK(std::abs(s.exponents[0] - 0.5) < 5 * s.stderrs[0] + 0.02);
    CHECK(std::abs(s.exponents[1] + 1.5) < 5 * s.stderrs[1] + 0.02);
    // volume: the sum is deterministic for a divergence free field
    CHECK(s.exponents[0] + s.exponents[1] == doctest::Approx(-1.0).epsilon(0.02));
  }
}
