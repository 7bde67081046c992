#include "iouf/errors.hpp"
#include "iouf/radial_diffusion.hpp"
#include "iouf/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace iouf;

TEST_SUITE("radial_diffusion") {
  TEST_CASE("small r exponent") {
    // gamma = ((d-1) beta_N - 2c) / beta_L
    CHECK(RadialLaw(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5)).small_r_exponent() ==
          doctest::Approx(2.0));
    CHECK(RadialLaw(CorrelationModel::gaussian_potential(2, 1.0, 0.5)).small_r_exponent() ==
          doctest::Approx(0.0));
    const RadialLaw mix(CorrelationModel::gaussian_mixture(0.5, 2, 1.0, 0.5));
    CHECK(mix.small_r_exponent() == doctest::Approx((2.0 - 1.0) / 2.0));
    CHECK(mix.speed_exponent() == doctest::Approx(-1.5));
    CHECK(mix.lambda1() == doctest::Approx(-0.5));
  }

  TEST_CASE("drift and diffusion near the origin") {
    const RadialLaw law(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5));
    const double r = 1e-3;
    CHECK(law.diffusion2(r) / (r * r) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(law.drift(r) / r == doctest::Approx(1.5 - 0.5).epsilon(1e-5));
    CHECK(law.drift(10.0) == doctest::Approx(0.1 - 5.0).epsilon(1e-6));
  }

  TEST_CASE("scale function solves the generator") {
    for (const auto& m : {CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5),
                          CorrelationModel::gaussian_potential(2, 1.0, 0.5),
                          CorrelationModel::gaussian_mixture(0.3, 2, 1.0, 0.5)}) {
      const RadialLaw law(m);
      for (double r : {0.2, 0.5, 1.0, 2.0, 4.0}) {
        const auto res = law.generator_residual(r);
        CHECK(std::abs(res.residual) <= 1e-4 * res.dominant);
      }
      CHECK(law.scale_function(1.0) == doctest::Approx(0.0).scale(1.0));
      CHECK(law.scale_derivative(1.0) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("classification follows the top exponent") {
    const auto rec = classify(closed_form_spectrum(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5)));
    CHECK(rec.kind == Recurrence::Recurrent);
    CHECK(rec.normalizable);
    const auto tr = classify(closed_form_spectrum(CorrelationModel::gaussian_potential(2, 1.0, 0.5)));
    CHECK(tr.kind == Recurrence::Transient);
    CHECK_FALSE(tr.normalizable);
    LyapunovSpectrum edge;
    edge.exponents = {0.0, -1.0};
    edge.multiplicities = {1, 1};
    const auto b = classify(edge);
    CHECK(b.boundary);
    CHECK(b.kind == Recurrence::Recurrent);
    CHECK_FALSE(b.normalizable);
  }

  TEST_CASE("invariant density is a distribution") {
    const RadialLaw law(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5));
    const auto inv = law.invariant_density();
    REQUIRE(inv.normalizable);
    CHECK(inv.cdf_at(0.0) == 0.0);
    CHECK(inv.cdf_at(1e6) == doctest::Approx(1.0));
    double prev = 0.0;
    for (double x = 0.01; x < 10; x *= 1.3) {
      const double v = inv.cdf_at(x);
      CHECK(v >= prev);
      prev = v;
    }
    // exponent 0 near the origin: cdf linear in r
    CHECK(inv.cdf_at(2e-3) / inv.cdf_at(1e-3) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK_FALSE(RadialLaw(CorrelationModel::gaussian_potential(2, 1.0, 0.5)).invariant_density().normalizable);
  }

  TEST_CASE("zero noise path and transient collapse") {
    CHECK_THROWS(RadialLaw(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5), 0.0).scale_function(2.0));
    const RadialLaw pot(CorrelationModel::gaussian_potential(2, 1.0, 0.5));
    RngStream rng(4, 0, StreamChannel::Radial);
    const auto p = simulate_radial(pot, 0.2, 1e-3, 50.0, rng);
    CHECK(p.valid);
    CHECK(p.final_r < 1e-3 * 0.2);
    CHECK(p.steps == 50000);
    RngStream a(4, 1, StreamChannel::Radial), b(4, 1, StreamChannel::Radial);
    const auto pa = simulate_radial(pot, 0.2, 1e-3, 1.0, a), pb = simulate_radial(pot, 0.2, 1e-3, 1.0, b);
    CHECK(pa.final_r == pb.final_r);
  }
}
