#include "iouf/attractor_diagnostics.hpp"
#include "iouf/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace iouf;

namespace {

DiagnosticOptions quiet(std::size_t replicas = 4) {
  DiagnosticOptions o;
  o.noise_amplitude = 0.0;
  o.replicas = replicas;
  o.doubling_test = false;
  return o;
}

}  // namespace

TEST_SUITE("attractor_diagnostics") {
  const auto sol = CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5);

  TEST_CASE("ball points") {
    RngStream rot(1, 0, StreamChannel::Rotation);
    const auto p = ball_points(2, 3.0, 40, 60, rot);
    REQUIRE(p.cols() == 100);
    for (Eigen::Index i = 0; i < 40; ++i) CHECK(p.col(i).norm() == doctest::Approx(3.0));
    for (Eigen::Index i = 40; i < 100; ++i) CHECK(p.col(i).norm() < 3.0);
    CHECK(shell_count(1.0, 1.0, 25, 0.5) == 25);
    CHECK(shell_count(20.0, 1.0, 25, 0.5) == static_cast<std::size_t>(std::ceil(20 * std::numbers::pi)));
  }

  TEST_CASE("sup norm without noise") {
    const auto s = sup_norm_estimate(sol, 5.0, {0.0, 1.0, 4.0}, 25, quiet());
    REQUIRE(s.size() == 3);
    CHECK(s[0].mean_sup == doctest::Approx(5.0));
    CHECK(s[1].mean_sup == doctest::Approx(5.0 * std::exp(-0.5)).epsilon(1e-9));
    CHECK(s[2].mean_sup == doctest::Approx(5.0 * std::exp(-2.0)).epsilon(1e-9));
    CHECK(s[2].se == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("ou tail constants and gate") {
    CHECK(ou_tail_k(sol) == doctest::Approx(0.03125));
    CHECK(ou_tail_k(CorrelationModel::gaussian_solenoidal(3, 1.0, 2.0)) == doctest::Approx(0.125));
    const auto checks = ou_tail_check(sol, {2.0}, {1.0, 0.02}, 10.0, 4000, 3);
    REQUIRE(checks.size() == 2);
    CHECK(checks[0].applicable);
    CHECK(checks[0].rhs_theoretical == doctest::Approx(2 * std::exp(-0.03125 * 4.0)));
    CHECK(checks[0].satisfied);
    // e^{-5} > 0.02 / 4
    CHECK_FALSE(checks[1].applicable);
    CHECK(checks[1].satisfied);
  }

  TEST_CASE("brownian maximum") {
    CHECK(brownian_max_sf(-1.0) == 1.0);
    CHECK(brownian_max_sf(0.0) == doctest::Approx(1.0));
    CHECK(brownian_max_sf(1.959963984540054) == doctest::Approx(0.05));
    CHECK(brownian_max_tail_bound(1.0, 1.0) == doctest::Approx(std::sqrt(2 / std::numbers::pi) * std::exp(-0.5)));
    RngStream rng(2, 0, StreamChannel::Auxiliary);
    const auto m = sample_brownian_maxima(1.0, 16, 5000, rng);
    const double ks = stats::ks_one_sample(m, [](double x) { return 1.0 - brownian_max_sf(x); });
    CHECK(ks < stats::ks_critical(0.01, m.size()));
    const auto rep = brownian_max_check({{1.0, 1.0}, {2.0, 4.0}}, 4000, 16, 5);
    CHECK(rep.ks_pass);
    for (const auto& c : rep.tail_checks) CHECK(c.satisfied);
  }

  TEST_CASE("pairwise growth without noise") {
    auto o = quiet(8);
    const auto checks = pairwise_growth_check(sol, 1.0, 1.0, {0.5, 1.5}, o);
    REQUIRE(checks.size() == 2);
    // ratio starts at 1 and shrinks, so only z < 1 is exceeded
    CHECK(checks[0].lhs_empirical == doctest::Approx(1.0));
    CHECK(checks[1].lhs_empirical == doctest::Approx(0.0));
  }

  TEST_CASE("diameter tail without noise") {
    const auto d = diameter_tail(sol, 1.0, {1.0, 3.0, 100.0}, 16, quiet());
    REQUIRE(d.tail.size() == 3);
    // image of the unit ball has diameter 2 e^{-0.5} ~ 1.21
    CHECK(d.tail[0] == doctest::Approx(1.0));
    CHECK(d.tail[1] == doctest::Approx(0.0));
    CHECK(d.tail[2] == doctest::Approx(0.0));
    CHECK(d.monotone);
  }

  TEST_CASE("contraction without noise") {
    const auto c = contraction_factor(sol, 2.0, {2.0, 5.0, 10.0}, 16, 3, quiet());
    for (double v : c.delta_hat) CHECK(v == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(c.exists);
    CHECK(c.drift_factor == doctest::Approx(std::exp(-1.0)));
    CHECK(c.fit_intercept == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    REQUIRE(c.iter_simulated.size() == 4);
    for (std::size_t n = 0; n < 4; ++n) CHECK(c.iter_simulated[n] <= c.iter_bound[n] + 1e-9);
  }

  TEST_CASE("regularity without noise") {
    const auto r = spatial_regularity_ratio(sol, {5.0}, 32, quiet());
    REQUIRE(r.size() == 1);
    CHECK(r[0].ratio == doctest::Approx(0.0).scale(1.0));
    CHECK(r[0].norm_ratio == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  }

  TEST_CASE("squeezing without noise") {
    const auto s = squeezing_frequency(sol, 1.0, 0.1, {0.01, 5.0}, 16, quiet());
    REQUIRE(s.size() == 2);
    CHECK(s[0].frequency == 0.0);
    CHECK(s[1].frequency == 1.0);
  }

  TEST_CASE("noisy runs are reproducible") {
    DiagnosticOptions o;
    o.replicas = 3;
    o.doubling_test = false;
    const auto a = sup_norm_estimate(sol, 2.0, {1.0}, 12, o);
    const auto b = sup_norm_estimate(sol, 2.0, {1.0}, 12, o);
    CHECK(a[0].mean_sup == b[0].mean_sup);
    CHECK(a[0].se > 0.0);
  }
}
