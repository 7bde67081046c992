#include "iouf/parallel.hpp"
#include "iouf/rng.hpp"
#include "iouf/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace iouf;

TEST_SUITE("rng_stats") {
  TEST_CASE("philox known answer") {
    // Random123 known-answer vector, counter 0 and key 0
    const auto b = Philox4x32::encrypt({0, 0, 0, 0}, {0, 0});
    CHECK(b[0] == 0x6627e8d5u);
    CHECK(b[1] == 0xe169c58du);
    CHECK(b[2] == 0xbc57ac4cu);
    CHECK(b[3] == 0x9b00dbd8u);
    const auto c = Philox4x32::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                       {0xffffffffu, 0xffffffffu});
    CHECK(c[0] == 0x408f276du);
    CHECK(c[1] == 0x41c83b0eu);
    CHECK(c[2] == 0xa20bc7c6u);
    CHECK(c[3] == 0x6d5451fdu);
  }

  TEST_CASE("streams are reproducible and distinct") {
    RngStream a(7, 3, StreamChannel::Field), b(7, 3, StreamChannel::Field), c(7, 3, StreamChannel::Rotation);
    bool differ = false;
    for (int i = 0; i < 100; ++i) {
      const double x = a.normal();
      CHECK(x == b.normal());
      differ = differ || x != c.normal();
    }
    CHECK(differ);
  }

  TEST_CASE("uniform and normal moments") {
    RngStream r(1, 0);
    const int n = 200000;
    double s = 0, s2 = 0, umin = 1, umax = 0;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      const double z = r.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(umin > 0.0);
    CHECK(umax < 1.0);
    CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }

  TEST_CASE("normal cdf and quantiles") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_sf(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-10));
    CHECK(stats::quantile({1, 2, 3, 4, 5}, 0.5) == doctest::Approx(3.0));
    const std::vector<double> xs{0, 1, 2, 3}, ys{1, 3, 5, 7};
    const auto f = stats::linear_fit(xs, ys);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
  }

  TEST_CASE("ks one sample accepts uniform draws") {
    RngStream r(3, 0);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = r.uniform();
    const double D = stats::ks_one_sample(xs, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(D < stats::ks_critical(0.01, xs.size()));
  }

  TEST_CASE("parallel_map keeps order and propagates exceptions") {
    const auto v = parallel_map(100, [](std::size_t i) { return static_cast<double>(i * i); });
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<double>(i * i));
    CHECK_THROWS(parallel_map(10, [](std::size_t i) -> int {
      if (i == 7) throw std::runtime_error("boom");
      return 0;
    }));
  }
}
