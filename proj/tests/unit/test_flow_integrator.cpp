#include "iouf/errors.hpp"
#include "iouf/flow_integrator.hpp"
#include "iouf/parallel.hpp"

#include <doctest.h>

#include <cmath>

using namespace iouf;

TEST_SUITE("flow_integrator") {
  TEST_CASE("zero noise is the linear contraction") {
    const auto m = CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5);
    SimConfig cfg(m);
    cfg.noise_amplitude = 0.0;
    cfg.dt = 1e-3;
    cfg.T = 2.0;
    cfg.track_jacobians = true;
    Eigen::MatrixXd x(2, 3);
    x << 1.0, -2.0, 0.5,
         0.0, 3.0, 0.25;
    const auto tr = simulate(cfg, x);
    const double e = std::exp(-0.5 * 2.0);
    CHECK((tr.frames.back().positions - e * x).cwiseAbs().maxCoeff() < 1e-12);
    for (const auto& J : tr.frames.back().jacobians)
      CHECK((J - e * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);

    cfg.scheme = Scheme::EulerMaruyama;
    cfg.track_jacobians = false;
    const auto em = simulate(cfg, x);
    CHECK((em.frames.back().positions - std::pow(1.0 - 0.5e-3, 2000) * x).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("dt guard") {
    const auto m = CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5);
    CHECK(dt_guard(m) == doctest::Approx(0.01 / 3.0));
    SimConfig cfg(m);
    cfg.dt = 0.01;
    CHECK_THROWS_AS(FlowIntegrator{cfg}, ConfigError);
    cfg.override_dt_guard = true;
    CHECK_NOTHROW(FlowIntegrator{cfg});
  }

  TEST_CASE("same seed, same path") {
    const auto m = CorrelationModel::gaussian_mixture(0.5, 2, 1.0, 0.5);
    SimConfig cfg(m);
    cfg.T = 0.2;
    cfg.seed = 42;
    cfg.track_jacobians = true;
    Eigen::MatrixXd x(2, 4);
    x << 0, 1, 2, 3,
         0, 0.5, -1, 2;
    const auto a = simulate(cfg, x), b = simulate(cfg, x);
    CHECK(a.frames.back().positions == b.frames.back().positions);
    CHECK(a.frames.back().jacobians[2] == b.frames.back().jacobians[2]);
    cfg.replica_index = 1;
    const auto c = simulate(cfg, x);
    CHECK(c.frames.back().positions != a.frames.back().positions);
  }

  TEST_CASE("one-point motion is the OU process") {
    const auto m = CorrelationModel::gaussian_potential(2, 1.0, 0.5);
    const std::size_t N = 4000;
    const double T = 1.0;
    const auto finals = parallel_map(N, [&](std::size_t r) {
      SimConfig cfg(m);
      cfg.dt = 0.01;
      cfg.override_dt_guard = true;
      cfg.T = T;
      cfg.seed = 5;
      cfg.replica_index = r;
      Eigen::MatrixXd x(2, 1);
      x << 1.5, -0.5;
      return simulate(cfg, x).frames.back().positions;
    });
    // exact variance of the exponential Euler recursion
    const double var = 0.01 * -std::expm1(-2 * 0.5 * T) / -std::expm1(-2 * 0.5 * 0.01);
    const double mean[2] = {1.5 * std::exp(-0.5 * T), -0.5 * std::exp(-0.5 * T)};
    for (int i = 0; i < 2; ++i) {
      double s = 0, s2 = 0;
      for (const auto& f : finals) s += f(i, 0);
      const double mu = s / N;
      for (const auto& f : finals) s2 += (f(i, 0) - mu) * (f(i, 0) - mu);
      const double v = s2 / (N - 1);
      CHECK(std::abs(mu - mean[i]) < 4.0 * std::sqrt(var / N));
      CHECK(std::abs(v - var) < 4.0 * var * std::sqrt(2.0 / (N - 1)));
    }
  }

  TEST_CASE("snapshots share one realization") {
    const auto m = CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5);
    SimConfig cfg(m);
    cfg.dt = 0.01;
    cfg.override_dt_guard = true;
    cfg.seed = 3;
    const auto many = pullback_clouds(cfg, 50, {0.5, 1.0});
    const auto one = pullback_cloud(cfg, 50, 1.0);
    CHECK(many.size() == 2);
    CHECK(many[1].points == one.points);
    CHECK(many[0].points != one.points);
    CHECK(one.weights.size() == 50);
    CHECK(one.weights[0] == doctest::Approx(1.0 / 50));
  }

  TEST_CASE("series and dense samplers agree in law") {
    // mean squared displacement of a 100-point cloud after one step
    const auto m = CorrelationModel::gaussian_mixture(0.5, 2, 1.0, 0.5);
    RngStream init(1, 0, StreamChannel::InitialPoints);
    const Eigen::MatrixXd x = sample_stationary(m, 100, init);
    auto msd = [&](SamplerKind k) {
      double acc = 0;
      for (std::uint64_t r = 0; r < 200; ++r) {
        SimConfig cfg(m);
        cfg.dt = 0.01;
        cfg.override_dt_guard = true;
        cfg.sampler = k;
        cfg.replica_index = r;
        cfg.noise_amplitude = 1.0;
        FlowIntegrator integ(cfg);
        auto s = integ.initial_state(x);
        integ.step(s);
        acc += (s.positions - std::exp(-0.005) * x).squaredNorm();
      }
      return acc / 200;
    };
    const double a = msd(SamplerKind::Dense), b = msd(SamplerKind::Series);
    // dt per coordinate
    const double expect = 0.01 * 200;
    CHECK(std::abs(a - expect) < 0.1 * expect);
    CHECK(std::abs(b - expect) < 0.1 * expect);
  }
}
