#include "iouf/correlation_model.hpp"
#include "iouf/errors.hpp"
#include "iouf/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

using namespace iouf;

namespace {

Eigen::MatrixXd random_rotation(int d, RngStream& rng) {
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ();
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

std::vector<CorrelationModel> some_models() {
  return {CorrelationModel::gaussian_potential(2, 1.0, 0.5), CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5),
          CorrelationModel::gaussian_mixture(0.3, 3, 1.7, 0.2), CorrelationModel::gaussian_solenoidal(3, 0.8, 1.0)};
}

}  // namespace

TEST_SUITE("correlation_model") {
  TEST_CASE("closed forms of the gaussian families") {
    const auto p = CorrelationModel::gaussian_potential(2, 2.0, 0.5);
    const double r = 1.3, u = r / 2.0;
    CHECK(p.B_L(r) == doctest::Approx((1 - u * u) * std::exp(-u * u / 2)));
    CHECK(p.B_N(r) == doctest::Approx(std::exp(-u * u / 2)));
    CHECK(p.beta_L() == doctest::Approx(3.0 / 4.0));
    CHECK(p.beta_N() == doctest::Approx(1.0 / 4.0));
    const auto s = CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5);
    CHECK(s.beta_L() == doctest::Approx(1.0));
    CHECK(s.beta_N() == doctest::Approx(3.0));
    CHECK(s.B_N(0.7) == doctest::Approx((1 - 0.49) * std::exp(-0.245)));
    const auto s3 = CorrelationModel::gaussian_solenoidal(3, 1.0, 0.5);
    CHECK(s3.beta_N() == doctest::Approx(2.0));
    const auto m = CorrelationModel::gaussian_mixture(0.25, 2, 1.0, 0.5);
    CHECK(m.beta_L() == doctest::Approx(1.5));
    CHECK(m.beta_N() == doctest::Approx(2.5));
    CHECK(m.B_L(0.0) == 1.0);
    // 1 - B without cancellation
    CHECK(s.one_minus_B_L(1e-6) == doctest::Approx(0.5e-12).epsilon(1e-6));
  }

  TEST_CASE("radial derivatives against finite differences") {
    for (const auto& m : some_models())
      for (bool L : {true, false})
        for (double r : {0.3, 1.1, 2.5}) {
          const double h = 1e-3;
          for (int k = 1; k <= 4; ++k) {
            const double fd = (m.radial_derivative(L, k - 1, r + h) - m.radial_derivative(L, k - 1, r - h)) / (2 * h);
            CHECK(m.radial_derivative(L, k, r) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
          }
        }
  }

  TEST_CASE("axis form") {
    for (const auto& m : some_models()) {
      const int d = m.dim();
      Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
      x(0) = 0.9;
      const Eigen::MatrixXd b = build_tensor(m, x);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double expect = i != j ? 0.0 : (i == 0 ? m.B_L(0.9) : m.B_N(0.9));
          CHECK(b(i, j) == doctest::Approx(expect).scale(1.0).epsilon(1e-14));
        }
      CHECK(build_tensor(m, Eigen::VectorXd::Zero(d)).isApprox(Eigen::MatrixXd::Identity(d, d)));
    }
  }

  TEST_CASE("conjugation identity b(Ox) = O b(x) O^T") {
    RngStream rng(11, 0);
    for (const auto& m : some_models()) {
      const int d = m.dim();
      for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x(i) = 1.5 * rng.normal();
        const Eigen::MatrixXd O = random_rotation(d, rng);
        const Eigen::MatrixXd lhs = build_tensor(m, O * x);
        const Eigen::MatrixXd rhs = O * build_tensor(m, x) * O.transpose();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
        // reflection x -> -x leaves b invariant
        CHECK((build_tensor(m, -x) - build_tensor(m, x)).cwiseAbs().maxCoeff() < 1e-15);
      }
    }
  }

  TEST_CASE("tensor derivatives against finite differences") {
    RngStream rng(5, 0);
    for (const auto& m : some_models()) {
      const int d = m.dim();
      for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x(i) = rng.normal();
        const auto T = tensor_derivatives(m, x);
        const double h = 1e-5;
        for (int k = 0; k < d; ++k) {
          Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
          e(k) = h;
          const Eigen::MatrixXd fd = (build_tensor(m, x + e) - build_tensor(m, x - e)) / (2 * h);
          const auto Tp = tensor_derivatives(m, x + e), Tm = tensor_derivatives(m, x - e);
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
              CHECK(T.d1(k, i, j) == doctest::Approx(fd(i, j)).scale(1.0).epsilon(1e-8));
              for (int l = 0; l < d; ++l) {
                const double fd2 = (Tp.d1(l, i, j) - Tm.d1(l, i, j)) / (2 * h);
                CHECK(T.d2(k, l, i, j) == doctest::Approx(fd2).scale(1.0).epsilon(1e-7));
              }
            }
        }
      }
      // at the origin: first derivatives vanish, second = -beta pattern
      const auto T0 = tensor_derivatives(m, Eigen::VectorXd::Zero(d));
      for (double v : T0.first) CHECK(v == 0.0);
      CHECK(T0.d2(0, 0, 0, 0) == doctest::Approx(-m.beta_L()));
      if (d >= 2) CHECK(T0.d2(0, 0, 1, 1) == doctest::Approx(-m.beta_N()));
    }
    // lags below the singular radius are rejected by the checked entry point
    const auto m = CorrelationModel::gaussian_potential(2, 1.0, 1.0);
    CHECK_THROWS_AS(tensor_derivatives(m, Eigen::Vector2d(1e-12, 0.0)), std::domain_error);
  }

  TEST_CASE("pairwise bound constants") {
    const auto s = sup_ratio_constants(CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5));
    CHECK(s.a == doctest::Approx(1.5));
    CHECK(s.b_const == doctest::Approx(0.5));
    CHECK(s.sigma == doctest::Approx(1.0));
    CHECK(s.lambda_bound == doctest::Approx(1.0));
    const auto p = sup_ratio_constants(CorrelationModel::gaussian_potential(2, 1.0, 0.5));
    CHECK(p.a == doctest::Approx(0.5));
    CHECK(p.b_const == doctest::Approx(1.5));
    CHECK(p.lambda_bound == doctest::Approx(0.0).scale(1.0));
    const auto q = sup_ratio_constants(CorrelationModel::gaussian_solenoidal(2, 2.0, 0.5));
    CHECK(q.a == doctest::Approx(1.5 / 4.0));
  }

  TEST_CASE("psd of gaussian families") {
    RngStream rng(2, 0);
    for (const auto& m : some_models()) {
      Eigen::MatrixXd pts(m.dim(), 40);
      for (Eigen::Index k = 0; k < pts.size(); ++k) pts(k) = 2.0 * rng.normal();
      const auto rep = validate_psd(m, pts);
      CHECK(rep.ok);
      CHECK(rep.min_eigenvalue > -1e-10);
      CHECK(rep.size == static_cast<std::size_t>(40 * m.dim()));
    }
  }

  TEST_CASE("invalid correlation is caught by the psd check") {
    auto B = [](double r) { return std::exp(-r * r / 2) * std::cos(2 * r); };
    const auto m = CorrelationModel::user_supplied(B, B, 2, 1.0, 0.5);
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(2, 9);
    for (int k = 0; k < 8; ++k) {
      const double a = 2 * M_PI * k / 8.0;
      pts(0, k + 1) = 1.22 * std::cos(a);
      pts(1, k + 1) = 1.22 * std::sin(a);
    }
    const auto rep = validate_psd(m, pts);
    CHECK_FALSE(rep.ok);
    CHECK(rep.min_eigenvalue == doctest::Approx(-0.523253).epsilon(1e-5));
  }

  TEST_CASE("user supplied models") {
    auto g = [](double r) { return std::exp(-r * r / 2); };
    const auto m = CorrelationModel::user_supplied(g, g, 2, 1.0, 0.5);
    CHECK(m.beta_L() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.dB_L(0.8) == doctest::Approx(-0.8 * g(0.8)).epsilon(1e-7));
    CHECK_THROWS_AS(CorrelationModel::user_supplied([](double) { return 0.5; }, g, 2, 1.0, 0.5), ModelError);
    CHECK_THROWS_AS(CorrelationModel::gaussian_potential(2, -1.0, 0.5), ModelError);
    CHECK_THROWS_AS(CorrelationModel::gaussian_potential(2, 1.0, 0.0), ModelError);
    CHECK_THROWS_AS(CorrelationModel::gaussian_mixture(1.5, 2, 1.0, 0.5), ModelError);
  }
}
