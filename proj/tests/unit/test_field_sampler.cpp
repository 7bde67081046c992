#include "iouf/field_sampler.hpp"
#include "iouf/errors.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

using namespace iouf;

namespace {

Eigen::VectorXd flatten(const IncrementSample& s, bool grad) {
  const auto d = s.dF.rows(), n = s.dF.cols();
  const auto per = grad ? d + d * d : d;
  Eigen::VectorXd v(per * n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index i = 0; i < d; ++i) v(p * per + i) = s.dF(i, p);
    if (grad)
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index l = 0; l < d; ++l) v(p * per + d + i * d + l) = s.dDF[p](i, l);
  }
  return v;
}

}  // namespace

TEST_SUITE("field_sampler") {
  TEST_CASE("assembled covariance is symmetric and psd") {
    for (const auto& m : {CorrelationModel::gaussian_potential(2, 1.0, 0.5),
                          CorrelationModel::gaussian_mixture(0.4, 3, 1.0, 0.5)}) {
      RngStream rng(9, 0);
      IncrementRequest req;
      req.points.resize(m.dim(), 12);
      for (Eigen::Index k = 0; k < req.points.size(); ++k) req.points(k) = rng.normal();
      req.with_gradients = true;
      req.dt = 0.01;
      const Eigen::MatrixXd C = assemble_covariance(m, req);
      CHECK((C - C.transpose()).cwiseAbs().maxCoeff() < 1e-16);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
      CHECK(es.eigenvalues().minCoeff() > -1e-12);
      // one point: Var(F) = dt Id, Var(d_l F_i) = dt (-d_l d_l b_ii)(0)
      IncrementRequest one{Eigen::VectorXd::Zero(m.dim()), true, 0.01};
      const Eigen::MatrixXd C1 = assemble_covariance(m, one);
      CHECK(C1(0, 0) == doctest::Approx(0.01));
      const int d = m.dim();
      CHECK(C1(d, d) == doctest::Approx(0.01 * m.beta_L()));      // d_0 F_0
      CHECK(C1(d + 1, d + 1) == doctest::Approx(0.01 * m.beta_N()));  // d_1 F_0
    }
  }

  TEST_CASE("sampler covariance within 4 standard errors") {
    const auto m = CorrelationModel::gaussian_mixture(0.3, 2, 1.0, 0.5);
    IncrementRequest req;
    req.points.resize(2, 3);
    req.points << 0.0, 0.6, -0.4,
                  0.0, 0.3, 0.9;
    req.with_gradients = true;
    req.dt = 1.0;
    const Eigen::MatrixXd C = assemble_covariance(m, req);
    const auto fac = Factorization::compute(m, req);
    RngStream rng(21, 0);
    const int N = 40000;
    const auto dim = C.rows();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim, dim);
    IncrementSample s;
    for (int k = 0; k < N; ++k) {
      fac.sample(rng, s);
      const Eigen::VectorXd v = flatten(s, true);
      S.noalias() += v * v.transpose();
    }
    S /= N;
    int violations = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / N);
        if (std::abs(S(i, j) - C(i, j)) > 4.0 * se) ++violations;
      }
    CHECK(violations == 0);
  }

  TEST_CASE("coincident points share one sample and order does not matter") {
    const auto m = CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5);
    IncrementRequest req;
    req.points.resize(2, 4);
    req.points << 0.1, 0.5, 0.1, -0.3,
                  0.2, 0.0, 0.2, 0.7;
    req.dt = 0.01;
    const auto fac = Factorization::compute(m, req);
    RngStream a(1, 0);
    const auto s = fac.sample(a);
    CHECK(s.dF.col(0) == s.dF.col(2));
    CHECK(s.dF.col(0) != s.dF.col(1));
    // permuting the request permutes the sample
    IncrementRequest perm = req;
    perm.points.col(1) = req.points.col(3);
    perm.points.col(3) = req.points.col(1);
    const auto fp = Factorization::compute(m, perm);
    RngStream b(1, 0);
    const auto sp = fp.sample(b);
    CHECK((sp.dF.col(1) - s.dF.col(3)).norm() < 1e-14);
    CHECK((sp.dF.col(3) - s.dF.col(1)).norm() < 1e-14);
  }

  TEST_CASE("indefinite model raises a numerical error") {
    auto B = [](double r) { return std::exp(-r * r / 2) * std::cos(2 * r); };
    const auto m = CorrelationModel::user_supplied(B, B, 2, 1.0, 0.5);
    IncrementRequest req;
    req.points = Eigen::MatrixXd::Zero(2, 9);
    for (int k = 0; k < 8; ++k) {
      req.points(0, k + 1) = 1.22 * std::cos(2 * M_PI * k / 8.0);
      req.points(1, k + 1) = 1.22 * std::sin(2 * M_PI * k / 8.0);
    }
    req.dt = 1.0;
    CHECK_THROWS_AS(Factorization::compute(m, req), NumericalError);
  }

  TEST_CASE("sparse path for well separated clouds") {
    const auto m = CorrelationModel::gaussian_potential(2, 1.0, 0.5);
    IncrementRequest req;
    req.points.resize(2, 400);
    for (int k = 0; k < 400; ++k) {
      req.points(0, k) = 12.0 * (k % 20);
      req.points(1, k) = 12.0 * (k / 20);
    }
    req.dt = 0.01;
    const auto fac = Factorization::compute(m, req);
    CHECK(fac.is_sparse());
    RngStream rng(4, 0);
    double s2 = 0;
    const int N = 200;
    for (int k = 0; k < N; ++k) s2 += fac.sample(rng).dF.squaredNorm();
    // E |dF|^2 = dt d n
    const double expect = 0.01 * 2 * 400;
    CHECK(std::abs(s2 / N - expect) < 4.0 * expect * std::sqrt(2.0 / (800.0 * N)));
  }

  TEST_CASE("series sampler reproduces the covariance") {
    for (const auto& m : {CorrelationModel::gaussian_potential(2, 1.0, 0.5),
                          CorrelationModel::gaussian_solenoidal(2, 1.0, 0.5),
                          CorrelationModel::gaussian_mixture(0.6, 2, 1.3, 0.5)}) {
      REQUIRE(SeriesFieldSampler::supports(m));
      SeriesFieldSampler ss(m);
      RngStream rng(3, 0);
      IncrementRequest req;
      req.points.resize(2, 15);
      for (Eigen::Index k = 0; k < req.points.size(); ++k) req.points(k) = 1.5 * rng.normal();
      req.dt = 1.0;
      const double rho = req.points.colwise().norm().maxCoeff();
      const int K = ss.degree_for_radius(rho / m.length_scale());
      const Eigen::MatrixXd exact = assemble_covariance(m, req);
      const Eigen::MatrixXd series = ss.implied_covariance(req.points, K);
      CHECK((exact - series).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK_FALSE(SeriesFieldSampler::supports(CorrelationModel::gaussian_potential(3, 1.0, 0.5)));
  }
}
