#include "iouf/field_sampler.hpp"

#include "iouf/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace iouf {

SeriesFieldSampler::SeriesFieldSampler(const CorrelationModel& model, double tail_tol)
    : model_(model), tail_tol_(tail_tol) {
  if (!supports(model)) throw ModelError("series sampler needs a d = 2 Gaussian family");
}

bool SeriesFieldSampler::supports(const CorrelationModel& model) {
  return model.dim() == 2 && model.is_gaussian();
}

int SeriesFieldSampler::degree_for_radius(double rho) const {
  // Neglected variance at radius rho (in units of l) is P(Poisson(rho^2) > K);
  // gradients see one degree less, hence gamma_p(K, .) rather than (K+1, .).
  const double mu = std::max(rho * rho, 1e-300);
  int K = 4;
  while (boost::math::gamma_p(static_cast<double>(K), mu) > tail_tol_) {
    ++K;
    if (K > 4000) throw NumericalError("series sampler: cloud radius too large for expansion");
  }
  return K;
}

void SeriesFieldSampler::basis(const Eigen::MatrixXd& points, int K, Eigen::MatrixXd& A,
                               Eigen::MatrixXd& dA, Eigen::MatrixXd& B,
                               Eigen::MatrixXd& dB) const {
  const Eigen::Index n = points.cols();
  const double ell = model_.length_scale();
  A.resize(n, K + 1);
  dA.resize(n, K + 1);
  B.resize(n, K + 1);
  dB.resize(n, K + 1);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double a = points(0, p) / ell, b = points(1, p) / ell;
    A(p, 0) = std::exp(-0.5 * a * a);
    B(p, 0) = std::exp(-0.5 * b * b);
    dA(p, 0) = -a * A(p, 0);
    dB(p, 0) = -b * B(p, 0);
    for (int j = 1; j <= K; ++j) {
      const double sj = std::sqrt(static_cast<double>(j));
      A(p, j) = A(p, j - 1) * a / sj;
      B(p, j) = B(p, j - 1) * b / sj;
      dA(p, j) = sj * A(p, j - 1) - a * A(p, j);
      dB(p, j) = sj * B(p, j - 1) - b * B(p, j);
    }
  }
}

void SeriesFieldSampler::sample(const Eigen::MatrixXd& points, double dt_eff, RngStream& rng,
                                Eigen::MatrixXd& dF) const {
  const Eigen::Index n = points.cols();
  double rho = 0.0;
  for (Eigen::Index p = 0; p < n; ++p) rho = std::max(rho, points.col(p).norm());
  const int K = degree_for_radius(rho / model_.length_scale());
  // per-thread workspace: large clouds would otherwise hit the allocator every step
  thread_local Eigen::MatrixXd A, dA, B, dB, Xi, G, Gd;
  basis(points, K, A, dA, B, dB);
  dF.setZero(2, n);
  const double alpha = model_.alpha();
  const double w[2] = {std::sqrt(alpha), std::sqrt(1.0 - alpha)};
  Xi.resize(K + 1, K + 1);
  G.resize(n, K + 1);
  Gd.resize(n, K + 1);
  for (int part = 0; part < 2; ++part) {
    if (w[part] == 0.0) continue;
    Xi.setZero();
    for (int j = 0; j <= K; ++j)
      for (int k = 0; k + j <= K; ++k) Xi(j, k) = rng.normal();
    G.noalias() = B * Xi.transpose();
    Gd.noalias() = dB * Xi.transpose();
    const double s = w[part] * std::sqrt(dt_eff);
    for (Eigen::Index p = 0; p < n; ++p) {
      const double psi1 = dA.row(p).dot(G.row(p));
      const double psi2 = A.row(p).dot(Gd.row(p));
      if (part == 0) {
        dF(0, p) += s * psi1;
        dF(1, p) += s * psi2;
      } else {
        dF(0, p) += s * psi2;
        dF(1, p) -= s * psi1;
      }
    }
  }
}

Eigen::MatrixXd SeriesFieldSampler::implied_covariance(const Eigen::MatrixXd& points, int K) const {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd A, dA, B, dB;
  basis(points, K, A, dA, B, dB);
  // Per point, the two velocity components as linear forms in the coefficients.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const double alpha = model_.alpha();
  for (int part = 0; part < 2; ++part) {
    const double wt = part == 0 ? alpha : 1.0 - alpha;
    if (wt == 0.0) continue;
    Eigen::MatrixXd F(2 * n, (K + 1) * (K + 1));
    F.setZero();
    for (Eigen::Index p = 0; p < n; ++p)
      for (int j = 0; j <= K; ++j)
        for (int k = 0; j + k <= K; ++k) {
          const double psi1 = dA(p, j) * B(p, k), psi2 = A(p, j) * dB(p, k);
          const Eigen::Index col = j * (K + 1) + k;
          if (part == 0) {
            F(2 * p, col) = psi1;
            F(2 * p + 1, col) = psi2;
          } else {
            F(2 * p, col) = psi2;
            F(2 * p + 1, col) = -psi1;
          }
        }
    C += wt * F * F.transpose();
  }
  return C;
}

}  // namespace iouf
