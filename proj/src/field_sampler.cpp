#include "iouf/field_sampler.hpp"

#include "iouf/errors.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace iouf {

namespace {

void check_request(const CorrelationModel& model, const IncrementRequest& req) {
  if (req.points.rows() != model.dim()) throw std::invalid_argument("request points must be d x n");
  if (req.points.cols() < 1) throw std::invalid_argument("request needs at least one point");
  if (!(req.dt >= 0.0) || !std::isfinite(req.dt)) throw std::invalid_argument("dt must be >= 0");
  if (!req.points.allFinite()) throw NumericalError("non-finite point in increment request");
}

}  // namespace

namespace {

// Covariance block between point p (rows) and point q (columns), z = x_p - x_q.
void pair_block(const CorrelationModel& model, const double* z, bool grad, double dt,
                Eigen::MatrixXd& blk, TensorDerivatives& der, std::vector<double>& b) {
  const int d = model.dim();
  tensor_unchecked(model, z, b.data());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) blk(i, j) = dt * b[static_cast<std::size_t>(i * d + j)];
  if (!grad) return;
  tensor_derivatives_unchecked(model, z, der, true);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) {
        blk(i, d + j * d + l) = -dt * der.d1(l, i, j);
        blk(d + i * d + l, j) = dt * der.d1(l, i, j);
      }
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) blk(d + i * d + k, d + j * d + l) = -dt * der.d2(k, l, i, j);
}

// Beyond this lag (units of l) every entry of a Gaussian-family block is
// below 1e-17 and is treated as an exact zero by the sparse path.
constexpr double kGaussianCutoff = 10.0;

}  // namespace

Eigen::MatrixXd assemble_covariance(const CorrelationModel& model, const IncrementRequest& req) {
  check_request(model, req);
  const int d = model.dim();
  const Eigen::Index n = req.points.cols();
  const int m = req.with_gradients ? d * (1 + d) : d;
  Eigen::MatrixXd K(n * m, n * m);
  Eigen::MatrixXd blk(m, m);
  TensorDerivatives der;
  std::vector<double> b(static_cast<std::size_t>(d * d));
  Eigen::VectorXd z(d);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p; q < n; ++q) {
      z = req.points.col(p) - req.points.col(q);
      pair_block(model, z.data(), req.with_gradients, req.dt, blk, der, b);
      K.block(p * m, q * m, m, m) = blk;
      if (q != p) K.block(q * m, p * m, m, m) = blk.transpose();
    }
  return K;
}

namespace {

// Lower-triangular sparse assembly for well-separated clouds; returns false
// when the cloud is too dense for the sparse path to pay off.
bool assemble_sparse(const CorrelationModel& model, const IncrementRequest& req,
                     Eigen::SparseMatrix<double>& K) {
  const int d = model.dim();
  const Eigen::Index n = req.points.cols();
  const int m = req.with_gradients ? d * (1 + d) : d;
  if (!model.is_gaussian() || n * m < 400) return false;
  const double cut2 = std::pow(kGaussianCutoff * model.length_scale(), 2);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> near;
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p; q < n; ++q)
      if ((req.points.col(p) - req.points.col(q)).squaredNorm() < cut2) near.emplace_back(p, q);
  if (static_cast<double>(near.size()) > 0.15 * static_cast<double>(n * n)) return false;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(near.size() * static_cast<std::size_t>(m * m) * 2);
  Eigen::MatrixXd blk(m, m);
  TensorDerivatives der;
  std::vector<double> b(static_cast<std::size_t>(d * d));
  Eigen::VectorXd z(d);
  for (const auto& [p, q] : near) {
    z = req.points.col(p) - req.points.col(q);
    pair_block(model, z.data(), req.with_gradients, req.dt, blk, der, b);
    // block (p, q) sits at rows p*m, cols q*m; keep only the lower triangle
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const Eigen::Index r = p * m + i, c = q * m + j;
        if (p == q) {
          if (r >= c) trip.emplace_back(r, c, blk(i, j));
        } else {
          trip.emplace_back(c, r, blk(i, j));
        }
      }
  }
  K.resize(n * m, n * m);
  K.setFromTriplets(trip.begin(), trip.end());
  return true;
}

}  // namespace

Factorization Factorization::compute(const CorrelationModel& model, const IncrementRequest& req) {
  check_request(model, req);
  Factorization fac;
  fac.d_ = model.dim();
  fac.n_ = static_cast<std::size_t>(req.points.cols());
  fac.grad_ = req.with_gradients;
  fac.order_.resize(fac.n_);
  std::iota(fac.order_.begin(), fac.order_.end(), std::size_t{0});
  const auto& P = req.points;
  std::stable_sort(fac.order_.begin(), fac.order_.end(), [&](std::size_t a, std::size_t b) {
    for (int i = 0; i < fac.d_; ++i) {
      const double pa = P(i, static_cast<Eigen::Index>(a)), pb = P(i, static_cast<Eigen::Index>(b));
      if (pa != pb) return pa < pb;
    }
    return false;
  });
  IncrementRequest canon = req;
  fac.unique_.resize(fac.n_);
  Eigen::Index nu = 0;
  canon.points.resize(fac.d_, static_cast<Eigen::Index>(fac.n_));
  for (std::size_t c = 0; c < fac.n_; ++c) {
    const auto col = P.col(static_cast<Eigen::Index>(fac.order_[c]));
    if (nu > 0 && col == canon.points.col(nu - 1)) {
      fac.unique_[c] = static_cast<std::size_t>(nu - 1);
      continue;
    }
    canon.points.col(nu) = col;
    fac.unique_[c] = static_cast<std::size_t>(nu);
    ++nu;
  }
  canon.points.conservativeResize(fac.d_, nu);
  {
    Eigen::SparseMatrix<double> Ks;
    if (canon.dt > 0.0 && assemble_sparse(model, canon, Ks)) {
      Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt(Ks);
      if (llt.info() == Eigen::Success) {
        fac.sparse_ = true;
        fac.Ls_ = llt.matrixL();
        fac.Pinv_ = llt.permutationPinv();
        fac.z_.resize(Ks.rows());
        fac.y_.resize(Ks.rows());
        return fac;
      }
    }
  }
  const Eigen::MatrixXd K = assemble_covariance(model, canon);
  const Eigen::Index N = K.rows();
  const double scale = K.diagonal().maxCoeff();
  fac.L_.setZero(N, N);
  fac.z_.resize(N);
  fac.y_.resize(N);
  if (!(scale > 0.0)) return fac;

  {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
      fac.L_ = llt.matrixL();
      return fac;
    }
  }
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -1e-10 * scale) {
      const Eigen::VectorXd D = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
      Eigen::MatrixXd L = ldlt.matrixL();
      L = L * D.asDiagonal();
      // K = P^T L D L^T P
      fac.L_ = ldlt.transpositionsP().transpose() * L;
      return fac;
    }
  }
  for (double eps : {1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += eps * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() != Eigen::Success) continue;
    fac.L_ = llt.matrixL();
    fac.jitter_ = eps * scale;
    return fac;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "covariance factorization failed beyond jitter budget; min eigenvalue "
      << es.eigenvalues().minCoeff() << " (scale " << scale << ")";
  throw NumericalError(msg.str());
}

void Factorization::sample(RngStream& rng, IncrementSample& out) const {
  const auto N = static_cast<Eigen::Index>(size());
  for (Eigen::Index k = 0; k < N; ++k) z_(k) = rng.normal();
  if (sparse_) y_ = Pinv_ * (Ls_ * z_);
  else y_.noalias() = L_ * z_;
  const int d = d_;
  const int m = grad_ ? d * (1 + d) : d;
  out.dF.resize(d, static_cast<Eigen::Index>(n_));
  if (grad_) out.dDF.resize(n_, Eigen::MatrixXd(d, d));
  else out.dDF.clear();
  for (std::size_t c = 0; c < n_; ++c) {
    const auto p = static_cast<Eigen::Index>(order_[c]);
    const Eigen::Index base = static_cast<Eigen::Index>(unique_[c]) * m;
    for (int i = 0; i < d; ++i) out.dF(i, p) = y_(base + i);
    if (grad_) {
      auto& G = out.dDF[static_cast<std::size_t>(p)];
      for (int i = 0; i < d; ++i)
        for (int l = 0; l < d; ++l) G(i, l) = y_(base + d + i * d + l);
    }
  }
}

IncrementSample Factorization::sample(RngStream& rng) const {
  IncrementSample out;
  sample(rng, out);
  return out;
}

IncrementSample sample_increment(const Factorization& fac, RngStream& rng) {
  return fac.sample(rng);
}

}  // namespace iouf
