#pragma once

#include "iouf/correlation_model.hpp"
#include "iouf/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <vector>

namespace iouf {

// Points are the columns of a d x n matrix.
struct IncrementRequest {
  Eigen::MatrixXd points;
  bool with_gradients = false;
  double dt = 0.0;
};

// dF: d x n.  dDF[p](i, l) is the increment of d_l F_i at point p.
struct IncrementSample {
  Eigen::MatrixXd dF;
  std::vector<Eigen::MatrixXd> dDF;
};

// Layout of the assembled covariance: per point, d entries for F followed by
// d*d entries for the gradient (d_l F_i at offset d + i*d + l).
//   Cov(F_i(x), F_j(y))          =  dt b_ij(x - y)
//   Cov(F_i(x), d_l F_j(y))      = -dt (d_l b_ij)(x - y)
//   Cov(d_k F_i(x), F_j(y))      = +dt (d_k b_ij)(x - y)
//   Cov(d_k F_i(x), d_l F_j(y))  = -dt (d_k d_l b_ij)(x - y)
Eigen::MatrixXd assemble_covariance(const CorrelationModel& model, const IncrementRequest& req);

// Factor of an assembled covariance, ready for repeated sampling.  Points are
// processed in lexicographic order internally, so permuting the request
// permutes the samples identically for the same stream state.  Exactly
// coincident points share one set of unknowns and receive identical samples.
// Cholesky is tried first; pivoted LDL^T and the jitter ladder are fallbacks.
// Gaussian-family clouds whose points are mostly more than 10 l apart use a
// sparse Cholesky with the (below 1e-17) far-field entries set to zero.
class Factorization {
 public:
  Factorization() = default;

  static Factorization compute(const CorrelationModel& model, const IncrementRequest& req);

  std::size_t n_points() const { return n_; }
  int dim() const { return d_; }
  bool with_gradients() const { return grad_; }
  // Diagonal jitter that had to be added (0 in the normal case).
  double jitter() const { return jitter_; }

  // Writes one draw into `out`.  Consumes exactly size() normals.
  void sample(RngStream& rng, IncrementSample& out) const;
  IncrementSample sample(RngStream& rng) const;

  std::size_t size() const { return static_cast<std::size_t>(z_.size()); }
  bool is_sparse() const { return sparse_; }

 private:
  std::size_t n_ = 0;
  int d_ = 0;
  bool grad_ = false;
  double jitter_ = 0.0;
  std::vector<std::size_t> order_;   // canonical position -> request index
  std::vector<std::size_t> unique_;  // canonical position -> distinct-point index
  Eigen::MatrixXd L_;                // Cov = L L^T in canonical order
  bool sparse_ = false;              // well-separated clouds: Cov = P^T Ls Ls^T P
  Eigen::SparseMatrix<double> Ls_;
  Eigen::PermutationMatrix<Eigen::Dynamic> Pinv_;
  mutable Eigen::VectorXd z_, y_;
};

IncrementSample sample_increment(const Factorization& fac, RngStream& rng);

// Velocity increments of a d = 2 Gaussian family from a truncated Hermite
// expansion of the scalar potential(s).  The expansion is exact in law as the
// degree grows; the degree is chosen per call from the largest point radius
// so that the neglected variance is below `tail_tol`.  Cost is
// O(n K^2) instead of O((2n)^3), which is what makes 10^4-point clouds
// feasible.  No gradients.
class SeriesFieldSampler {
 public:
  explicit SeriesFieldSampler(const CorrelationModel& model, double tail_tol = 1e-12);

  // Degree needed for all points within radius rho of the origin.
  int degree_for_radius(double rho) const;

  // dF for the columns of `points` (2 x n); dt_eff = amplitude^2 dt.
  void sample(const Eigen::MatrixXd& points, double dt_eff, RngStream& rng,
              Eigen::MatrixXd& dF) const;

  // Covariance implied by the truncated expansion at degree K (for tests).
  Eigen::MatrixXd implied_covariance(const Eigen::MatrixXd& points, int K) const;

  static bool supports(const CorrelationModel& model);

 private:
  void basis(const Eigen::MatrixXd& points, int K, Eigen::MatrixXd& A, Eigen::MatrixXd& dA,
             Eigen::MatrixXd& B, Eigen::MatrixXd& dB) const;

  CorrelationModel model_;
  double tail_tol_;
};

}  // namespace iouf
