#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace iouf {

enum class Family { GaussianPotential, GaussianSolenoidal, GaussianMixture, UserSupplied };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Rank-3 / rank-4 derivative arrays of b(x) with dimension d.
// first(k, i, j) = d_k b_ij, second(k, l, i, j) = d_k d_l b_ij.
struct TensorDerivatives {
  int d = 0;
  std::vector<double> first;
  std::vector<double> second;

  double& d1(int k, int i, int j) { return first[(k * d + i) * d + j]; }
  double d1(int k, int i, int j) const { return first[(k * d + i) * d + j]; }
  double& d2(int k, int l, int i, int j) { return second[((k * d + l) * d + i) * d + j]; }
  double d2(int k, int l, int i, int j) const { return second[((k * d + l) * d + i) * d + j]; }
};

// Smooth radial coefficients used to write b and its derivatives without
// dividing by |x|:
//   b_ij      = f x_i x_j + delta_ij BN
//   f         = (BL - BN) / r^2,  f1 = f'/r,  f2 = f1'/r
//   n1        = BN'/r,            n2 = n1'/r
struct ReducedProfile {
  double BN = 1.0;
  double f = 0.0, f1 = 0.0, f2 = 0.0;
  double n1 = 0.0, n2 = 0.0;
};

struct PairwiseBound {
  double a = 0.0;        // sup (1 - B_N(u)) / u^2
  double b_const = 0.0;  // sup (1 - B_L(u)) / u^2
  double sigma = 0.0;    // sqrt(2 b_const)
  double lambda_bound = 0.0;  // (d - 1) a - c
  double a_argmax = 0.0;      // 0 means the u -> 0 limit
  double b_argmax = 0.0;
};

struct PsdReport {
  bool ok = false;
  double min_eigenvalue = 0.0;
  std::size_t size = 0;
};

// Isotropic covariance tensor b(x) = (B_L - B_N) xx^T/|x|^2 + B_N Id, plus the
// drift constant c and the dimension.  Immutable after construction.
//
// Gaussian families come from the scalar kernel C(x) = l^2 exp(-|x|^2/(2 l^2)):
// the potential family is b = -Hess C, the solenoidal family its
// divergence-free counterpart, the mixture a convex combination.  In units
// u = r/l every radial function of these families is P(u) exp(-u^2/2) for an
// even polynomial P, so all derivatives are exact.
//
// UserSupplied models use 5-point central differences with step 1e-4 l and
// even extension through r = 0.
class CorrelationModel {
 public:
  using Radial = std::function<double(double)>;

  static CorrelationModel gaussian_potential(int d, double length_scale, double drift);
  static CorrelationModel gaussian_solenoidal(int d, double length_scale, double drift);
  static CorrelationModel gaussian_mixture(double alpha, int d, double length_scale, double drift);
  static CorrelationModel user_supplied(Radial B_L, Radial B_N, int d, double length_scale,
                                        double drift);

  CorrelationModel with_drift(double c) const;

  Family family() const { return family_; }
  // Weight of the potential part (1 for potential, 0 for solenoidal).
  double alpha() const { return alpha_; }
  double length_scale() const { return ell_; }
  int dim() const { return d_; }
  double drift() const { return c_; }
  double beta_L() const { return beta_L_; }
  double beta_N() const { return beta_N_; }
  bool is_gaussian() const { return family_ != Family::UserSupplied; }

  double B_L(double r) const;
  double B_N(double r) const;
  // 1 - B computed without cancellation for the Gaussian families.
  double one_minus_B_L(double r) const;
  double one_minus_B_N(double r) const;
  double dB_L(double r) const { return radial_derivative(true, 1, r); }
  double dB_N(double r) const { return radial_derivative(false, 1, r); }
  double d2B_L(double r) const { return radial_derivative(true, 2, r); }
  double d2B_N(double r) const { return radial_derivative(false, 2, r); }
  // Radial derivative of order 0..4.
  double radial_derivative(bool longitudinal, int order, double r) const;

  ReducedProfile reduced(double r) const;
  // Only the two coefficients b needs (f and B_N).
  void tensor_coefficients(double r, double& f, double& BN) const;

  double singular_radius() const { return 1e-10 * ell_; }

  // Short identifier of all parameters, stable across runs.
  std::string fingerprint() const;

 private:
  CorrelationModel() = default;
  void finalize();
  double user_fd(const Radial& B, int order, double r) const;

  Family family_ = Family::GaussianPotential;
  double alpha_ = 1.0;
  double ell_ = 1.0;
  int d_ = 2;
  double c_ = 1.0;
  double beta_L_ = 0.0, beta_N_ = 0.0;
  // Gaussian families: polynomial coefficients in u = r/l (index = power).
  std::vector<double> pL_, pN_, pF_, pF1_, pF2_, pN1_, pN2_;
  Radial user_L_, user_N_;
};

Eigen::MatrixXd build_tensor(const CorrelationModel& model, const Eigen::VectorXd& x);
TensorDerivatives tensor_derivatives(const CorrelationModel& model, const Eigen::VectorXd& x);

// Same as the two functions above without input checks; lags shorter than the
// singular radius are evaluated at 0.  For the samplers' inner loops.
void tensor_unchecked(const CorrelationModel& model, const double* x, double* out);
void tensor_derivatives_unchecked(const CorrelationModel& model, const double* x,
                                  TensorDerivatives& out, bool with_second);

struct BetaCoefficients {
  double beta_L;
  double beta_N;
};
BetaCoefficients beta_coefficients(const CorrelationModel& model);

PairwiseBound sup_ratio_constants(const CorrelationModel& model);

// Points are the columns of a d x n matrix.
PsdReport validate_psd(const CorrelationModel& model, const Eigen::MatrixXd& points,
                       double tol = 1e-10);

}  // namespace iouf
