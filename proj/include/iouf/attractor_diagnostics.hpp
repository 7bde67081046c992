#pragma once

#include "iouf/correlation_model.hpp"
#include "iouf/flow_integrator.hpp"
#include "iouf/rng.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace iouf {

// Shared simulation settings of the diagnostics.  Positions only (no
// Jacobians), so the default dt sits above the tangent-flow guard.
struct DiagnosticOptions {
  double dt = 0.01;
  bool override_dt_guard = true;
  Scheme scheme = Scheme::ExponentialEuler;
  std::uint64_t seed = 1;
  double noise_amplitude = 1.0;
  std::size_t replicas = 32;
  // Offset added to replica indices so that separate diagnostics (or radii)
  // draw independent noise.
  std::uint64_t replica_offset = 0;
  bool doubling_test = true;
  // Shell points per l of circumference (d = 2) on top of the base resolution.
  double shell_per_length = 0.5;
};

// `shell` points on the sphere of radius R plus `interior` points inside
// (Vogel spiral in d = 2), rotated by a random angle drawn from `rot`.
// For d > 2 the directions come from `rot` directly.
Eigen::MatrixXd ball_points(int d, double R, std::size_t shell, std::size_t interior, RngStream& rot);

// Shell size used for radius R: at least `resolution`, and at least
// opt.shell_per_length points per unit l of circumference.
std::size_t shell_count(double R, double ell, std::size_t resolution, double per_length);

struct SupEstimate {
  double R = 0.0;
  double t = 0.0;
  double mean_sup = 0.0;
  double se = 0.0;
  std::size_t n_shell = 0;
  std::size_t replicas = 0;
  double origin_norm = 0.0;  // MC mean of |phi_t(0)|
  // doubling test
  double mean_sup_doubled = 0.0;
  double se_doubled = 0.0;
  bool resolution_stable = true;
};

// Monte Carlo E[sup_{x in B(0,R)} |phi_t(x)|] over a point cloud, for every t
// in t_grid (ascending).  A finite cloud under-estimates the supremum; the
// doubling test re-runs with twice the resolution.
std::vector<SupEstimate> sup_norm_estimate(const CorrelationModel& model, double R,
                                           const std::vector<double>& t_grid,
                                           std::size_t resolution, const DiagnosticOptions& opt);

struct BoundCheck {
  std::string name;
  double lhs_empirical = 0.0;
  double lhs_se = 0.0;
  double rhs_theoretical = 0.0;
  bool applicable = true;
  bool satisfied = true;  // lhs <= rhs + 3 se (vacuous when not applicable)
  double margin = 0.0;    // rhs - lhs
  std::map<std::string, double> params;
  std::string note;
};

// OU tail: P(|phi_t(x)| > gamma R) <= 2 exp(-k gamma^2 R^2), |x| = R, from
// exact OU draws.  Not applicable when e^{-ct} > gamma / 4.
std::vector<BoundCheck> ou_tail_check(const CorrelationModel& model,
                                      const std::vector<double>& R_list,
                                      const std::vector<double>& gamma_list, double t,
                                      std::size_t draws, std::uint64_t seed);

double ou_tail_k(const CorrelationModel& model);
// Radius above which both Gaussian prefactors of the tail estimate are <= 1/2.
double ou_tail_R0(const CorrelationModel& model, double gamma0);

// P(B*_1 > u) = 2 (1 - Phi(u)) for u >= 0, else 1.
double brownian_max_sf(double u);
// Closed-form Brownian-maximum tail bound (1/c) sqrt(2t/pi) exp(-c^2/(2t)).
double brownian_max_tail_bound(double c, double t);
// Exact maxima of Brownian paths on [0, t] with n_steps Gaussian increments
// (bridge maxima between grid points).
std::vector<double> sample_brownian_maxima(double t, std::size_t n_steps, std::size_t paths,
                                           RngStream& rng);

struct BrownianMaxReport {
  double ks_statistic = 0.0;
  double ks_critical = 0.0;  // 1% level
  bool ks_pass = false;
  std::vector<BoundCheck> tail_checks;
};
BrownianMaxReport brownian_max_check(const std::vector<std::pair<double, double>>& c_t_pairs,
                                     std::size_t paths, std::size_t n_steps, std::uint64_t seed);

// Pairwise growth: empirical P(sup_{s<=t} |phi_s(x)-phi_s(y)|/|x-y| > z) against
// P(B*_1 > (ln z - lambda t)/(sigma sqrt t)).  x, y = (+-sep/2, 0, ...).
std::vector<BoundCheck> pairwise_growth_check(const CorrelationModel& model, double separation,
                                              double t, const std::vector<double>& z_list,
                                              const DiagnosticOptions& opt);

struct DiameterTail {
  std::vector<double> R;
  std::vector<double> tail;  // empirical P(diam >= R)
  std::vector<double> tail_se;
  double c1 = 0.0, c2 = 0.0, fit_r2 = 0.0;
  std::size_t fit_points = 0;
  bool positive_fit = false;   // c2 > 0 with r^2 >= 0.9
  bool vacuous = false;        // no exceedance anywhere
  bool monotone = true;
  bool resolution_stable = true;
  std::vector<BoundCheck> checks;
};

// Diameter of the image of the unit ball B(0, l) after time t.
DiameterTail diameter_tail(const CorrelationModel& model, double t, const std::vector<double>& R_list,
                           std::size_t resolution, const DiagnosticOptions& opt);

struct ContractionReport {
  double t0 = 0.0;
  std::vector<double> R;
  std::vector<double> delta_hat;
  std::vector<double> delta_se;
  bool exists = false;  // some R0 in range with sup_{R >= R0} delta_hat < 1
  double R0 = 0.0;
  double delta = 0.0;
  double drift_factor = 0.0;  // e^{-c t0}
  // delta_hat(R) = e^{-c t0} + A / R fitted over R_list
  double fit_intercept = 0.0, fit_intercept_se = 0.0, fit_slope = 0.0;
  // iteration overlay at the largest R: simulated E[X_n] vs the recursion bound
  std::vector<double> iter_simulated, iter_se, iter_bound;
};

ContractionReport contraction_factor(const CorrelationModel& model, double t0,
                                     const std::vector<double>& R_list, std::size_t resolution,
                                     std::size_t iterations, const DiagnosticOptions& opt);

struct RegularityPoint {
  double R = 0.0;
  double ratio = 0.0, ratio_se = 0.0;        // E sup |phi(x) - e^{-c}x| / |x|
  double norm_ratio = 0.0, norm_ratio_se = 0.0;  // E sup |phi(x)| / |x|
  double ratio_doubled = 0.0, ratio_doubled_se = 0.0;
  bool resolution_stable = true;
  std::size_t shell_points = 0;
};

// Shell statistics after unit time.
std::vector<RegularityPoint> spatial_regularity_ratio(const CorrelationModel& model,
                                                      const std::vector<double>& R_list,
                                                      std::size_t shell_points,
                                                      const DiagnosticOptions& opt);

struct SqueezePoint {
  double t = 0.0;
  double frequency = 0.0;
  double se = 0.0;
  double frequency_doubled = 0.0;
  bool resolution_stable = true;
};

// Fraction of replicas in which the whole image of the sphere of radius r+eps
// lies inside the open ball of radius r-eps.
std::vector<SqueezePoint> squeezing_frequency(const CorrelationModel& model, double r, double eps,
                                              const std::vector<double>& t_grid,
                                              std::size_t resolution, const DiagnosticOptions& opt);

// Positions of `points` at every time of t_grid for one replica.
std::vector<Eigen::MatrixXd> evolve_cloud(const CorrelationModel& model,
                                          const Eigen::MatrixXd& points,
                                          const std::vector<double>& t_grid,
                                          const DiagnosticOptions& opt, std::uint64_t replica);

}  // namespace iouf
