#pragma once

#include "iouf/flow_integrator.hpp"
#include "iouf/spectrum.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace iouf {

// Scaling range of the correlation integral, as quantiles of the pairwise
// distance distribution.  The defaults were calibrated on uniform segment and
// disk samples of 10^4 points (see README).
struct RangePolicy {
  double lo_quantile = 0.001;
  double hi_quantile = 0.05;
  int points_per_decade = 10;
  int min_points = 8;
  double min_r2 = 0.98;
  int bins_per_decade = 1000;
  std::size_t jackknife_blocks = 10;
};

struct DimensionFit {
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // 1.96 jackknife standard errors
  double r_lo = 0.0, r_hi = 0.0;
  double fit_r2 = 0.0;
  bool accepted = false;
  bool degenerate = false;  // all points within 1e-12
  std::size_t n_points = 0;
  std::vector<double> log_r, log_C;  // fit points
};

// Full correlation integral on a log grid, for output.
struct CorrelationCurve {
  std::vector<double> log_r, log_C;
};

DimensionFit correlation_dimension(const Eigen::MatrixXd& points, const RangePolicy& policy = {},
                                   CorrelationCurve* curve = nullptr);
DimensionFit correlation_dimension(const EmpiricalMeasure& cloud, const RangePolicy& policy = {},
                                   CorrelationCurve* curve = nullptr);

struct EquilibriumReport {
  std::string model_fingerprint;
  LyapunovSpectrum spectrum;
  double D_closed = 0.0;
  bool dirac_prediction = false;  // lambda_1 <= 0: D = 0, no fit
  bool boundary = false;
  std::vector<double> T;
  std::vector<DimensionFit> fits;      // empty for the Dirac prediction
  std::vector<double> diameter_q95;    // 95th percentile of pairwise distances per T
  std::string diameter_trend;          // "decreasing" / "not decreasing"
  bool stabilized = false;             // last two estimates within each other's CIs
};

// One realization, snapshots at every T (ascending) of a pullback cloud of
// n_samples points.
// `clouds` / `curves`, when given, receive the snapshots and their full
// correlation integrals.
EquilibriumReport equilibrium_report(const SimConfig& cfg, const std::vector<double>& T_list,
                                     std::size_t n_samples, const RangePolicy& policy = {},
                                     std::vector<EmpiricalMeasure>* clouds = nullptr,
                                     std::vector<CorrelationCurve>* curves = nullptr);

// 95th percentile of pairwise distances (exact for n <= 3000, otherwise on a
// deterministic subsample of 3000 points).
double pairwise_distance_quantile(const Eigen::MatrixXd& points, double q);

}  // namespace iouf
