#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace iouf::stats {

double normal_cdf(double x);
// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_sf(double x);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

// Sample covariance of two equally long series.
double covariance(std::span<const double> xs, std::span<const double> ys);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};

LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
// One-sample KS statistic against a continuous CDF.
double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
// Asymptotic critical value at significance alpha (supports 0.01 and 0.05)
// for sample sizes n and m (use m = 0 for the one-sample test).
double ks_critical(double alpha, std::size_t n, std::size_t m = 0);

// Linear-interpolated quantile, q in [0, 1].  Sorts a copy.
double quantile(std::vector<double> xs, double q);

}  // namespace iouf::stats
