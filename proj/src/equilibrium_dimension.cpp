#include "iouf/equilibrium_dimension.hpp"

#include "iouf/errors.hpp"
#include "iouf/parallel.hpp"
#include "iouf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace iouf {

namespace {

struct PairHistogram {
  int B = 0;                 // blocks
  double log_lo = 0.0;       // log10 of the first edge
  int bpd = 0;
  std::size_t nbins = 0;
  // per block pair (a <= b): counts per bin and exact zeros
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::uint64_t> zeros, pairs;

  std::size_t pair_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    return static_cast<std::size_t>(a * B - a * (a - 1) / 2 + (b - a));
  }
  double edge(std::size_t k) const { return std::pow(10.0, log_lo + static_cast<double>(k) / bpd); }
};

int block_of(std::size_t i, std::size_t n, int B) {
  return static_cast<int>(i * static_cast<std::size_t>(B) / n);
}

PairHistogram build_histogram(const Eigen::MatrixXd& X, int B, int bpd, double rmin, double rmax) {
  const std::size_t n = static_cast<std::size_t>(X.cols());
  const int d = static_cast<int>(X.rows());
  PairHistogram H;
  H.B = B;
  H.bpd = bpd;
  H.log_lo = std::floor(std::log10(rmin) * bpd) / bpd;
  H.nbins = static_cast<std::size_t>(std::ceil((std::log10(rmax) - H.log_lo) * bpd)) + 2;
  const std::size_t npairs = static_cast<std::size_t>(B * (B + 1) / 2);
  H.counts.assign(npairs, std::vector<std::uint64_t>(H.nbins, 0));
  H.zeros.assign(npairs, 0);
  H.pairs.assign(npairs, 0);
  std::vector<std::size_t> start(static_cast<std::size_t>(B) + 1, n);
  for (std::size_t i = n; i-- > 0;) start[static_cast<std::size_t>(block_of(i, n, B))] = i;
  start[static_cast<std::size_t>(B)] = n;
  // Row-major copy for cache-friendly access.
  std::vector<double> P(X.data(), X.data() + X.size());
  const double scale = 0.5 * bpd;
  // Task a owns the block pairs (a, b >= a), so tasks never share memory.
  parallel_map(static_cast<std::size_t>(B), [&](std::size_t a) {
    for (std::size_t i = start[a]; i < start[a + 1]; ++i) {
      const double* xi = &P[i * static_cast<std::size_t>(d)];
      int b = static_cast<int>(a);
      std::size_t next_boundary = start[a + 1];
      std::size_t pidx = H.pair_index(static_cast<int>(a), b);
      for (std::size_t j = i + 1; j < n; ++j) {
        while (j >= next_boundary) {
          ++b;
          next_boundary = start[static_cast<std::size_t>(b) + 1];
          pidx = H.pair_index(static_cast<int>(a), b);
        }
        const double* xj = &P[j * static_cast<std::size_t>(d)];
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += (xi[k] - xj[k]) * (xi[k] - xj[k]);
        ++H.pairs[pidx];
        if (s == 0.0) {
          ++H.zeros[pidx];
          continue;
        }
        const double pos = scale * std::log10(s) - H.log_lo * bpd;
        auto bin = static_cast<std::ptrdiff_t>(std::floor(pos));
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(H.nbins) - 1);
        ++H.counts[pidx][static_cast<std::size_t>(bin)];
      }
    }
    return 0;
  });
  return H;
}

struct Cumulative {
  std::vector<double> C;  // C[k] = fraction of pairs with distance < edge k
};

Cumulative cumulative(const PairHistogram& H, int skip_block) {
  std::vector<std::uint64_t> tot(H.nbins, 0);
  std::uint64_t zeros = 0, pairs = 0;
  for (int a = 0; a < H.B; ++a)
    for (int b = a; b < H.B; ++b) {
      if (a == skip_block || b == skip_block) continue;
      const auto p = H.pair_index(a, b);
      for (std::size_t k = 0; k < H.nbins; ++k) tot[k] += H.counts[p][k];
      zeros += H.zeros[p];
      pairs += H.pairs[p];
    }
  Cumulative c;
  c.C.resize(H.nbins + 1);
  double acc = static_cast<double>(zeros);
  for (std::size_t k = 0; k <= H.nbins; ++k) {
    c.C[k] = pairs > 0 ? acc / static_cast<double>(pairs) : 0.0;
    if (k < H.nbins) acc += static_cast<double>(tot[k]);
  }
  return c;
}

struct SlopeFit {
  double slope = 0.0, r2 = 0.0;
  std::vector<double> lr, lc;
};

SlopeFit fit_at(const PairHistogram& H, const Cumulative& cum, const std::vector<std::size_t>& edges) {
  SlopeFit f;
  for (std::size_t k : edges) {
    if (cum.C[k] <= 0.0) continue;
    f.lr.push_back(std::log(H.edge(k)));
    f.lc.push_back(std::log(cum.C[k]));
  }
  if (f.lr.size() < 2) return f;
  const auto lf = stats::linear_fit(f.lr, f.lc);
  f.slope = lf.slope;
  f.r2 = lf.r2;
  return f;
}

}  // namespace

DimensionFit correlation_dimension(const Eigen::MatrixXd& X, const RangePolicy& pol,
                                   CorrelationCurve* curve) {
  DimensionFit out;
  const std::size_t n = static_cast<std::size_t>(X.cols());
  out.n_points = n;
  if (n < 2) throw std::invalid_argument("correlation_dimension: need at least two points");
  if (!X.allFinite()) throw NumericalError("correlation_dimension: non-finite point");
  // Pass 1: extent.
  double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
  const Eigen::MatrixXd Xt = X;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = (Xt.col(static_cast<Eigen::Index>(i)) - Xt.col(static_cast<Eigen::Index>(j))).squaredNorm();
      if (s > 0.0) smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
  if (std::sqrt(smax) < 1e-12) {
    out.degenerate = true;
    out.accepted = true;
    return out;
  }
  const int B = static_cast<int>(std::max<std::size_t>(2, std::min(pol.jackknife_blocks, n)));
  const auto H = build_histogram(X, B, pol.bins_per_decade, std::sqrt(smin), std::sqrt(smax));
  const auto full = cumulative(H, -1);
  auto quantile_edge = [&](double q) {
    std::size_t k = 0;
    while (k < full.C.size() - 1 && full.C[k] < q) ++k;
    return k;
  };
  const std::size_t klo = quantile_edge(pol.lo_quantile), khi = quantile_edge(pol.hi_quantile);
  out.r_lo = H.edge(klo);
  out.r_hi = H.edge(khi);
  const double decades = std::log10(out.r_hi / out.r_lo);
  const int npts = std::max(pol.min_points, static_cast<int>(std::ceil(pol.points_per_decade * decades)) + 1);
  std::vector<std::size_t> edges;
  for (int i = 0; i < npts; ++i) {
    const double t = static_cast<double>(i) / (npts - 1);
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(klo) * (1 - t) + static_cast<double>(khi) * t));
    if (edges.empty() || edges.back() != k) edges.push_back(k);
  }
  const auto f = fit_at(H, full, edges);
  out.estimate = f.slope;
  out.fit_r2 = f.r2;
  out.log_r = f.lr;
  out.log_C = f.lc;
  out.accepted = static_cast<int>(f.lr.size()) >= pol.min_points && f.r2 >= pol.min_r2;
  std::vector<double> jk;
  for (int b = 0; b < B; ++b) jk.push_back(fit_at(H, cumulative(H, b), edges).slope);
  const double mean = std::accumulate(jk.begin(), jk.end(), 0.0) / B;
  double ss = 0.0;
  for (double v : jk) ss += (v - mean) * (v - mean);
  out.ci_halfwidth = 1.96 * std::sqrt((B - 1.0) / B * ss);
  if (curve) {
    curve->log_r.clear();
    curve->log_C.clear();
    const std::size_t stride = static_cast<std::size_t>(std::max(1, pol.bins_per_decade / 100));
    for (std::size_t k = 0; k < full.C.size(); k += stride)
      if (full.C[k] > 0.0) {
        curve->log_r.push_back(std::log(H.edge(k)));
        curve->log_C.push_back(std::log(full.C[k]));
      }
  }
  return out;
}

DimensionFit correlation_dimension(const EmpiricalMeasure& cloud, const RangePolicy& pol,
                                   CorrelationCurve* curve) {
  return correlation_dimension(cloud.points, pol, curve);
}

double pairwise_distance_quantile(const Eigen::MatrixXd& X, double q) {
  const Eigen::Index n = std::min<Eigen::Index>(X.cols(), 3000);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((X.col(i) - X.col(j)).norm());
  if (d.empty()) return 0.0;
  return stats::quantile(std::move(d), q);
}

EquilibriumReport equilibrium_report(const SimConfig& cfg, const std::vector<double>& T_list,
                                     std::size_t n_samples, const RangePolicy& pol,
                                     std::vector<EmpiricalMeasure>* clouds_out,
                                     std::vector<CorrelationCurve>* curves) {
  EquilibriumReport rep;
  rep.model_fingerprint = cfg.model.fingerprint();
  rep.spectrum = closed_form_spectrum(cfg.model);
  const auto ld = lyapunov_dimension_detail(rep.spectrum.exponents, rep.spectrum.multiplicities);
  rep.D_closed = ld.D;
  rep.boundary = ld.boundary;
  rep.dirac_prediction = rep.spectrum.exponents.front() <= 0.0;
  rep.T = T_list;
  const auto clouds = pullback_clouds(cfg, n_samples, T_list);
  for (const auto& cl : clouds) rep.diameter_q95.push_back(pairwise_distance_quantile(cl.points, 0.95));
  bool decreasing = rep.diameter_q95.size() >= 2;
  for (std::size_t i = 1; i < rep.diameter_q95.size(); ++i)
    decreasing = decreasing && rep.diameter_q95[i] < rep.diameter_q95[i - 1];
  rep.diameter_trend = decreasing ? "decreasing" : "not decreasing";
  if (clouds_out) *clouds_out = clouds;
  if (rep.dirac_prediction) return rep;
  for (const auto& cl : clouds) {
    CorrelationCurve cc;
    rep.fits.push_back(correlation_dimension(cl, pol, curves ? &cc : nullptr));
    if (curves) curves->push_back(std::move(cc));
  }
  if (rep.fits.size() >= 2) {
    const auto& a = rep.fits[rep.fits.size() - 2];
    const auto& b = rep.fits.back();
    const double gap = std::abs(a.estimate - b.estimate);
    rep.stabilized = gap <= a.ci_halfwidth && gap <= b.ci_halfwidth;
  }
  return rep;
}

}  // namespace iouf
