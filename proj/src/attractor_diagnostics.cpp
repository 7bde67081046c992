#include "iouf/attractor_diagnostics.hpp"

#include "iouf/errors.hpp"
#include "iouf/parallel.hpp"
#include "iouf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace iouf {

namespace {

constexpr std::uint64_t kDoublingOffset = 1'000'000'000ULL;

bool within_two_se(double a, double sa, double b, double sb) {
  const double slack = 1e-12 * std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) <= 2.0 * std::sqrt(sa * sa + sb * sb) + slack;
}

double binomial_se(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

void finish_check(BoundCheck& bc) {
  bc.margin = bc.rhs_theoretical - bc.lhs_empirical;
  bc.satisfied = !bc.applicable || bc.lhs_empirical <= bc.rhs_theoretical + 3.0 * bc.lhs_se;
}

}  // namespace

Eigen::MatrixXd ball_points(int d, double R, std::size_t shell, std::size_t interior, RngStream& rot) {
  if (shell < 1) throw std::invalid_argument("ball_points: need at least one shell point");
  const auto ns = static_cast<Eigen::Index>(shell);
  const auto ni = static_cast<Eigen::Index>(interior);
  Eigen::MatrixXd P(d, ns + ni);
  if (d == 2) {
    const double theta = 2.0 * std::numbers::pi * rot.uniform();
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (Eigen::Index k = 0; k < ns; ++k) {
      const double a = theta + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(ns);
      P(0, k) = R * std::cos(a);
      P(1, k) = R * std::sin(a);
    }
    for (Eigen::Index k = 0; k < ni; ++k) {
      const double rr = R * std::sqrt((static_cast<double>(k) + 0.5) / static_cast<double>(ni));
      const double a = theta + golden * static_cast<double>(k);
      P(0, ns + k) = rr * std::cos(a);
      P(1, ns + k) = rr * std::sin(a);
    }
    return P;
  }
  for (Eigen::Index k = 0; k < P.cols(); ++k) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rot.normal();
    v.normalize();
    const double rr = k < ns ? R : R * std::pow(rot.uniform(), 1.0 / d);
    P.col(k) = rr * v;
  }
  return P;
}

std::size_t shell_count(double R, double ell, std::size_t resolution, double per_length) {
  const double by_length = std::ceil(per_length * 2.0 * std::numbers::pi * R / ell);
  return std::max(resolution, static_cast<std::size_t>(std::max(by_length, 0.0)));
}

std::vector<Eigen::MatrixXd> evolve_cloud(const CorrelationModel& model,
                                          const Eigen::MatrixXd& points,
                                          const std::vector<double>& t_grid,
                                          const DiagnosticOptions& opt, std::uint64_t replica) {
  SimConfig cfg(model);
  cfg.dt = opt.dt;
  cfg.override_dt_guard = opt.override_dt_guard;
  cfg.scheme = opt.scheme;
  cfg.seed = opt.seed;
  cfg.replica_index = replica;
  cfg.noise_amplitude = opt.noise_amplitude;
  FlowIntegrator integ(cfg);
  FlowState s = integ.initial_state(points);
  std::vector<Eigen::MatrixXd> out;
  for (double t : t_grid) {
    const auto target = static_cast<std::uint64_t>(std::llround(t / opt.dt));
    if (target < s.steps) throw std::invalid_argument("t_grid must be ascending");
    while (s.steps < target) integ.step(s);
    out.push_back(s.positions);
  }
  return out;
}

namespace {

struct SupRun {
  std::vector<double> mean, se, origin;
};

SupRun sup_runs(const CorrelationModel& model, double R, const std::vector<double>& t_grid,
                std::size_t resolution, const DiagnosticOptions& opt, std::uint64_t offset) {
  const int d = model.dim();
  auto per = parallel_map(opt.replicas, [&](std::size_t r) {
    const std::uint64_t rep = offset + r;
    RngStream rot(opt.seed, rep, StreamChannel::Rotation);
    const std::size_t shell = shell_count(R, model.length_scale(), resolution, opt.shell_per_length);
    Eigen::MatrixXd B = ball_points(d, R, shell, resolution, rot);
    Eigen::MatrixXd P(d, B.cols() + 1);
    P.leftCols(B.cols()) = B;
    P.col(B.cols()).setZero();
    const auto frames = evolve_cloud(model, P, t_grid, opt, rep);
    std::vector<std::pair<double, double>> v;
    for (const auto& F : frames) {
      const Eigen::VectorXd norms = F.colwise().norm();
      v.emplace_back(norms.maxCoeff(), norms(norms.size() - 1));
    }
    return v;
  });
  SupRun out;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    std::vector<double> sups, orig;
    for (const auto& p : per) {
      sups.push_back(p[k].first);
      orig.push_back(p[k].second);
    }
    const auto ms = stats::mean_se(sups);
    out.mean.push_back(ms.mean);
    out.se.push_back(ms.se);
    out.origin.push_back(stats::mean_se(orig).mean);
  }
  return out;
}

}  // namespace

std::vector<SupEstimate> sup_norm_estimate(const CorrelationModel& model, double R,
                                           const std::vector<double>& t_grid,
                                           std::size_t resolution, const DiagnosticOptions& opt) {
  if (!(R > 0.0)) throw std::invalid_argument("sup_norm_estimate: R must be positive");
  const auto base = sup_runs(model, R, t_grid, resolution, opt, opt.replica_offset);
  SupRun dbl;
  if (opt.doubling_test)
    dbl = sup_runs(model, R, t_grid, 2 * resolution, opt, opt.replica_offset + kDoublingOffset);
  std::vector<SupEstimate> out;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    SupEstimate e;
    e.R = R;
    e.t = t_grid[k];
    e.mean_sup = base.mean[k];
    e.se = base.se[k];
    e.origin_norm = base.origin[k];
    e.n_shell = shell_count(R, model.length_scale(), resolution, opt.shell_per_length) + resolution + 1;
    e.replicas = opt.replicas;
    if (opt.doubling_test) {
      e.mean_sup_doubled = dbl.mean[k];
      e.se_doubled = dbl.se[k];
      e.resolution_stable = within_two_se(e.mean_sup, e.se, e.mean_sup_doubled, e.se_doubled);
    }
    out.push_back(e);
  }
  return out;
}

double ou_tail_k(const CorrelationModel& model) {
  const double c = model.drift();
  return std::min(c / 16.0, 3.0 * c / (4.0 * (model.dim() - 1)));
}

double ou_tail_R0(const CorrelationModel& model, double gamma0) {
  const double c = model.drift();
  const int d = model.dim();
  const double s2pi = std::sqrt(2.0 * std::numbers::pi);
  const double r1 = 2.0 * 2.0 / (s2pi * std::sqrt(2.0 * c) * gamma0 / 4.0);
  const double r2 = 2.0 * 2.0 * (d - 1) / (s2pi * gamma0 * std::sqrt(6.0 * c / (4.0 * (d - 1))));
  return std::max(r1, r2);
}

std::vector<BoundCheck> ou_tail_check(const CorrelationModel& model,
                                      const std::vector<double>& R_list,
                                      const std::vector<double>& gamma_list, double t,
                                      std::size_t draws, std::uint64_t seed) {
  const double c = model.drift();
  const int d = model.dim();
  const double k = ou_tail_k(model);
  const double mean_factor = std::exp(-c * t);
  const double sd = std::sqrt(-std::expm1(-2.0 * c * t) / (2.0 * c));
  std::vector<BoundCheck> out;
  std::uint64_t idx = 0;
  for (double R : R_list)
    for (double g : gamma_list) {
      BoundCheck bc;
      bc.name = "ou_tail";
      bc.params = {{"R", R}, {"gamma", g}, {"t", t}, {"k", k}, {"R0", ou_tail_R0(model, g)},
                   {"draws", static_cast<double>(draws)}};
      bc.rhs_theoretical = 2.0 * std::exp(-k * g * g * R * R);
      bc.params["displayed_bound"] = std::exp(-k * g * g * R * R);
      bc.applicable = mean_factor <= g / 4.0;
      if (!bc.applicable) bc.note = "not applicable: exp(-c t) > gamma / 4";
      RngStream rng(seed, idx++, StreamChannel::Auxiliary);
      std::size_t hits = 0;
      for (std::size_t n = 0; n < draws; ++n) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
          const double xi = (i == 0 ? R * mean_factor : 0.0) + sd * rng.normal();
          s += xi * xi;
        }
        if (s > g * g * R * R) ++hits;
      }
      bc.lhs_empirical = static_cast<double>(hits) / static_cast<double>(draws);
      bc.lhs_se = binomial_se(bc.lhs_empirical, draws);
      finish_check(bc);
      bc.params["displayed_margin"] = bc.params["displayed_bound"] - bc.lhs_empirical;
      out.push_back(bc);
    }
  return out;
}

double brownian_max_sf(double u) { return u <= 0.0 ? 1.0 : 2.0 * stats::normal_sf(u); }

double brownian_max_tail_bound(double c, double t) {
  return (1.0 / c) * std::sqrt(2.0 * t / std::numbers::pi) * std::exp(-c * c / (2.0 * t));
}

std::vector<double> sample_brownian_maxima(double t, std::size_t n_steps, std::size_t paths,
                                           RngStream& rng) {
  const double h = t / static_cast<double>(n_steps);
  const double sh = std::sqrt(h);
  std::vector<double> out(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    double a = 0.0, m = 0.0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double b = a + sh * rng.normal();
      const double bridge = 0.5 * (a + b + std::sqrt((b - a) * (b - a) - 2.0 * h * std::log(rng.uniform())));
      m = std::max(m, bridge);
      a = b;
    }
    out[p] = m;
  }
  return out;
}

BrownianMaxReport brownian_max_check(const std::vector<std::pair<double, double>>& c_t_pairs,
                                     std::size_t paths, std::size_t n_steps, std::uint64_t seed) {
  BrownianMaxReport rep;
  RngStream rng(seed, 0, StreamChannel::Auxiliary);
  const auto m1 = sample_brownian_maxima(1.0, n_steps, paths, rng);
  rep.ks_statistic = stats::ks_one_sample(m1, [](double x) { return x <= 0.0 ? 0.0 : std::erf(x / std::sqrt(2.0)); });
  rep.ks_critical = stats::ks_critical(0.01, paths);
  rep.ks_pass = rep.ks_statistic <= rep.ks_critical;
  std::uint64_t idx = 1;
  for (const auto& [c, t] : c_t_pairs) {
    RngStream r2(seed, idx++, StreamChannel::Auxiliary);
    const auto m = sample_brownian_maxima(t, n_steps, paths, r2);
    BoundCheck bc;
    bc.name = "brownian_max_tail";
    bc.params = {{"c", c}, {"t", t}, {"paths", static_cast<double>(paths)}};
    bc.lhs_empirical = static_cast<double>(std::count_if(m.begin(), m.end(), [c](double v) { return v >= c; })) /
                       static_cast<double>(paths);
    bc.lhs_se = binomial_se(bc.lhs_empirical, paths);
    bc.rhs_theoretical = brownian_max_tail_bound(c, t);
    bc.params["exact"] = brownian_max_sf(c / std::sqrt(t));
    finish_check(bc);
    rep.tail_checks.push_back(bc);
  }
  return rep;
}

std::vector<BoundCheck> pairwise_growth_check(const CorrelationModel& model, double separation,
                                              double t, const std::vector<double>& z_list,
                                              const DiagnosticOptions& opt) {
  const int d = model.dim();
  const auto pb = sup_ratio_constants(model);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, 2);
  P(0, 0) = 0.5 * separation;
  P(0, 1) = -0.5 * separation;
  const auto nsteps = static_cast<std::uint64_t>(std::llround(t / opt.dt));
  const auto maxima = parallel_map(opt.replicas, [&](std::size_t r) {
    SimConfig cfg(model);
    cfg.dt = opt.dt;
    cfg.override_dt_guard = opt.override_dt_guard;
    cfg.scheme = opt.scheme;
    cfg.seed = opt.seed;
    cfg.replica_index = opt.replica_offset + r;
    cfg.noise_amplitude = opt.noise_amplitude;
    FlowIntegrator integ(cfg);
    FlowState s = integ.initial_state(P);
    double m = 1.0;
    for (std::uint64_t k = 0; k < nsteps; ++k) {
      integ.step(s);
      m = std::max(m, (s.positions.col(0) - s.positions.col(1)).norm() / separation);
    }
    return m;
  });
  std::vector<BoundCheck> out;
  for (double z : z_list) {
    BoundCheck bc;
    bc.name = "pairwise_growth";
    const double u = (std::log(z) - pb.lambda_bound * t) / (pb.sigma * std::sqrt(t));
    bc.params = {{"z", z}, {"t", t}, {"separation", separation}, {"sigma", pb.sigma},
                 {"lambda_bound", pb.lambda_bound}, {"u", u},
                 {"replicas", static_cast<double>(opt.replicas)}};
    bc.rhs_theoretical = brownian_max_sf(u);
    const auto hits = std::count_if(maxima.begin(), maxima.end(), [z](double m) { return m > z; });
    bc.lhs_empirical = static_cast<double>(hits) / static_cast<double>(maxima.size());
    bc.lhs_se = binomial_se(bc.lhs_empirical, maxima.size());
    finish_check(bc);
    out.push_back(bc);
  }
  return out;
}

namespace {

double cloud_diameter(const Eigen::MatrixXd& F) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < F.cols(); ++i)
    for (Eigen::Index j = i + 1; j < F.cols(); ++j) best = std::max(best, (F.col(i) - F.col(j)).squaredNorm());
  return std::sqrt(best);
}

std::vector<double> diameters(const CorrelationModel& model, double t, std::size_t resolution,
                              const DiagnosticOptions& opt, std::uint64_t offset) {
  return parallel_map(opt.replicas, [&](std::size_t r) {
    const std::uint64_t rep = offset + r;
    RngStream rot(opt.seed, rep, StreamChannel::Rotation);
    const double ell = model.length_scale();
    const Eigen::MatrixXd B =
        ball_points(model.dim(), ell, shell_count(ell, ell, resolution, opt.shell_per_length), resolution, rot);
    return cloud_diameter(evolve_cloud(model, B, {t}, opt, rep).back());
  });
}

}  // namespace

DiameterTail diameter_tail(const CorrelationModel& model, double t, const std::vector<double>& R_list,
                           std::size_t resolution, const DiagnosticOptions& opt) {
  DiameterTail out;
  out.R = R_list;
  const auto diam = diameters(model, t, resolution, opt, opt.replica_offset);
  const double n = static_cast<double>(diam.size());
  for (double R : R_list) {
    const double p = static_cast<double>(std::count_if(diam.begin(), diam.end(), [R](double v) { return v >= R; })) / n;
    out.tail.push_back(p);
    out.tail_se.push_back(binomial_se(p, diam.size()));
  }
  for (std::size_t i = 1; i < out.tail.size(); ++i)
    if (R_list[i] > R_list[i - 1] && out.tail[i] > out.tail[i - 1]) out.monotone = false;
  // The fit only sees the tail (p <= 1/2); in the bulk the estimate says
  // nothing and P ~ 1 bends the ln^2 R line.  The envelope covers every point.
  std::vector<double> xs, ys, ex, ey;
  for (std::size_t i = 0; i < R_list.size(); ++i)
    if (out.tail[i] > 0.0 && R_list[i] > 1.0) {
      ex.push_back(std::pow(std::log(R_list[i]), 2));
      ey.push_back(std::log(out.tail[i]));
      if (out.tail[i] <= 0.5) {
        xs.push_back(ex.back());
        ys.push_back(ey.back());
      }
    }
  out.fit_points = xs.size();
  out.vacuous = ex.empty();
  if (xs.size() >= 2) {
    const auto lf = stats::linear_fit(xs, ys);
    out.c2 = -lf.slope;
    out.fit_r2 = lf.r2;
    out.positive_fit = out.c2 > 0.0 && lf.r2 >= 0.9 && xs.size() >= 3;
    // smallest c1 making c1 exp(-c2 ln^2 R) an envelope of the empirical tail
    for (std::size_t i = 0; i < ex.size(); ++i) out.c1 = std::max(out.c1, std::exp(ey[i] + out.c2 * ex[i]));
  }
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    BoundCheck bc;
    bc.name = "diameter_tail";
    bc.params = {{"R", R_list[i]}, {"t", t}, {"c1", out.c1}, {"c2", out.c2}};
    bc.lhs_empirical = out.tail[i];
    bc.lhs_se = out.tail_se[i];
    if (out.vacuous) {
      bc.rhs_theoretical = 0.0;
      bc.note = "vacuously satisfied: no exceedance";
      bc.applicable = false;
    } else if (out.c2 > 0.0) {
      bc.rhs_theoretical = out.c1 * std::exp(-out.c2 * std::pow(std::log(R_list[i]), 2));
      bc.note = "constants fitted (existence check)";
    } else {
      bc.applicable = false;
      bc.note = "no positive c2 fit";
    }
    finish_check(bc);
    if (!out.vacuous && out.c2 <= 0.0) bc.satisfied = false;
    out.checks.push_back(bc);
  }
  if (opt.doubling_test) {
    const auto dd = diameters(model, t, 2 * resolution, opt, opt.replica_offset + kDoublingOffset);
    const auto a = stats::mean_se(diam), b = stats::mean_se(dd);
    out.resolution_stable = within_two_se(a.mean, a.se, b.mean, b.se);
  }
  return out;
}

ContractionReport contraction_factor(const CorrelationModel& model, double t0,
                                     const std::vector<double>& R_list, std::size_t resolution,
                                     std::size_t iterations, const DiagnosticOptions& opt) {
  if (!(t0 > 0.0)) throw std::invalid_argument("contraction_factor: t0 must be positive");
  if (R_list.empty()) throw std::invalid_argument("contraction_factor: empty R_list");
  ContractionReport rep;
  rep.t0 = t0;
  rep.R = R_list;
  rep.drift_factor = std::exp(-model.drift() * t0);
  std::vector<double> grid;
  for (std::size_t n = 0; n <= std::max<std::size_t>(iterations, 1); ++n) grid.push_back(t0 * static_cast<double>(n));
  DiagnosticOptions o = opt;
  o.doubling_test = false;
  // Same cloud size at every R, so the noise part of delta_hat is ~ A / R.
  o.shell_per_length = 0.0;
  std::vector<std::vector<SupEstimate>> est;
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    o.replica_offset = opt.replica_offset + 10'000'000ULL * i;
    est.push_back(sup_norm_estimate(model, R_list[i], grid, resolution, o));
    rep.delta_hat.push_back(est.back()[1].mean_sup / R_list[i]);
    rep.delta_se.push_back(est.back()[1].se / R_list[i]);
  }
  std::vector<std::size_t> idx(R_list.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return R_list[a] < R_list[b]; });
  for (std::size_t s = 0; s < idx.size(); ++s) {
    double worst = 0.0;
    for (std::size_t u = s; u < idx.size(); ++u) worst = std::max(worst, rep.delta_hat[idx[u]]);
    if (worst < 1.0) {
      rep.exists = true;
      rep.R0 = R_list[idx[s]];
      rep.delta = worst;
      break;
    }
  }
  // Weighted fit of delta_hat against 1/R over the larger half of the radii.
  const std::size_t first = idx.size() >= 6 ? idx.size() / 2 : 0;
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t u = first; u < idx.size(); ++u) {
    const std::size_t i = idx[u];
    const double w = 1.0 / std::max(rep.delta_se[i] * rep.delta_se[i], 1e-300);
    const double x = 1.0 / R_list[i], y = rep.delta_hat[i];
    sw += w;
    swx += w * x;
    swy += w * y;
    swxx += w * x * x;
    swxy += w * x * y;
  }
  const double det = sw * swxx - swx * swx;
  if (idx.size() - first >= 2 && det > 0.0) {
    rep.fit_slope = (sw * swxy - swx * swy) / det;
    rep.fit_intercept = (swxx * swy - swx * swxy) / det;
    rep.fit_intercept_se = std::sqrt(swxx / det);
  }
  const auto& big = est[idx.back()];
  const double Rb = R_list[idx.back()];
  for (std::size_t n = 0; n < big.size(); ++n) {
    rep.iter_simulated.push_back(big[n].mean_sup);
    rep.iter_se.push_back(big[n].se);
    if (rep.exists)
      rep.iter_bound.push_back(std::pow(rep.delta, static_cast<double>(n)) * std::max(Rb, rep.R0) +
                               rep.R0 * rep.delta / (1.0 - rep.delta));
  }
  return rep;
}

namespace {

struct ShellStats {
  double ratio, ratio_se, norm_ratio, norm_ratio_se;
};

ShellStats shell_stats(const CorrelationModel& model, double R, std::size_t count,
                       const DiagnosticOptions& opt, std::uint64_t offset) {
  const double e = std::exp(-model.drift());
  auto per = parallel_map(opt.replicas, [&](std::size_t r) {
    const std::uint64_t rep = offset + r;
    RngStream rot(opt.seed, rep, StreamChannel::Rotation);
    const Eigen::MatrixXd S = ball_points(model.dim(), R, count, 0, rot);
    const Eigen::MatrixXd F = evolve_cloud(model, S, {1.0}, opt, rep).back();
    double a = 0.0, b = 0.0;
    for (Eigen::Index k = 0; k < S.cols(); ++k) {
      const double nx = S.col(k).norm();
      a = std::max(a, (F.col(k) - e * S.col(k)).norm() / nx);
      b = std::max(b, F.col(k).norm() / nx);
    }
    return std::make_pair(a, b);
  });
  std::vector<double> a, b;
  for (const auto& p : per) {
    a.push_back(p.first);
    b.push_back(p.second);
  }
  const auto ma = stats::mean_se(a), mb = stats::mean_se(b);
  return {ma.mean, ma.se, mb.mean, mb.se};
}

}  // namespace

std::vector<RegularityPoint> spatial_regularity_ratio(const CorrelationModel& model,
                                                      const std::vector<double>& R_list,
                                                      std::size_t shell_points,
                                                      const DiagnosticOptions& opt) {
  std::vector<RegularityPoint> out;
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    const std::uint64_t off = opt.replica_offset + 10'000'000ULL * i;
    const auto s = shell_stats(model, R_list[i], shell_points, opt, off);
    RegularityPoint p;
    p.R = R_list[i];
    p.ratio = s.ratio;
    p.ratio_se = s.ratio_se;
    p.norm_ratio = s.norm_ratio;
    p.norm_ratio_se = s.norm_ratio_se;
    p.shell_points = shell_points;
    if (opt.doubling_test) {
      const auto d = shell_stats(model, R_list[i], 2 * shell_points, opt, off + kDoublingOffset);
      p.ratio_doubled = d.ratio;
      p.ratio_doubled_se = d.ratio_se;
      p.resolution_stable = within_two_se(p.ratio, p.ratio_se, d.ratio, d.ratio_se);
    }
    out.push_back(p);
  }
  return out;
}

namespace {

std::vector<double> squeeze_runs(const CorrelationModel& model, double r, double eps,
                                 const std::vector<double>& t_grid, std::size_t resolution,
                                 const DiagnosticOptions& opt, std::uint64_t offset) {
  auto per = parallel_map(opt.replicas, [&](std::size_t k) {
    const std::uint64_t rep = offset + k;
    RngStream rot(opt.seed, rep, StreamChannel::Rotation);
    const std::size_t shell = shell_count(r + eps, model.length_scale(), resolution, opt.shell_per_length);
    const Eigen::MatrixXd S = ball_points(model.dim(), r + eps, shell, 0, rot);
    const auto frames = evolve_cloud(model, S, t_grid, opt, rep);
    std::vector<double> hit;
    for (const auto& F : frames) hit.push_back(F.colwise().norm().maxCoeff() < r - eps ? 1.0 : 0.0);
    return hit;
  });
  std::vector<double> freq(t_grid.size(), 0.0);
  for (const auto& h : per)
    for (std::size_t i = 0; i < h.size(); ++i) freq[i] += h[i];
  for (double& f : freq) f /= static_cast<double>(per.size());
  return freq;
}

}  // namespace

std::vector<SqueezePoint> squeezing_frequency(const CorrelationModel& model, double r, double eps,
                                              const std::vector<double>& t_grid,
                                              std::size_t resolution, const DiagnosticOptions& opt) {
  if (!(eps > 0.0 && eps < r)) throw std::invalid_argument("squeezing_frequency: need 0 < eps < r");
  const auto f = squeeze_runs(model, r, eps, t_grid, resolution, opt, opt.replica_offset);
  std::vector<double> fd;
  if (opt.doubling_test)
    fd = squeeze_runs(model, r, eps, t_grid, 2 * resolution, opt, opt.replica_offset + kDoublingOffset);
  std::vector<SqueezePoint> out;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    SqueezePoint p;
    p.t = t_grid[i];
    p.frequency = f[i];
    p.se = binomial_se(f[i], opt.replicas);
    if (opt.doubling_test) {
      p.frequency_doubled = fd[i];
      p.resolution_stable = within_two_se(f[i], p.se, fd[i], binomial_se(fd[i], opt.replicas));
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace iouf
