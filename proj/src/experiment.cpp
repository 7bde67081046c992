#include "iouf/experiment.hpp"

#include "iouf/attractor_diagnostics.hpp"
#include "iouf/equilibrium_dimension.hpp"
#include "iouf/errors.hpp"
#include "iouf/flow_integrator.hpp"
#include "iouf/parallel.hpp"
#include "iouf/radial_diffusion.hpp"
#include "iouf/rng.hpp"
#include "iouf/spectrum.hpp"
#include "iouf/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace iouf {

using json = nlohmann::ordered_json;

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      {"command", "validate-model", "experiment to run (the CLI subcommand overrides it)"},
      {"seed", "1", "master seed"},
      {"threads", "0", "worker threads, 0 = hardware concurrency"},
      {"model.family", "gaussian_mixture", "gaussian_potential | gaussian_solenoidal | gaussian_mixture"},
      {"model.alpha", "0", "potential weight of the mixture"},
      {"model.ell", "1", "correlation length"},
      {"model.d", "2", "dimension"},
      {"model.c", "0.5", "restoring drift"},
      {"model.amplitude", "1", "noise amplitude multiplying the field"},
      {"numerics.dt", "0.001", "time step of the tangent-flow runs"},
      {"numerics.T", "200", "horizon of the spectrum runs"},
      {"numerics.n", "10000", "pullback cloud size"},
      {"numerics.replicas", "20", "independent replicas (spectrum, attractor, squeeze)"},
      {"numerics.scheme", "exponential_euler", "exponential_euler | euler_maruyama"},
      {"numerics.sampler", "auto", "auto | dense | series"},
      {"numerics.reortho_stride", "10", "steps between QR re-orthonormalizations"},
      {"numerics.batches", "10", "batch means per replica"},
      {"validate.points", "64", "random points in the PSD check"},
      {"validate.radius", "3", "radius (in l) of the PSD point cloud"},
      {"validate.profile_points", "201", "rows of the correlation profile table"},
      {"validate.profile_rmax", "6", "largest r (in l) of the profile table"},
      {"radial.r0", "0.2", "starting distance (in l)"},
      {"radial.paths", "200", "independent distance paths"},
      {"radial.dt", "0.001", "radial Euler step"},
      {"radial.T_transient", "100", "horizon when lambda_1 < 0"},
      {"radial.T_recurrent", "1000", "horizon when lambda_1 >= 0"},
      {"radial.occupation_T", "20000", "length of the occupation path (normalizable case)"},
      {"radial.occupation_dt", "0.002", "step of the occupation path"},
      {"radial.burn_in", "100", "discarded initial time of the occupation path"},
      {"radial.grid_min", "0.01", "smallest r (in l) of the profile table"},
      {"radial.grid_max", "10", "largest r (in l) of the profile table"},
      {"radial.grid_points", "200", "rows of the profile table"},
      {"radial.residual_min", "0.2", "generator residual range start (in l)"},
      {"radial.residual_max", "5", "generator residual range end (in l)"},
      {"radial.residual_points", "50", "generator residual nodes"},
      {"radial.slope_rmin", "0.001", "small-r slope fit start (in l)"},
      {"radial.slope_rmax", "0.01", "small-r slope fit end (in l)"},
      {"pullback.T_list", "5,10,20", "pullback horizons (ascending)"},
      {"pullback.dt", "0.005", "step of the pullback run"},
      {"pullback.override_dt_guard", "true", "allow dt above the tangent-flow guard (positions only)"},
      {"pullback.calibration_n", "10000", "points of the segment and disk oracles"},
      {"pullback.dump_cloud", "true", "write the last snapshot as CSV"},
      {"attractor.sections", "sup,ou,brownian,pairwise,diameter,contraction,regularity", "diagnostics to run"},
      {"attractor.dt", "0.01", "step of the cloud runs (positions only)"},
      {"attractor.doubling", "true", "resolution doubling test"},
      {"attractor.resolution", "25", "base shell and interior point count"},
      {"attractor.shell_per_length", "0.5", "extra shell points per l of circumference"},
      {"attractor.R_list", "5,10,20", "ball radii (in l) of the sup curves"},
      {"attractor.t_grid", "0,1,5,10,20", "times of the sup curves"},
      {"attractor.ou_R_list", "1,2,3,5", "OU tail radii (in l)"},
      {"attractor.ou_gamma_list", "1,2,4", "OU tail gamma values"},
      {"attractor.ou_t", "10", "OU tail time"},
      {"attractor.ou_draws", "20000", "exact OU draws per check"},
      {"attractor.bm_c_list", "0.5,1,1.5,2,2.5,1,2,3,4,5", "Brownian maximum levels"},
      {"attractor.bm_t_list", "1,1,1,1,1,4,4,4,4,4", "Brownian maximum horizons"},
      {"attractor.bm_paths", "20000", "Brownian paths per pair"},
      {"attractor.bm_steps", "64", "bridge steps per path"},
      {"attractor.pairwise_separation", "1", "initial separation (in l)"},
      {"attractor.pairwise_t", "1", "pairwise horizon"},
      {"attractor.pairwise_k_list", "-1,0,0.5,1,1.5,2", "z = exp(lambda t + k sigma sqrt t)"},
      {"attractor.pairwise_replicas", "2000", "two-point replicas"},
      {"attractor.pairwise_dt", "0.005", "two-point step"},
      {"attractor.diameter_t", "1", "diameter horizon"},
      {"attractor.diameter_R_list", "2,2.5,3,3.25,3.5,3.75,4,4.25,4.5,5,5.5,6,8,12,20,50", "diameter levels"},
      {"attractor.diameter_replicas", "1000", "unit-ball replicas"},
      {"attractor.diameter_resolution", "50", "base resolution of the unit-ball cloud (25 fails the doubling test)"},
      {"attractor.contraction_t0", "2", "contraction time"},
      {"attractor.contraction_R_list", "2,5,10,20,40,80", "contraction radii (in l)"},
      {"attractor.contraction_iterations", "5", "iterations of the overlay"},
      {"attractor.regularity_R_list", "5,10,20,50", "shell radii (in l)"},
      {"attractor.regularity_shell_points", "100", "points per shell"},
      {"squeeze.r", "1", "inner radius (in l)"},
      {"squeeze.eps_list", "0.05,0.1,0.2,0.4", "eps values (in l)"},
      {"squeeze.t_grid", "1,5,10,20", "times"},
      {"squeeze.resolution", "25", "base boundary point count"},
      {"squeeze.dt", "0.01", "step"},
      {"squeeze.doubling", "true", "resolution doubling test"},
  };
  return keys;
}

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> cmds = {"validate-model", "spectrum", "radial",
                                                "pullback-dim", "attractor", "squeeze"};
  return cmds;
}

ExperimentConfig ExperimentConfig::resolve(const FlatConfig& user) {
  ExperimentConfig cfg;
  std::set<std::string> known;
  for (const auto& k : config_schema()) {
    cfg.values_.set(k.key, k.default_value);
    known.insert(k.key);
  }
  for (const auto& [k, v] : user.entries()) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    cfg.values_.set(k, v);
  }
  cfg.set("command", cfg.values_.get("command"));
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!values_.has(key)) throw ConfigError("unknown config key '" + key + "'");
  if (key == "command") {
    const auto& c = experiment_commands();
    if (std::find(c.begin(), c.end(), value) == c.end()) throw ConfigError("unknown command '" + value + "'");
    cmd_ = value;
  }
  values_.set(key, value);
}

std::string ExperimentConfig::str(const std::string& key) const { return values_.get(key); }

namespace {

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ConfigError("key '" + key + "': not a number: '" + s + "'");
  return v;
}

}  // namespace

double ExperimentConfig::num(const std::string& key) const { return parse_double(key, str(key)); }

long long ExperimentConfig::integer(const std::string& key) const {
  const std::string s = str(key);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': not an integer: '" + s + "'");
  return v;
}

bool ExperimentConfig::flag(const std::string& key) const {
  const std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + s + "'");
}

std::vector<double> ExperimentConfig::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw ConfigError("key '" + key + "': empty list entry");
    out.push_back(parse_double(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

CorrelationModel ExperimentConfig::model() const {
  const Family fam = family_from_string(str("model.family"));
  const auto d = static_cast<int>(integer("model.d"));
  const double ell = num("model.ell"), c = num("model.c");
  switch (fam) {
    case Family::GaussianPotential: return CorrelationModel::gaussian_potential(d, ell, c);
    case Family::GaussianSolenoidal: return CorrelationModel::gaussian_solenoidal(d, ell, c);
    case Family::GaussianMixture: return CorrelationModel::gaussian_mixture(num("model.alpha"), d, ell, c);
    default: throw ConfigError("family '" + str("model.family") + "' cannot be built from a config file");
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : config_schema()) out.emplace_back(k.key, values_.get(k.key));
  return out;
}

namespace {

std::size_t count_of(const ExperimentConfig& cfg, const std::string& key, long long min = 1) {
  const long long v = cfg.integer(key);
  if (v < min) throw ConfigError("key '" + key + "' must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::uint64_t seed_of(const ExperimentConfig& cfg) {
  const long long s = cfg.integer("seed");
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.echo()) j[k] = v;
  return j;
}

json model_json(const CorrelationModel& m) {
  return {{"family", to_string(m.family())}, {"d", m.dim()},          {"ell", m.length_scale()},
          {"alpha", m.alpha()},              {"c", m.drift()},        {"beta_L", m.beta_L()},
          {"beta_N", m.beta_N()},            {"fingerprint", m.fingerprint()}};
}

json check_json(const BoundCheck& b) {
  json p = json::object();
  for (const auto& [k, v] : b.params) p[k] = v;
  return {{"name", b.name},          {"lhs_empirical", b.lhs_empirical},
          {"lhs_se", b.lhs_se},      {"rhs_theoretical", b.rhs_theoretical},
          {"applicable", b.applicable}, {"satisfied", b.satisfied},
          {"margin", b.margin},      {"params", p},
          {"note", b.note}};
}

std::string params_cell(const BoundCheck& b) {
  std::string s;
  for (const auto& [k, v] : b.params) {
    if (!s.empty()) s += ';';
    s += k + "=" + format_double(v);
  }
  return s;
}

SimConfig base_sim(const ExperimentConfig& cfg, const CorrelationModel& model) {
  SimConfig sc(model);
  sc.dt = cfg.num("numerics.dt");
  sc.T = cfg.num("numerics.T");
  sc.scheme = scheme_from_string(cfg.str("numerics.scheme"));
  sc.sampler = sampler_from_string(cfg.str("numerics.sampler"));
  sc.seed = seed_of(cfg);
  sc.noise_amplitude = cfg.num("model.amplitude");
  return sc;
}

DiagnosticOptions diag_options(const ExperimentConfig& cfg, const CorrelationModel& model,
                               double dt, bool doubling) {
  DiagnosticOptions o;
  o.dt = dt;
  o.override_dt_guard = true;
  o.scheme = scheme_from_string(cfg.str("numerics.scheme"));
  o.seed = seed_of(cfg);
  o.noise_amplitude = cfg.num("model.amplitude");
  o.replicas = count_of(cfg, "numerics.replicas");
  o.doubling_test = doubling;
  (void)model;
  return o;
}

std::vector<double> scaled(std::vector<double> v, double ell) {
  for (double& x : v) x *= ell;
  return v;
}

// ---------------------------------------------------------------- commands

int run_validate(const ExperimentConfig& cfg, OutputDir& out) {
  const CorrelationModel model = cfg.model();
  const double ell = model.length_scale();
  const int d = model.dim();
  RngStream rng(seed_of(cfg), 0, StreamChannel::InitialPoints);
  const std::size_t n = count_of(cfg, "validate.points");
  const double radius = cfg.num("validate.radius") * ell;
  Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    pts.col(k) = v.normalized() * radius * std::pow(rng.uniform(), 1.0 / d);
  }
  const PsdReport psd = validate_psd(model, pts);
  const auto pb = sup_ratio_constants(model);
  const auto spec = closed_form_spectrum(model);
  const auto cls = classify(spec);

  CsvTable prof({"r", "B_L", "B_N", "dB_L", "dB_N", "d2B_L", "d2B_N"});
  const std::size_t np = count_of(cfg, "validate.profile_points", 2);
  const double rmax = cfg.num("validate.profile_rmax") * ell;
  for (std::size_t k = 0; k < np; ++k) {
    const double r = rmax * static_cast<double>(k) / static_cast<double>(np - 1);
    prof.add_row(std::vector<double>{r, model.B_L(r), model.B_N(r), model.dB_L(r), model.dB_N(r),
                                     model.d2B_L(r), model.d2B_N(r)});
  }
  out.write("model_profile.csv", prof.render(cfg.echo()));

  json j;
  j["command"] = "validate-model";
  j["config"] = config_json(cfg);
  j["model"] = model_json(model);
  j["pairwise_bound"] = {{"a", pb.a},
                         {"b_const", pb.b_const},
                         {"sigma", pb.sigma},
                         {"lambda_bound", pb.lambda_bound}};
  j["closed_form_spectrum"] = spec.exponents;
  j["multiplicities"] = spec.multiplicities;
  j["D_closed"] = lyapunov_dimension(spec);
  j["classification"] = cls.kind == Recurrence::Recurrent ? "recurrent" : "transient";
  j["psd"] = {{"ok", psd.ok}, {"min_eigenvalue", psd.min_eigenvalue}, {"size", psd.size}};
  out.write_json("model.json", j);
  return psd.ok ? kExitOk : kExitModel;
}

int run_spectrum(const ExperimentConfig& cfg, OutputDir& out) {
  const CorrelationModel model = cfg.model();
  SimConfig sc = base_sim(cfg, model);
  sc.track_jacobians = true;
  QrOptions qo;
  qo.reortho_stride = count_of(cfg, "numerics.reortho_stride");
  qo.batches = count_of(cfg, "numerics.batches");
  const auto est = estimate_spectrum_qr(sc, count_of(cfg, "numerics.replicas"), qo);
  const double a2 = sc.noise_amplitude * sc.noise_amplitude;
  const auto cf = closed_form_spectrum(a2 * model.beta_L(), a2 * model.beta_N(), model.drift(), model.dim());

  CsvTable tab({"index", "closed_form", "estimate", "stderr", "within_tolerance"});
  std::vector<bool> ok;
  for (std::size_t i = 0; i < est.exponents.size(); ++i) {
    const double tol = std::max(0.05, 0.1 * std::abs(cf.exponents[i]));
    ok.push_back(std::abs(est.exponents[i] - cf.exponents[i]) <= tol);
    tab.add_row(std::vector<std::string>{std::to_string(i + 1), format_double(cf.exponents[i]),
                                         format_double(est.exponents[i]), format_double(est.stderrs[i]),
                                         ok.back() ? "true" : "false"});
  }
  out.write("spectrum.csv", tab.render(cfg.echo()));

  json j;
  j["command"] = "spectrum";
  j["config"] = config_json(cfg);
  j["model"] = model_json(model);
  j["closed_form"] = cf.exponents;
  j["multiplicities"] = cf.multiplicities;
  j["estimates"] = est.exponents;
  j["stderr"] = est.stderrs;
  j["sum_stderr"] = est.sum_stderr;
  j["within_tolerance"] = ok;
  j["D_closed"] = lyapunov_dimension(cf);
  j["D_estimated"] = lyapunov_dimension_detail(est.exponents, std::vector<int>(est.exponents.size(), 1)).D;
  j["replicas"] = est.replicas;
  j["batches"] = est.batches;
  j["T"] = est.T;
  j["dt"] = sc.dt;
  j["reortho_stride"] = est.reortho_stride;
  out.write_json("spectrum.json", j);
  return kExitOk;
}

int run_radial(const ExperimentConfig& cfg, OutputDir& out) {
  const CorrelationModel model = cfg.model();
  const double ell = model.length_scale();
  const RadialLaw law(model, cfg.num("model.amplitude"));
  const double lambda1 = law.lambda1();
  const auto dens = law.invariant_density();
  const std::uint64_t seed = seed_of(cfg);

  // profile table
  CsvTable prof({"r", "s", "m", "m_p"});
  const double g0 = cfg.num("radial.grid_min") * ell, g1 = cfg.num("radial.grid_max") * ell;
  const std::size_t gn = count_of(cfg, "radial.grid_points", 2);
  for (std::size_t k = 0; k < gn; ++k) {
    const double r = g0 * std::pow(g1 / g0, static_cast<double>(k) / static_cast<double>(gn - 1));
    const double m = law.speed_density(r);
    prof.add_row(std::vector<double>{r, law.scale_function(r), m,
                                     dens.normalizable ? m / dens.Z : std::numeric_limits<double>::quiet_NaN()});
  }
  out.write("radial_profile.csv", prof.render(cfg.echo()));

  // independent paths
  const double r0 = cfg.num("radial.r0") * ell;
  const double dt = cfg.num("radial.dt");
  const bool transient = lambda1 < 0.0;
  const double T = transient ? cfg.num("radial.T_transient") : cfg.num("radial.T_recurrent");
  const std::size_t np = count_of(cfg, "radial.paths");
  const auto paths = parallel_map(np, [&](std::size_t p) {
    RngStream rng(seed, p, StreamChannel::Radial);
    return simulate_radial(law, r0, dt, T, rng);
  });
  CsvTable ptab({"path", "final_r", "r_min", "r_max", "reflections", "valid"});
  std::size_t below = 0, crossing = 0, invalid = 0;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& P = paths[p];
    if (P.final_r < 1e-3 * r0) ++below;
    if (P.r_min <= r0 / 10.0 && P.r_max >= 10.0 * r0) ++crossing;
    if (!P.valid) ++invalid;
    ptab.add_row(std::vector<std::string>{std::to_string(p), format_double(P.final_r), format_double(P.r_min),
                                          format_double(P.r_max), std::to_string(P.reflections),
                                          P.valid ? "true" : "false"});
  }
  out.write("radial_paths.csv", ptab.render(cfg.echo()));

  // generator residual
  const double q0 = cfg.num("radial.residual_min") * ell, q1 = cfg.num("radial.residual_max") * ell;
  const std::size_t qn = count_of(cfg, "radial.residual_points", 2);
  double worst = 0.0;
  for (std::size_t k = 0; k < qn; ++k) {
    const double r = q0 * std::pow(q1 / q0, static_cast<double>(k) / static_cast<double>(qn - 1));
    const auto res = law.generator_residual(r);
    worst = std::max(worst, std::abs(res.residual) / std::abs(res.dominant));
  }

  // small-r slope of log m
  std::vector<double> lx, ly;
  const double s0 = cfg.num("radial.slope_rmin") * ell, s1 = cfg.num("radial.slope_rmax") * ell;
  for (int k = 0; k <= 10; ++k) {
    const double r = s0 * std::pow(s1 / s0, k / 10.0);
    lx.push_back(std::log(r));
    ly.push_back(std::log(law.speed_density(r)));
  }
  const double slope = stats::linear_fit(lx, ly).slope;
  const double expo = law.speed_exponent();

  json j;
  j["command"] = "radial";
  j["config"] = config_json(cfg);
  j["model"] = model_json(model);
  j["lambda1"] = lambda1;
  j["classification"] = lambda1 < 0.0 ? "transient" : "recurrent";
  j["normalizable"] = dens.normalizable;
  j["speed_exponent"] = expo;
  j["speed_slope_fit"] = slope;
  j["speed_slope_ok"] = std::abs(slope - expo) <= 0.02 * std::max(1.0, std::abs(expo));
  j["generator_residual_max_rel"] = worst;
  j["paths"] = {{"count", np},
                {"r0", r0},
                {"T", T},
                {"fraction_below_1e-3_r0", static_cast<double>(below) / static_cast<double>(np)},
                {"fraction_crossing_r0/10_and_10r0", static_cast<double>(crossing) / static_cast<double>(np)},
                {"invalid", invalid}};
  if (dens.normalizable) {
    RadialSimOptions so;
    so.record_stride = 10;
    RngStream rng(seed, np, StreamChannel::Radial);
    const double odt = cfg.num("radial.occupation_dt");
    const auto P = simulate_radial(law, r0, odt, cfg.num("radial.occupation_T"), rng, so);
    const double burn = cfg.num("radial.burn_in");
    std::vector<double> samples;
    for (std::size_t k = 0; k < P.t.size(); ++k)
      if (P.t[k] >= burn) samples.push_back(P.r[k]);
    const double dist = stats::ks_one_sample(samples, [&](double x) { return dens.cdf_at(x); });
    j["invariant_density"] = {{"Z", dens.Z},
                              {"samples", samples.size()},
                              {"sup_cdf_distance", dist},
                              {"path_valid", P.valid}};
    std::vector<double> q = {0.1, 0.25, 0.5, 0.75, 0.9};
    CsvTable occ({"quantile", "empirical_r", "empirical_cdf_at_r", "model_cdf_at_r"});
    std::sort(samples.begin(), samples.end());
    for (double p : q) {
      const double r = stats::quantile(samples, p);
      occ.add_row(std::vector<double>{p, r, p, dens.cdf_at(r)});
    }
    out.write("radial_occupation.csv", occ.render(cfg.echo()));
  }
  out.write_json("radial.json", j);
  return kExitOk;
}

int run_pullback(const ExperimentConfig& cfg, OutputDir& out) {
  const CorrelationModel model = cfg.model();
  SimConfig sc = base_sim(cfg, model);
  sc.dt = cfg.num("pullback.dt");
  sc.override_dt_guard = cfg.flag("pullback.override_dt_guard");
  const auto T_list = cfg.list("pullback.T_list");
  const std::size_t n = count_of(cfg, "numerics.n", 2);

  // estimator calibration on a segment and a disk
  const std::size_t nc = count_of(cfg, "pullback.calibration_n", 2);
  RngStream rng(seed_of(cfg), 0, StreamChannel::Auxiliary);
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(nc));
  Eigen::MatrixXd disk(2, static_cast<Eigen::Index>(nc));
  for (Eigen::Index k = 0; k < seg.cols(); ++k) seg(0, k) = rng.uniform();
  for (Eigen::Index k = 0; k < disk.cols(); ++k) {
    const double r = std::sqrt(rng.uniform()), a = 2.0 * std::numbers::pi * rng.uniform();
    disk(0, k) = r * std::cos(a);
    disk(1, k) = r * std::sin(a);
  }
  const auto fs = correlation_dimension(seg), fd = correlation_dimension(disk);

  std::vector<EmpiricalMeasure> clouds;
  std::vector<CorrelationCurve> curves;
  const auto rep = equilibrium_report(sc, T_list, n, RangePolicy{}, &clouds, &curves);

  json j;
  j["command"] = "pullback-dim";
  j["config"] = config_json(cfg);
  j["model"] = model_json(model);
  j["calibration"] = {{"segment", fs.estimate},
                      {"segment_ok", std::abs(fs.estimate - 1.0) <= 0.05},
                      {"disk", fd.estimate},
                      {"disk_ok", std::abs(fd.estimate - 2.0) <= 0.1}};
  j["closed_form_spectrum"] = rep.spectrum.exponents;
  j["D_closed"] = rep.D_closed;
  j["dirac_prediction"] = rep.dirac_prediction;
  j["diameter_q95"] = rep.diameter_q95;
  j["diameter_trend"] = rep.diameter_trend;
  j["fits"] = json::array();
  CsvTable ctab({"T", "log_r", "log_C"});
  for (std::size_t i = 0; i < rep.fits.size(); ++i) {
    const auto& f = rep.fits[i];
    j["fits"].push_back({{"T", T_list[i]},
                         {"estimate", f.estimate},
                         {"ci_halfwidth", f.ci_halfwidth},
                         {"r_lo", f.r_lo},
                         {"r_hi", f.r_hi},
                         {"fit_r2", f.fit_r2},
                         {"accepted", f.accepted},
                         {"degenerate", f.degenerate},
                         {"relative_error", rep.D_closed > 0 ? std::abs(f.estimate - rep.D_closed) / rep.D_closed : 0.0}});
    for (std::size_t k = 0; k < curves[i].log_r.size(); ++k)
      ctab.add_row(std::vector<double>{T_list[i], curves[i].log_r[k], curves[i].log_C[k]});
  }
  j["stabilized"] = rep.stabilized;
  if (!rep.fits.empty())
    j["within_15_percent"] = std::abs(rep.fits.back().estimate - rep.D_closed) <= 0.15 * rep.D_closed;
  if (!rep.fits.empty()) out.write("pullback_curve.csv", ctab.render(cfg.echo()));
  if (cfg.flag("pullback.dump_cloud") && !clouds.empty()) {
    const auto& cl = clouds.back();
    std::vector<std::string> cols = {"replica", "t", "point_id"};
    for (int i = 0; i < model.dim(); ++i) cols.push_back("x_" + std::to_string(i + 1));
    CsvTable tab(cols);
    for (Eigen::Index k = 0; k < cl.points.cols(); ++k) {
      std::vector<double> row = {0.0, cl.T, static_cast<double>(k)};
      for (int i = 0; i < model.dim(); ++i) row.push_back(cl.points(i, k));
      tab.add_row(row);
    }
    out.write("pullback_cloud.csv", tab.render(cfg.echo()));
  }
  out.write_json("pullback.json", j);
  return kExitOk;
}

int run_attractor(const ExperimentConfig& cfg, OutputDir& out) {
  const CorrelationModel model = cfg.model();
  const double ell = model.length_scale();
  const std::uint64_t seed = seed_of(cfg);
  std::set<std::string> sections;
  {
    std::stringstream ss(cfg.str("attractor.sections"));
    std::string s;
    static const std::set<std::string> known = {"sup", "ou", "brownian", "pairwise",
                                                "diameter", "contraction", "regularity"};
    while (std::getline(ss, s, ',')) {
      if (!known.count(s)) throw ConfigError("unknown attractor section '" + s + "'");
      sections.insert(s);
    }
  }
  DiagnosticOptions opt = diag_options(cfg, model, cfg.num("attractor.dt"), cfg.flag("attractor.doubling"));
  opt.shell_per_length = cfg.num("attractor.shell_per_length");
  const std::size_t res = count_of(cfg, "attractor.resolution");

  json j;
  j["command"] = "attractor";
  j["config"] = config_json(cfg);
  j["model"] = model_json(model);
  std::vector<BoundCheck> all_checks;

  if (sections.count("sup")) {
    const auto R_list = scaled(cfg.list("attractor.R_list"), ell);
    const auto t_grid = cfg.list("attractor.t_grid");
    CsvTable tab({"R", "t", "value", "se", "value_doubled", "se_doubled", "origin_norm", "stable"});
    std::vector<SupEstimate> last;
    bool stable = true;
    for (std::size_t i = 0; i < R_list.size(); ++i) {
      DiagnosticOptions o = opt;
      o.replica_offset = 100'000'000ULL * i;
      const auto est = sup_norm_estimate(model, R_list[i], t_grid, res, o);
      for (const auto& e : est) {
        stable = stable && e.resolution_stable;
        tab.add_row(std::vector<std::string>{format_double(e.R), format_double(e.t), format_double(e.mean_sup),
                                             format_double(e.se), format_double(e.mean_sup_doubled),
                                             format_double(e.se_doubled), format_double(e.origin_norm),
                                             e.resolution_stable ? "true" : "false"});
      }
      last.push_back(est.back());
    }
    bool last_stable = true;
    for (const auto& e : last) last_stable = last_stable && e.resolution_stable;
    bool common = true;
    for (std::size_t a = 0; a < last.size(); ++a)
      for (std::size_t b = a + 1; b < last.size(); ++b)
        common = common && std::abs(last[a].mean_sup - last[b].mean_sup) <=
                               2.0 * std::hypot(last[a].se, last[b].se);
    double M = 0.0;
    for (const auto& e : last) M = std::max(M, e.mean_sup + 2.0 * e.se);
    j["sup"] = {{"t_last", t_grid.back()}, {"common_bound", common}, {"M_empirical", M},
                {"resolution_stable", stable}, {"last_t_resolution_stable", last_stable}};
    out.write("attractor_sup.csv", tab.render(cfg.echo()));
  }
  if (sections.count("ou")) {
    const auto checks = ou_tail_check(model, scaled(cfg.list("attractor.ou_R_list"), ell),
                                      cfg.list("attractor.ou_gamma_list"), cfg.num("attractor.ou_t"),
                                      count_of(cfg, "attractor.ou_draws"), seed);
    j["ou_tail"] = json::array();
    for (const auto& b : checks) j["ou_tail"].push_back(check_json(b));
    all_checks.insert(all_checks.end(), checks.begin(), checks.end());
  }
  if (sections.count("brownian")) {
    const auto cs = cfg.list("attractor.bm_c_list"), ts = cfg.list("attractor.bm_t_list");
    if (cs.size() != ts.size()) throw ConfigError("attractor.bm_c_list and bm_t_list differ in length");
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < cs.size(); ++i) pairs.emplace_back(cs[i], ts[i]);
    const auto rep = brownian_max_check(pairs, count_of(cfg, "attractor.bm_paths"),
                                        count_of(cfg, "attractor.bm_steps"), seed);
    j["brownian_max"] = {{"ks_statistic", rep.ks_statistic},
                         {"ks_critical_1pct", rep.ks_critical},
                         {"ks_pass", rep.ks_pass},
                         {"checks", json::array()}};
    for (const auto& b : rep.tail_checks) j["brownian_max"]["checks"].push_back(check_json(b));
    all_checks.insert(all_checks.end(), rep.tail_checks.begin(), rep.tail_checks.end());
  }
  if (sections.count("pairwise")) {
    const auto pb = sup_ratio_constants(model);
    const double t = cfg.num("attractor.pairwise_t");
    std::vector<double> zs;
    for (double k : cfg.list("attractor.pairwise_k_list"))
      zs.push_back(std::exp(pb.lambda_bound * t + k * pb.sigma * std::sqrt(t)));
    DiagnosticOptions o = diag_options(cfg, model, cfg.num("attractor.pairwise_dt"), false);
    o.replicas = count_of(cfg, "attractor.pairwise_replicas");
    o.replica_offset = 200'000'000ULL;
    const auto checks = pairwise_growth_check(model, cfg.num("attractor.pairwise_separation") * ell, t, zs, o);
    j["pairwise_growth"] = json::array();
    for (const auto& b : checks) j["pairwise_growth"].push_back(check_json(b));
    all_checks.insert(all_checks.end(), checks.begin(), checks.end());
  }
  if (sections.count("diameter")) {
    DiagnosticOptions o = opt;
    o.replicas = count_of(cfg, "attractor.diameter_replicas");
    o.replica_offset = 300'000'000ULL;
    const auto dt = diameter_tail(model, cfg.num("attractor.diameter_t"),
                                  scaled(cfg.list("attractor.diameter_R_list"), ell),
                                  count_of(cfg, "attractor.diameter_resolution"), o);
    CsvTable tab({"R", "value", "se", "bound"});
    for (std::size_t i = 0; i < dt.R.size(); ++i)
      tab.add_row(std::vector<double>{dt.R[i], dt.tail[i], dt.tail_se[i], dt.checks[i].rhs_theoretical});
    out.write("attractor_diameter.csv", tab.render(cfg.echo()));
    j["diameter"] = {{"c1", dt.c1},           {"c2", dt.c2},
                     {"fit_r2", dt.fit_r2},   {"fit_points", dt.fit_points},
                     {"positive_fit", dt.positive_fit}, {"vacuous", dt.vacuous},
                     {"monotone", dt.monotone}, {"resolution_stable", dt.resolution_stable}};
    all_checks.insert(all_checks.end(), dt.checks.begin(), dt.checks.end());
  }
  if (sections.count("contraction")) {
    DiagnosticOptions o = opt;
    o.replica_offset = 400'000'000ULL;
    const auto rep = contraction_factor(model, cfg.num("attractor.contraction_t0"),
                                        scaled(cfg.list("attractor.contraction_R_list"), ell), res,
                                        count_of(cfg, "attractor.contraction_iterations"), o);
    CsvTable tab({"R", "value", "se"});
    for (std::size_t i = 0; i < rep.R.size(); ++i) tab.add_row(std::vector<double>{rep.R[i], rep.delta_hat[i], rep.delta_se[i]});
    out.write("attractor_contraction.csv", tab.render(cfg.echo()));
    CsvTable it({"n", "simulated", "se", "bound"});
    for (std::size_t n = 0; n < rep.iter_simulated.size(); ++n)
      it.add_row(std::vector<double>{static_cast<double>(n), rep.iter_simulated[n], rep.iter_se[n],
                                     rep.exists ? rep.iter_bound[n] : std::numeric_limits<double>::quiet_NaN()});
    out.write("attractor_iteration.csv", it.render(cfg.echo()));
    j["contraction"] = {{"t0", rep.t0},
                        {"exists", rep.exists},
                        {"R0", rep.R0},
                        {"delta", rep.delta},
                        {"drift_factor", rep.drift_factor},
                        {"fit_intercept", rep.fit_intercept},
                        {"fit_intercept_se", rep.fit_intercept_se},
                        {"fit_slope", rep.fit_slope},
                        {"intercept_within_2se",
                         std::abs(rep.fit_intercept - rep.drift_factor) <= 2.0 * rep.fit_intercept_se}};
  }
  if (sections.count("regularity")) {
    DiagnosticOptions o = opt;
    o.replica_offset = 500'000'000ULL;
    const auto pts = spatial_regularity_ratio(model, scaled(cfg.list("attractor.regularity_R_list"), ell),
                                              count_of(cfg, "attractor.regularity_shell_points"), o);
    CsvTable tab({"R", "value", "se", "norm_ratio", "norm_ratio_se", "value_doubled", "stable"});
    bool decreasing = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      if (i > 0 && p.ratio >= pts[i - 1].ratio) decreasing = false;
      tab.add_row(std::vector<std::string>{format_double(p.R), format_double(p.ratio), format_double(p.ratio_se),
                                           format_double(p.norm_ratio), format_double(p.norm_ratio_se),
                                           format_double(p.ratio_doubled), p.resolution_stable ? "true" : "false"});
    }
    out.write("attractor_regularity.csv", tab.render(cfg.echo()));
    const auto& tail = pts.back();
    const double e = std::exp(-model.drift());
    j["regularity"] = {{"decreasing", decreasing},
                       {"tail_R", tail.R},
                       {"tail_ratio", tail.ratio},
                       {"tail_below_0.05", tail.ratio < 0.05},
                       {"tail_norm_ratio", tail.norm_ratio},
                       {"exp_minus_c", e},
                       {"norm_ratio_within_2se", std::abs(tail.norm_ratio - e) <= 2.0 * tail.norm_ratio_se}};
  }
  if (!all_checks.empty()) {
    CsvTable tab({"name", "params", "lhs", "lhs_se", "rhs", "applicable", "satisfied", "margin"});
    bool ok = true;
    for (const auto& b : all_checks) {
      ok = ok && b.satisfied;
      tab.add_row(std::vector<std::string>{b.name, params_cell(b), format_double(b.lhs_empirical),
                                           format_double(b.lhs_se), format_double(b.rhs_theoretical),
                                           b.applicable ? "true" : "false", b.satisfied ? "true" : "false",
                                           format_double(b.margin)});
    }
    out.write("attractor_checks.csv", tab.render(cfg.echo()));
    j["all_checks_satisfied"] = ok;
  }
  out.write_json("attractor.json", j);
  return kExitOk;
}

int run_squeeze(const ExperimentConfig& cfg, OutputDir& out) {
  const CorrelationModel model = cfg.model();
  const double ell = model.length_scale();
  DiagnosticOptions opt = diag_options(cfg, model, cfg.num("squeeze.dt"), cfg.flag("squeeze.doubling"));
  const double r = cfg.num("squeeze.r") * ell;
  auto eps_list = scaled(cfg.list("squeeze.eps_list"), ell);
  std::sort(eps_list.begin(), eps_list.end());
  const auto t_grid = cfg.list("squeeze.t_grid");
  const std::size_t res = count_of(cfg, "squeeze.resolution");
  CsvTable tab({"eps", "t", "frequency", "se", "frequency_doubled", "stable"});
  std::vector<std::vector<SqueezePoint>> all;
  for (double eps : eps_list) {
    // same replica indices for every eps: the events are compared on common noise
    all.push_back(squeezing_frequency(model, r, eps, t_grid, res, opt));
    for (const auto& p : all.back())
      tab.add_row(std::vector<std::string>{format_double(eps), format_double(p.t), format_double(p.frequency),
                                           format_double(p.se), format_double(p.frequency_doubled),
                                           p.resolution_stable ? "true" : "false"});
  }
  out.write("squeeze.csv", tab.render(cfg.echo()));
  json j;
  j["command"] = "squeeze";
  j["config"] = config_json(cfg);
  j["model"] = model_json(model);
  j["r"] = r;
  j["note"] = "finite boundary cloud: frequencies over-estimate the true squeezing probability";
  json per = json::array();
  bool monotone = true;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    bool positive = false;
    for (const auto& p : all[e]) positive = positive || p.frequency > 0.0;
    per.push_back({{"eps", eps_list[e]}, {"positive_at_some_t", positive}});
    if (e > 0)
      for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const auto &a = all[e - 1][k], &b = all[e][k];
        if (b.frequency > a.frequency + 2.0 * std::hypot(a.se, b.se)) monotone = false;
      }
  }
  j["per_eps"] = per;
  j["monotone_in_eps"] = monotone;
  out.write_json("squeeze.json", j);
  return kExitOk;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const long long threads = cfg.integer("threads");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  set_worker_threads(static_cast<unsigned>(threads));
  OutputDir out(out_dir);
  int status = kExitOk;
  const std::string& c = cfg.command();
  if (c == "validate-model") status = run_validate(cfg, out);
  else if (c == "spectrum") status = run_spectrum(cfg, out);
  else if (c == "radial") status = run_radial(cfg, out);
  else if (c == "pullback-dim") status = run_pullback(cfg, out);
  else if (c == "attractor") status = run_attractor(cfg, out);
  else if (c == "squeeze") status = run_squeeze(cfg, out);
  else throw ConfigError("unknown command '" + c + "'");
  out.write_manifest();
  return status;
}

}  // namespace iouf
