#include "iouf/flow_integrator.hpp"

#include "iouf/errors.hpp"

#include <cmath>
#include <sstream>

namespace iouf {

std::string to_string(Scheme s) {
  return s == Scheme::EulerMaruyama ? "euler_maruyama" : "exponential_euler";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler_maruyama") return Scheme::EulerMaruyama;
  if (s == "exponential_euler") return Scheme::ExponentialEuler;
  throw ConfigError("unknown scheme '" + s + "'");
}

std::string to_string(SamplerKind s) {
  switch (s) {
    case SamplerKind::Auto: return "auto";
    case SamplerKind::Dense: return "dense";
    case SamplerKind::Series: return "series";
  }
  return "auto";
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "auto") return SamplerKind::Auto;
  if (s == "dense") return SamplerKind::Dense;
  if (s == "series") return SamplerKind::Series;
  throw ConfigError("unknown sampler '" + s + "'");
}

double dt_guard(const CorrelationModel& model) {
  const double l2 = model.length_scale() * model.length_scale();
  return std::min(0.01 / model.drift(), 0.01 * l2 / std::max(model.beta_L(), model.beta_N()));
}

FlowIntegrator::FlowIntegrator(SimConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg_.T >= 0.0)) throw ConfigError("T must be non-negative");
  if (!(cfg_.noise_amplitude >= 0.0)) throw ConfigError("noise amplitude must be >= 0");
  if (!cfg_.override_dt_guard && cfg_.dt > dt_guard(cfg_.model) * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt = " << cfg_.dt << " exceeds the stability guard " << dt_guard(cfg_.model)
        << " (set override to force)";
    throw ConfigError(msg.str());
  }
  if (SeriesFieldSampler::supports(cfg_.model)) series_.emplace(cfg_.model);
  if (cfg_.sampler == SamplerKind::Series && (!series_ || cfg_.track_jacobians))
    throw ConfigError("series sampler needs d = 2, a Gaussian family and no Jacobians");
}

FlowState FlowIntegrator::initial_state(const Eigen::MatrixXd& points) const {
  if (points.rows() != cfg_.model.dim()) throw std::invalid_argument("initial points must be d x n");
  FlowState s;
  s.positions = points;
  s.rng = RngStream(cfg_.seed, cfg_.replica_index, StreamChannel::Field);
  if (cfg_.track_jacobians) {
    const int d = cfg_.model.dim();
    s.jacobians.assign(static_cast<std::size_t>(points.cols()), Eigen::MatrixXd::Identity(d, d));
  }
  return s;
}

bool FlowIntegrator::use_series(const FlowState& s) const {
  if (!series_ || cfg_.track_jacobians) return false;
  if (cfg_.sampler == SamplerKind::Series) return true;
  if (cfg_.sampler == SamplerKind::Dense) return false;
  const auto unknowns = static_cast<std::size_t>(s.positions.size());
  if (unknowns <= cfg_.series_min_unknowns) return false;
  const double rmax = s.positions.colwise().norm().maxCoeff();
  return rmax <= cfg_.series_max_radius * cfg_.model.length_scale();
}

void FlowIntegrator::step(FlowState& s) {
  const double dt = cfg_.dt;
  const double c = cfg_.model.drift();
  const double dt_eff = cfg_.noise_amplitude * cfg_.noise_amplitude * dt;
  const Eigen::Index n = s.positions.cols();
  const bool grad = cfg_.track_jacobians;

  if (use_series(s)) {
    series_->sample(s.positions, dt_eff, s.rng, dF_);
    ++series_steps_;
  } else {
    const auto unknowns = n * cfg_.model.dim() * (grad ? 1 + cfg_.model.dim() : 1);
    if (unknowns > 6000)
      throw NumericalError("cloud too large for the dense sampler (" + std::to_string(unknowns) +
                           " unknowns)");
    IncrementRequest req{s.positions, grad, dt_eff};
    if (n == 1) {
      if (!single_point_) single_point_ = Factorization::compute(cfg_.model, req);
      single_point_->sample(s.rng, sample_);
    } else {
      Factorization::compute(cfg_.model, req).sample(s.rng, sample_);
    }
    dF_ = sample_.dF;
    ++dense_steps_;
  }

  if (cfg_.scheme == Scheme::ExponentialEuler) {
    const double e = std::exp(-c * dt);
    s.positions = e * s.positions + dF_;
    if (grad)
      for (Eigen::Index p = 0; p < n; ++p) {
        auto& J = s.jacobians[static_cast<std::size_t>(p)];
        J = e * J + sample_.dDF[static_cast<std::size_t>(p)] * J;
      }
  } else {
    s.positions += dF_ - c * dt * s.positions;
    if (grad)
      for (Eigen::Index p = 0; p < n; ++p) {
        auto& J = s.jacobians[static_cast<std::size_t>(p)];
        J += sample_.dDF[static_cast<std::size_t>(p)] * J - c * dt * J;
      }
  }
  ++s.steps;
  s.t = static_cast<double>(s.steps) * dt;
  if (!s.positions.allFinite()) throw NumericalError("non-finite position after step");
  if (grad)
    for (const auto& J : s.jacobians)
      if (!J.allFinite()) throw NumericalError("non-finite Jacobian after step");
}

void FlowIntegrator::advance(FlowState& s, double duration) {
  const auto k = static_cast<long long>(std::llround(duration / cfg_.dt));
  for (long long i = 0; i < k; ++i) step(s);
}

FlowState step(FlowState state, const SimConfig& cfg) {
  FlowIntegrator integ(cfg);
  integ.step(state);
  return state;
}

Trajectory simulate(const SimConfig& cfg, const Eigen::MatrixXd& initial_points) {
  FlowIntegrator integ(cfg);
  Trajectory tr;
  tr.fingerprint = cfg.model.fingerprint();
  tr.seed = cfg.seed;
  tr.replica_index = cfg.replica_index;
  FlowState s = integ.initial_state(initial_points);
  tr.frames.push_back({s.t, s.positions, s.jacobians});
  const auto nsteps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.dt));
  for (std::uint64_t k = 1; k <= nsteps; ++k) {
    integ.step(s);
    if (k == nsteps || (cfg.record_stride > 0 && k % cfg.record_stride == 0))
      tr.frames.push_back({s.t, s.positions, s.jacobians});
  }
  return tr;
}

Eigen::MatrixXd sample_stationary(const CorrelationModel& model, std::size_t n, RngStream& rng) {
  const double sd = std::sqrt(0.5 / model.drift());
  Eigen::MatrixXd x(model.dim(), static_cast<Eigen::Index>(n));
  for (Eigen::Index p = 0; p < x.cols(); ++p)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, p) = sd * rng.normal();
  return x;
}

std::vector<EmpiricalMeasure> pullback_clouds(const SimConfig& cfg, std::size_t n_samples,
                                              const std::vector<double>& T_list) {
  if (n_samples * static_cast<std::size_t>(cfg.model.dim()) > 20'000'000)
    throw ConfigError("pullback cloud too large");
  for (std::size_t i = 1; i < T_list.size(); ++i)
    if (T_list[i] < T_list[i - 1]) throw ConfigError("T_list must be ascending");
  RngStream init(cfg.seed, cfg.replica_index, StreamChannel::InitialPoints);
  const Eigen::MatrixXd x0 = sample_stationary(cfg.model, n_samples, init);
  SimConfig run = cfg;
  run.track_jacobians = false;
  FlowIntegrator integ(run);
  FlowState s = integ.initial_state(x0);
  std::vector<EmpiricalMeasure> out;
  for (double T : T_list) {
    const auto target = static_cast<std::uint64_t>(std::llround(T / cfg.dt));
    while (s.steps < target) integ.step(s);
    EmpiricalMeasure em;
    em.points = s.positions;
    em.weights.assign(n_samples, 1.0 / static_cast<double>(n_samples));
    em.model_fingerprint = cfg.model.fingerprint();
    em.T = s.t;
    em.seed = cfg.seed;
    out.push_back(std::move(em));
  }
  return out;
}

EmpiricalMeasure pullback_cloud(const SimConfig& cfg, std::size_t n_samples, double T) {
  return pullback_clouds(cfg, n_samples, {T}).front();
}

}  // namespace iouf
