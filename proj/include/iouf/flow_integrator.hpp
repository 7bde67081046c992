#pragma once

#include "iouf/correlation_model.hpp"
#include "iouf/field_sampler.hpp"
#include "iouf/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iouf {

enum class Scheme { EulerMaruyama, ExponentialEuler };
enum class SamplerKind { Auto, Dense, Series };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);
std::string to_string(SamplerKind s);
SamplerKind sampler_from_string(const std::string& s);

struct SimConfig {
  explicit SimConfig(CorrelationModel m) : model(std::move(m)) {}

  CorrelationModel model;
  double dt = 1e-3;
  double T = 1.0;
  bool track_jacobians = false;
  Scheme scheme = Scheme::ExponentialEuler;
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;
  // Multiplies the field; 0 gives the deterministic flow x' = -c x.
  double noise_amplitude = 1.0;
  bool override_dt_guard = false;
  // Frames are kept every record_stride steps (0: first and last only).
  std::size_t record_stride = 0;
  SamplerKind sampler = SamplerKind::Auto;
  // Auto picks the series sampler above this many scalar unknowns ...
  std::size_t series_min_unknowns = 64;
  // ... as long as the cloud stays inside this radius (units of l).
  double series_max_radius = 8.0;
};

// Largest dt allowed without override: min(0.01/c, 0.01 l^2 / max(beta_L, beta_N)).
double dt_guard(const CorrelationModel& model);

struct FlowState {
  double t = 0.0;
  std::uint64_t steps = 0;
  Eigen::MatrixXd positions;               // d x n
  std::vector<Eigen::MatrixXd> jacobians;  // empty unless tracked
  RngStream rng;
};

// Stepper owning the per-run caches (the n = 1 factorization never changes).
class FlowIntegrator {
 public:
  explicit FlowIntegrator(SimConfig cfg);

  FlowState initial_state(const Eigen::MatrixXd& points) const;
  void step(FlowState& state);
  // Advance by round(duration / dt) steps.
  void advance(FlowState& state, double duration);

  const SimConfig& config() const { return cfg_; }
  std::uint64_t series_steps() const { return series_steps_; }
  std::uint64_t dense_steps() const { return dense_steps_; }

 private:
  bool use_series(const FlowState& s) const;

  SimConfig cfg_;
  std::optional<SeriesFieldSampler> series_;
  std::optional<Factorization> single_point_;
  IncrementSample sample_;
  Eigen::MatrixXd dF_;
  std::uint64_t series_steps_ = 0, dense_steps_ = 0;
};

// One step without caches.
FlowState step(FlowState state, const SimConfig& cfg);

struct Frame {
  double t = 0.0;
  Eigen::MatrixXd positions;
  std::vector<Eigen::MatrixXd> jacobians;
};

struct Trajectory {
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;
  std::vector<Frame> frames;
};

Trajectory simulate(const SimConfig& cfg, const Eigen::MatrixXd& initial_points);

// Uniformly weighted cloud standing in for the random equilibrium measure.
struct EmpiricalMeasure {
  Eigen::MatrixXd points;  // d x n
  std::vector<double> weights;
  std::string model_fingerprint;
  double T = 0.0;
  std::uint64_t seed = 0;
  std::size_t n() const { return static_cast<std::size_t>(points.cols()); }
};

// Draws n_samples points from N(0, I/(2c)) and pushes them through one flow
// realization, returning a snapshot at every T in T_list (ascending).  All
// snapshots share the same noise.
std::vector<EmpiricalMeasure> pullback_clouds(const SimConfig& cfg, std::size_t n_samples,
                                              const std::vector<double>& T_list);
EmpiricalMeasure pullback_cloud(const SimConfig& cfg, std::size_t n_samples, double T);

// i.i.d. sample from the stationary one-point law N(0, I/(2c)).
Eigen::MatrixXd sample_stationary(const CorrelationModel& model, std::size_t n, RngStream& rng);

}  // namespace iouf
