#pragma once

#include "iouf/correlation_model.hpp"
#include "iouf/rng.hpp"
#include "iouf/spectrum.hpp"

#include <limits>
#include <vector>

namespace iouf {

// Normalized speed measure m_p = m / Z with a CDF table on the log grid.
struct InvariantDensity {
  bool normalizable = false;
  double Z = 0.0;
  double tail_below = 0.0;  // analytic mass on (0, r_switch]
  double tail_above = 0.0;  // estimated mass beyond the cutoff
  double r_cut = 0.0;
  double small_exponent = 0.0;  // gamma, for the CDF below the grid
  std::vector<double> grid;  // nodes, grid[0] = r_switch
  std::vector<double> cdf;   // m_p((0, grid[k]])

  double cdf_at(double x) const;
};

// Distance process dr = sqrt(2 a^2 (1 - B_L(r))) dW + ((d-1) a^2 (1 - B_N(r))/r - c r) dt,
// a = noise amplitude (1 for the model itself).
class RadialLaw {
 public:
  explicit RadialLaw(const CorrelationModel& model, double noise_amplitude = 1.0);

  const CorrelationModel& model() const { return model_; }
  double noise_amplitude() const { return amp_; }
  double r_switch() const { return r_sw_; }

  double drift(double r) const;
  double interaction_drift(double r) const;
  double diffusion2(double r) const;

  // gamma: I(x) ~ gamma ln x as x -> 0.
  double small_r_exponent() const;
  // Exponent of the speed density near 0: gamma - 2.
  double speed_exponent() const { return small_r_exponent() - 2.0; }
  // Top exponent of the noise-scaled model.
  double lambda1() const;

  // I(x) = int_1^x 2 drift / diffusion^2.
  double inner_integral(double x) const;
  double scale_derivative(double x) const;
  double scale_function(double x) const;
  double speed_density(double x) const;
  InvariantDensity invariant_density() const;

  struct Residual {
    double residual = 0.0;
    double dominant = 0.0;
  };
  // Generator applied to s by central differences of s (step eta, default 2e-3 max(r, l)).
  Residual generator_residual(double r, double eta = 0.0) const;

 private:
  double h(double z) const;
  double cell_integral(double a, double b) const;
  double J_of(double x) const;  // int_{r_sw}^x h, x >= r_sw
  void require_noise() const;

  CorrelationModel model_;
  double amp_;
  double r_sw_, r_top_;
  double log_step_;
  std::vector<double> nodes_, J_nodes_;
  double J_one_ = 0.0;
};

enum class Recurrence { Recurrent, Transient };

struct Classification {
  Recurrence kind = Recurrence::Recurrent;
  bool boundary = false;  // lambda_1 == 0: recurrent, speed measure not normalizable
  bool normalizable = false;
  double lambda1 = 0.0;
};

Classification classify(const LyapunovSpectrum& spectrum);

struct RadialSimOptions {
  bool exponential_substep = false;
  std::size_t record_stride = 0;  // 0: first and last only
};

struct RadialPath {
  std::vector<double> t, r;
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = 0.0;
  double final_r = 0.0;
  std::size_t steps = 0;
  std::size_t reflections = 0;
  bool valid = true;  // reflections <= 0.1% of steps
};

// Euler-Maruyama; a step landing at r <= 0 is reset to 1e-8 l and counted.
RadialPath simulate_radial(const RadialLaw& law, double r0, double dt, double T, RngStream& rng,
                           const RadialSimOptions& opt = {});

}  // namespace iouf
