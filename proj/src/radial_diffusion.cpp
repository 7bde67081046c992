#include "iouf/radial_diffusion.hpp"

#include "iouf/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace iouf {

namespace {
constexpr int kNodesPerDecade = 200;
using GL = boost::math::quadrature::gauss<double, 20>;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
}  // namespace

double InvariantDensity::cdf_at(double x) const {
  if (!normalizable) throw NumericalError("invariant density is not normalizable");
  if (x <= 0.0) return 0.0;
  if (x <= grid.front()) return cdf.front() * std::pow(x / grid.front(), small_exponent - 1.0);
  if (x >= grid.back()) return 1.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (x - grid[k]) / (grid[k + 1] - grid[k]);
  return cdf[k] * (1.0 - w) + cdf[k + 1] * w;
}

RadialLaw::RadialLaw(const CorrelationModel& model, double noise_amplitude)
    : model_(model), amp_(noise_amplitude) {
  if (!(amp_ >= 0.0) || !std::isfinite(amp_)) throw ModelError("noise amplitude must be >= 0");
  const double ell = model_.length_scale();
  r_sw_ = 1e-3 * ell;
  log_step_ = std::log(10.0) / kNodesPerDecade;
  if (amp_ == 0.0) return;
  for (int k = 0; k <= 4000; ++k) {
    const double r = ell * 1e-4 * std::pow(10.0, 7.0 * k / 4000.0);
    if (!(model_.one_minus_B_L(r) > 0.0))
      throw ModelError("diffusion coefficient vanishes at r > 0 (B_L(r) = 1)");
  }
  r_top_ = 30.0 * ell + 10.0 * amp_ / std::sqrt(model_.drift());
  nodes_.push_back(r_sw_);
  J_nodes_.push_back(0.0);
  while (nodes_.back() < r_top_) {
    const double a = nodes_.back(), b = a * std::exp(log_step_);
    J_nodes_.push_back(J_nodes_.back() + cell_integral(a, b));
    nodes_.push_back(b);
  }
  r_top_ = nodes_.back();
  J_one_ = J_of(1.0);
}

double RadialLaw::interaction_drift(double r) const {
  return (model_.dim() - 1) * amp_ * amp_ * model_.one_minus_B_N(r) / r;
}

double RadialLaw::drift(double r) const { return interaction_drift(r) - model_.drift() * r; }

double RadialLaw::diffusion2(double r) const { return 2.0 * amp_ * amp_ * model_.one_minus_B_L(r); }

double RadialLaw::small_r_exponent() const {
  require_noise();
  const double a2 = amp_ * amp_;
  return ((model_.dim() - 1) * model_.beta_N() / 2.0 - model_.drift() / a2) / (model_.beta_L() / 2.0);
}

double RadialLaw::lambda1() const {
  const double a2 = amp_ * amp_;
  return a2 * ((model_.dim() - 1) * model_.beta_N() / 2.0 - model_.beta_L() / 2.0) - model_.drift();
}

void RadialLaw::require_noise() const {
  if (amp_ == 0.0) throw ModelError("scale and speed functions need a non-zero noise amplitude");
}

double RadialLaw::h(double z) const {
  const double a2 = amp_ * amp_;
  return ((model_.dim() - 1) * a2 * model_.one_minus_B_N(z) - model_.drift() * z * z) /
         (z * a2 * model_.one_minus_B_L(z));
}

double RadialLaw::cell_integral(double a, double b) const {
  return GL::integrate([this](double z) { return h(z); }, a, b);
}

double RadialLaw::J_of(double x) const {
  if (x <= r_sw_) return small_r_exponent() * std::log(x / r_sw_);
  if (x <= r_top_) {
    auto k = static_cast<std::size_t>(std::floor(std::log(x / r_sw_) / log_step_));
    k = std::min(k, nodes_.size() - 1);
    while (k > 0 && nodes_[k] > x) --k;
    return J_nodes_[k] + cell_integral(nodes_[k], x);
  }
  double acc = J_nodes_.back(), a = r_top_;
  const double w = model_.length_scale();
  while (a < x) {
    const double b = std::min(x, a + w);
    acc += cell_integral(a, b);
    a = b;
  }
  return acc;
}

double RadialLaw::inner_integral(double x) const {
  require_noise();
  if (!(x > 0.0)) throw std::domain_error("inner integral needs x > 0");
  return J_of(x) - J_one_;
}

double RadialLaw::scale_derivative(double x) const { return std::exp(-inner_integral(x)); }

double RadialLaw::scale_function(double x) const {
  require_noise();
  if (!(x > 0.0)) throw std::domain_error("scale function needs x > 0");
  if (x == 1.0) return 0.0;
  double err = 0.0, l1 = 0.0;
  const double lo = std::min(x, 1.0), hi = std::max(x, 1.0);
  // in u = ln y the integrand s'(e^u) e^u is smooth at both ends
  const double v = GK::integrate([this](double u) {
    const double y = std::exp(u);
    return scale_derivative(y) * y;
  }, std::log(lo), std::log(hi), 20, 1e-13, &err, &l1);
  if (!std::isfinite(v) || err > 1e-10 * l1) {
    std::ostringstream msg;
    msg << "scale function quadrature did not converge at x = " << x << " (error " << err
        << ", |integral| " << l1 << ")";
    throw NumericalError(msg.str());
  }
  return x > 1.0 ? v : -v;
}

double RadialLaw::speed_density(double x) const {
  require_noise();
  if (!(x > 0.0)) throw std::domain_error("speed density needs x > 0");
  return std::exp(inner_integral(x)) / (amp_ * amp_ * model_.one_minus_B_L(x));
}

InvariantDensity RadialLaw::invariant_density() const {
  require_noise();
  InvariantDensity out;
  const double gamma = small_r_exponent();
  out.small_exponent = gamma;
  if (!(lambda1() > 0.0) || !(gamma > 1.0)) {
    out.normalizable = false;
    return out;
  }
  out.normalizable = true;
  const double a2 = amp_ * amp_;
  out.tail_below = std::exp(inner_integral(r_sw_)) * (2.0 / (a2 * model_.beta_L())) /
                   (r_sw_ * (gamma - 1.0));
  auto m = [this](double x) { return speed_density(x); };
  std::vector<double> cum{0.0};
  double peak = 0.0;
  std::size_t k = 0;
  for (; k + 1 < nodes_.size(); ++k) {
    const double a = nodes_[k], b = nodes_[k + 1];
    cum.push_back(cum.back() + GL::integrate(m, a, b));
    const double mb = m(b);
    peak = std::max(peak, mb);
    if (b > 1.0 * model_.length_scale() && h(b) < 0.0 && mb < 1e-16 * peak) {
      ++k;
      break;
    }
  }
  out.r_cut = nodes_[k];
  // e^{I} decays at least like the Laplace tail m / |I'| once I' < 0.
  out.tail_above = m(out.r_cut) / std::abs(h(out.r_cut));
  out.Z = out.tail_below + cum.back() + out.tail_above;
  out.grid.assign(nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(k) + 1);
  out.cdf.resize(out.grid.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i) out.cdf[i] = (out.tail_below + cum[i]) / out.Z;
  return out;
}

RadialLaw::Residual RadialLaw::generator_residual(double r, double eta) const {
  require_noise();
  if (eta <= 0.0) eta = 2e-3 * std::max(r, model_.length_scale());
  auto inc = [&](double b) {
    double err = 0.0;
    const double v = GK::integrate([this](double y) { return scale_derivative(y); }, std::min(r, b),
                                   std::max(r, b), 4, 1e-13, &err);
    return b > r ? v : -v;
  };
  const double p2 = inc(r + 2 * eta), p1 = inc(r + eta), m1 = inc(r - eta), m2 = inc(r - 2 * eta);
  const double s1 = (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * eta);
  const double s2 = (-p2 + 16 * p1 + 16 * m1 - m2) / (12 * eta * eta);
  const double t2 = 0.5 * diffusion2(r) * s2;
  const double t1 = drift(r) * s1;
  return {t2 + t1, std::max(std::abs(t2), std::abs(t1))};
}

Classification classify(const LyapunovSpectrum& spectrum) {
  if (spectrum.exponents.empty()) throw std::invalid_argument("classify: empty spectrum");
  Classification c;
  c.lambda1 = spectrum.exponents.front();
  c.kind = c.lambda1 >= 0.0 ? Recurrence::Recurrent : Recurrence::Transient;
  c.boundary = c.lambda1 == 0.0;
  c.normalizable = c.lambda1 > 0.0;
  return c;
}

RadialPath simulate_radial(const RadialLaw& law, double r0, double dt, double T, RngStream& rng,
                           const RadialSimOptions& opt) {
  if (!(r0 > 0.0)) throw std::invalid_argument("simulate_radial: r0 must be positive");
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("simulate_radial: bad dt or T");
  const double eps_r = 1e-8 * law.model().length_scale();
  const double c = law.model().drift();
  const double decay = std::exp(-c * dt);
  const double sdt = std::sqrt(dt);
  RadialPath path;
  const auto nsteps = static_cast<std::size_t>(std::llround(T / dt));
  double r = r0;
  path.t.push_back(0.0);
  path.r.push_back(r);
  path.r_min = path.r_max = r;
  for (std::size_t k = 1; k <= nsteps; ++k) {
    const double noise = std::sqrt(law.diffusion2(r)) * sdt * rng.normal();
    double next;
    if (opt.exponential_substep) next = r * decay + law.interaction_drift(r) * dt + noise;
    else next = r + law.drift(r) * dt + noise;
    if (!std::isfinite(next)) throw NumericalError("non-finite radial state");
    if (next <= 0.0) {
      next = eps_r;
      ++path.reflections;
    }
    r = next;
    path.r_min = std::min(path.r_min, r);
    path.r_max = std::max(path.r_max, r);
    if (k == nsteps || (opt.record_stride > 0 && k % opt.record_stride == 0)) {
      path.t.push_back(static_cast<double>(k) * dt);
      path.r.push_back(r);
    }
  }
  path.steps = nsteps;
  path.final_r = r;
  path.valid = static_cast<double>(path.reflections) <= 1e-3 * static_cast<double>(std::max<std::size_t>(nsteps, 1));
  return path;
}

}  // namespace iouf
