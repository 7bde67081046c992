#include "iouf/correlation_model.hpp"

#include "iouf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace iouf {

namespace {

using Poly = std::vector<double>;

double eval(const Poly& p, double u) {
  double acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * u + *it;
  return acc;
}

Poly derivative(const Poly& p) {
  if (p.size() <= 1) return {0.0};
  Poly out(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k) out[k - 1] = static_cast<double>(k) * p[k];
  return out;
}

// (P' - uP): d/du of P(u) exp(-u^2/2), divided by the Gaussian factor.
Poly gauss_derivative(const Poly& p) {
  Poly out(p.size() + 1, 0.0);
  const Poly dp = derivative(p);
  for (std::size_t k = 0; k < dp.size(); ++k) out[k] += dp[k];
  for (std::size_t k = 0; k < p.size(); ++k) out[k + 1] -= p[k];
  return out;
}

// (1/u) d/du acting on P(u) exp(-u^2/2): P'/u - P.  P must be even.
Poly gauss_radial(const Poly& p) {
  Poly out(p.size(), 0.0);
  for (std::size_t k = 2; k < p.size(); k += 2) out[k - 2] += static_cast<double>(k) * p[k];
  for (std::size_t k = 0; k < p.size(); ++k) out[k] -= p[k];
  return out;
}

Poly combine(double a, const Poly& p, double b, const Poly& q) {
  Poly out(std::max(p.size(), q.size()), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) out[k] += a * p[k];
  for (std::size_t k = 0; k < q.size(); ++k) out[k] += b * q[k];
  return out;
}

struct GaussPolys {
  Poly L, N;
};

GaussPolys potential_polys() { return {{1.0, 0.0, -1.0}, {1.0}}; }

GaussPolys solenoidal_polys(int d) {
  return {{1.0}, {1.0, 0.0, -1.0 / static_cast<double>(d - 1)}};
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::GaussianPotential: return "gaussian_potential";
    case Family::GaussianSolenoidal: return "gaussian_solenoidal";
    case Family::GaussianMixture: return "gaussian_mixture";
    case Family::UserSupplied: return "user_supplied";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "gaussian_potential" || s == "potential") return Family::GaussianPotential;
  if (s == "gaussian_solenoidal" || s == "solenoidal") return Family::GaussianSolenoidal;
  if (s == "gaussian_mixture" || s == "mixture") return Family::GaussianMixture;
  if (s == "user_supplied") return Family::UserSupplied;
  throw ConfigError("unknown model family '" + s + "'");
}

CorrelationModel CorrelationModel::gaussian_potential(int d, double ell, double c) {
  CorrelationModel m = gaussian_mixture(1.0, d, ell, c);
  m.family_ = Family::GaussianPotential;
  return m;
}

CorrelationModel CorrelationModel::gaussian_solenoidal(int d, double ell, double c) {
  CorrelationModel m = gaussian_mixture(0.0, d, ell, c);
  m.family_ = Family::GaussianSolenoidal;
  return m;
}

CorrelationModel CorrelationModel::gaussian_mixture(double alpha, int d, double ell, double c) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ModelError("mixture weight alpha must lie in [0, 1]");
  if (d < 2) throw ModelError("dimension must be >= 2");
  CorrelationModel m;
  m.family_ = Family::GaussianMixture;
  m.alpha_ = alpha;
  m.d_ = d;
  m.ell_ = ell;
  m.c_ = c;
  const auto pot = potential_polys();
  const auto sol = solenoidal_polys(d);
  m.pL_ = combine(alpha, pot.L, 1.0 - alpha, sol.L);
  m.pN_ = combine(alpha, pot.N, 1.0 - alpha, sol.N);
  m.finalize();
  return m;
}

CorrelationModel CorrelationModel::user_supplied(Radial B_L, Radial B_N, int d, double ell,
                                                 double c) {
  if (!B_L || !B_N) throw ModelError("user-supplied model needs both B_L and B_N");
  if (d < 2) throw ModelError("dimension must be >= 2");
  CorrelationModel m;
  m.family_ = Family::UserSupplied;
  m.alpha_ = std::numeric_limits<double>::quiet_NaN();
  m.d_ = d;
  m.ell_ = ell;
  m.c_ = c;
  m.user_L_ = std::move(B_L);
  m.user_N_ = std::move(B_N);
  m.finalize();
  return m;
}

CorrelationModel CorrelationModel::with_drift(double c) const {
  CorrelationModel m = *this;
  m.c_ = c;
  m.finalize();
  return m;
}

void CorrelationModel::finalize() {
  if (!(ell_ > 0.0) || !std::isfinite(ell_)) throw ModelError("length scale must be positive");
  if (!(c_ > 0.0) || !std::isfinite(c_)) throw ModelError("drift c must be positive");
  if (is_gaussian()) {
    Poly diff = combine(1.0, pL_, -1.0, pN_);
    if (std::abs(diff[0]) > 0.0 || (diff.size() > 1 && std::abs(diff[1]) > 0.0))
      throw ModelError("B_L - B_N must vanish to second order at 0");
    pF_.assign(diff.begin() + 2, diff.end());
    if (pF_.empty()) pF_ = {0.0};
    pF1_ = gauss_radial(pF_);
    pF2_ = gauss_radial(pF1_);
    pN1_ = gauss_radial(pN_);
    pN2_ = gauss_radial(pN1_);
    const double l2 = ell_ * ell_;
    beta_L_ = -eval(gauss_derivative(gauss_derivative(pL_)), 0.0) / l2;
    beta_N_ = -eval(gauss_derivative(gauss_derivative(pN_)), 0.0) / l2;
  } else {
    for (const Radial* B : {&user_L_, &user_N_}) {
      const double b0 = (*B)(0.0);
      if (std::abs(b0 - 1.0) > 1e-12) throw ModelError("user-supplied B must satisfy B(0) = 1");
      for (int k = 1; k <= 4000; ++k) {
        const double r = ell_ * 1e-4 * std::pow(10.0, 7.0 * k / 4000.0);
        const double v = (*B)(r);
        if (!std::isfinite(v) || std::abs(v) > 1.0 + 1e-12)
          throw ModelError("user-supplied B must satisfy |B(r)| <= 1");
      }
    }
    beta_L_ = -user_fd(user_L_, 2, 0.0);
    beta_N_ = -user_fd(user_N_, 2, 0.0);
  }
  if (!(beta_L_ > 0.0) || !(beta_N_ > 0.0))
    throw ModelError("degenerate model: beta_L and beta_N must be positive");
}

double CorrelationModel::user_fd(const Radial& B, int order, double r) const {
  auto Be = [&](double s) { return B(std::abs(s)); };
  if (order == 0) return Be(r);
  const double h = (order <= 2 ? 1e-4 : 1e-2) * ell_;
  const double p2 = Be(r + 2 * h), p1 = Be(r + h), m1 = Be(r - h), m2 = Be(r - 2 * h);
  switch (order) {
    case 1: return (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h);
    case 2: return (-p2 + 16 * p1 - 30 * Be(r) + 16 * m1 - m2) / (12 * h * h);
    case 3: return (p2 - 2 * p1 + 2 * m1 - m2) / (2 * h * h * h);
    case 4: return (p2 - 4 * p1 + 6 * Be(r) - 4 * m1 + m2) / (h * h * h * h);
    default: throw std::invalid_argument("radial derivative order must be 0..4");
  }
}

double CorrelationModel::B_L(double r) const {
  if (!is_gaussian()) return user_L_(std::abs(r));
  const double u = r / ell_;
  return eval(pL_, u) * std::exp(-0.5 * u * u);
}

double CorrelationModel::B_N(double r) const {
  if (!is_gaussian()) return user_N_(std::abs(r));
  const double u = r / ell_;
  return eval(pN_, u) * std::exp(-0.5 * u * u);
}

double CorrelationModel::one_minus_B_L(double r) const {
  if (!is_gaussian()) return 1.0 - user_L_(std::abs(r));
  const double u = r / ell_;
  return -std::expm1(-0.5 * u * u) - (eval(pL_, u) - 1.0) * std::exp(-0.5 * u * u);
}

double CorrelationModel::one_minus_B_N(double r) const {
  if (!is_gaussian()) return 1.0 - user_N_(std::abs(r));
  const double u = r / ell_;
  return -std::expm1(-0.5 * u * u) - (eval(pN_, u) - 1.0) * std::exp(-0.5 * u * u);
}

double CorrelationModel::radial_derivative(bool longitudinal, int order, double r) const {
  if (order < 0 || order > 4) throw std::invalid_argument("radial derivative order must be 0..4");
  if (!is_gaussian()) return user_fd(longitudinal ? user_L_ : user_N_, order, r);
  Poly p = longitudinal ? pL_ : pN_;
  for (int k = 0; k < order; ++k) p = gauss_derivative(p);
  const double u = r / ell_;
  return eval(p, u) * std::exp(-0.5 * u * u) / std::pow(ell_, order);
}

ReducedProfile CorrelationModel::reduced(double r) const {
  ReducedProfile out;
  r = std::abs(r);
  if (is_gaussian()) {
    const double u = r / ell_;
    const double g = std::exp(-0.5 * u * u);
    const double l2 = ell_ * ell_;
    out.BN = eval(pN_, u) * g;
    out.f = eval(pF_, u) * g / l2;
    out.f1 = eval(pF1_, u) * g / (l2 * l2);
    out.f2 = eval(pF2_, u) * g / (l2 * l2 * l2);
    out.n1 = eval(pN1_, u) * g / l2;
    out.n2 = eval(pN2_, u) * g / (l2 * l2);
    return out;
  }
  // Finite differences; below r_small the coefficients are frozen at their
  // small-r values (f and n1 have exact limits from beta).
  const double r_small = 1e-2 * ell_;
  auto f_of = [&](double s) {
    s = std::max(std::abs(s), r_small);
    return (user_L_(s) - user_N_(s)) / (s * s);
  };
  auto n1_of = [&](double s) {
    s = std::max(std::abs(s), r_small);
    return user_fd(user_N_, 1, s) / s;
  };
  const double h = 1e-3 * ell_;
  auto d1 = [&](auto&& fn, double s) {
    return (-fn(s + 2 * h) + 8 * fn(s + h) - 8 * fn(s - h) + fn(s - 2 * h)) / (12 * h);
  };
  const double rr = std::max(r, r_small + 2 * h);
  auto f1_of = [&](double s) { return d1(f_of, s) / s; };
  out.BN = user_N_(r);
  out.f = r < r_small ? 0.5 * (beta_N_ - beta_L_) : f_of(r);
  out.n1 = r < r_small ? -beta_N_ : n1_of(r);
  out.f1 = f1_of(rr);
  out.f2 = d1(f1_of, rr + 2 * h) / (rr + 2 * h);
  out.n2 = d1(n1_of, rr) / rr;
  return out;
}

void CorrelationModel::tensor_coefficients(double r, double& f, double& BN) const {
  if (!is_gaussian()) {
    const auto p = reduced(r);
    f = p.f;
    BN = p.BN;
    return;
  }
  const double u = std::abs(r) / ell_;
  const double g = std::exp(-0.5 * u * u);
  f = eval(pF_, u) * g / (ell_ * ell_);
  BN = eval(pN_, u) * g;
}

std::string CorrelationModel::fingerprint() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "family=%s;alpha=%.17g;ell=%.17g;d=%d;c=%.17g",
                to_string(family_).c_str(), alpha_, ell_, d_, c_);
  return buf;
}

void tensor_unchecked(const CorrelationModel& model, const double* x, double* out) {
  const int d = model.dim();
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  const double r = std::sqrt(r2);
  const double s = model.singular_radius();
  double f, bn;
  if (r < s) {
    f = 0.0;
    bn = 1.0;
  } else {
    model.tensor_coefficients(r, f, bn);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i * d + j] = f * x[i] * x[j] + (i == j ? bn : 0.0);
}

void tensor_derivatives_unchecked(const CorrelationModel& model, const double* xin,
                                  TensorDerivatives& out, bool with_second) {
  const int d = model.dim();
  out.d = d;
  out.first.assign(static_cast<std::size_t>(d * d * d), 0.0);
  out.second.assign(with_second ? static_cast<std::size_t>(d * d * d * d) : 0, 0.0);
  double x[16];
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) {
    x[i] = xin[i];
    r2 += x[i] * x[i];
  }
  if (std::sqrt(r2) < model.singular_radius()) {
    for (int i = 0; i < d; ++i) x[i] = 0.0;
    r2 = 0.0;
  }
  const auto p = model.reduced(std::sqrt(r2));
  auto del = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        out.d1(k, i, j) = p.f1 * x[k] * x[i] * x[j] + p.f * (del(i, k) * x[j] + del(j, k) * x[i]) +
                          del(i, j) * p.n1 * x[k];
  if (!with_second) return;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          out.d2(k, l, i, j) =
              p.f2 * x[i] * x[j] * x[k] * x[l] +
              p.f1 * (del(k, l) * x[i] * x[j] + del(i, l) * x[j] * x[k] + del(j, l) * x[i] * x[k] +
                      del(i, k) * x[j] * x[l] + del(j, k) * x[i] * x[l]) +
              p.f * (del(i, k) * del(j, l) + del(j, k) * del(i, l)) +
              del(i, j) * (p.n2 * x[k] * x[l] + p.n1 * del(k, l));
}

namespace {
void check_input(const CorrelationModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.dim()) throw std::invalid_argument("vector dimension does not match model");
  if (!x.allFinite()) throw std::invalid_argument("non-finite input vector");
}
}  // namespace

Eigen::MatrixXd build_tensor(const CorrelationModel& model, const Eigen::VectorXd& x) {
  check_input(model, x);
  const int d = model.dim();
  Eigen::MatrixXd b(d, d);
  if (x.squaredNorm() == 0.0) return Eigen::MatrixXd::Identity(d, d);
  const auto p = model.reduced(x.norm());
  b = p.f * x * x.transpose();
  b.diagonal().array() += p.BN;
  return b;
}

TensorDerivatives tensor_derivatives(const CorrelationModel& model, const Eigen::VectorXd& x) {
  check_input(model, x);
  const double r = x.norm();
  if (r > 0.0 && r < model.singular_radius())
    throw std::domain_error("tensor_derivatives: 0 < |x| < singular radius; use x = 0");
  TensorDerivatives out;
  tensor_derivatives_unchecked(model, x.data(), out, true);
  return out;
}

BetaCoefficients beta_coefficients(const CorrelationModel& model) {
  return {model.beta_L(), model.beta_N()};
}

PairwiseBound sup_ratio_constants(const CorrelationModel& model) {
  PairwiseBound out;
  const double ell = model.length_scale();
  out.a = 0.5 * model.beta_N();
  out.b_const = 0.5 * model.beta_L();
  constexpr int kGrid = 20000;
  for (int k = 0; k <= kGrid; ++k) {
    const double u = ell * 1e-4 * std::pow(10.0, 7.0 * k / kGrid);
    const double ra = model.one_minus_B_N(u) / (u * u);
    const double rb = model.one_minus_B_L(u) / (u * u);
    if (!std::isfinite(ra) || !std::isfinite(rb)) throw ModelError("sup ratio is not finite");
    if (ra > out.a) {
      out.a = ra;
      out.a_argmax = u;
    }
    if (rb > out.b_const) {
      out.b_const = rb;
      out.b_argmax = u;
    }
  }
  out.sigma = std::sqrt(2.0 * out.b_const);
  out.lambda_bound = (model.dim() - 1) * out.a - model.drift();
  return out;
}

PsdReport validate_psd(const CorrelationModel& model, const Eigen::MatrixXd& points, double tol) {
  const int d = model.dim();
  const auto n = points.cols();
  if (points.rows() != d || n < 1) throw std::invalid_argument("validate_psd: need d x n points");
  Eigen::MatrixXd K(n * d, n * d);
  std::vector<double> blk(static_cast<std::size_t>(d * d));
  Eigen::VectorXd z(d);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) {
      z = points.col(p) - points.col(q);
      tensor_unchecked(model, z.data(), blk.data());
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) K(p * d + i, q * d + j) = blk[i * d + j];
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  PsdReport rep;
  rep.size = static_cast<std::size_t>(n * d);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  rep.ok = rep.min_eigenvalue >= -tol;
  return rep;
}

}  // namespace iouf
