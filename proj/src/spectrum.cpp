#include "iouf/spectrum.hpp"

#include "iouf/errors.hpp"
#include "iouf/parallel.hpp"
#include "iouf/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace iouf {

LyapunovSpectrum closed_form_spectrum(double beta_L, double beta_N, double c, int d) {
  if (!(beta_L > 0.0) || !(beta_N > 0.0) || !(c > 0.0) || d < 2)
    throw std::invalid_argument("closed_form_spectrum: need beta > 0, c > 0, d >= 2");
  LyapunovSpectrum s;
  for (int i = 1; i <= d; ++i) s.exponents.push_back((d - i) * beta_N / 2.0 - i * beta_L / 2.0 - c);
  s.multiplicities.assign(static_cast<std::size_t>(d), 1);
  s.provenance = Provenance::ClosedForm;
  return s;
}

LyapunovSpectrum closed_form_spectrum(const CorrelationModel& model) {
  return closed_form_spectrum(model.beta_L(), model.beta_N(), model.drift(), model.dim());
}

LyapunovDimension lyapunov_dimension_detail(const std::vector<double>& lam,
                                            const std::vector<int>& mult) {
  if (lam.empty() || lam.size() != mult.size())
    throw std::invalid_argument("lyapunov_dimension: exponents and multiplicities differ in length");
  for (std::size_t i = 1; i < lam.size(); ++i)
    if (!(lam[i] <= lam[i - 1])) throw std::invalid_argument("lyapunov_dimension: exponents not ordered");
  for (int m : mult)
    if (m < 1) throw std::invalid_argument("lyapunov_dimension: multiplicities must be >= 1");
  LyapunovDimension out;
  double partial = 0.0;
  int msum = 0;
  std::size_t k = 0;
  while (k < lam.size() && partial + lam[k] * mult[k] > 0.0) {
    partial += lam[k] * mult[k];
    msum += mult[k];
    ++k;
  }
  out.k = static_cast<int>(k);
  if (k == 0) {
    out.D = 0.0;
    out.boundary = lam[0] == 0.0;
    return out;
  }
  if (k == lam.size()) {
    out.D = msum;
    return out;
  }
  out.D = msum - partial / lam[k];
  return out;
}

double lyapunov_dimension(const LyapunovSpectrum& s) {
  std::vector<int> m = s.multiplicities;
  if (m.empty()) m.assign(s.exponents.size(), 1);
  return lyapunov_dimension_detail(s.exponents, m).D;
}

QrAccumulator::QrAccumulator(int d) : sums_(Eigen::VectorXd::Zero(d)) {}

double QrAccumulator::reorthonormalize(Eigen::MatrixXd& frame) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(frame);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(sv.size() - 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  Eigen::MatrixXd Q = qr.householderQ();
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    sums_(i) += std::log(std::abs(R(i, i)));
    if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);
  }
  frame = Q;
  return cond;
}

namespace {

struct ReplicaQr {
  Eigen::MatrixXd batch_rates;  // batches x d
  std::size_t final_stride = 0;
};

ReplicaQr run_replica(SimConfig cfg, const QrOptions& opt) {
  cfg.track_jacobians = true;
  const int d = cfg.model.dim();
  FlowIntegrator integ(cfg);
  FlowState s = integ.initial_state(Eigen::MatrixXd::Zero(d, 1));
  if (opt.initial_frame) {
    if (opt.initial_frame->rows() != d || opt.initial_frame->cols() != d)
      throw std::invalid_argument("initial frame must be d x d");
    s.jacobians[0] = *opt.initial_frame;
  }
  const auto nsteps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.dt));
  const std::size_t nb = opt.batches;
  if (nsteps < nb) throw ConfigError("horizon too short for the requested number of batches");
  ReplicaQr out;
  out.batch_rates.setZero(static_cast<Eigen::Index>(nb), d);
  QrAccumulator acc(d);
  std::size_t stride = opt.reortho_stride;
  bool halved = false;
  std::uint64_t since = 0;
  std::size_t batch = 0;
  std::uint64_t batch_start = 0;
  for (std::uint64_t k = 1; k <= nsteps; ++k) {
    integ.step(s);
    ++since;
    const std::uint64_t batch_end = (batch + 1) * nsteps / nb;
    if (since >= stride || k == batch_end) {
      const double cond = acc.reorthonormalize(s.jacobians[0]);
      since = 0;
      if (cond > opt.condition_limit) {
        if (halved || stride <= 1)
          throw NumericalError("tangent frame condition number exceeded the limit twice");
        stride = std::max<std::size_t>(1, stride / 2);
        halved = true;
      }
    }
    if (k == batch_end) {
      const double dur = static_cast<double>(k - batch_start) * cfg.dt;
      out.batch_rates.row(static_cast<Eigen::Index>(batch)) = acc.log_sums().transpose() / dur;
      acc.reset_sums();
      batch_start = k;
      ++batch;
    }
  }
  out.final_stride = stride;
  return out;
}

}  // namespace

LyapunovSpectrum estimate_spectrum_qr(const SimConfig& cfg, std::size_t replicas,
                                      const QrOptions& opt) {
  if (replicas == 0) throw ConfigError("need at least one replica");
  if (opt.reortho_stride == 0 || opt.batches == 0) throw ConfigError("stride and batches must be >= 1");
  auto runs = parallel_map(replicas, [&](std::size_t r) {
    SimConfig c = cfg;
    c.replica_index = cfg.replica_index + r;
    return run_replica(c, opt);
  });
  const int d = cfg.model.dim();
  const std::size_t nb = opt.batches;
  LyapunovSpectrum out;
  out.provenance = Provenance::QREstimate;
  out.multiplicities.assign(static_cast<std::size_t>(d), 1);
  out.replicas = replicas;
  out.batches = nb;
  out.T = cfg.T;
  out.reortho_stride = opt.reortho_stride;
  std::vector<double> sums;
  for (int i = 0; i < d; ++i) {
    std::vector<double> vals;
    for (const auto& r : runs)
      for (std::size_t b = 0; b < nb; ++b) vals.push_back(r.batch_rates(static_cast<Eigen::Index>(b), i));
    const auto ms = stats::mean_se(vals);
    out.exponents.push_back(ms.mean);
    out.stderrs.push_back(ms.se);
  }
  for (const auto& r : runs) {
    out.reortho_stride = std::min(out.reortho_stride, r.final_stride);
    for (std::size_t b = 0; b < nb; ++b) sums.push_back(r.batch_rates.row(static_cast<Eigen::Index>(b)).sum());
  }
  out.sum_stderr = stats::mean_se(sums).se;
  return out;
}

}  // namespace iouf
