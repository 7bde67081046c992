#pragma once

#include "iouf/flow_integrator.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace iouf {

enum class Provenance { ClosedForm, QREstimate };

struct LyapunovSpectrum {
  std::vector<double> exponents;  // decreasing
  std::vector<double> stderrs;    // empty for closed form
  std::vector<int> multiplicities;
  Provenance provenance = Provenance::ClosedForm;
  // QR estimates only
  double sum_stderr = 0.0;
  std::size_t replicas = 0;
  std::size_t batches = 0;
  double T = 0.0;
  std::size_t reortho_stride = 0;  // stride in effect at the end
};

// lambda_i = (d - i) beta_N / 2 - i beta_L / 2 - c, i = 1..d.
LyapunovSpectrum closed_form_spectrum(double beta_L, double beta_N, double c, int d);
LyapunovSpectrum closed_form_spectrum(const CorrelationModel& model);

struct LyapunovDimension {
  double D = 0.0;
  int k = 0;              // distinct exponents in the positive partial sum; 0 when lambda_1 <= 0
  bool boundary = false;  // lambda_1 == 0: D = 0 by convention, not by definition
};

LyapunovDimension lyapunov_dimension_detail(const std::vector<double>& exponents,
                                            const std::vector<int>& multiplicities);
double lyapunov_dimension(const LyapunovSpectrum& spectrum);

// Running Benettin accumulation.  Feed the propagated frame (the current
// orthonormal frame pushed through the tangent flow); it is re-factored in
// place and log |R_ii| added to the running sums.
class QrAccumulator {
 public:
  explicit QrAccumulator(int d);
  // Returns the 2-norm condition number of `frame` before re-factoring.
  double reorthonormalize(Eigen::MatrixXd& frame);
  const Eigen::VectorXd& log_sums() const { return sums_; }
  void reset_sums() { sums_.setZero(); }

 private:
  Eigen::VectorXd sums_;
};

struct QrOptions {
  std::size_t reortho_stride = 10;
  std::size_t batches = 10;
  std::optional<Eigen::MatrixXd> initial_frame;
  double condition_limit = 1e8;
};

// One-point tangent flow per replica, replicas cfg.replica_index .. + replicas - 1.
// Standard errors by batch means over batches x replicas.
LyapunovSpectrum estimate_spectrum_qr(const SimConfig& cfg, std::size_t replicas,
                                      const QrOptions& opt = {});

}  // namespace iouf
