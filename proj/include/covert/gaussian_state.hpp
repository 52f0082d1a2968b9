#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

namespace covert::gaussian {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lossy thermal-noise bosonic channel: a beamsplitter of transmissivity
/// `eta` mixing the signal with a thermal environment of mean photon number
/// `nbar_b`. Construction enforces eta in (0,1) and nbar_b > 0.
class ChannelParams {
 public:
  ChannelParams(double eta, double nbar_b);

  double eta() const noexcept { return eta_; }
  double nbar_b() const noexcept { return nbar_b_; }

 private:
  double eta_;
  double nbar_b_;
};

/// Symplectic form [[0, 1], [-1, 0]] (x) 1_m in (q_1..q_m, p_1..p_m) ordering.
Matrix symplectic_form(std::size_t modes);

/// Gaussian bosonic state in phase space.
///
/// Quadratures are ordered (q_1..q_m, p_1..p_m) and are dimensionless with
/// vacuum variance 1/2. Instances are immutable and always physical: the
/// factory checks symmetry, finiteness and cov + (i/2) Omega >= 0.
class GaussianState {
 public:
  static constexpr double kSymmetryTol = 1e-12;
  static constexpr double kPhysicalityTol = 1e-9;

  /// Throws InvalidArgument for shape/symmetry/finiteness problems and
  /// PhysicalityViolation when the uncertainty relation fails.
  static GaussianState create(Matrix cov, Vector disp);

  std::size_t modes() const noexcept { return modes_; }
  const Matrix& cov() const noexcept { return cov_; }
  const Vector& disp() const noexcept { return disp_; }

  /// Mean photon number of one mode: (V_qq + V_pp - 1)/2 + (d_q^2 + d_p^2)/2.
  double mean_photon_number(std::size_t mode) const;

  /// Smallest eigenvalue of cov + (i/2) Omega.
  double min_uncertainty_eigenvalue() const;

  /// Debug dump: {"modes": m, "cov": [row-major], "disp": [...]}.
  std::string to_json() const;
  static GaussianState from_json(const std::string& text);

 private:
  GaussianState(std::size_t modes, Matrix cov, Vector disp)
      : modes_(modes), cov_(std::move(cov)), disp_(std::move(disp)) {}

  std::size_t modes_;
  Matrix cov_;
  Vector disp_;
};

GaussianState make_coherent(double alpha_re, double alpha_im);

/// Two-mode squeezed vacuum with per-mode mean photon number `nbar_s`.
GaussianState make_tmsv(double nbar_s);

GaussianState make_thermal(double nbar);

/// Phase rotation X_theta = [[cos, sin], [-sin, cos]] on the (q_mode, p_mode)
/// plane; identity on the other modes.
GaussianState apply_phase(const GaussianState& state, double theta,
                          std::size_t mode);

/// Lossy thermal-noise channel on one mode:
/// cov -> X cov X^T + Y with X = sqrt(eta), Y = (1 - eta)(nbar_b + 1/2) on
/// that mode, disp -> sqrt(eta) disp. The environment mean is zero.
GaussianState apply_loss_thermal(const GaussianState& state,
                                 const ChannelParams& ch, std::size_t mode);

/// Amplitude (square-root) fidelity between two Gaussian states,
/// F = F_tot / det(V1+V2)^{1/4} * exp(-1/4 d^T (V1+V2)^{-1} d). For pure
/// states this is |<psi1|psi2>|.
///
/// Throws InvalidArgument on mode-count mismatch, NumericalFailure when
/// V1+V2 is singular (condition number above 1e12) or the W spectrum has
/// a non-negligible imaginary part, and PhysicalityViolation when some
/// w_k < 1 - 1e-6.
double fidelity(const GaussianState& s1, const GaussianState& s2);

}  // namespace covert::gaussian
