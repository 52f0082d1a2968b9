#pragma once

#include "covert/gaussian_state.hpp"
#include "covert/metrology.hpp"

namespace covert::covertness {

using gaussian::ChannelParams;
using metrology::MomentSpec;

/// Per-mode mean photon number the adversary sees without a probe: eta nbar_b.
double background_mean(const ChannelParams& ch);

/// Per-mode mean with a probe of nbar_s photons, losing 1-eta to the adversary.
double probed_mean(double nbar_s, const ChannelParams& ch);

/// Relative entropy D(rho_0 || rho_1) between the thermal states the
/// adversary observes without and with the Gaussian-modulated probe.
/// Both are Fock-diagonal, so this is the KL divergence of two geometric
/// photon-count laws.
double qre_thermal(double nbar_s, const ChannelParams& ch);

/// Second-order Taylor upper bound (1-eta)^2 nbar_s^2 / (2 eta nbar_b (1 + eta nbar_b)).
double qre_quadratic_bound(double nbar_s, const ChannelParams& ch);

/// max(0, 1/2 - (1-eta) nbar_s sqrt(n) / (4 sqrt(eta nbar_b (1 + eta nbar_b)))).
double detection_error_lower_bound(double nbar_s, long long n,
                                   const ChannelParams& ch);

/// Pinsker bound with the exact relative entropy, 1/2 - sqrt(n D / 8),
/// unclamped.
double pinsker_bound(double nbar_s, long long n, const ChannelParams& ch);

struct CovertBudget {
  double epsilon = 0.0;
  long long n = 0;
  double nbar_s = 0.0;
};

/// Per-mode photon budget that keeps the detection error at least 1/2 - eps.
CovertBudget covert_budget(double epsilon, long long n, const ChannelParams& ch);

enum class VarianceConvention {
  as_printed,     // eta^2 (nbar_b + nbar_b^2) per mode
  bose_einstein,  // eta nbar_b (1 + eta nbar_b) per mode
};

/// The adversary captures a fraction gamma <= 1 - eta of the probe and
/// counts photons with Poisson dark counts at `lambda` per mode.
class AdversaryModel {
 public:
  AdversaryModel(double gamma, double lambda,
                 VarianceConvention convention = VarianceConvention::as_printed);

  /// gamma = 1 - eta, no dark counts.
  static AdversaryModel full_capture(const ChannelParams& ch, double lambda = 0.0,
                                     VarianceConvention convention =
                                         VarianceConvention::as_printed);

  double gamma() const noexcept { return gamma_; }
  double lambda() const noexcept { return lambda_; }
  VarianceConvention convention() const noexcept { return convention_; }

  /// Throws InvalidArgument unless gamma <= 1 - eta.
  void check_against(const ChannelParams& ch) const;

 private:
  double gamma_;
  double lambda_;
  VarianceConvention convention_;
};

struct NoiseMoments {
  double mean_total = 0.0;  // n (lambda + eta nbar_b)
  double var_total = 0.0;
};

NoiseMoments adversary_noise_moments(long long n, const AdversaryModel& adv,
                                     const ChannelParams& ch);

struct DetectionBounds {
  double p_fa_bound = 0.0;
  double p_md_bound = 1.0;
  double threshold_s = 0.0;
  /// Error probability of this detector is at most (p_fa + p_md) / 2.
  double p_e_upper = 1.0;
  /// Lower bound on any detector's error for a Gaussian-modulated probe with
  /// the same per-mode mean, from detection_error_lower_bound.
  double p_e_lower = 0.0;
  /// Set when gamma differs from 1 - eta, so the signal terms use gamma
  /// rather than the full-capture 1 - eta.
  bool gamma_generalized = false;
};

/// Chebyshev threshold detector. The threshold S = n nbar_N +
/// sqrt(var_N / p_fa_target) fixes the false-alarm bound at p_fa_target;
/// the missed-detection bound is vacuous (1) unless the captured signal mean
/// exceeds sqrt(var_N / p_fa_target). `spec.n` must equal `n`.
DetectionBounds chebyshev_detector(long long n, const MomentSpec& spec,
                                   const AdversaryModel& adv,
                                   const ChannelParams& ch, double p_fa_target);

}  // namespace covert::covertness
