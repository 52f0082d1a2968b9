#pragma once

#include <optional>

#include "covert/gaussian_state.hpp"

namespace covert::metrology {

using gaussian::ChannelParams;
using gaussian::GaussianState;

enum class ProbeKind { coherent, tmsv };

/// Order in which the unknown phase and the channel act on the probe mode.
/// The QFI does not depend on it; the alternative order exists so that this
/// can be checked.
enum class ProbeOrder { phase_then_channel, channel_then_phase };

/// A probe family: theta -> state after the phase rotation and the lossy
/// thermal channel on the probe mode (mode 0). For TMSV probes mode 1 is the
/// reference and is left untouched.
class ProbeFamily {
 public:
  ProbeFamily(ProbeKind kind, double nbar_s, ChannelParams channel,
              ProbeOrder order = ProbeOrder::phase_then_channel);

  ProbeKind kind() const noexcept { return kind_; }
  double nbar_s() const noexcept { return nbar_s_; }
  const ChannelParams& channel() const noexcept { return channel_; }
  ProbeOrder order() const noexcept { return order_; }

  /// The probe before any phase or loss.
  GaussianState input_state() const;
  GaussianState state_at(double theta) const;

 private:
  ProbeKind kind_;
  double nbar_s_;
  ChannelParams channel_;
  ProbeOrder order_;
};

/// Total photon-number moments of an n-mode probe.
struct MomentSpec {
  double n_s_total = 0.0;  // <N_S>
  double var_n_s = 0.0;    // <Delta N_S^2>
  long long n = 1;

  void validate() const;
};

inline constexpr double kDefaultQfiStep = 2e-2;

/// QFI from the curvature of the fidelity, J = -4 F''(0), using the central
/// second difference D(h) = 4 (2 - F(h) - F(-h)) / h^2 at h, h/2, h/4 and two
/// rounds of Richardson extrapolation. Negative round-off is clamped to 0.
/// Throws StepUnderflow when h^2 < 1e3 * machine epsilon.
double qfi_numeric(const ProbeFamily& family, double theta0,
                   double step = kDefaultQfiStep);

/// 4 nbar_s eta / (1 + 2 nbar_b (1 - eta)).
double qfi_coherent(double nbar_s, const ChannelParams& ch);

/// 4 nbar_s (nbar_s + 1) eta / (1 + nbar_b (1-eta) + nbar_s (1-eta)(1+2 nbar_b)).
double qfi_tmsv(double nbar_s, const ChannelParams& ch);

/// The same quantity in terms of the squeezing magnitude xi:
/// 2 eta sinh^2(2 xi) / (1 + eta + (1 + 2 nbar_b)(1 - eta) cosh(2 xi)).
double qfi_tmsv_xi(double xi, const ChannelParams& ch);

/// Upper bound C_{Q,n} on the n-mode QFI for a probe with the given total
/// photon-number mean and variance. Throws DomainError if the denominator
/// is not positive.
double qfi_upper_bound(const MomentSpec& spec, const ChannelParams& ch);

/// The var -> infinity limit of qfi_upper_bound. Throws DomainError for
/// eta >= 1 - 1e-9 where the bound diverges.
double qfi_upper_bound_limit(double n_s_total, long long n,
                             const ChannelParams& ch);

/// Quantum Cramer-Rao bound 1 / (n J) for n independent probe modes.
double qcrlb_mse(double j_single_mode, long long n);

struct QfiReport {
  double j_numeric = 0.0;
  std::optional<double> j_closed;
  std::optional<double> c_q_bound;

  /// 1 / (n J), preferring the closed form when available.
  double mse_lower_bound(long long n) const;
};

QfiReport qfi_report(const ProbeFamily& family, double theta0 = 0.0,
                     double step = kDefaultQfiStep,
                     const std::optional<MomentSpec>& moments = std::nullopt);

/// Closed-form constants K of the covert MSE scaling K / (eps sqrt(n)).
struct CovertConstants {
  double c_het = 0.0;  // coherent probe, ideal heterodyne receiver
  double c_coh = 0.0;  // coherent probe, optimal receiver
  double c_sq = 0.0;   // TMSV probe, leading order
  double c_lb = 0.0;   // any probe, leading order
};

CovertConstants covert_constants(const ChannelParams& ch);

/// eps sqrt(n) * qcrlb_mse(qfi_tmsv(nbar_s), n). With nbar_s set to the
/// covert budget for (epsilon, n) this tends to c_sq as n grows.
double c_sq_exact(double nbar_s, double epsilon, long long n,
                  const ChannelParams& ch);

/// eps sqrt(n) / qfi_upper_bound_limit(n nbar_s, n). Tends to c_lb under the
/// covert budget.
double c_lb_exact(double nbar_s, double epsilon, long long n,
                  const ChannelParams& ch);

}  // namespace covert::metrology
