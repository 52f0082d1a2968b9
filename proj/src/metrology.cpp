#include "covert/metrology.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "covert/errors.hpp"

namespace covert::metrology {

namespace {

void require_nbar(double nbar_s) {
  if (!(nbar_s >= 0.0) || !std::isfinite(nbar_s)) {
    throw InvalidArgument("nbar_s must be finite and nonnegative");
  }
}

void require_modes(long long n) {
  if (n < 1) throw InvalidArgument("mode count n must be at least 1");
}

// Denominator factor shared by the n-mode bounds: n (1 + nbar_b (1-eta)) +
// eta <N_S>.
double signal_factor(double n_s_total, double n, const ChannelParams& ch) {
  const double eta = ch.eta();
  return n * (1.0 + ch.nbar_b() * (1.0 - eta)) + eta * n_s_total;
}

}  // namespace

ProbeFamily::ProbeFamily(ProbeKind kind, double nbar_s, ChannelParams channel,
                         ProbeOrder order)
    : kind_(kind), nbar_s_(nbar_s), channel_(channel), order_(order) {
  require_nbar(nbar_s);
}

GaussianState ProbeFamily::input_state() const {
  switch (kind_) {
    case ProbeKind::coherent:
      return gaussian::make_coherent(std::sqrt(nbar_s_), 0.0);
    case ProbeKind::tmsv:
      return gaussian::make_tmsv(nbar_s_);
  }
  throw InvalidArgument("unknown probe kind");
}

GaussianState ProbeFamily::state_at(double theta) const {
  const GaussianState input = input_state();
  if (order_ == ProbeOrder::phase_then_channel) {
    return gaussian::apply_loss_thermal(gaussian::apply_phase(input, theta, 0),
                                        channel_, 0);
  }
  return gaussian::apply_phase(gaussian::apply_loss_thermal(input, channel_, 0),
                               theta, 0);
}

void MomentSpec::validate() const {
  if (!std::isfinite(n_s_total) || n_s_total < 0.0) {
    throw InvalidArgument("<N_S> must be finite and nonnegative");
  }
  if (!std::isfinite(var_n_s) || var_n_s < 0.0) {
    throw InvalidArgument("<Delta N_S^2> must be finite and nonnegative");
  }
  require_modes(n);
}

double qfi_numeric(const ProbeFamily& family, double theta0, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InvalidArgument("finite-difference step must be positive");
  }
  const double h4 = step / 4.0;
  if (h4 * h4 < 1e3 * std::numeric_limits<double>::epsilon()) {
    std::ostringstream msg;
    msg << "finite-difference step " << step
        << " is too small to resolve the fidelity curvature";
    throw StepUnderflow(msg.str());
  }
  const GaussianState center = family.state_at(theta0);
  auto second_difference = [&](double h) {
    const double f_plus = gaussian::fidelity(center, family.state_at(theta0 + h));
    const double f_minus = gaussian::fidelity(center, family.state_at(theta0 - h));
    return 4.0 * ((1.0 - f_plus) + (1.0 - f_minus)) / (h * h);
  };
  const double d1 = second_difference(step);
  const double d2 = second_difference(step / 2.0);
  const double d3 = second_difference(h4);
  const double r1 = (4.0 * d2 - d1) / 3.0;
  const double r2 = (4.0 * d3 - d2) / 3.0;
  const double j = (16.0 * r2 - r1) / 15.0;
  return j < 0.0 ? 0.0 : j;
}

double qfi_coherent(double nbar_s, const ChannelParams& ch) {
  require_nbar(nbar_s);
  const double eta = ch.eta();
  return 4.0 * nbar_s * eta / (1.0 + 2.0 * ch.nbar_b() * (1.0 - eta));
}

double qfi_tmsv(double nbar_s, const ChannelParams& ch) {
  require_nbar(nbar_s);
  const double eta = ch.eta();
  const double nb = ch.nbar_b();
  return 4.0 * nbar_s * (nbar_s + 1.0) * eta /
         (1.0 + nb * (1.0 - eta) + nbar_s * (1.0 - eta) * (1.0 + 2.0 * nb));
}

double qfi_tmsv_xi(double xi, const ChannelParams& ch) {
  if (!std::isfinite(xi)) throw InvalidArgument("xi must be finite");
  const double eta = ch.eta();
  const double s = std::sinh(2.0 * xi);
  return 2.0 * eta * s * s /
         (1.0 + eta + (1.0 + 2.0 * ch.nbar_b()) * (1.0 - eta) * std::cosh(2.0 * xi));
}

double qfi_upper_bound(const MomentSpec& spec, const ChannelParams& ch) {
  spec.validate();
  const double eta = ch.eta();
  const double nb = ch.nbar_b();
  const double n = static_cast<double>(spec.n);
  const double mean = spec.n_s_total;
  const double var = spec.var_n_s;
  const double a = signal_factor(mean, n, ch);
  const double denom = eta * mean * a +
                       (1.0 - eta) * eta * var * mean * (1.0 + 2.0 * nb) -
                       (1.0 - eta) * eta * var * n * nb * (1.0 + nb) +
                       (1.0 - eta) * n * var * (1.0 + nb) * (1.0 + nb);
  if (!(denom > 0.0)) {
    std::ostringstream msg;
    msg << "QFI upper bound denominator is " << denom << " (<N_S>=" << mean
        << ", var=" << var << ", n=" << spec.n << ", eta=" << eta
        << ", nbar_b=" << nb << ")";
    throw DomainError(msg.str());
  }
  return 4.0 * eta * mean * var * a / denom;
}

double qfi_upper_bound_limit(double n_s_total, long long n,
                             const ChannelParams& ch) {
  if (!(n_s_total >= 0.0) || !std::isfinite(n_s_total)) {
    throw InvalidArgument("<N_S> must be finite and nonnegative");
  }
  require_modes(n);
  const double eta = ch.eta();
  if (eta >= 1.0 - 1e-9) {
    throw DomainError("large-variance QFI bound diverges as eta -> 1");
  }
  const double nb = ch.nbar_b();
  const double nd = static_cast<double>(n);
  const double d_limit = (1.0 + nb) * nd * (1.0 + (1.0 - eta) * nb) +
                         eta * (1.0 + 2.0 * nb) * n_s_total;
  return 4.0 * eta * n_s_total * signal_factor(n_s_total, nd, ch) /
         ((1.0 - eta) * d_limit);
}

double qcrlb_mse(double j_single_mode, long long n) {
  if (!(j_single_mode > 0.0)) {
    throw DomainError("Cramer-Rao bound needs a positive Fisher information");
  }
  require_modes(n);
  return 1.0 / (static_cast<double>(n) * j_single_mode);
}

double QfiReport::mse_lower_bound(long long n) const {
  return qcrlb_mse(j_closed.value_or(j_numeric), n);
}

QfiReport qfi_report(const ProbeFamily& family, double theta0, double step,
                     const std::optional<MomentSpec>& moments) {
  QfiReport report;
  report.j_numeric = qfi_numeric(family, theta0, step);
  report.j_closed = family.kind() == ProbeKind::coherent
                        ? qfi_coherent(family.nbar_s(), family.channel())
                        : qfi_tmsv(family.nbar_s(), family.channel());
  if (moments) report.c_q_bound = qfi_upper_bound(*moments, family.channel());
  return report;
}

CovertConstants covert_constants(const ChannelParams& ch) {
  const double eta = ch.eta();
  const double nb = ch.nbar_b();
  const double root = std::sqrt(eta * nb * (1.0 + eta * nb));
  const double x = nb * (1.0 - eta);
  CovertConstants c;
  c.c_het = (1.0 - eta) * (1.0 + x) / (8.0 * eta * root);
  c.c_coh = (1.0 - eta) * (1.0 + 2.0 * x) / (16.0 * eta * root);
  c.c_sq = (1.0 - eta) * (1.0 + x) / (16.0 * eta * root);
  c.c_lb = (1.0 - eta) * (1.0 - eta) * (1.0 + nb) / (16.0 * eta * root);
  return c;
}

double c_sq_exact(double nbar_s, double epsilon, long long n,
                  const ChannelParams& ch) {
  return epsilon * std::sqrt(static_cast<double>(n)) *
         qcrlb_mse(qfi_tmsv(nbar_s, ch), n);
}

double c_lb_exact(double nbar_s, double epsilon, long long n,
                  const ChannelParams& ch) {
  const double bound =
      qfi_upper_bound_limit(static_cast<double>(n) * nbar_s, n, ch);
  if (!(bound > 0.0)) {
    throw DomainError("ultimate QFI bound vanishes at zero photon number");
  }
  return epsilon * std::sqrt(static_cast<double>(n)) / bound;
}

}  // namespace covert::metrology
