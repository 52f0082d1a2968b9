#include "covert/covertness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covert/errors.hpp"

namespace covert::covertness {

namespace {

void require_nbar(double nbar_s) {
  if (!(nbar_s >= 0.0) || !std::isfinite(nbar_s)) {
    throw InvalidArgument("nbar_s must be finite and nonnegative");
  }
}

void require_modes(long long n) {
  if (n < 1) throw InvalidArgument("mode count n must be at least 1");
}

// sqrt(eta nbar_b (1 + eta nbar_b)), the thermal standard deviation that
// sets the covert scale.
double thermal_root(const ChannelParams& ch) {
  const double mu = background_mean(ch);
  return std::sqrt(mu * (1.0 + mu));
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

double background_mean(const ChannelParams& ch) { return ch.eta() * ch.nbar_b(); }

double probed_mean(double nbar_s, const ChannelParams& ch) {
  return (1.0 - ch.eta()) * nbar_s + background_mean(ch);
}

double qre_thermal(double nbar_s, const ChannelParams& ch) {
  require_nbar(nbar_s);
  const double mu0 = background_mean(ch);
  const double shift = (1.0 - ch.eta()) * nbar_s;
  // ln((1+mu1)/(1+mu0)) and ln(mu1/mu0) through log1p so that the two terms
  // keep their leading-order cancellation at small nbar_s.
  const double log_ratio_plus = std::log1p(shift / (1.0 + mu0));
  const double log_ratio_mean = std::log1p(shift / mu0);
  return mu0 * (log_ratio_plus - log_ratio_mean) + log_ratio_plus;
}

double qre_quadratic_bound(double nbar_s, const ChannelParams& ch) {
  require_nbar(nbar_s);
  const double mu0 = background_mean(ch);
  const double shift = (1.0 - ch.eta()) * nbar_s;
  return shift * shift / (2.0 * mu0 * (1.0 + mu0));
}

double detection_error_lower_bound(double nbar_s, long long n,
                                   const ChannelParams& ch) {
  require_nbar(nbar_s);
  require_modes(n);
  const double drop = (1.0 - ch.eta()) * nbar_s *
                      std::sqrt(static_cast<double>(n)) / (4.0 * thermal_root(ch));
  return std::max(0.0, 0.5 - drop);
}

double pinsker_bound(double nbar_s, long long n, const ChannelParams& ch) {
  require_modes(n);
  return 0.5 - std::sqrt(static_cast<double>(n) * qre_thermal(nbar_s, ch) / 8.0);
}

CovertBudget covert_budget(double epsilon, long long n, const ChannelParams& ch) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw InvalidArgument("epsilon must lie strictly inside (0, 1/2)");
  }
  require_modes(n);
  CovertBudget budget;
  budget.epsilon = epsilon;
  budget.n = n;
  budget.nbar_s = 4.0 * epsilon * thermal_root(ch) /
                  (std::sqrt(static_cast<double>(n)) * (1.0 - ch.eta()));
  return budget;
}

AdversaryModel::AdversaryModel(double gamma, double lambda,
                               VarianceConvention convention)
    : gamma_(gamma), lambda_(lambda), convention_(convention) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw InvalidArgument("captured fraction gamma must lie in (0, 1]");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("dark-count rate lambda must be nonnegative");
  }
}

AdversaryModel AdversaryModel::full_capture(const ChannelParams& ch, double lambda,
                                            VarianceConvention convention) {
  return AdversaryModel(1.0 - ch.eta(), lambda, convention);
}

void AdversaryModel::check_against(const ChannelParams& ch) const {
  // Tolerate the rounding in 1 - eta when gamma was built from it.
  if (gamma_ > (1.0 - ch.eta()) * (1.0 + 1e-15)) {
    std::ostringstream msg;
    msg << "captured fraction gamma=" << gamma_ << " exceeds 1 - eta="
        << 1.0 - ch.eta();
    throw InvalidArgument(msg.str());
  }
}

NoiseMoments adversary_noise_moments(long long n, const AdversaryModel& adv,
                                     const ChannelParams& ch) {
  require_modes(n);
  adv.check_against(ch);
  const double eta = ch.eta();
  const double nb = ch.nbar_b();
  const double nd = static_cast<double>(n);
  const double thermal_var = adv.convention() == VarianceConvention::as_printed
                                 ? eta * eta * (nb + nb * nb)
                                 : eta * nb * (1.0 + eta * nb);
  NoiseMoments m;
  m.mean_total = nd * (adv.lambda() + eta * nb);
  m.var_total = nd * adv.lambda() + nd * thermal_var;
  return m;
}

DetectionBounds chebyshev_detector(long long n, const MomentSpec& spec,
                                   const AdversaryModel& adv,
                                   const ChannelParams& ch, double p_fa_target) {
  if (!(p_fa_target > 0.0 && p_fa_target < 1.0)) {
    throw InvalidArgument("target false-alarm probability must lie in (0,1)");
  }
  spec.validate();
  if (spec.n != n) {
    throw InvalidArgument("moment spec mode count does not match n");
  }
  const NoiseMoments noise = adversary_noise_moments(n, adv, ch);
  const double margin = std::sqrt(noise.var_total / p_fa_target);

  DetectionBounds out;
  out.gamma_generalized = adv.gamma() != 1.0 - ch.eta();
  out.threshold_s = noise.mean_total + margin;
  out.p_fa_bound = margin > 0.0 ? clamp01(noise.var_total / (margin * margin)) : 1.0;

  const double signal = adv.gamma() * spec.n_s_total;
  const double gap = signal - margin;
  if (gap > 0.0) {
    const double var = noise.var_total + adv.gamma() * adv.gamma() * spec.var_n_s;
    out.p_md_bound = clamp01(var / (gap * gap));
  } else {
    out.p_md_bound = 1.0;
  }
  out.p_e_upper = clamp01(0.5 * (out.p_fa_bound + out.p_md_bound));
  out.p_e_lower = detection_error_lower_bound(
      spec.n_s_total / static_cast<double>(n), n, ch);
  return out;
}

}  // namespace covert::covertness
