#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "covert/covertness.hpp"
#include "covert/gaussian_state.hpp"

namespace covert::sim {

using covertness::AdversaryModel;
using gaussian::ChannelParams;

enum class Modulation {
  fixed_amplitude,     // amplitude sqrt(nbar_s) on every mode, phase 0
  gaussian_modulated,  // alpha_i ~ CN(0, nbar_s), known to the sensor
};

/// How per-trial observations are produced. `per_mode` draws every mode's
/// I/Q readout. `sufficient_statistic` draws the combined readout directly
/// from its exact distribution: N(0, s^2/n) averaged noise for fixed
/// amplitude, and for Gaussian modulation A = sum |alpha_i|^2 ~
/// Gamma(n, nbar_s) with combined noise N(0, s^2 A). Both give the same
/// estimator distribution; the second costs O(1) per trial.
enum class SamplingPath { sufficient_statistic, per_mode };

enum class Hypothesis { h0, h1 };

/// Worker count: `requested` if nonzero, else hardware concurrency; either
/// way capped by COVERT_SENSE_THREADS when that is set to a positive integer.
unsigned resolve_thread_count(unsigned requested);

/// Sum of `values` by recursive halving, independent of thread layout.
double pairwise_sum(std::span<const double> values);

/// Half-width of the 95% Wilson score interval for successes/trials.
double wilson_halfwidth(std::uint64_t successes, std::uint64_t trials);

/// Wrap theta into (-pi, pi].
double wrap_angle(double theta);

/// atan2(mean_q, mean_i) in (-pi, pi]. Throws UndefinedAngle at the origin.
double heterodyne_estimate(double mean_i, double mean_q);

struct EstimationConfig {
  double theta_true = 0.5;
  long long n = 1;
  double nbar_s = 0.0;
  ChannelParams channel{0.5, 1.0};
  long long trials = 1;
  std::uint64_t seed = 0;
  Modulation modulation = Modulation::fixed_amplitude;
  SamplingPath sampling = SamplingPath::sufficient_statistic;
  /// Substream family; sweeps give each row its own.
  std::uint64_t stream = 0;
  /// When set, the result also reports c_het / (eps sqrt(n)).
  std::optional<double> epsilon;
  unsigned threads = 0;

  void validate() const;
};

struct EstimationResult {
  double mse = 0.0;
  double mse_stderr = 0.0;
  /// (1 + nbar_b (1 - eta)) / (2 n eta nbar_s).
  double sigma2_het_predicted = 0.0;
  std::optional<double> c_het_over_eps_sqrt_n;
  long long trials_used = 0;
};

/// Monte Carlo of the heterodyne phase estimator. Each trial: per-quadrature
/// noise (1 + nbar_b (1 - eta))/2, estimate by heterodyne_estimate of the
/// combined readout, squared wrapped error. Gaussian-modulated trials combine
/// modes as sum conj(alpha_i) X_i, i.e. each mode is derotated by its known
/// phase and weighted by its known amplitude.
EstimationResult simulate_estimation(const EstimationConfig& cfg);

/// One hypothesis of the adversary's photon-counting test.
struct AdversaryRun {
  Hypothesis hypothesis = Hypothesis::h0;
  double threshold_s = 0.0;
  /// Fraction of trials with X_tot >= S (false alarms under H0, detections
  /// under H1).
  double declared_h1_rate = 0.0;
  double wilson_halfwidth = 0.0;
  double count_mean = 0.0;
  double count_mean_stderr = 0.0;
  double count_var = 0.0;
  double count_var_stderr = 0.0;
  long long trials = 0;
};

/// Per mode: geometric thermal count with mean eta nbar_b (H0) or
/// gamma nbar_s + eta nbar_b (H1), plus Poisson(lambda) dark counts.
AdversaryRun simulate_adversary(long long n, double nbar_s,
                                const AdversaryModel& adv,
                                const ChannelParams& ch, double threshold_s,
                                long long trials, std::uint64_t seed,
                                Hypothesis hypothesis, unsigned threads = 0);

struct DetectionSimResult {
  double p_fa_hat = 0.0;
  double p_md_hat = 0.0;
  double p_e_hat = 0.0;  // (p_fa_hat + p_md_hat) / 2
  double wilson_halfwidth = 0.0;  // larger of the two rates' half-widths
  double threshold_s = 0.0;
  AdversaryRun h0;
  AdversaryRun h1;
};

/// Runs both hypotheses on independent substreams of `seed`.
DetectionSimResult simulate_detection(long long n, double nbar_s,
                                      const AdversaryModel& adv,
                                      const ChannelParams& ch,
                                      double threshold_s, long long trials,
                                      std::uint64_t seed, unsigned threads = 0);

inline constexpr double kDefaultTailTol = 1e-12;
inline constexpr long long kMaxExactModes = 1'000'000;

/// Minimum error of discriminating the n-mode thermal states with and
/// without the Gaussian-modulated probe, 1/2 (1 - TV/2). The total photon
/// count is sufficient for both product states and is negative-binomial, so
/// TV is summed over total counts until both laws' tail mass is below
/// `tail_tol`. Throws NumericalFailure if that cannot be reached.
double exact_discrimination_error(long long n, double nbar_s,
                                  const ChannelParams& ch,
                                  double tail_tol = kDefaultTailTol);

struct SweepOptions {
  double theta_true = 0.5;
  Modulation modulation = Modulation::fixed_amplitude;
  SamplingPath sampling = SamplingPath::sufficient_statistic;
  double tail_tol = kDefaultTailTol;
  unsigned threads = 0;
};

struct SweepRow {
  long long n = 0;
  double nbar_s = 0.0;
  double mse = 0.0;
  double mse_eps_sqrtn = 0.0;
  double c_het = 0.0;
  double pe_exact = 0.0;  // NaN when n exceeds kMaxExactModes
  double pe_bound = 0.0;
};

/// For each n: covert budget, estimation Monte Carlo (row i on stream i),
/// exact detection error and its lower bound.
std::vector<SweepRow> sweep_scaling(const std::vector<long long>& n_list,
                                    double epsilon, const ChannelParams& ch,
                                    long long trials, std::uint64_t seed,
                                    const SweepOptions& options = {});

}  // namespace covert::sim
