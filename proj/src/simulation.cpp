#include "covert/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include "covert/errors.hpp"
#include "covert/metrology.hpp"
#include "covert/rng.hpp"

namespace covert::sim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWilsonZ = 1.959963984540054;

// Substream families.
constexpr std::uint64_t kEstimationStream = 0x45'0000'0000ULL;
constexpr std::uint64_t kAdversaryH0Stream = 0x48'3000'0000ULL;
constexpr std::uint64_t kAdversaryH1Stream = 0x48'3100'0000ULL;

// Run body(begin, end) over [0, count) in contiguous blocks.
template <typename Body>
void parallel_blocks(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(1, count)));
  if (workers <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(count, w * chunk);
    const std::size_t end = std::min(count, begin + chunk);
    if (begin == end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

void require_trials(long long trials) {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
}

void require_modes(long long n) {
  if (n < 1) throw InvalidArgument("mode count n must be at least 1");
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
  double mean_stderr = 0.0;
  double var_stderr = 0.0;
};

MeanVar moments_of(const std::vector<double>& xs) {
  const double count = static_cast<double>(xs.size());
  MeanVar out;
  out.mean = pairwise_sum(xs) / count;
  std::vector<double> dev2(xs.size());
  std::vector<double> dev4(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - out.mean;
    dev2[i] = d * d;
    dev4[i] = dev2[i] * dev2[i];
  }
  const double m2 = pairwise_sum(dev2) / count;
  const double m4 = pairwise_sum(dev4) / count;
  out.var = xs.size() > 1 ? m2 * count / (count - 1.0) : 0.0;
  out.mean_stderr = std::sqrt(out.var / count);
  out.var_stderr = std::sqrt(std::max(0.0, m4 - m2 * m2) / count);
  return out;
}

double squared_error(double sum_i, double sum_q, double theta) {
  if (sum_i == 0.0 && sum_q == 0.0) return kPi * kPi;
  const double err = wrap_angle(heterodyne_estimate(sum_i, sum_q) - theta);
  return err * err;
}

double estimation_trial(const EstimationConfig& cfg, rng::Xoshiro256& gen) {
  const double eta = cfg.channel.eta();
  const double noise_var = (1.0 + cfg.channel.nbar_b() * (1.0 - eta)) / 2.0;
  const double noise_sd = std::sqrt(noise_var);
  const double c = std::cos(cfg.theta_true);
  const double s = std::sin(cfg.theta_true);
  const double nd = static_cast<double>(cfg.n);

  if (cfg.modulation == Modulation::fixed_amplitude) {
    const double amp = std::sqrt(eta * cfg.nbar_s);
    if (cfg.sampling == SamplingPath::sufficient_statistic) {
      const auto [zi, zq] = rng::normal_pair(gen);
      const double sd = noise_sd / std::sqrt(nd);
      return squared_error(c + sd * zi / amp, s + sd * zq / amp, cfg.theta_true);
    }
    double sum_i = 0.0;
    double sum_q = 0.0;
    for (long long k = 0; k < cfg.n; ++k) {
      const auto [zi, zq] = rng::normal_pair(gen);
      sum_i += amp * c + noise_sd * zi;
      sum_q += amp * s + noise_sd * zq;
    }
    // Y = X / sqrt(eta nbar_s), averaged over the modes.
    return squared_error(sum_i / (amp * nd), sum_q / (amp * nd), cfg.theta_true);
  }

  // Gaussian modulation, combined as sum conj(alpha_i) X_i.
  const double root_eta = std::sqrt(eta);
  if (cfg.sampling == SamplingPath::sufficient_statistic) {
    const double energy = rng::gamma(gen, nd, cfg.nbar_s);
    const auto [zi, zq] = rng::normal_pair(gen);
    const double sd = noise_sd * std::sqrt(energy);
    return squared_error(root_eta * energy * c + sd * zi,
                         root_eta * energy * s + sd * zq, cfg.theta_true);
  }
  const double alpha_sd = std::sqrt(cfg.nbar_s / 2.0);
  double sum_i = 0.0;
  double sum_q = 0.0;
  for (long long k = 0; k < cfg.n; ++k) {
    const auto [gr, gi] = rng::normal_pair(gen);
    const double ar = alpha_sd * gr;
    const double ai = alpha_sd * gi;
    const auto [zi, zq] = rng::normal_pair(gen);
    // Received field sqrt(eta) alpha e^{i theta} plus noise.
    const double xi = root_eta * (ar * c - ai * s) + noise_sd * zi;
    const double xq = root_eta * (ar * s + ai * c) + noise_sd * zq;
    sum_i += ar * xi + ai * xq;
    sum_q += ar * xq - ai * xi;
  }
  return squared_error(sum_i, sum_q, cfg.theta_true);
}

// Log-weight walker over total counts for one negative-binomial law:
// P(k) proportional to C(n+k-1, k) q^k with q = mu / (1 + mu).
struct CountLaw {
  double n;
  double log_q;

  // log P(k+1) - log P(k)
  double step_up(double k) const { return std::log((n + k) / (k + 1.0)) + log_q; }
};

// Streaming log-sum-exp.
struct LogMass {
  double max = -std::numeric_limits<double>::infinity();
  double scaled = 0.0;

  void add(double lw) {
    if (lw > max) {
      scaled = scaled * std::exp(max - lw) + 1.0;
      max = lw;
    } else {
      scaled += std::exp(lw - max);
    }
  }
  double log_total() const { return max + std::log(scaled); }
};

// Upper bound on the mass beyond a point whose neighbor ratio is r < 1 and
// keeps shrinking: w r / (1 - r). Returns +inf when r >= 1.
double log_geometric_tail(double lw, double log_ratio) {
  if (log_ratio >= 0.0) return std::numeric_limits<double>::infinity();
  const double r = std::exp(log_ratio);
  return lw + std::log(r / (1.0 - r));
}

}  // namespace

unsigned resolve_thread_count(unsigned requested) {
  unsigned count = requested != 0 ? requested : std::thread::hardware_concurrency();
  if (count == 0) count = 1;
  if (const char* env = std::getenv("COVERT_SENSE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) {
      count = std::min(count, static_cast<unsigned>(cap));
    }
  }
  return count;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double wilson_halfwidth(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) throw InvalidArgument("Wilson interval needs trials > 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  return kWilsonZ / (1.0 + z2 / n) *
         std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
}

double wrap_angle(double theta) {
  double r = std::remainder(theta, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double heterodyne_estimate(double mean_i, double mean_q) {
  if (mean_i == 0.0 && mean_q == 0.0) {
    throw UndefinedAngle("phase of a zero I/Q vector is undefined");
  }
  return std::atan2(mean_q, mean_i);
}

void EstimationConfig::validate() const {
  if (!(theta_true > -kPi / 2 && theta_true < kPi / 2)) {
    throw InvalidArgument("theta_true must lie in (-pi/2, pi/2)");
  }
  require_modes(n);
  if (!(nbar_s > 0.0) || !std::isfinite(nbar_s)) {
    throw InvalidArgument("nbar_s must be positive and finite");
  }
  require_trials(trials);
  if (epsilon && !(*epsilon > 0.0 && *epsilon < 0.5)) {
    throw InvalidArgument("epsilon must lie strictly inside (0, 1/2)");
  }
}

EstimationResult simulate_estimation(const EstimationConfig& cfg) {
  cfg.validate();
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<double> sq(trials);
  const std::uint64_t stream = kEstimationStream + cfg.stream;
  parallel_blocks(trials, resolve_thread_count(cfg.threads),
                  [&](std::size_t begin, std::size_t end) {
                    for (std::size_t t = begin; t < end; ++t) {
                      auto gen = rng::substream(cfg.seed, stream, t);
                      sq[t] = estimation_trial(cfg, gen);
                    }
                  });
  const MeanVar mv = moments_of(sq);
  const double eta = cfg.channel.eta();
  EstimationResult out;
  out.mse = mv.mean;
  out.mse_stderr = mv.mean_stderr;
  out.sigma2_het_predicted = (1.0 + cfg.channel.nbar_b() * (1.0 - eta)) /
                             (2.0 * static_cast<double>(cfg.n) * eta * cfg.nbar_s);
  if (cfg.epsilon) {
    out.c_het_over_eps_sqrt_n = metrology::covert_constants(cfg.channel).c_het /
                                (*cfg.epsilon * std::sqrt(static_cast<double>(cfg.n)));
  }
  out.trials_used = cfg.trials;
  return out;
}

AdversaryRun simulate_adversary(long long n, double nbar_s,
                                const AdversaryModel& adv,
                                const ChannelParams& ch, double threshold_s,
                                long long trials, std::uint64_t seed,
                                Hypothesis hypothesis, unsigned threads) {
  require_modes(n);
  require_trials(trials);
  if (!(nbar_s >= 0.0) || !std::isfinite(nbar_s)) {
    throw InvalidArgument("nbar_s must be finite and nonnegative");
  }
  if (!std::isfinite(threshold_s)) throw InvalidArgument("threshold must be finite");
  adv.check_against(ch);

  const double background = covertness::background_mean(ch);
  const double mean = hypothesis == Hypothesis::h0
                          ? background
                          : adv.gamma() * nbar_s + background;
  const std::uint64_t stream =
      hypothesis == Hypothesis::h0 ? kAdversaryH0Stream : kAdversaryH1Stream;
  const double lambda = adv.lambda();

  const auto count = static_cast<std::size_t>(trials);
  std::vector<double> totals(count);
  parallel_blocks(count, resolve_thread_count(threads),
                  [&](std::size_t begin, std::size_t end) {
                    for (std::size_t t = begin; t < end; ++t) {
                      auto gen = rng::substream(seed, stream, t);
                      std::uint64_t total = 0;
                      for (long long k = 0; k < n; ++k) {
                        total += rng::geometric(gen, mean);
                        if (lambda > 0.0) total += rng::poisson(gen, lambda);
                      }
                      totals[t] = static_cast<double>(total);
                    }
                  });

  std::uint64_t declared = 0;
  for (double x : totals) declared += x >= threshold_s ? 1 : 0;
  const MeanVar mv = moments_of(totals);

  AdversaryRun run;
  run.hypothesis = hypothesis;
  run.threshold_s = threshold_s;
  run.declared_h1_rate = static_cast<double>(declared) / static_cast<double>(count);
  run.wilson_halfwidth = wilson_halfwidth(declared, count);
  run.count_mean = mv.mean;
  run.count_mean_stderr = mv.mean_stderr;
  run.count_var = mv.var;
  run.count_var_stderr = mv.var_stderr;
  run.trials = trials;
  return run;
}

DetectionSimResult simulate_detection(long long n, double nbar_s,
                                      const AdversaryModel& adv,
                                      const ChannelParams& ch,
                                      double threshold_s, long long trials,
                                      std::uint64_t seed, unsigned threads) {
  DetectionSimResult out;
  out.h0 = simulate_adversary(n, nbar_s, adv, ch, threshold_s, trials, seed,
                              Hypothesis::h0, threads);
  out.h1 = simulate_adversary(n, nbar_s, adv, ch, threshold_s, trials, seed,
                              Hypothesis::h1, threads);
  out.threshold_s = threshold_s;
  out.p_fa_hat = out.h0.declared_h1_rate;
  out.p_md_hat = 1.0 - out.h1.declared_h1_rate;
  out.p_e_hat = 0.5 * (out.p_fa_hat + out.p_md_hat);
  out.wilson_halfwidth = std::max(out.h0.wilson_halfwidth, out.h1.wilson_halfwidth);
  return out;
}

double exact_discrimination_error(long long n, double nbar_s,
                                  const ChannelParams& ch, double tail_tol) {
  require_modes(n);
  if (n > kMaxExactModes) {
    throw InvalidArgument("exact discrimination error supports n <= 1e6");
  }
  if (!(nbar_s >= 0.0) || !std::isfinite(nbar_s)) {
    throw InvalidArgument("nbar_s must be finite and nonnegative");
  }
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) {
    throw InvalidArgument("tail tolerance must lie in (0,1)");
  }
  if (nbar_s == 0.0) return 0.5;

  const double nd = static_cast<double>(n);
  const double mu0 = covertness::background_mean(ch);
  const double mu1 = covertness::probed_mean(nbar_s, ch);
  const CountLaw laws[2] = {{nd, std::log(mu0 / (1.0 + mu0))},
                            {nd, std::log(mu1 / (1.0 + mu1))}};

  // Log-weights relative to an arbitrary common start at k0, walked outward.
  const double k0 = std::floor(nd * 0.5 * (mu0 + mu1));
  std::vector<double> up[2];    // k0, k0+1, ...
  std::vector<double> down[2];  // k0-1, k0-2, ...
  LogMass mass[2];
  for (int j = 0; j < 2; ++j) {
    up[j].push_back(0.0);
    mass[j].add(0.0);
  }

  constexpr std::size_t kMaxTerms = 10'000'000;
  const double budget = tail_tol / 4.0;
  double right_tail[2] = {0.0, 0.0};
  double left_tail[2] = {0.0, 0.0};
  bool right_done = false;
  bool left_done = k0 == 0.0;

  while (!(right_done && left_done)) {
    if (up[0].size() + down[0].size() > kMaxTerms) {
      const double tail = right_tail[0] + right_tail[1] + left_tail[0] + left_tail[1];
      std::ostringstream msg;
      msg << "negative-binomial truncation did not converge after " << kMaxTerms
          << " terms; ";
      if (std::isfinite(tail)) {
        msg << "tail mass " << tail;
      } else {
        msg << "the walk had not yet passed the mode";
      }
      throw NumericalFailure(msg.str());
    }
    if (!right_done) {
      const double k = k0 + static_cast<double>(up[0].size() - 1);
      bool ok = true;
      for (int j = 0; j < 2; ++j) {
        const double next = up[j].back() + laws[j].step_up(k);
        up[j].push_back(next);
        mass[j].add(next);
        const double tail =
            std::exp(log_geometric_tail(next, laws[j].step_up(k + 1.0)) -
                     mass[j].log_total());
        right_tail[j] = tail;
        ok = ok && tail < budget;
      }
      right_done = ok;
    }
    if (!left_done) {
      const double k = k0 - static_cast<double>(down[0].size()) - 1.0;  // new point
      bool ok = true;
      for (int j = 0; j < 2; ++j) {
        const double prev = down[j].empty() ? up[j].front() : down[j].back();
        const double next = prev - laws[j].step_up(k);
        down[j].push_back(next);
        mass[j].add(next);
        double tail = 0.0;
        if (k > 0.0) {
          // w(k-1) / w(k) = k / ((n + k - 1) q)
          tail = std::exp(log_geometric_tail(next, -laws[j].step_up(k - 1.0)) -
                          mass[j].log_total());
        }
        left_tail[j] = tail;
        ok = ok && tail < budget;
      }
      left_done = ok || k == 0.0;
    }
  }

  const double total_tail = right_tail[0] + right_tail[1] + left_tail[0] + left_tail[1];
  if (!(total_tail < tail_tol)) {
    std::ostringstream msg;
    msg << "negative-binomial tail mass " << total_tail << " exceeds tolerance";
    throw NumericalFailure(msg.str());
  }

  const double log_norm[2] = {mass[0].log_total(), mass[1].log_total()};
  std::vector<double> diffs;
  diffs.reserve(up[0].size() + down[0].size());
  for (std::size_t i = 0; i < up[0].size(); ++i) {
    diffs.push_back(std::abs(std::exp(up[0][i] - log_norm[0]) -
                             std::exp(up[1][i] - log_norm[1])));
  }
  for (std::size_t i = 0; i < down[0].size(); ++i) {
    diffs.push_back(std::abs(std::exp(down[0][i] - log_norm[0]) -
                             std::exp(down[1][i] - log_norm[1])));
  }
  const double tv = std::min(2.0, pairwise_sum(diffs));
  return 0.5 * (1.0 - 0.5 * tv);
}

std::vector<SweepRow> sweep_scaling(const std::vector<long long>& n_list,
                                    double epsilon, const ChannelParams& ch,
                                    long long trials, std::uint64_t seed,
                                    const SweepOptions& options) {
  if (n_list.empty()) throw InvalidArgument("sweep needs at least one n");
  if (!std::is_sorted(n_list.begin(), n_list.end())) {
    throw InvalidArgument("sweep n values must be ascending");
  }
  const double c_het = metrology::covert_constants(ch).c_het;
  std::vector<SweepRow> rows;
  rows.reserve(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const long long n = n_list[i];
    const auto budget = covertness::covert_budget(epsilon, n, ch);
    EstimationConfig cfg{.theta_true = options.theta_true,
                         .n = n,
                         .nbar_s = budget.nbar_s,
                         .channel = ch,
                         .trials = trials,
                         .seed = seed,
                         .modulation = options.modulation,
                         .sampling = options.sampling,
                         .stream = i,
                         .epsilon = epsilon,
                         .threads = options.threads};
    const EstimationResult est = simulate_estimation(cfg);
    SweepRow row;
    row.n = n;
    row.nbar_s = budget.nbar_s;
    row.mse = est.mse;
    row.mse_eps_sqrtn = est.mse * epsilon * std::sqrt(static_cast<double>(n));
    row.c_het = c_het;
    row.pe_exact = n <= kMaxExactModes
                       ? exact_discrimination_error(n, budget.nbar_s, ch, options.tail_tol)
                       : std::numeric_limits<double>::quiet_NaN();
    row.pe_bound = covertness::detection_error_lower_bound(budget.nbar_s, n, ch);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace covert::sim
