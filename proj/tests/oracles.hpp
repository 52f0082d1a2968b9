#pragma once

// Test-only reference computations. These deliberately avoid the library's
// code paths: Fock-basis sums instead of phase-space formulas, brute-force
// enumeration instead of the negative-binomial shortcut.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "covert/gaussian_state.hpp"

namespace oracle {

// Bose-Einstein photon-number distribution with mean mu.
inline double geometric_pmf(double mu, int i) {
  if (mu == 0.0) return i == 0 ? 1.0 : 0.0;
  return std::exp(i * std::log(mu / (1.0 + mu)) - std::log1p(mu));
}

// Smallest cutoff K with sum_{i >= K} p(i) = (mu/(1+mu))^K below tail.
inline int geometric_cutoff(double mu, double tail) {
  return static_cast<int>(std::ceil(std::log(tail) / std::log(mu / (1.0 + mu)))) + 1;
}

// Classical KL divergence between geometric laws, summed term by term.
inline double kl_geometric(double mu0, double mu1, double tail = 1e-14) {
  const int cutoff = std::max(geometric_cutoff(mu0, tail), geometric_cutoff(mu1, tail));
  double acc = 0.0;
  for (int i = 0; i < cutoff; ++i) {
    const double p = geometric_pmf(mu0, i);
    const double q = geometric_pmf(mu1, i);
    if (p > 0.0) {
      acc += p * (i * (std::log(mu0 / (1.0 + mu0)) - std::log(mu1 / (1.0 + mu1))) -
                  std::log1p(mu0) + std::log1p(mu1));
    }
  }
  return acc;
}

// Fidelity of commuting Fock-diagonal thermal states: sum sqrt(p_i q_i).
inline double bhattacharyya_thermal(double mu0, double mu1, double tail = 1e-16) {
  const int cutoff = std::max(geometric_cutoff(mu0, tail), geometric_cutoff(mu1, tail));
  double acc = 0.0;
  for (int i = 0; i < cutoff; ++i) {
    acc += std::sqrt(geometric_pmf(mu0, i) * geometric_pmf(mu1, i));
  }
  return acc;
}

// Same sum in closed form: 1 / (sqrt((1+a)(1+b)) - sqrt(ab)).
inline double thermal_fidelity_closed(double a, double b) {
  return 1.0 / (std::sqrt((1.0 + a) * (1.0 + b)) - std::sqrt(a * b));
}

// |<alpha|beta>| for coherent states.
inline double coherent_overlap(double ar, double ai, double br, double bi) {
  const double dr = ar - br;
  const double di = ai - bi;
  return std::exp(-(dr * dr + di * di) / 2.0);
}

// 1/2 (1 - TV/2) between n-fold products of geometric laws, by enumerating
// every per-mode count vector with entries below `cutoff`.
inline double brute_force_discrimination_error(int n, double mu0, double mu1,
                                               int cutoff) {
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  double tv = 0.0;
  for (;;) {
    double p = 1.0;
    double q = 1.0;
    for (int k : counts) {
      p *= geometric_pmf(mu0, k);
      q *= geometric_pmf(mu1, k);
    }
    tv += std::abs(p - q);
    std::size_t pos = 0;
    while (pos < counts.size() && ++counts[pos] == cutoff) counts[pos++] = 0;
    if (pos == counts.size()) break;
  }
  return 0.5 * (1.0 - 0.5 * tv);
}

// Random physical Gaussian state: V = S diag(nu) S^T with symplectic
// eigenvalues nu >= 1/2 and S a product of phase rotations, single-mode
// squeezers and (for two modes) a beamsplitter.
inline covert::gaussian::GaussianState random_state(std::mt19937_64& gen,
                                                    std::size_t modes) {
  using Eigen::MatrixXd;
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> squeeze(-1.0, 1.0);
  std::uniform_real_distribution<double> excess(0.0, 2.0);
  std::normal_distribution<double> shift(0.0, 1.5);
  const auto m = static_cast<Eigen::Index>(modes);

  auto rotation = [&](Eigen::Index k, double t) {
    MatrixXd x = MatrixXd::Identity(2 * m, 2 * m);
    x(k, k) = std::cos(t);
    x(k, k + m) = std::sin(t);
    x(k + m, k) = -std::sin(t);
    x(k + m, k + m) = std::cos(t);
    return x;
  };
  auto squeezer = [&](Eigen::Index k, double r) {
    MatrixXd x = MatrixXd::Identity(2 * m, 2 * m);
    x(k, k) = std::exp(r);
    x(k + m, k + m) = std::exp(-r);
    return x;
  };
  MatrixXd s = MatrixXd::Identity(2 * m, 2 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    s = rotation(k, angle(gen)) * squeezer(k, squeeze(gen)) *
        rotation(k, angle(gen)) * s;
  }
  if (m == 2) {
    const double t = angle(gen);
    MatrixXd bs = MatrixXd::Identity(4, 4);
    const double c = std::cos(t);
    const double sn = std::sin(t);
    bs(0, 0) = c; bs(0, 1) = sn; bs(1, 0) = -sn; bs(1, 1) = c;
    bs(2, 2) = c; bs(2, 3) = sn; bs(3, 2) = -sn; bs(3, 3) = c;
    s = bs * s;
    s = rotation(0, angle(gen)) * squeezer(1, squeeze(gen)) * s;
  }
  Eigen::VectorXd nu(2 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    nu(k) = nu(k + m) = 0.5 + excess(gen);
  }
  Eigen::VectorXd d(2 * m);
  for (Eigen::Index k = 0; k < 2 * m; ++k) d(k) = shift(gen);
  return covert::gaussian::GaussianState::create(s * nu.asDiagonal() * s.transpose(), d);
}

}  // namespace oracle
