#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "covert/errors.hpp"
#include "covert/gaussian_state.hpp"

using namespace covert::gaussian;
using covert::InvalidArgument;
using covert::NumericalFailure;
using covert::PhysicalityViolation;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("symplectic form is antisymmetric and squares to -1") {
  for (std::size_t m : {1u, 2u, 3u}) {
    const Matrix omega = symplectic_form(m);
    CHECK(max_abs_diff(omega, -omega.transpose()) == 0.0);
    CHECK(max_abs_diff(omega * omega, -Matrix::Identity(2 * m, 2 * m)) == 0.0);
  }
}

TEST_CASE("channel parameters are validated") {
  CHECK_NOTHROW(ChannelParams(0.5, 1.0));
  CHECK_THROWS_AS(ChannelParams(1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(ChannelParams(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(ChannelParams(0.5, 0.0), InvalidArgument);
  CHECK_THROWS_AS(ChannelParams(0.5, -1.0), InvalidArgument);
}

TEST_CASE("state factory rejects invalid covariances") {
  Matrix bad = 0.5 * Matrix::Identity(2, 2);
  bad(0, 1) = 1e-6;
  CHECK_THROWS_AS(GaussianState::create(bad, Vector::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(GaussianState::create(0.4 * Matrix::Identity(2, 2), Vector::Zero(2)),
                  PhysicalityViolation);
  CHECK_THROWS_AS(GaussianState::create(Matrix::Identity(3, 3), Vector::Zero(3)),
                  InvalidArgument);
  Vector nan_disp(2);
  nan_disp << std::nan(""), 0.0;
  CHECK_THROWS_AS(GaussianState::create(0.5 * Matrix::Identity(2, 2), nan_disp),
                  InvalidArgument);
  // Squeezed vacuum saturates the uncertainty relation and is accepted.
  Matrix sq(2, 2);
  sq << 0.5 * std::exp(1.0), 0.0, 0.0, 0.5 * std::exp(-1.0);
  CHECK_NOTHROW(GaussianState::create(sq, Vector::Zero(2)));
}

TEST_CASE("coherent states") {
  const auto vac = make_coherent(0.0, 0.0);
  CHECK(vac.modes() == 1);
  CHECK(max_abs_diff(vac.cov(), 0.5 * Matrix::Identity(2, 2)) == 0.0);
  CHECK(vac.disp().norm() == 0.0);

  const auto one = make_coherent(1.0, 0.0);
  CHECK(one.disp()(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(one.disp()(1) == 0.0);
  CHECK(max_abs_diff(one.cov(), 0.5 * Matrix::Identity(2, 2)) == 0.0);

  CHECK(make_coherent(0.0, 3.0).mean_photon_number(0) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK_THROWS_AS(make_coherent(INFINITY, 0.0), InvalidArgument);
}

TEST_CASE("two-mode squeezed vacuum") {
  CHECK(max_abs_diff(make_tmsv(0.0).cov(), 0.5 * Matrix::Identity(4, 4)) == 0.0);

  const auto s = make_tmsv(1.0);
  for (int i = 0; i < 4; ++i) CHECK(s.cov()(i, i) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(s.cov()(0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.cov()(2, 3) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.cov()(0, 2) == 0.0);

  // Matches the xi = arcsinh(sqrt(nbar)) parametrization.
  for (double nbar : {0.1, 1.0, 7.5}) {
    const double xi = std::asinh(std::sqrt(nbar));
    const auto t = make_tmsv(nbar);
    CHECK(t.cov()(0, 0) == doctest::Approx(0.5 * std::cosh(2 * xi)).epsilon(1e-13));
    CHECK(t.cov()(0, 1) == doctest::Approx(0.5 * std::sinh(2 * xi)).epsilon(1e-13));
    CHECK(t.mean_photon_number(0) == doctest::Approx(nbar).epsilon(1e-13));
    CHECK(t.mean_photon_number(1) == doctest::Approx(nbar).epsilon(1e-13));
    // Pure: both symplectic eigenvalues 1/2, so det(2V) = 1.
    CHECK((2.0 * t.cov()).determinant() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(t.min_uncertainty_eigenvalue() > -1e-12);
  }
  CHECK_THROWS_AS(make_tmsv(-0.1), InvalidArgument);
}

TEST_CASE("thermal states") {
  CHECK(max_abs_diff(make_thermal(0.0).cov(), 0.5 * Matrix::Identity(2, 2)) == 0.0);
  CHECK(max_abs_diff(make_thermal(1.0).cov(), 1.5 * Matrix::Identity(2, 2)) == 0.0);
  CHECK_THROWS_AS(make_thermal(-1.0), InvalidArgument);

  // The phase-space thermal state has the geometric Fock distribution:
  // its fidelity with the vacuum is sqrt(p(0)) = (1 + nbar)^{-1/2}, and its
  // fidelity with another thermal state is the Bhattacharyya sum.
  for (double nbar : {0.2, 1.0, 4.0}) {
    const double f_vac = fidelity(make_thermal(nbar), make_thermal(0.0));
    CHECK(f_vac == doctest::Approx(std::sqrt(oracle::geometric_pmf(nbar, 0))).epsilon(1e-12));
  }
}

TEST_CASE("phase rotation") {
  const auto c = make_coherent(1.0, 0.0);
  const auto same = apply_phase(c, 0.0, 0);
  CHECK(max_abs_diff(same.cov(), c.cov()) == 0.0);
  CHECK((same.disp() - c.disp()).norm() == 0.0);

  const auto quarter = apply_phase(c, std::numbers::pi / 2, 0);
  CHECK(std::abs(quarter.disp()(0)) < 1e-15);
  CHECK(quarter.disp()(1) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  for (double theta : {0.3, -1.2, 2.9}) {
    CHECK(max_abs_diff(apply_phase(c, theta, 0).cov(), c.cov()) < 1e-15);
  }
  CHECK_THROWS_AS(apply_phase(c, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(apply_phase(make_tmsv(1.0), 0.1, 2), InvalidArgument);
}

TEST_CASE("lossy thermal channel") {
  const ChannelParams ch(0.5, 1.0);
  const auto rotated = apply_phase(make_coherent(0.7, -0.2), 0.4, 0);
  const auto out = apply_loss_thermal(rotated, ch, 0);
  const double expected = 1.0 * (1 - 0.5) + 0.5;
  CHECK(max_abs_diff(out.cov(), expected * Matrix::Identity(2, 2)) < 1e-15);
  CHECK((out.disp() - std::sqrt(0.5) * rotated.disp()).norm() < 1e-15);

  const auto nearly_lossless =
      apply_loss_thermal(rotated, ChannelParams(1.0 - 1e-12, 3.0), 0);
  CHECK(max_abs_diff(nearly_lossless.cov(), rotated.cov()) < 1e-9);
  CHECK((nearly_lossless.disp() - rotated.disp()).norm() < 1e-9);

  const auto blocked = apply_loss_thermal(make_coherent(0, 0), ChannelParams(1e-12, 2.0), 0);
  CHECK(max_abs_diff(blocked.cov(), 2.5 * Matrix::Identity(2, 2)) < 1e-9);

  // Reference mode of a TMSV is untouched.
  const auto t = apply_loss_thermal(make_tmsv(1.0), ch, 0);
  CHECK(t.cov()(1, 1) == doctest::Approx(1.5));
  CHECK(t.cov()(3, 3) == doctest::Approx(1.5));
  CHECK(t.cov()(0, 0) == doctest::Approx(0.5 * 1.5 + 0.5 * 1.5));
  CHECK(t.cov()(0, 1) == doctest::Approx(std::sqrt(0.5) * std::sqrt(2.0)));
  CHECK_THROWS_AS(apply_loss_thermal(t, ch, 2), InvalidArgument);
}

TEST_CASE("fidelity closed-form cases") {
  // Frozen from an mpmath evaluation of the coherent-state overlap.
  CHECK(fidelity(make_coherent(1.0, 0.5), make_coherent(0.2, -0.3)) ==
        doctest::Approx(0.52729242404304849).epsilon(1e-12));
  // Frozen from a 40-digit Bhattacharyya sum for thermal 0.3 vs 1.7.
  CHECK(fidelity(make_thermal(0.3), make_thermal(1.7)) ==
        doctest::Approx(0.86254741412460149).epsilon(1e-12));

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  std::uniform_real_distribution<double> mean(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double ar = amp(gen), ai = amp(gen), br = amp(gen), bi = amp(gen);
    CHECK(fidelity(make_coherent(ar, ai), make_coherent(br, bi)) ==
          doctest::Approx(oracle::coherent_overlap(ar, ai, br, bi)).epsilon(1e-9));
    const double a = mean(gen), b = mean(gen);
    CHECK(std::abs(fidelity(make_thermal(a), make_thermal(b)) -
                   oracle::bhattacharyya_thermal(a, b)) < 1e-10);
  }

  CHECK_THROWS_AS(fidelity(make_coherent(0, 0), make_tmsv(0.5)), InvalidArgument);
}

TEST_CASE("fidelity of identical and swapped states") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t modes = 1 + static_cast<std::size_t>(trial % 2);
    const auto a = oracle::random_state(gen, modes);
    const auto b = oracle::random_state(gen, modes);
    CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(fidelity(a, b) - fidelity(b, a)) <= 1e-10);
    const double f = fidelity(a, b);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK(fidelity(make_tmsv(2.0), make_tmsv(2.0)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("pure-state fidelity equals overlap for rotated TMSV") {
  // |<TMSV| (e^{-i theta a^dag a} (x) 1) |TMSV>| = 1 / |cosh^2 r - e^{-i theta} sinh^2 r|
  // from the Fock expansion sum_k tanh^{2k} r e^{-i k theta} / cosh^2 r.
  for (double nbar : {0.5, 2.0}) {
    for (double theta : {0.1, 0.7}) {
      const double c2 = 1.0 + nbar;  // cosh^2 r
      const double s2 = nbar;        // sinh^2 r
      const double re = c2 - std::cos(theta) * s2;
      const double im = std::sin(theta) * s2;
      const double expected = 1.0 / std::hypot(re, im);
      const auto t = make_tmsv(nbar);
      CHECK(fidelity(t, apply_phase(t, theta, 0)) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("thermal channel outputs match the closed-form thermal fidelity") {
  for (double eta : {0.1, 0.5, 0.9}) {
    for (double nb : {0.1, 1.0, 10.0}) {
      const ChannelParams ch(eta, nb);
      const double n1 = 0.4;
      const double n2 = 2.5;
      const auto s1 = apply_loss_thermal(make_thermal(n1), ch, 0);
      const auto s2 = apply_loss_thermal(make_thermal(n2), ch, 0);
      const double m1 = eta * n1 + (1 - eta) * nb;
      const double m2 = eta * n2 + (1 - eta) * nb;
      CHECK(std::abs(fidelity(s1, s2) - oracle::thermal_fidelity_closed(m1, m2)) < 1e-8);
    }
  }
}

TEST_CASE("channel maps preserve physicality on random states") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> eta(1e-6, 1.0 - 1e-6);
  std::uniform_real_distribution<double> nb(1e-6, 20.0);
  std::uniform_real_distribution<double> theta(-10.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t modes = 1 + static_cast<std::size_t>(trial % 2);
    const auto s = oracle::random_state(gen, modes);
    const std::size_t mode = static_cast<std::size_t>(trial / 2) % modes;
    const auto rotated = apply_phase(s, theta(gen), mode);
    const auto lossy = apply_loss_thermal(s, ChannelParams(eta(gen), nb(gen)), mode);
    CHECK(rotated.min_uncertainty_eigenvalue() >= -1e-9);
    CHECK(lossy.min_uncertainty_eigenvalue() >= -1e-9);
    // Rotations are symplectic and orthogonal: purity is unchanged.
    CHECK((2.0 * rotated.cov()).determinant() ==
          doctest::Approx((2.0 * s.cov()).determinant()).epsilon(1e-10));
  }
}

TEST_CASE("phase rotations compose") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t modes = 1 + static_cast<std::size_t>(trial % 2);
    const auto s = oracle::random_state(gen, modes);
    const double a = 0.37 * trial - 5.0;
    const double b = 1.1 - 0.05 * trial;
    const auto two_step = apply_phase(apply_phase(s, a, 0), b, 0);
    const auto one_step = apply_phase(s, a + b, 0);
    CHECK(max_abs_diff(two_step.cov(), one_step.cov()) <= 1e-12 * std::max(1.0, s.cov().norm()));
    CHECK((two_step.disp() - one_step.disp()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, s.disp().norm()));
  }
}

TEST_CASE("JSON debug dump round-trips") {
  const auto s = apply_loss_thermal(make_tmsv(0.8), ChannelParams(0.3, 2.0), 0);
  const auto back = GaussianState::from_json(s.to_json());
  CHECK(back.modes() == 2);
  CHECK(max_abs_diff(back.cov(), s.cov()) == 0.0);
  CHECK(s.to_json().find("\"modes\":2") != std::string::npos);
  CHECK_THROWS_AS(GaussianState::from_json("{\"modes\":1,\"cov\":[1],\"disp\":[0,0]}"),
                  InvalidArgument);
}
