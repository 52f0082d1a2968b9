#include "covert/gaussian_state.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "covert/errors.hpp"

namespace covert::gaussian {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kEigenImagTol = 1e-8;
constexpr double kSymplecticEigTol = 1e-6;

void require_mode(const GaussianState& state, std::size_t mode) {
  if (mode >= state.modes()) {
    std::ostringstream msg;
    msg << "mode index " << mode << " out of range for a " << state.modes()
        << "-mode state";
    throw InvalidArgument(msg.str());
  }
}

void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) {
    throw InvalidArgument(std::string(name) + " must be finite");
  }
}

}  // namespace

ChannelParams::ChannelParams(double eta, double nbar_b)
    : eta_(eta), nbar_b_(nbar_b) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidArgument("eta must lie strictly inside (0,1)");
  }
  if (!(nbar_b > 0.0) || !std::isfinite(nbar_b)) {
    throw InvalidArgument("nbar_b must be positive and finite");
  }
}

Matrix symplectic_form(std::size_t modes) {
  const auto m = static_cast<Eigen::Index>(modes);
  Matrix omega = Matrix::Zero(2 * m, 2 * m);
  omega.topRightCorner(m, m) = Matrix::Identity(m, m);
  omega.bottomLeftCorner(m, m) = -Matrix::Identity(m, m);
  return omega;
}

GaussianState GaussianState::create(Matrix cov, Vector disp) {
  const auto dim = cov.rows();
  if (dim == 0 || dim % 2 != 0 || cov.cols() != dim) {
    throw InvalidArgument("covariance matrix must be square with even size");
  }
  if (disp.size() != dim) {
    throw InvalidArgument("displacement length must match covariance size");
  }
  if (!cov.allFinite() || !disp.allFinite()) {
    throw InvalidArgument("state entries must be finite");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw InvalidArgument("covariance matrix must be symmetric");
  }
  // Symmetrize exactly so downstream factorizations see a symmetric matrix.
  cov = 0.5 * (cov + cov.transpose()).eval();
  GaussianState state(static_cast<std::size_t>(dim / 2), std::move(cov),
                      std::move(disp));
  const double lowest = state.min_uncertainty_eigenvalue();
  if (lowest < -kPhysicalityTol) {
    std::ostringstream msg;
    msg << "covariance violates the uncertainty relation (min eigenvalue "
        << lowest << ")";
    throw PhysicalityViolation(msg.str());
  }
  return state;
}

double GaussianState::mean_photon_number(std::size_t mode) const {
  require_mode(*this, mode);
  const auto q = static_cast<Eigen::Index>(mode);
  const auto p = q + static_cast<Eigen::Index>(modes_);
  return 0.5 * (cov_(q, q) + cov_(p, p) - 1.0) +
         0.5 * (disp_(q) * disp_(q) + disp_(p) * disp_(p));
}

double GaussianState::min_uncertainty_eigenvalue() const {
  const Eigen::MatrixXcd herm =
      cov_.cast<std::complex<double>>() +
      std::complex<double>(0.0, 0.5) *
          symplectic_form(modes_).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::string GaussianState::to_json() const {
  nlohmann::json j;
  j["modes"] = modes_;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(cov_.size()));
  for (Eigen::Index r = 0; r < cov_.rows(); ++r) {
    for (Eigen::Index c = 0; c < cov_.cols(); ++c) flat.push_back(cov_(r, c));
  }
  j["cov"] = flat;
  j["disp"] = std::vector<double>(disp_.data(), disp_.data() + disp_.size());
  return j.dump();
}

GaussianState GaussianState::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("malformed state JSON: ") + e.what());
  }
  const auto modes = j.at("modes").get<std::size_t>();
  const auto flat = j.at("cov").get<std::vector<double>>();
  const auto disp = j.at("disp").get<std::vector<double>>();
  const auto dim = static_cast<Eigen::Index>(2 * modes);
  if (flat.size() != static_cast<std::size_t>(dim * dim) ||
      disp.size() != static_cast<std::size_t>(dim)) {
    throw InvalidArgument("state JSON array sizes do not match modes");
  }
  Matrix cov(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      cov(r, c) = flat[static_cast<std::size_t>(r * dim + c)];
    }
  }
  return create(std::move(cov), Eigen::Map<const Vector>(disp.data(), dim));
}

GaussianState make_coherent(double alpha_re, double alpha_im) {
  require_finite(alpha_re, "alpha_re");
  require_finite(alpha_im, "alpha_im");
  Vector disp(2);
  disp << std::sqrt(2.0) * alpha_re, std::sqrt(2.0) * alpha_im;
  return GaussianState::create(0.5 * Matrix::Identity(2, 2), disp);
}

GaussianState make_tmsv(double nbar_s) {
  if (!(nbar_s >= 0.0) || !std::isfinite(nbar_s)) {
    throw InvalidArgument("nbar_s must be finite and nonnegative");
  }
  // xi = arcsinh(sqrt(nbar_s)): cosh(2 xi) = 1 + 2 nbar_s,
  // sinh(2 xi) = 2 sqrt(nbar_s (nbar_s + 1)).
  const double c = 0.5 * (1.0 + 2.0 * nbar_s);
  const double s = std::sqrt(nbar_s * (nbar_s + 1.0));
  Matrix cov(4, 4);
  cov << c, s, 0, 0,
         s, c, 0, 0,
         0, 0, c, -s,
         0, 0, -s, c;
  return GaussianState::create(cov, Vector::Zero(4));
}

GaussianState make_thermal(double nbar) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
    throw InvalidArgument("thermal mean photon number must be nonnegative");
  }
  return GaussianState::create((nbar + 0.5) * Matrix::Identity(2, 2),
                               Vector::Zero(2));
}

GaussianState apply_phase(const GaussianState& state, double theta,
                          std::size_t mode) {
  require_mode(state, mode);
  require_finite(theta, "theta");
  const auto m = static_cast<Eigen::Index>(state.modes());
  const auto q = static_cast<Eigen::Index>(mode);
  const auto p = q + m;
  Matrix x = Matrix::Identity(2 * m, 2 * m);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  x(q, q) = c;
  x(q, p) = s;
  x(p, q) = -s;
  x(p, p) = c;
  return GaussianState::create(x * state.cov() * x.transpose(),
                               x * state.disp());
}

GaussianState apply_loss_thermal(const GaussianState& state,
                                 const ChannelParams& ch, std::size_t mode) {
  require_mode(state, mode);
  const auto m = static_cast<Eigen::Index>(state.modes());
  const auto q = static_cast<Eigen::Index>(mode);
  const auto p = q + m;
  const double t = std::sqrt(ch.eta());
  const double added = (1.0 - ch.eta()) * (ch.nbar_b() + 0.5);
  Matrix x = Matrix::Identity(2 * m, 2 * m);
  x(q, q) = t;
  x(p, p) = t;
  Matrix cov = x * state.cov() * x.transpose();
  cov(q, q) += added;
  cov(p, p) += added;
  return GaussianState::create(std::move(cov), x * state.disp());
}

double fidelity(const GaussianState& s1, const GaussianState& s2) {
  if (s1.modes() != s2.modes()) {
    throw InvalidArgument("fidelity requires states with equal mode counts");
  }
  const std::size_t modes = s1.modes();
  const Matrix& v1 = s1.cov();
  const Matrix& v2 = s2.cov();
  const Matrix sum = v1 + v2;

  Eigen::SelfAdjointEigenSolver<Matrix> spectrum(sum, Eigen::EigenvaluesOnly);
  const double lo = spectrum.eigenvalues().minCoeff();
  const double hi = spectrum.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kConditionLimit) {
    throw NumericalFailure("V1 + V2 is numerically singular");
  }
  const Eigen::LLT<Matrix> llt(sum);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("Cholesky factorization of V1 + V2 failed");
  }
  const Matrix sum_inv = llt.solve(Matrix::Identity(sum.rows(), sum.cols()));

  // The W = -2i V_aux Omega spectrum is +-w_k with
  // V_aux = Omega^T (V1+V2)^{-1} (Omega/4 + V2 Omega V1). Only
  // w_k + sqrt(w_k^2 - 1) is needed, and w_k^2 - 1 are the (doubled)
  // eigenvalues of
  //   -4 [Omega S^{-1} (V2 Omega V2 Omega + 1/4)] [Omega S^{-1} (V1 Omega V1 Omega + 1/4)]
  // with S = V1 + V2, which equals W^2 - 1 but does not lose w_k - 1 to
  // rounding when a state is close to pure.
  const Matrix omega = symplectic_form(modes);
  const Matrix quarter = 0.25 * Matrix::Identity(sum.rows(), sum.cols());
  const Matrix impurity1 = v1 * omega * v1 * omega + quarter;
  const Matrix impurity2 = v2 * omega * v2 * omega + quarter;
  const Matrix w2_minus_1 =
      -4.0 * (omega * sum_inv * impurity2) * (omega * sum_inv * impurity1);
  Eigen::EigenSolver<Matrix> eig(w2_minus_1, false);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("eigenvalue decomposition of W^2 - 1 failed");
  }
  std::vector<double> lambda;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const std::complex<double> value = eig.eigenvalues()(k);
    if (std::abs(value.imag()) > kEigenImagTol * std::max(1.0, std::abs(value.real()))) {
      throw NumericalFailure("W spectrum has a non-negligible imaginary part");
    }
    lambda.push_back(value.real());
  }
  std::sort(lambda.begin(), lambda.end());

  // w_k < 1 - tol  <=>  w_k^2 - 1 < (1 - tol)^2 - 1.
  const double floor_lambda = (1.0 - kSymplecticEigTol) * (1.0 - kSymplecticEigTol) - 1.0;
  double f_tot = 1.0;
  for (std::size_t k = 0; k + 1 < lambda.size(); k += 2) {
    const double lk = 0.5 * (lambda[k] + lambda[k + 1]);
    if (lk < floor_lambda) {
      std::ostringstream msg;
      msg << "W eigenvalue " << std::sqrt(std::max(0.0, 1.0 + lk))
          << " below 1 indicates an unphysical pair";
      throw PhysicalityViolation(msg.str());
    }
    const double l = std::max(lk, 0.0);
    f_tot *= std::sqrt(std::sqrt(1.0 + l) + std::sqrt(l));
  }

  const double det = llt.matrixL().determinant();  // sqrt(det(V1+V2))
  const double f0 = f_tot / std::sqrt(det);
  const Vector delta = s2.disp() - s1.disp();
  const double exponent = -0.25 * delta.dot(sum_inv * delta);
  const double f = f0 * std::exp(exponent);
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace covert::gaussian
