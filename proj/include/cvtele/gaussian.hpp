#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>

namespace cvtele {

/// A phase-space point (x, p) in canonical units, vacuum variance 1/2.
struct QuadraturePair {
  double x = 0.0;
  double p = 0.0;

  friend bool operator==(const QuadraturePair&, const QuadraturePair&) = default;
};

/// Gaussian state over n canonical modes, interleaved (x1, p1, x2, p2, ...).
///
/// Construction checks that the covariance is symmetric and physical, i.e.
/// cov + i*Omega/2 is positive semidefinite. Both checks use a tolerance of
/// 1e-12 relative to the largest covariance entry.
template <typename Scalar = double>
class GaussianState {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static constexpr Scalar kTolerance = Scalar(1e-12);

  GaussianState(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    validate();
  }

  Eigen::Index n_modes() const { return mean_.size() / 2; }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  Scalar var_x(Eigen::Index mode) const { return cov_(2 * mode, 2 * mode); }
  Scalar var_p(Eigen::Index mode) const { return cov_(2 * mode + 1, 2 * mode + 1); }
  QuadraturePair mean_of(Eigen::Index mode) const {
    return {static_cast<double>(mean_(2 * mode)), static_cast<double>(mean_(2 * mode + 1))};
  }

  /// The standard symplectic form, block diagonal with [[0, 1], [-1, 0]].
  static Matrix symplectic_form(Eigen::Index n_modes) {
    Matrix omega = Matrix::Zero(2 * n_modes, 2 * n_modes);
    for (Eigen::Index k = 0; k < n_modes; ++k) {
      omega(2 * k, 2 * k + 1) = Scalar(1);
      omega(2 * k + 1, 2 * k) = Scalar(-1);
    }
    return omega;
  }

 private:
  void validate() const {
    const auto dim = mean_.size();
    if (dim == 0 || dim % 2 != 0)
      throw std::invalid_argument("GaussianState: mean must have even, nonzero length");
    if (cov_.rows() != dim || cov_.cols() != dim)
      throw std::invalid_argument("GaussianState: covariance shape does not match mean");
    if (!mean_.allFinite() || !cov_.allFinite())
      throw std::invalid_argument("GaussianState: non-finite entries");

    const Scalar scale = std::max(Scalar(1), cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kTolerance * scale)
      throw std::invalid_argument("GaussianState: covariance is not symmetric");

    using Complex = std::complex<Scalar>;
    using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
    const Matrix sym = Scalar(0.5) * (cov_ + cov_.transpose());
    const ComplexMatrix herm = sym.template cast<Complex>() +
                               Complex(0, Scalar(0.5)) *
                                   symplectic_form(dim / 2).template cast<Complex>();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -kTolerance * scale)
      throw std::invalid_argument("GaussianState: covariance violates the uncertainty principle");
  }

  Vector mean_;
  Matrix cov_;
};

/// Product of coherent states with the given means (cov = I/2).
template <typename Scalar = double>
GaussianState<Scalar> make_coherent(Eigen::Index n_modes, std::span<const QuadraturePair> means) {
  if (n_modes <= 0) throw std::invalid_argument("make_coherent: n_modes must be positive");
  if (static_cast<Eigen::Index>(means.size()) != n_modes)
    throw std::invalid_argument("make_coherent: expected " + std::to_string(n_modes) +
                                " means, got " + std::to_string(means.size()));
  typename GaussianState<Scalar>::Vector mean(2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    mean(2 * k) = Scalar(means[k].x);
    mean(2 * k + 1) = Scalar(means[k].p);
  }
  return GaussianState<Scalar>(
      std::move(mean),
      Scalar(0.5) * GaussianState<Scalar>::Matrix::Identity(2 * n_modes, 2 * n_modes));
}

/// Var(x_i - x_j) + Var(p_i + p_j); values below 2 certify entanglement.
template <typename Scalar>
Scalar epr_criterion(const GaussianState<Scalar>& state, Eigen::Index i, Eigen::Index j) {
  const auto n = state.n_modes();
  if (i == j || i < 0 || j < 0 || i >= n || j >= n)
    throw std::invalid_argument("epr_criterion: need two distinct valid mode indices");
  const auto& c = state.cov();
  const auto xi = 2 * i, pi = 2 * i + 1, xj = 2 * j, pj = 2 * j + 1;
  const Scalar var_diff_x = c(xi, xi) + c(xj, xj) - 2 * c(xi, xj);
  const Scalar var_sum_p = c(pi, pi) + c(pj, pj) + 2 * c(pi, pj);
  return var_diff_x + var_sum_p;
}

/// Overlap <alpha|rho|alpha> of a coherent state centred at `target` with a
/// Gaussian state of mean `out_mean` and diagonal variances (var_x, var_p).
/// The variances must describe a physical state, var_x * var_p >= 1/4.
inline double coherent_overlap_fidelity(QuadraturePair target, QuadraturePair out_mean,
                                        double var_x, double var_p) {
  if (!(var_x > 0.0) || !(var_p > 0.0))
    throw std::invalid_argument("coherent_overlap_fidelity: variances must be positive");
  if (var_x * var_p < 0.25 * (1.0 - 1e-12))
    throw std::invalid_argument("coherent_overlap_fidelity: var_x * var_p below 1/4");
  const double sx = 1.0 + 2.0 * var_x;
  const double sp = 1.0 + 2.0 * var_p;
  const double dx = target.x - out_mean.x;
  const double dp = target.p - out_mean.p;
  return 2.0 * std::exp(-dx * dx / sx) * std::exp(-dp * dp / sp) / std::sqrt(sx * sp);
}

}  // namespace cvtele
