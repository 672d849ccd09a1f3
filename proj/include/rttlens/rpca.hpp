#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "rttlens/dense.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

/// Options for the principal component pursuit solver. Defaults follow the
/// usual inexact-augmented-Lagrangian choices; every knob is overridable.
struct SolverOptions {
  /// Weight on the l1 term. When unset, 1/sqrt(max(m, n)) is derived from the
  /// input shape.
  std::optional<double> lambda;
  /// Relative Frobenius residual ||X - L - S||_F / ||X||_F at which the
  /// iteration stops.
  double tolerance = 1e-7;
  int max_iterations = 1000;
  /// Initial penalty parameter. When unset, 1.25 / ||X||_2 (spectral norm)
  /// is used.
  std::optional<double> mu_initial;
  /// Penalty growth factor per iteration; must be > 1.
  double mu_growth = 1.5;
  /// Singular values below rank_tolerance * sigma_max count as zero when
  /// reporting the rank of L.
  double rank_tolerance = 1e-6;
};

/// Result of decomposing X into a low-rank part L and a sparse part S.
/// On every converged run, ||X - L - S||_F / ||X||_F <= residual <= tolerance.
template <typename Scalar>
struct Decomposition {
  DenseMatrix<Scalar> L;
  DenseMatrix<Scalar> S;
  Eigen::Index rank_L = 0;
  int iterations = 0;
  Scalar residual = Scalar(0);
  Scalar lambda_used = Scalar(0);
  bool converged = false;
  /// Relative residual after each iteration, for diagnostics.
  std::vector<Scalar> residual_history;
};

template <typename Scalar>
struct SvtResult {
  DenseMatrix<Scalar> matrix;
  Eigen::Index above_threshold = 0;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* op) {
  if (!m.allFinite()) {
    throw InvalidInputError(std::string(op) + ": input has non-finite entries");
  }
}

template <typename Derived>
void require_nonempty(const Eigen::MatrixBase<Derived>& m, const char* op) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidInputError(std::string(op) + ": input must have at least one row and one column");
  }
}

// Eigen 3.4.0's divide-and-conquer SVD can assert on inputs with many exactly
// repeated rows or columns, which cluster-structured latency matrices produce
// routinely. Small inputs go through Jacobi SVD; larger ones through a
// symmetric eigensolve of the Gram matrix over the shorter side, which copes
// with repeated singular values and is cheaper than a thin SVD.
inline constexpr Eigen::Index kJacobiSvdLimit = 32;

template <typename Scalar>
DenseVector<Scalar> singular_values(const DenseMatrix<Scalar>& a, const char* op) {
  if (std::min(a.rows(), a.cols()) <= kJacobiSvdLimit) {
    Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(a);
    if (svd.info() != Eigen::Success) {
      throw SvdFailureError(std::string(op) + ": SVD did not converge");
    }
    return svd.singularValues();
  }
  const bool tall = a.rows() >= a.cols();
  const DenseMatrix<Scalar> gram = tall ? DenseMatrix<Scalar>(a.transpose() * a)
                                        : DenseMatrix<Scalar>(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw SvdFailureError(std::string(op) + ": symmetric eigensolve did not converge");
  }
  const DenseVector<Scalar>& ev = eig.eigenvalues();  // ascending
  const Eigen::Index k = ev.size();
  DenseVector<Scalar> sigma(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    sigma(i) = std::sqrt(std::max(ev(k - 1 - i), Scalar(0)));
  }
  return sigma;
}

}  // namespace detail

/// Entrywise shrinkage sign(x) * max(|x| - tau, 0): the proximal operator of
/// the l1 norm.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& m,
                                                     typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw InvalidInputError("soft_threshold: tau must be positive");
  detail::require_finite(m, "soft_threshold");
  return m.unaryExpr([tau](Scalar x) {
    const Scalar shrunk = std::abs(x) - tau;
    if (shrunk <= Scalar(0)) return Scalar(0);
    return x > Scalar(0) ? shrunk : -shrunk;
  });
}

/// Shrinks the singular values of m by tau: the proximal operator of the
/// nuclear norm. Also returns how many singular values lie strictly above tau.
template <typename Derived>
SvtResult<typename Derived::Scalar> singular_value_threshold(const Eigen::MatrixBase<Derived>& m,
                                                             typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw InvalidInputError("singular_value_threshold: tau must be positive");
  detail::require_nonempty(m, "singular_value_threshold");
  detail::require_finite(m, "singular_value_threshold");

  const DenseMatrix<Scalar> a = m;
  SvtResult<Scalar> out;
  if (std::min(a.rows(), a.cols()) <= detail::kJacobiSvdLimit) {
    Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
      throw SvdFailureError("singular_value_threshold: SVD did not converge");
    }
    const DenseVector<Scalar>& sigma = svd.singularValues();
    out.above_threshold = (sigma.array() > tau).count();
    const DenseVector<Scalar> shrunk = (sigma.array() - tau).max(Scalar(0));
    out.matrix = svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
    return out;
  }

  // Gram route: with V the top right-singular vectors of A, A·v_i = σ_i·u_i,
  // so U·max(Σ−τ,0)·Vᵀ = (A·V)·diag((σ_i−τ)/σ_i)·Vᵀ without forming U.
  const bool tall = a.rows() >= a.cols();
  const DenseMatrix<Scalar> gram = tall ? DenseMatrix<Scalar>(a.transpose() * a)
                                        : DenseMatrix<Scalar>(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw SvdFailureError("singular_value_threshold: symmetric eigensolve did not converge");
  }
  const DenseVector<Scalar>& ev = eig.eigenvalues();  // ascending
  const Eigen::Index dim = ev.size();
  Eigen::Index above = 0;
  while (above < dim && std::sqrt(std::max(ev(dim - 1 - above), Scalar(0))) > tau) ++above;
  out.above_threshold = above;
  if (above == 0) {
    out.matrix = DenseMatrix<Scalar>::Zero(a.rows(), a.cols());
    return out;
  }
  DenseVector<Scalar> ratio(above);
  for (Eigen::Index i = 0; i < above; ++i) {
    const Scalar sigma = std::sqrt(std::max(ev(dim - 1 - i), Scalar(0)));
    ratio(i) = (sigma - tau) / sigma;
  }
  DenseMatrix<Scalar> basis(dim, above);  // top eigenvectors, descending eigenvalue
  for (Eigen::Index i = 0; i < above; ++i) basis.col(i) = eig.eigenvectors().col(dim - 1 - i);
  if (tall) {
    out.matrix = (a * basis) * ratio.asDiagonal() * basis.transpose();
  } else {
    out.matrix = basis * ratio.asDiagonal() * (basis.transpose() * a);
  }
  return out;
}

/// Count of singular values above rank_tolerance * sigma_max. The zero matrix
/// has rank 0.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& m,
                            typename Derived::Scalar rank_tolerance) {
  using Scalar = typename Derived::Scalar;
  if (!(rank_tolerance > Scalar(0))) {
    throw InvalidInputError("numerical_rank: rank_tolerance must be positive");
  }
  if (m.rows() == 0 || m.cols() == 0) return 0;
  detail::require_finite(m, "numerical_rank");
  const DenseVector<Scalar> sigma = detail::singular_values<Scalar>(m, "numerical_rank");
  if (sigma.size() == 0 || sigma(0) <= Scalar(0)) return 0;
  return (sigma.array() > rank_tolerance * sigma(0)).count();
}

/// Principal component pursuit: minimize ||L||_* + lambda ||S||_1 subject to
/// L + S = X, solved by inexact augmented Lagrangian iterations
///
///   L <- SVT(X - S + Y/mu, 1/mu)
///   S <- shrink(X - L + Y/mu, lambda/mu)
///   Y <- Y + mu (X - L - S)
///   mu <- min(mu * mu_growth, mu_max)
///
/// The solve is deterministic: identical inputs give identical outputs
/// bit-for-bit on one platform. Non-convergence within max_iterations is
/// reported via converged = false, not an error.
template <typename Derived>
Decomposition<typename Derived::Scalar> decompose(const Eigen::MatrixBase<Derived>& x,
                                                  const SolverOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonempty(x, "decompose");
  detail::require_finite(x, "decompose");
  if (!(opts.tolerance > 0) || opts.max_iterations < 1 || !(opts.mu_growth > 1) ||
      !(opts.rank_tolerance > 0)) {
    throw InvalidInputError("decompose: invalid solver options");
  }

  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  const Scalar lambda =
      opts.lambda ? Scalar(*opts.lambda) : Scalar(1) / std::sqrt(Scalar(std::max(m, n)));
  if (!(lambda > Scalar(0))) throw InvalidInputError("decompose: lambda must be positive");

  Decomposition<Scalar> out;
  out.lambda_used = lambda;

  const DenseMatrix<Scalar> X = x;
  const Scalar norm_x = X.norm();
  if (norm_x == Scalar(0)) {
    // Already the objective's minimum.
    out.L = DenseMatrix<Scalar>::Zero(m, n);
    out.S = DenseMatrix<Scalar>::Zero(m, n);
    out.converged = true;
    return out;
  }

  const Scalar spectral = detail::singular_values<Scalar>(X, "decompose")(0);

  // Penalty start and dual scaling from the reference augmented-Lagrangian
  // lineage: mu0 = 1.25 / ||X||_2, Y0 = X / max(||X||_2, ||X||_inf / lambda).
  Scalar mu;
  if (opts.mu_initial) {
    mu = Scalar(*opts.mu_initial);
  } else {
    mu = Scalar(1.25) / spectral;
  }
  if (!(mu > Scalar(0))) throw InvalidInputError("decompose: mu_initial must be positive");
  const Scalar mu_max = mu * Scalar(1e7);

  const Scalar dual_scale = std::max(spectral, X.cwiseAbs().maxCoeff() / lambda);
  DenseMatrix<Scalar> Y = X / dual_scale;

  DenseMatrix<Scalar> L = DenseMatrix<Scalar>::Zero(m, n);
  DenseMatrix<Scalar> S = DenseMatrix<Scalar>::Zero(m, n);
  out.residual_history.reserve(16);

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    L = singular_value_threshold(DenseMatrix<Scalar>(X - S + Y / mu), Scalar(1) / mu).matrix;
    S = soft_threshold(DenseMatrix<Scalar>(X - L + Y / mu), lambda / mu);
    const DenseMatrix<Scalar> residual_matrix = X - L - S;
    Y += mu * residual_matrix;

    out.iterations = iter;
    out.residual = residual_matrix.norm() / norm_x;
    out.residual_history.push_back(out.residual);
    if (out.residual <= Scalar(opts.tolerance)) {
      out.converged = true;
      break;
    }
    mu = std::min(mu * Scalar(opts.mu_growth), mu_max);
  }

  out.L = std::move(L);
  out.S = std::move(S);
  out.rank_L = numerical_rank(out.L, Scalar(opts.rank_tolerance));
  return out;
}

}  // namespace rttlens
