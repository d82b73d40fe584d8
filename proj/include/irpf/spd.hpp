#pragma once

// Geometry of symmetric positive-definite matrices: covariance estimation,
// spectral matrix functions, distances and the Karcher (geometric) mean.
//
// Everything here is templated on the scalar type and header-only; the rest
// of the library instantiates it with double through the SpdMatrix alias.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "irpf/error.hpp"

namespace irpf {

enum class DistanceKind { Riemannian, Euclidean, DiagEuclidean };

std::string_view to_string(DistanceKind kind);
DistanceKind parse_distance_kind(std::string_view name);

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric positive-definite matrix. Symmetrized on construction; positive
/// definiteness is the caller's contract (use covariance() or regularize()).
template <typename Scalar>
class SpdMatrixT {
 public:
  using Matrix = DenseMatrix<Scalar>;

  SpdMatrixT() = default;

  template <typename Derived>
  explicit SpdMatrixT(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "SpdMatrix: matrix is not square");
    }
    values_ = (m + m.transpose()) / Scalar(2);
  }

  static SpdMatrixT identity(Eigen::Index n) { return SpdMatrixT(Matrix::Identity(n, n)); }

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }

 private:
  Matrix values_;
};

using SpdMatrix = SpdMatrixT<double>;

/// Eigenvalue floor used for regularization: max(lambda_max * 1e-10, 1e-12).
template <typename Scalar>
Scalar regularization_floor(Scalar lambda_max) {
  return std::max(lambda_max * Scalar(1e-10), Scalar(1e-12));
}

/// Applies a scalar function to the eigenvalues of a symmetric matrix.
template <typename Scalar, typename F>
DenseMatrix<Scalar> spectral_map(const DenseMatrix<Scalar>& sym, F&& f) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(sym);
  const auto& u = es.eigenvectors();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mapped = es.eigenvalues().unaryExpr(f);
  DenseMatrix<Scalar> out = u * mapped.asDiagonal() * u.transpose();
  return (out + out.transpose()) / Scalar(2);
}

template <typename Scalar>
SpdMatrixT<Scalar> sqrtm(const SpdMatrixT<Scalar>& a) {
  return SpdMatrixT<Scalar>(spectral_map<Scalar>(a.values(), [](Scalar l) { return std::sqrt(l); }));
}

template <typename Scalar>
SpdMatrixT<Scalar> inv_sqrt(const SpdMatrixT<Scalar>& a) {
  return SpdMatrixT<Scalar>(
      spectral_map<Scalar>(a.values(), [](Scalar l) { return Scalar(1) / std::sqrt(l); }));
}

/// Principal matrix logarithm; the result is symmetric, not SPD.
template <typename Scalar>
DenseMatrix<Scalar> logm(const SpdMatrixT<Scalar>& a) {
  return spectral_map<Scalar>(a.values(), [](Scalar l) { return std::log(l); });
}

/// Matrix exponential of a symmetric matrix.
template <typename Derived>
SpdMatrixT<typename Derived::Scalar> expm_sym(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  const DenseMatrix<Scalar> s = (sym + sym.transpose()) / Scalar(2);
  return SpdMatrixT<Scalar>(spectral_map<Scalar>(s, [](Scalar l) { return std::exp(l); }));
}

/// Floors eigenvalues at regularization_floor(lambda_max). Throws RankDeficient
/// when the matrix carries no energy at all (lambda_max <= 0).
template <typename Derived>
SpdMatrixT<typename Derived::Scalar> regularize(const Eigen::MatrixBase<Derived>& sym) {
  using Scalar = typename Derived::Scalar;
  const DenseMatrix<Scalar> s = (sym + sym.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(s);
  const Scalar lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > Scalar(0))) {
    throw Error(ErrorCode::RankDeficient, "covariance has no positive eigenvalue (flat channels)");
  }
  const Scalar floor = regularization_floor(lmax);
  if (es.eigenvalues().minCoeff() >= floor) return SpdMatrixT<Scalar>(s);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> clipped = es.eigenvalues().cwiseMax(floor);
  return SpdMatrixT<Scalar>(es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose());
}

enum class Regularization { Floor, None };

/// Sample covariance (1/(T-1)) X X^T of an N x T epoch assumed centered by
/// band-pass filtering. With Regularization::None a smallest eigenvalue below
/// the floor raises RankDeficient instead of being clipped.
template <typename Derived>
SpdMatrixT<typename Derived::Scalar> covariance(const Eigen::MatrixBase<Derived>& x,
                                                Regularization reg = Regularization::Floor) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows();
  const Eigen::Index t = x.cols();
  if (n < 1 || t < 2) {
    throw Error(ErrorCode::TooShort, "covariance: need at least 2 samples (N=" + std::to_string(n) +
                                         ", T=" + std::to_string(t) + ")");
  }
  DenseMatrix<Scalar> c(n, n);
  c.setZero();
  c.template selfadjointView<Eigen::Lower>().rankUpdate(x.derived().eval());
  c = c.template selfadjointView<Eigen::Lower>();
  c /= static_cast<Scalar>(t - 1);
  if (reg == Regularization::Floor) return regularize(c);

  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(c, Eigen::EigenvaluesOnly);
  const Scalar lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > Scalar(0)) || es.eigenvalues().minCoeff() < regularization_floor(lmax)) {
    throw Error(ErrorCode::RankDeficient, "covariance: smallest eigenvalue below regularization floor");
  }
  return SpdMatrixT<Scalar>(c);
}

/// Distance between two SPD matrices under the chosen metric.
///   Riemannian:    sqrt(sum log^2 l_n), l_n eigenvalues of a^{-1} b
///   Euclidean:     ||a - b||_F
///   DiagEuclidean: ||diag(a - b)||_F
template <typename Scalar>
Scalar distance(const SpdMatrixT<Scalar>& a, const SpdMatrixT<Scalar>& b, DistanceKind kind) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "distance: dimensions differ");
  }
  switch (kind) {
    case DistanceKind::Riemannian: {
      Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix<Scalar>> ges(b.values(), a.values(),
                                                                        Eigen::EigenvaluesOnly);
      return std::sqrt(ges.eigenvalues().array().log().square().sum());
    }
    case DistanceKind::Euclidean:
      return (a.values() - b.values()).norm();
    case DistanceKind::DiagEuclidean:
      return (a.values().diagonal() - b.values().diagonal()).norm();
  }
  return Scalar(0);
}

template <typename Scalar>
SpdMatrixT<Scalar> arithmetic_mean(std::span<const SpdMatrixT<Scalar>> sigmas) {
  if (sigmas.empty()) throw Error(ErrorCode::EmptyInput, "arithmetic_mean: empty input");
  DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(sigmas.front().dim(), sigmas.front().dim());
  for (const auto& s : sigmas) {
    if (s.dim() != acc.rows()) throw Error(ErrorCode::DimensionMismatch, "arithmetic_mean: dimensions differ");
    acc += s.values();
  }
  return SpdMatrixT<Scalar>(acc / static_cast<Scalar>(sigmas.size()));
}

struct KarcherOptions {
  int max_iterations = 50;
  double tolerance = 1e-7;
};

template <typename Scalar>
struct KarcherResult {
  SpdMatrixT<Scalar> mean;
  int iterations = 0;
  Scalar gradient_norm = 0;
  /// False when the iteration cap was hit; `mean` is then the best iterate.
  bool converged = false;
};

/// Karcher mean by the fixed-point iteration
///   G <- G^{1/2} exp(tau M) G^{1/2},  M = (1/I) sum_i Log(G^{-1/2} S_i G^{-1/2})
/// started at the arithmetic mean, tau halved whenever ||M||_F grows.
template <typename Scalar>
KarcherResult<Scalar> geometric_mean(std::span<const SpdMatrixT<Scalar>> sigmas, const KarcherOptions& opt = {}) {
  if (sigmas.empty()) throw Error(ErrorCode::EmptyInput, "geometric_mean: empty input");
  const Eigen::Index n = sigmas.front().dim();
  for (const auto& s : sigmas) {
    if (s.dim() != n) throw Error(ErrorCode::DimensionMismatch, "geometric_mean: dimensions differ");
  }
  KarcherResult<Scalar> result;
  if (sigmas.size() == 1) {
    result.mean = sigmas.front();
    result.converged = true;
    return result;
  }

  using Matrix = DenseMatrix<Scalar>;
  Matrix g = arithmetic_mean(sigmas).values();
  Matrix best = g;
  Scalar best_norm = std::numeric_limits<Scalar>::infinity();
  Scalar prev_norm = std::numeric_limits<Scalar>::infinity();
  Scalar tau = 1;
  const Scalar inv_count = Scalar(1) / static_cast<Scalar>(sigmas.size());

  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const auto& u = es.eigenvectors();
    const auto& lambda = es.eigenvalues();
    const Matrix g_half = u * lambda.cwiseSqrt().asDiagonal() * u.transpose();
    const Matrix g_inv_half = u * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();

    Matrix m = Matrix::Zero(n, n);
    for (const auto& s : sigmas) {
      const Matrix whitened = g_inv_half * s.values() * g_inv_half;
      m += spectral_map<Scalar>((whitened + whitened.transpose()) / Scalar(2),
                                [](Scalar l) { return std::log(l); });
    }
    m *= inv_count;
    const Scalar norm = m.norm();
    result.iterations = it + 1;
    if (norm < best_norm) {
      best_norm = norm;
      best = g;
    }
    if (norm < static_cast<Scalar>(opt.tolerance)) {
      result.mean = SpdMatrixT<Scalar>(g);
      result.gradient_norm = norm;
      result.converged = true;
      return result;
    }
    if (norm > prev_norm) tau /= Scalar(2);
    prev_norm = norm;
    const Matrix step = spectral_map<Scalar>(Matrix(tau * m), [](Scalar l) { return std::exp(l); });
    g = g_half * step * g_half;
    g = (g + g.transpose()) / Scalar(2);
  }
  result.mean = SpdMatrixT<Scalar>(best);
  result.gradient_norm = best_norm;
  result.converged = false;
  return result;
}

}  // namespace irpf
