#pragma once

#include "bsnn/common.hpp"
#include "bsnn/rng.hpp"

#include <Eigen/Householder>

namespace bsnn {

/// A d x d orthogonal matrix; only constructible through a sampler or a
/// verified matrix.
class OrthoMatrix {
 public:
  /// Accepts `w` only if ||W^T W - I||_max < tol.
  static OrthoMatrix from_matrix(Matrix w, Scalar tol = 1e-10);

  const Matrix& matrix() const noexcept { return entries_; }
  Index dim() const noexcept { return entries_.rows(); }

 private:
  explicit OrthoMatrix(Matrix w) : entries_(std::move(w)) {}
  friend OrthoMatrix sample_haar_orthogonal(Index d, Rng& rng);
  Matrix entries_;
};

/// Haar-uniform orthogonal matrix: QR of a d x d standard Gaussian matrix with
/// each Q column multiplied by the sign of the matching R diagonal entry
/// (plain QR without that correction is not Haar distributed).
OrthoMatrix sample_haar_orthogonal(Index d, Rng& rng);

/// rows x cols matrix with orthonormal rows (rows <= cols) or orthonormal
/// columns (rows >= cols), drawn the same way; used for the adapters.
Matrix sample_semi_orthogonal(Index rows, Index cols, Rng& rng);

/// Haar orthogonal matrix kept as a product of Householder reflections.
///
/// Step k draws a fresh Gaussian vector of length d-k and reflects it onto the
/// first axis; the product of the reflections times diag(sign of each
/// reflected length) has the same law as the QR construction above, because
/// the trailing columns of a Gaussian matrix stay i.i.d. Gaussian after each
/// reflection. Sampling and storage cost O(d^2), and application goes through
/// Eigen's blocked Householder sequences.
class HaarReflectors {
 public:
  static HaarReflectors sample(Index d, Rng& rng);

  Index dim() const noexcept { return vectors_.rows(); }

  /// x <- W x (column batch).
  void apply(Eigen::Ref<Matrix> x) const;
  /// y <- W^T y (column batch).
  void apply_transpose(Eigen::Ref<Matrix> y) const;
  Matrix to_dense() const;

 private:
  Matrix vectors_;
  Vector coeffs_;
  Vector signs_;
};

/// Row-normalized relaxation W = (v_1/||v_1||, ..., v_d/||v_d||)^T of a raw V.
class RowNormParam {
 public:
  /// Throws InvalidArgument if any raw row has norm below kRowFloor.
  explicit RowNormParam(Matrix raw);

  static constexpr Scalar kRowFloor = 1e-30;

  const Matrix& raw() const noexcept { return raw_; }
  const Matrix& derived() const noexcept { return derived_; }
  const Vector& row_norms() const noexcept { return norms_; }

  /// Replaces V and recomputes W. Rows that fell below the floor are redrawn
  /// from `rng` when given, otherwise rejected.
  void set_raw(Matrix raw, Rng* rng = nullptr);

  /// dE/dV from dE/dW, row by row: (I - w_i w_i^T) g_i / ||v_i||.
  Matrix chain_gradient(const Eigen::Ref<const Matrix>& grad_w) const;

 private:
  void refresh(Rng* rng);
  Matrix raw_;
  Matrix derived_;
  Vector norms_;
};

RowNormParam row_normalized(Matrix raw);

/// ||W^T W - I||_max.
template <class Derived>
Scalar orthogonality_defect(const Eigen::MatrixBase<Derived>& w) {
  using S = typename Derived::Scalar;
  const auto gram = (w.transpose() * w).eval();
  return (gram - Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Identity(gram.rows(), gram.cols()))
      .cwiseAbs()
      .maxCoeff();
}

/// Point uniform on the sphere of radius sqrt(d): sqrt(d) z / ||z|| for Gaussian z.
Vector sample_sphere(Index d, Rng& rng);

}  // namespace bsnn
