#include "bsnn/ortho.hpp"

#include <Eigen/QR>

#include <cmath>
#include <string>

namespace bsnn {

OrthoMatrix OrthoMatrix::from_matrix(Matrix w, Scalar tol) {
  if (w.rows() != w.cols() || w.rows() == 0)
    throw InvalidArgument("orthogonal matrix must be square and non-empty");
  const Scalar defect = orthogonality_defect(w);
  if (!(defect < tol))
    throw NumericalError("matrix is not orthogonal (defect " + std::to_string(defect) + ")");
  return OrthoMatrix(std::move(w));
}

namespace {

Matrix sign_corrected_q(const Matrix& gaussian) {
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ() * Matrix::Identity(gaussian.rows(), gaussian.cols());
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

OrthoMatrix sample_haar_orthogonal(Index d, Rng& rng) {
  if (d < 1) throw InvalidArgument("orthogonal matrix dimension must be >= 1");
  return OrthoMatrix(sign_corrected_q(rng.gaussian_matrix(d, d)));
}

Matrix sample_semi_orthogonal(Index rows, Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw InvalidArgument("semi-orthogonal shape must be positive");
  if (rows >= cols) return sign_corrected_q(rng.gaussian_matrix(rows, cols));
  return sign_corrected_q(rng.gaussian_matrix(cols, rows)).transpose();
}

HaarReflectors HaarReflectors::sample(Index d, Rng& rng) {
  if (d < 1) throw InvalidArgument("orthogonal matrix dimension must be >= 1");
  HaarReflectors h;
  h.vectors_ = Matrix::Zero(d, d);
  h.coeffs_ = Vector::Zero(d);
  h.signs_ = Vector::Ones(d);
  for (Index k = 0; k < d; ++k) {
    Vector z = rng.gaussian_vector(d - k);
    Scalar tau = 0.0, beta = 0.0;
    auto essential = h.vectors_.col(k).tail(d - k - 1);
    z.makeHouseholder(essential, tau, beta);
    h.coeffs_[k] = tau;
    h.signs_[k] = beta < 0 ? -1.0 : 1.0;
  }
  return h;
}

void HaarReflectors::apply(Eigen::Ref<Matrix> x) const {
  x = signs_.asDiagonal() * x;
  x.applyOnTheLeft(Eigen::householderSequence(vectors_, coeffs_));
}

void HaarReflectors::apply_transpose(Eigen::Ref<Matrix> y) const {
  y.applyOnTheLeft(Eigen::householderSequence(vectors_, coeffs_).transpose());
  y = signs_.asDiagonal() * y;
}

Matrix HaarReflectors::to_dense() const {
  Matrix w = Matrix::Identity(dim(), dim());
  apply(w);
  return w;
}

RowNormParam::RowNormParam(Matrix raw) : raw_(std::move(raw)) { refresh(nullptr); }

void RowNormParam::set_raw(Matrix raw, Rng* rng) {
  raw_ = std::move(raw);
  refresh(rng);
}

void RowNormParam::refresh(Rng* rng) {
  if (raw_.rows() == 0 || raw_.cols() == 0) throw InvalidArgument("row-normalized matrix is empty");
  norms_ = raw_.rowwise().norm();
  for (Index i = 0; i < raw_.rows(); ++i) {
    while (!(norms_[i] >= kRowFloor)) {
      if (!rng)
        throw InvalidArgument("row " + std::to_string(i) +
                              " of the raw weight matrix is zero; row normalization is undefined");
      raw_.row(i) = rng->gaussian_vector(raw_.cols()).transpose();
      norms_[i] = raw_.row(i).norm();
    }
  }
  derived_ = norms_.cwiseInverse().asDiagonal() * raw_;
}

Matrix RowNormParam::chain_gradient(const Eigen::Ref<const Matrix>& grad_w) const {
  // Per row: (g - w (w . g)) / ||v||.
  const Vector proj = (derived_.array() * grad_w.array()).rowwise().sum();
  Matrix out = grad_w - proj.asDiagonal() * derived_;
  return norms_.cwiseInverse().asDiagonal() * out;
}

RowNormParam row_normalized(Matrix raw) { return RowNormParam(std::move(raw)); }

Vector sample_sphere(Index d, Rng& rng) {
  if (d < 1) throw InvalidArgument("sphere dimension must be >= 1");
  for (;;) {
    Vector z = rng.gaussian_vector(d);
    const Scalar n = z.norm();
    if (n > 0.0) return z * (std::sqrt(static_cast<Scalar>(d)) / n);
  }
}

}  // namespace bsnn
