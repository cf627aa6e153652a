#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bsnn {

// Everything propagates in 64-bit floats; depth-200 products leave no room for less.
using Scalar = double;
using Index = Eigen::Index;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or configuration supplied by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input data (dataset files, checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced while propagating through a network.
class OverflowError : public NumericalError {
 public:
  OverflowError(std::string what, int layer) : NumericalError(std::move(what)), layer_(layer) {}
  /// 1-based layer index of the first non-finite state.
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

}  // namespace bsnn
