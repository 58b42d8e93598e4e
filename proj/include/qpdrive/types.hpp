#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace qpdrive {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Row-major storage for per-sample data so a state is one contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised for malformed inputs (bad files, shape mismatches, invalid parameters).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical stage cannot proceed (isolated kernel rows,
/// rank-deficient designs, evaluation outside the data support).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation point carries too little kernel mass to be interpolated.
class OutOfSupportError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace qpdrive
