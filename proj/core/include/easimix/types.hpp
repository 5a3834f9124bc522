#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace easimix {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Shapes of inputs do not agree with the declared Dimensions.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Cholesky / inversion failures that survive the jitter-retry policy.
class NumericalError : public Error {
public:
  using Error::Error;
};

// Invalid input values (negative prices, shares off the simplex, ...).
class DataError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace easimix
