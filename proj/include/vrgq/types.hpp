#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vrgq {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// The behavior chain is not irreducible/aperiodic (or fails to mix).
class ErgodicityError : public Error {
public:
    using Error::Error;
};

/// Feature covariance is (numerically) singular.
class SolvabilityError : public Error {
public:
    using Error::Error;
    SolvabilityError(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_ = 0.0;
};

/// Operation requested on an object that lacks the needed state.
class StateError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable configuration file.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace vrgq
