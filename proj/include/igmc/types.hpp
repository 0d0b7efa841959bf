#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace igmc {

using Index = Eigen::Index;

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Bad arguments or malformed inputs (dimension mismatches, points off their
/// advertised set, invalid configuration values).
struct InputError : std::invalid_argument {
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values, failed factorizations, eigensolver non-convergence.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Tangency / rank deficiency: the requested geometric object degenerates at
/// this point.  Callers typically reject the point and bump a counter.
struct DegenerateError : std::runtime_error {
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

/// A Monte Carlo estimate could not be formed (zero hits, all draws degenerate).
struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace igmc
