#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace esfem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Topology or geometry problem in a mesh (degenerate element, non-conforming input, ...).
class MeshError : public Error {
public:
    using Error::Error;
};

/// Scenario syntax or validation failure. `line` is 0 when not tied to a line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a load step; the solver turns these into step rejections.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A smoothing domain reached det(F) <= 0.
class InvertedConfiguration : public NumericalError {
public:
    InvertedConfiguration(int domain, double jacobian)
        : NumericalError("inverted configuration on smoothing domain " + std::to_string(domain) +
                         " (J = " + std::to_string(jacobian) + ")"),
          domain_(domain), jacobian_(jacobian) {}
    int domain() const { return domain_; }
    double jacobian() const { return jacobian_; }

private:
    int domain_;
    double jacobian_;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace esfem
