#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nta {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invalid shapes, unknown presets, malformed configuration values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A closed-form expression was evaluated outside its domain of validity.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integration produced a non-finite parameter.
class NumericalAbort : public std::runtime_error {
public:
    NumericalAbort(const std::string& what, double t, int block, std::string parameter)
        : std::runtime_error(what), t_(t), block_(block), parameter_(std::move(parameter)) {}

    double time() const { return t_; }
    int block() const { return block_; }
    const std::string& parameter() const { return parameter_; }

private:
    double t_;
    int block_;
    std::string parameter_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nta
