#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace surge {

// Pipe material or fluid parameters that do not yield a finite wave speed.
class InvalidMaterialError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Network description violates a structural or physical invariant.
class InvalidNetworkError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Steady-state energy balance has no positive root.
class InfeasibleScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// C+ requested at the first node or C- at the last node.
class BoundaryMisuseError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Argument outside the domain of a correlation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Vector or matrix sizes do not match the network layout.
class DimensionMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Boundary quadratic has no real root, i.e. the flow would have to reverse
// through a reservoir or valve, which the strict boundary laws do not model.
class ReverseFlowError : public std::runtime_error {
public:
    explicit ReverseFlowError(const std::string& what, std::optional<std::size_t> node = std::nullopt)
        : std::runtime_error(node ? what + " (node " + std::to_string(*node) + ")" : what),
          node_(node) {}

    std::optional<std::size_t> node() const { return node_; }

private:
    std::optional<std::size_t> node_;
};

class LinearizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scenario text could not be parsed. line() is 0 for semantic errors.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& what, std::size_t line = 0, std::string field = {})
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line), field_(std::move(field)) {}

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

}  // namespace surge
