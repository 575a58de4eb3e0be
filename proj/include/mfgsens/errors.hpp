#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfgsens {

/// Input violates a documented precondition or type invariant.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A tridiagonal factorization met a pivot below the singularity threshold.
class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iteration hit its cap before reaching tolerance.
class Divergence : public std::runtime_error {
public:
    Divergence(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Requested Taylor order not present in the supplied table.
class MissingOrder : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace mfgsens
