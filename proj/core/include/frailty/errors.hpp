#pragma once

#include <stdexcept>
#include <string>

namespace frailty {

/// Malformed input data, infeasible configuration, failed invariants.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A pipeline stage was asked to run before its inputs exist, or against
/// inputs produced under a different configuration.
class DependencyError : public std::runtime_error {
public:
    explicit DependencyError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace frailty
