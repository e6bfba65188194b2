#pragma once

#include <stdexcept>
#include <string>

namespace acpsbc {

/// Scenario or model configuration that cannot be run. The message names the
/// offending field so the CLI can surface actionable diagnostics.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a barrier gradient vanishes (coincident centers). Coincidence
/// already implies collision for positive radii, so no usable constraint exists.
class DegenerateGradientError : public std::runtime_error {
public:
    explicit DegenerateGradientError(const std::string& what) : std::runtime_error(what) {}
};

/// Unrecoverable solver failure that aborts a run (non-finite data and the like).
class SolverAbort : public std::runtime_error {
public:
    explicit SolverAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace acpsbc
