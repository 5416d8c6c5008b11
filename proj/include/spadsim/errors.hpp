#ifndef SPADSIM_ERRORS_HPP
#define SPADSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spadsim {

/// Invalid model or run configuration, detected before any simulation starts.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Estimator preconditions violated (e.g. a rate saturates the dead-time
/// correction) or an estimator is undefined on the given data.
class EstimatorError : public std::runtime_error {
public:
    explicit EstimatorError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Internal scheduling contract broken (events out of time order, a stream
/// violating monotonicity). Always a programming error, never a model outcome.
class EngineFault : public std::logic_error {
public:
    explicit EngineFault(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace spadsim

#endif
