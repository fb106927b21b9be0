#pragma once

#include <stdexcept>
#include <string>

namespace ladder {

/// Config file missing, malformed, or semantically invalid.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Time integration produced a non-physical state (trace drift, negativity,
/// lost hermiticity, or non-finite entries). Carries the time of failure.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& msg, double t_ns)
        : std::runtime_error(msg), t_ns_(t_ns) {}

    double time_ns() const noexcept { return t_ns_; }

private:
    double t_ns_;
};

/// Output file or directory could not be created or written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}
