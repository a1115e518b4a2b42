#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrbc {

using Vec = std::vector<double>;

/// Raised when a tracking error reaches its performance envelope (or the
/// barrier denominator falls below the guard band). Carries the offending
/// subsystem and the sampled values for diagnostics.
class EnvelopeViolation : public std::runtime_error {
public:
    EnvelopeViolation(int subsystem, double t, double e_bar, double o)
        : std::runtime_error("envelope violation at subsystem " +
                             std::to_string(subsystem) + ", t=" + std::to_string(t) +
                             ": |e_bar|=" + std::to_string(std::abs(e_bar)) +
                             " vs o=" + std::to_string(o)),
          subsystem(subsystem), t(t), e_bar(e_bar), o(o) {}

    int subsystem;  // 1-based
    double t;
    double e_bar;
    double o;
};

/// Raised when any term of the closed loop evaluates non-finite.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(int index, double t, const std::string& what_part)
        : std::runtime_error("non-finite value in " + what_part + " at subsystem " +
                             std::to_string(index) + ", t=" + std::to_string(t)),
          index(index), t(t) {}

    int index;  // 1-based subsystem, 0 if not subsystem-specific
    double t;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Formats a double with 17 significant digits, enough to reproduce the
/// exact binary value on parse.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_positive(const Vec& v) {
    for (double x : v)
        if (!(x > 0.0)) return false;
    return true;
}

}  // namespace mrbc
