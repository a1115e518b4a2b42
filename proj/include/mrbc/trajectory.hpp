#pragma once

// Reference trajectory generation (setpoints and rest-to-rest quintic
// segments) and load-force schedules expressed as fractions of capacity.

#include <utility>

#include "mrbc/types.hpp"

namespace mrbc {

/// Rest-to-rest quintic blend between x0 and xf over duration T, evaluated at
/// local time t in [0, T]. Returns position and velocity; velocity and
/// acceleration vanish at both ends.
inline std::pair<double, double> quintic_trajectory(double t, double x0, double xf, double T) {
    if (!(T > 0.0)) throw ConfigError("quintic_trajectory: duration must be > 0");
    const double s = t / T;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double blend = s3 * (10.0 - 15.0 * s + 6.0 * s2);
    const double blend_dot = 30.0 * s2 * (1.0 - 2.0 * s + s2) / T;
    return {x0 + (xf - x0) * blend, (xf - x0) * blend_dot};
}

struct QuinticSegment {
    double x0 = 0.0;
    double xf = 0.0;
    double duration = 0.0;
};

enum class TrajectoryKind { Setpoint, Quintic };

/// Reference trajectory for the first subsystem. Quintic segments are
/// contiguous starting at t_start; past the last segment the trajectory
/// holds the final position.
struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Setpoint;
    double setpoint = 0.0;
    std::vector<QuinticSegment> segments;
    double t_start = 0.0;

    [[nodiscard]] std::pair<double, double> eval(double t) const {
        if (kind == TrajectoryKind::Setpoint) return {setpoint, 0.0};
        double t0 = t_start;
        for (const auto& seg : segments) {
            if (t < t0 + seg.duration)
                return quintic_trajectory(std::max(t - t0, 0.0), seg.x0, seg.xf, seg.duration);
            t0 += seg.duration;
        }
        const double last = segments.empty() ? 0.0 : segments.back().xf;
        return {last, 0.0};
    }

    /// Largest |position| the trajectory can reach (segment endpoints suffice:
    /// the quintic blend is monotone between them).
    [[nodiscard]] double sup_abs() const {
        if (kind == TrajectoryKind::Setpoint) return std::abs(setpoint);
        double m = 0.0;
        for (const auto& seg : segments)
            m = std::max({m, std::abs(seg.x0), std::abs(seg.xf)});
        return m;
    }

    [[nodiscard]] bool valid() const {
        if (kind == TrajectoryKind::Setpoint) return true;
        if (segments.empty()) return false;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (!(segments[i].duration > 0.0)) return false;
            if (i > 0 && segments[i].x0 != segments[i - 1].xf) return false;
        }
        return true;
    }
};

enum class LoadKind { None, Constant, Piecewise, Sine };

/// Load schedule as a fraction of actuator capacity. Piecewise schedules are
/// linearly interpolated; a repeated breakpoint time encodes a jump, and
/// evaluation at a breakpoint takes the right limit.
struct LoadSpec {
    LoadKind kind = LoadKind::None;
    double fraction = 0.0;                          // Constant
    std::vector<std::pair<double, double>> points;  // Piecewise: (t, fraction)
    double offset = 0.0;                            // Sine
    double amp = 0.0;
    double freq = 0.0;  // Hz
    double phase = 0.0;

    [[nodiscard]] double eval_fraction(double t) const {
        switch (kind) {
            case LoadKind::None:
                return 0.0;
            case LoadKind::Constant:
                return fraction;
            case LoadKind::Sine:
                return offset + amp * std::sin(2.0 * M_PI * freq * t + phase);
            case LoadKind::Piecewise: {
                if (points.empty()) return 0.0;
                if (t < points.front().first) return points.front().second;
                for (std::size_t i = 0; i + 1 < points.size(); ++i) {
                    const auto& [ta, fa] = points[i];
                    const auto& [tb, fb] = points[i + 1];
                    if (t >= tb) continue;
                    if (ta == tb) continue;  // jump: fall through to the right side
                    if (t >= ta) return fa + (fb - fa) * (t - ta) / (tb - ta);
                }
                // At or past a breakpoint: right limit.
                for (std::size_t i = points.size(); i-- > 0;)
                    if (t >= points[i].first) return points[i].second;
                return points.back().second;
            }
        }
        return 0.0;
    }

    [[nodiscard]] bool valid() const {
        if (kind != LoadKind::Piecewise) return true;
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].first < points[i - 1].first) return false;
        return true;
    }
};

/// Load force at time t: schedule fraction times actuator capacity.
inline double load_profile(double t, const LoadSpec& spec, double capacity) {
    return spec.eval_fraction(t) * capacity;
}

}  // namespace mrbc
