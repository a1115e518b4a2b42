#pragma once

// Barrier-constrained adaptive controller: prescribed performance envelopes,
// feedforward compensation with a logarithmic barrier, the inverse-dynamics
// reference chain and input amplitude saturation.

#include <algorithm>

#include "mrbc/types.hpp"

namespace mrbc {

/// Decaying performance envelope o(t) = (shoot - bound)*exp(-rate*t) + bound.
struct EnvelopeParams {
    double shoot = 1.0;   // initial bound, > bound
    double bound = 0.1;   // asymptotic bound, > 0
    double rate = 1.0;    // convergence rate, 1/s, > 0

    [[nodiscard]] bool valid() const { return shoot > bound && bound > 0.0 && rate > 0.0; }
};

struct HacBlfConfig {
    Vec gamma;    // proportional tracking gains, > 0
    Vec epsilon;  // barrier adaptation couplings, > 0
    Vec kappa;    // barrier adaptation leakage rates, > 0
    std::vector<EnvelopeParams> envelopes;
    double u_min = -1.0;
    double u_max = 1.0;

    [[nodiscard]] int order() const { return static_cast<int>(gamma.size()); }
    [[nodiscard]] bool valid() const {
        if (gamma.empty() || epsilon.size() != gamma.size() ||
            kappa.size() != gamma.size() || envelopes.size() != gamma.size())
            return false;
        if (!(u_min < u_max)) return false;
        if (!all_positive(gamma) || !all_positive(epsilon) || !all_positive(kappa))
            return false;
        for (const auto& e : envelopes)
            if (!e.valid()) return false;
        return true;
    }
};

struct HacBlfState {
    Vec theta;   // barrier adaptation states, nonnegative from nonnegative start
    Vec filter;  // derivative-filter memory for the reference chain, i >= 2
};

// Barrier denominators below this are treated as violations before they can
// blow up the compensation terms.
inline constexpr double kBarrierGuard = 1e-9;

/// Envelope value at time t; strictly decreasing from shoot towards bound.
[[nodiscard]] inline double envelope(double t, const EnvelopeParams& p) {
    return (p.shoot - p.bound) * std::exp(-p.rate * t) + p.bound;
}

/// Barrier denominator Q = o^2 - e_bar^2. Throws when the error has reached
/// the envelope or the gap is inside the numeric guard band.
inline double envelope_gap(double e_bar, double o, int subsystem = 0, double t = 0.0) {
    const double q = o * o - e_bar * e_bar;
    if (std::abs(e_bar) >= o || q < kBarrierGuard)
        throw EnvelopeViolation(subsystem, t, e_bar, o);
    return q;
}

/// Feedforward compensation for subsystem i (1-based):
/// fbar_i = -gamma_i/2*ebar_i - eps_i*theta_i*ebar_i/Q_i - (Q_i/Q_{i-1})*ebar_{i-1},
/// with the coupling term absent for i = 1 (ebar_0 = 0, Q_0 never evaluated).
inline double ff_compensation(int i, const Vec& e_bar, const Vec& q, double theta_i,
                              const HacBlfConfig& cfg) {
    const std::size_t k = static_cast<std::size_t>(i - 1);
    double v = -0.5 * cfg.gamma[k] * e_bar[k] -
               cfg.epsilon[k] * theta_i * e_bar[k] / q[k];
    if (i > 1) v -= (q[k] / q[k - 1]) * e_bar[k - 1];
    return v;
}

/// Barrier adaptation law: theta_dot_i = -kappa_i*theta_i + eps_i*(ebar_i/Q_i)^2.
inline double theta_rate(int i, double e_bar_i, double q_i, double theta_i,
                         const HacBlfConfig& cfg) {
    const std::size_t k = static_cast<std::size_t>(i - 1);
    const double r = e_bar_i / q_i;
    return -cfg.kappa[k] * theta_i + cfg.epsilon[k] * r * r;
}

/// Next element of the inverse-dynamics reference chain:
/// x_{(i+1)d} = xd_dot_i + fbar_i - fstar_i.
[[nodiscard]] inline double reference_chain(double xd_i_dot, double ff_i, double f_star_i) {
    return xd_i_dot + ff_i - f_star_i;
}

/// Raw control command, the chain evaluated at the input level:
/// u = xd_dot_n + fbar_n - fstar_n.
[[nodiscard]] inline double control_law(double xd_n_dot, double ff_n, double f_star_n) {
    return xd_n_dot + ff_n - f_star_n;
}

struct Saturation {
    double u_applied;  // clamp(u, u_min, u_max)
    double alpha1;     // affine decomposition u_applied = alpha1*u + alpha2
    double alpha2;
    double delta_u;    // u_applied - u; zero iff u within limits
};

/// Amplitude saturation with its affine decomposition. The applied value is
/// assigned branch-wise so it equals the clamp bit-exactly.
inline Saturation saturate(double u, double u_min, double u_max) {
    Saturation s{};
    if (u > u_max) {
        s.alpha1 = 1.0 / (std::abs(u) + 1.0);
        s.alpha2 = u_max - u * s.alpha1;
        s.u_applied = u_max;
    } else if (u < u_min) {
        s.alpha1 = 1.0 / (std::abs(u) + 1.0);
        s.alpha2 = u_min - u * s.alpha1;
        s.u_applied = u_min;
    } else {
        s.alpha1 = 1.0;
        s.alpha2 = 0.0;
        s.u_applied = u;
    }
    s.delta_u = s.u_applied - u;
    return s;
}

}  // namespace mrbc
