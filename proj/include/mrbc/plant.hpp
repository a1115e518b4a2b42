#pragma once

// Uncertain strict-feedback plant: the ground-truth system the simulator
// integrates. The controller never sees the uncertainty profile; monitors do.

#include <functional>
#include <random>
#include <span>
#include <utility>

#include "mrbc/types.hpp"

namespace mrbc {

/// State- and time-dependent term. Receives only the triangular prefix
/// x_1..x_i, which enforces the strict-feedback structure by construction.
using StateTerm = std::function<double(std::span<const double>, double)>;
/// Time-only disturbance term.
using TimeTerm = std::function<double(double)>;

inline StateTerm zero_state_term() {
    return [](std::span<const double>, double) { return 0.0; };
}
inline StateTerm unit_state_term() {
    return [](std::span<const double>, double) { return 1.0; };
}
inline TimeTerm zero_time_term() {
    return [](double) { return 0.0; };
}

/// Ground-truth uncertainty: modeling errors d_i, control gains g_i and
/// external disturbances. Known only to the simulator and the monitors.
struct UncertaintyProfile {
    std::vector<StateTerm> d;        // modeling errors d_i(x_1..i, t)
    std::vector<StateTerm> g;        // control gains g_i(x_1..i, t), never zero
    std::vector<TimeTerm> external;  // external disturbances per subsystem
    unsigned long noise_seed = 0;

    static UncertaintyProfile none(int n) {
        UncertaintyProfile u;
        u.d.assign(static_cast<std::size_t>(n), zero_state_term());
        u.g.assign(static_cast<std::size_t>(n), unit_state_term());
        u.external.assign(static_cast<std::size_t>(n), zero_time_term());
        return u;
    }
};

/// n-order strict-feedback plant: known modeling terms plus the hidden
/// uncertainty profile. Immutable after construction, safe to share.
struct PlantModel {
    int n = 0;
    std::vector<StateTerm> known_terms;  // f_i(x_1..i, t)
    UncertaintyProfile uncertainty;
    double capacity = 1.0;  // actuator capacity; denominates % load claims
    TimeTerm load = zero_time_term();  // load force F_L(t), 0 when unused

    [[nodiscard]] bool valid() const {
        return n >= 1 && capacity > 0.0 &&
               known_terms.size() == static_cast<std::size_t>(n) &&
               uncertainty.d.size() == static_cast<std::size_t>(n) &&
               uncertainty.g.size() == static_cast<std::size_t>(n) &&
               uncertainty.external.size() == static_cast<std::size_t>(n);
    }
};

/// Equivalent rigid-body parameters of an electromechanical linear actuator
/// (motor + gearbox + ball screw), position/velocity form.
struct EmlaParams {
    double inertia = 1.0;          // I_eq, kg*m^2, > 0
    double damping = 0.0;          // B_eq, N*s/m, >= 0
    double spring = 0.0;           // K_eq, N/um, >= 0
    double load_coeff = 0.0;       // f_eq, dimensionless, >= 0
    double torque_capacity = 1.0;  // N*m, > 0

    // Optional sensor-channel uncertainty on the position subsystem:
    // a multiplicative wobble on the velocity gain (so the effective
    // uncertainty on SS_1 is wobble_amp*sin(2*pi*wobble_freq*t)*x_2) plus
    // seeded band-limited noise entering as an external disturbance.
    double sensor_wobble_amp = 0.0;
    double sensor_wobble_freq = 0.0;  // Hz
    double sensor_noise_amp = 0.0;    // RMS of the band-limited disturbance
    double sensor_noise_cutoff = 20.0;  // Hz

    [[nodiscard]] bool valid() const {
        return inertia > 0.0 && damping >= 0.0 && spring >= 0.0 &&
               load_coeff >= 0.0 && torque_capacity > 0.0 &&
               sensor_wobble_amp >= 0.0 && sensor_noise_amp >= 0.0;
    }
};

/// Smooth band-limited noise: a seeded harmonic series with uniformly drawn
/// frequencies and phases, scaled to the requested RMS. Being a pure function
/// of time keeps runs deterministic and integrator-friendly.
inline TimeTerm band_limited_noise(double rms, double cutoff_hz, unsigned long seed) {
    if (rms == 0.0) return zero_time_term();
    constexpr int kHarmonics = 8;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.05 * cutoff_hz, cutoff_hz);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::vector<double> w(kHarmonics), ph(kHarmonics);
    for (int k = 0; k < kHarmonics; ++k) {
        w[k] = 2.0 * M_PI * freq(rng);
        ph[k] = phase(rng);
    }
    // Equal amplitudes a with RMS = a*sqrt(K/2).
    const double amp = rms * std::sqrt(2.0 / kHarmonics);
    return [w = std::move(w), ph = std::move(ph), amp](double t) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) s += std::sin(w[k] * t + ph[k]);
        return amp * s;
    };
}

/// Plant derivative of Eq-form xdot_i = g_i*x_{i+1} + f_i + d_i + ext_i with
/// the saturated input in place of x_{n+1}.
inline Vec sff_derivative(const Vec& x, double u_applied, double t, const PlantModel& model) {
    const int n = model.n;
    Vec dx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::span<const double> prefix(x.data(), static_cast<std::size_t>(i + 1));
        const double next = (i + 1 < n) ? x[static_cast<std::size_t>(i + 1)] : u_applied;
        const double gi = model.uncertainty.g[static_cast<std::size_t>(i)](prefix, t);
        const double fi = model.known_terms[static_cast<std::size_t>(i)](prefix, t);
        const double di = model.uncertainty.d[static_cast<std::size_t>(i)](prefix, t);
        const double ei = model.uncertainty.external[static_cast<std::size_t>(i)](t);
        const double v = gi * next + fi + di + ei;
        if (!std::isfinite(v)) throw NumericFailure(i + 1, t, "plant derivative");
        dx[static_cast<std::size_t>(i)] = v;
    }
    return dx;
}

/// Effective (possibly non-triangular) uncertainty seen by the reference
/// model: d_i + (g_i - 1)*next_input, where next_input is x_{i+1} below the
/// input level and the saturated input at it. Ground truth for monitors only.
inline double effective_uncertainty(const Vec& x, double next_input, double t,
                                    const PlantModel& model, int index) {
    const int i = index - 1;
    std::span<const double> prefix(x.data(), static_cast<std::size_t>(index));
    const double gi = model.uncertainty.g[static_cast<std::size_t>(i)](prefix, t);
    const double di = model.uncertainty.d[static_cast<std::size_t>(i)](prefix, t);
    return di + (gi - 1.0) * next_input;
}

/// Builds the 2nd-order EMLA plant. The spring term is the only part the
/// controller is allowed to know; gain, damping and the load disturbance go
/// into the uncertainty profile.
inline PlantModel emla_model(const EmlaParams& p, TimeTerm load_force = zero_time_term()) {
    if (!(p.inertia > 0.0)) throw ConfigError("emla_model: inertia must be > 0");
    if (!p.valid()) throw ConfigError("emla_model: invalid parameters");

    const double inv_i = 1.0 / p.inertia;
    PlantModel m;
    m.n = 2;
    m.capacity = p.torque_capacity;
    m.load = load_force ? std::move(load_force) : zero_time_term();

    m.known_terms.resize(2);
    m.known_terms[0] = zero_state_term();
    m.known_terms[1] = [inv_i, k = p.spring](std::span<const double> x, double) {
        return -inv_i * k * x[0];
    };

    m.uncertainty.d.resize(2);
    m.uncertainty.g.resize(2);
    m.uncertainty.external.resize(2);

    m.uncertainty.g[0] = [a = p.sensor_wobble_amp,
                          w = 2.0 * M_PI * p.sensor_wobble_freq](std::span<const double>, double t) {
        return 1.0 + a * std::sin(w * t);
    };
    m.uncertainty.g[1] = [inv_i](std::span<const double>, double) { return inv_i; };

    m.uncertainty.d[0] = zero_state_term();
    m.uncertainty.d[1] = [inv_i, b = p.damping](std::span<const double> x, double) {
        return -inv_i * b * x[1];
    };

    m.uncertainty.external[0] =
        band_limited_noise(p.sensor_noise_amp, p.sensor_noise_cutoff, 0);
    m.uncertainty.external[1] = [inv_i, fl = p.load_coeff, load = m.load](double t) {
        return -inv_i * fl * load(t);
    };
    return m;
}

/// Re-seeds the stochastic parts of an EMLA plant (the band-limited sensor
/// noise stream). Other terms are unaffected.
inline void reseed_emla_noise(PlantModel& m, const EmlaParams& p, unsigned long seed) {
    m.uncertainty.noise_seed = seed;
    m.uncertainty.external[0] =
        band_limited_noise(p.sensor_noise_amp, p.sensor_noise_cutoff, seed);
}

/// Pure integrator chain of order n: f = 0, g = 1, no uncertainty.
inline PlantModel chain_model(int n, double capacity = 1.0) {
    if (n < 1) throw ConfigError("chain_model: order must be >= 1");
    PlantModel m;
    m.n = n;
    m.capacity = capacity;
    m.known_terms.assign(static_cast<std::size_t>(n), zero_state_term());
    m.uncertainty = UncertaintyProfile::none(n);
    return m;
}

}  // namespace mrbc
