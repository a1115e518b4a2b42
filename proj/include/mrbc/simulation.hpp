#pragma once

// Deterministic fixed-step closed-loop integration of plant + estimators +
// barrier controller. One controller evaluation feeds both the plant and the
// reference-model derivatives.

#include <chrono>

#include "mrbc/config.hpp"
#include "mrbc/hacblf.hpp"
#include "mrbc/hae.hpp"
#include "mrbc/plant.hpp"
#include "mrbc/trace.hpp"
#include "mrbc/trajectory.hpp"

namespace mrbc {

struct SimState {
    double t = 0.0;
    Vec x;
    HaeState hae;
    HacBlfState hacblf;
};

/// Everything one controller evaluation produces: logged signals, ground
/// truth for the monitors, and the derivative of the full integration state.
struct ControlEval {
    Vec e, e_bar, xd, xd_dot, o, q, f_star, f_bar;
    double u_raw = 0.0, u_sat = 0.0, alpha1 = 1.0, alpha2 = 0.0, delta_u = 0.0;
    double f_load = 0.0;
    Vec d_star, external;
    Vec dx, dx_hat, dpsi, dtheta, dfilter;
};

/// Evaluates envelopes, errors, the inverse-dynamics reference chain, the
/// control law and all derivative blocks at the given state. Throws
/// EnvelopeViolation / NumericFailure with diagnostics.
inline ControlEval closed_loop_derivative(const SimState& s, const PlantModel& model,
                                          const HaeConfig& hae_cfg,
                                          const HacBlfConfig& ctl_cfg,
                                          const TrajectorySpec& traj, double tau_f) {
    const int n = model.n;
    const double t = s.t;
    ControlEval ev;
    ev.e = estimation_errors(s.x, s.hae);
    ev.e_bar.resize(static_cast<std::size_t>(n));
    ev.xd.resize(static_cast<std::size_t>(n));
    ev.xd_dot.resize(static_cast<std::size_t>(n));
    ev.o.resize(static_cast<std::size_t>(n));
    ev.q.resize(static_cast<std::size_t>(n));
    ev.f_star.resize(static_cast<std::size_t>(n));
    ev.f_bar.resize(static_cast<std::size_t>(n));

    const auto [x1d, x1d_dot] = traj.eval(t);
    ev.xd[0] = x1d;

    for (int i = 1; i <= n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i - 1);
        ev.o[k] = envelope(t, ctl_cfg.envelopes[k]);
        ev.e_bar[k] = s.hae.x_hat[k] - ev.xd[k];
        ev.q[k] = envelope_gap(ev.e_bar[k], ev.o[k], i, t);
        ev.f_bar[k] = ff_compensation(i, ev.e_bar, ev.q, s.hacblf.theta[k], ctl_cfg);

        std::span<const double> prefix(s.x.data(), static_cast<std::size_t>(i));
        const double f_known = model.known_terms[k](prefix, t);
        ev.f_star[k] = modeling_term(i, f_known, ev.e, s.hae.psi[k], hae_cfg);
        if (!std::isfinite(ev.f_star[k])) throw NumericFailure(i, t, "modeling term");

        ev.xd_dot[k] = (i == 1) ? x1d_dot : (ev.xd[k] - s.hacblf.filter[k - 1]) / tau_f;
        if (i < n)
            ev.xd[k + 1] = reference_chain(ev.xd_dot[k], ev.f_bar[k], ev.f_star[k]);
        else
            ev.u_raw = control_law(ev.xd_dot[k], ev.f_bar[k], ev.f_star[k]);
    }
    if (!std::isfinite(ev.u_raw)) throw NumericFailure(n, t, "control law");

    const Saturation sat = saturate(ev.u_raw, ctl_cfg.u_min, ctl_cfg.u_max);
    ev.u_sat = sat.u_applied;
    ev.alpha1 = sat.alpha1;
    ev.alpha2 = sat.alpha2;
    ev.delta_u = sat.delta_u;
    ev.f_load = model.load(t);

    ev.dx = sff_derivative(s.x, ev.u_sat, t, model);
    ev.dx_hat = reference_derivative(s.hae, ev.f_star, ev.u_sat);
    ev.dpsi.resize(static_cast<std::size_t>(n));
    ev.dtheta.resize(static_cast<std::size_t>(n));
    ev.d_star.resize(static_cast<std::size_t>(n));
    ev.external.resize(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i - 1);
        ev.dpsi[k] = psi_rate(i, ev.e[k], s.hae.psi[k], hae_cfg);
        ev.dtheta[k] = theta_rate(i, ev.e_bar[k], ev.q[k], s.hacblf.theta[k], ctl_cfg);
        const double next = (i < n) ? s.x[static_cast<std::size_t>(i)] : ev.u_sat;
        ev.d_star[k] = effective_uncertainty(s.x, next, t, model, i);
        ev.external[k] = model.uncertainty.external[k](t);
    }
    ev.dfilter.resize(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
    for (int i = 2; i <= n; ++i)
        ev.dfilter[static_cast<std::size_t>(i - 2)] =
            (ev.xd[static_cast<std::size_t>(i - 1)] - s.hacblf.filter[static_cast<std::size_t>(i - 2)]) / tau_f;
    return ev;
}

namespace detail {

inline void axpy(SimState& s, double a, const ControlEval& d, const SimState& base) {
    const std::size_t n = base.x.size();
    for (std::size_t i = 0; i < n; ++i) {
        s.x[i] = base.x[i] + a * d.dx[i];
        s.hae.x_hat[i] = base.hae.x_hat[i] + a * d.dx_hat[i];
        s.hae.psi[i] = base.hae.psi[i] + a * d.dpsi[i];
        s.hacblf.theta[i] = base.hacblf.theta[i] + a * d.dtheta[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        s.hacblf.filter[i] = base.hacblf.filter[i] + a * d.dfilter[i];
}

inline void rk4_combine(SimState& s, double dt, const ControlEval& k1, const ControlEval& k2,
                        const ControlEval& k3, const ControlEval& k4) {
    const double w = dt / 6.0;
    const std::size_t n = s.x.size();
    for (std::size_t i = 0; i < n; ++i) {
        s.x[i] += w * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
        s.hae.x_hat[i] +=
            w * (k1.dx_hat[i] + 2.0 * k2.dx_hat[i] + 2.0 * k3.dx_hat[i] + k4.dx_hat[i]);
        s.hae.psi[i] += w * (k1.dpsi[i] + 2.0 * k2.dpsi[i] + 2.0 * k3.dpsi[i] + k4.dpsi[i]);
        s.hacblf.theta[i] +=
            w * (k1.dtheta[i] + 2.0 * k2.dtheta[i] + 2.0 * k3.dtheta[i] + k4.dtheta[i]);
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        s.hacblf.filter[i] +=
            w * (k1.dfilter[i] + 2.0 * k2.dfilter[i] + 2.0 * k3.dfilter[i] + k4.dfilter[i]);
}

}  // namespace detail

/// Classical RK4 update of the full closed-loop state. The first-stage
/// evaluation can be supplied when the caller already has it.
inline void step(SimState& s, double dt, const PlantModel& model, const HaeConfig& hae_cfg,
                 const HacBlfConfig& ctl_cfg, const TrajectorySpec& traj, double tau_f,
                 const ControlEval* k1_eval = nullptr) {
    const ControlEval k1 =
        k1_eval ? *k1_eval : closed_loop_derivative(s, model, hae_cfg, ctl_cfg, traj, tau_f);
    SimState tmp = s;
    tmp.t = s.t + 0.5 * dt;
    detail::axpy(tmp, 0.5 * dt, k1, s);
    const ControlEval k2 = closed_loop_derivative(tmp, model, hae_cfg, ctl_cfg, traj, tau_f);
    detail::axpy(tmp, 0.5 * dt, k2, s);
    const ControlEval k3 = closed_loop_derivative(tmp, model, hae_cfg, ctl_cfg, traj, tau_f);
    tmp.t = s.t + dt;
    detail::axpy(tmp, dt, k3, s);
    const ControlEval k4 = closed_loop_derivative(tmp, model, hae_cfg, ctl_cfg, traj, tau_f);
    detail::rk4_combine(s, dt, k1, k2, k3, k4);
    s.t += dt;
}

/// Generic RK4 step for a plain ODE, used by integrator-order checks.
template <typename F>
inline Vec rk4_step(F&& f, const Vec& y, double t, double dt) {
    const Vec k1 = f(t, y);
    Vec tmp(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    const Vec k2 = f(t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    const Vec k3 = f(t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + dt * k3[i];
    const Vec k4 = f(t + dt, tmp);
    Vec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

enum class RunStatus { Completed, EnvelopeViolated, NumericFailed, Rejected };

struct RunResult {
    Trace trace;
    RunStatus status = RunStatus::Completed;
    std::string message;
    int subsystem = 0;    // offending subsystem for violation/failure
    double fail_time = 0.0;
    double wall_seconds = 0.0;

    [[nodiscard]] bool completed() const { return status == RunStatus::Completed; }
};

/// Builds the initial state: plant and reference states from config, filter
/// memory seeded so the filtered chain derivatives start at zero. Throws
/// EnvelopeViolation if the start is inadmissible.
inline SimState initial_state(const ScenarioConfig& cfg, const PlantModel& model) {
    const int n = model.n;
    SimState s;
    s.t = cfg.sim.t0;
    s.x = cfg.init_x;
    s.hae.x_hat = cfg.init_x_hat;
    s.hae.psi = cfg.init_psi;
    s.hacblf.theta = cfg.init_theta;
    s.hacblf.filter.assign(static_cast<std::size_t>(n > 0 ? n - 1 : 0), 0.0);

    // Reference chain at t0 with zero filtered derivatives.
    const auto [x1d, x1d_dot] = cfg.trajectory.eval(s.t);
    Vec e = estimation_errors(s.x, s.hae);
    Vec e_bar(static_cast<std::size_t>(n)), q(static_cast<std::size_t>(n));
    double xd_i = x1d;
    for (int i = 1; i <= n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i - 1);
        const double o = envelope(s.t, cfg.hacblf.envelopes[k]);
        e_bar[k] = s.hae.x_hat[k] - xd_i;
        q[k] = envelope_gap(e_bar[k], o, i, s.t);
        if (i == n) break;
        const double f_bar = ff_compensation(i, e_bar, q, s.hacblf.theta[k], cfg.hacblf);
        std::span<const double> prefix(s.x.data(), static_cast<std::size_t>(i));
        const double f_known = model.known_terms[k](prefix, s.t);
        const double f_star = modeling_term(i, f_known, e, s.hae.psi[k], cfg.hae);
        const double xd_dot = (i == 1) ? x1d_dot : 0.0;
        xd_i = reference_chain(xd_dot, f_bar, f_star);
        s.hacblf.filter[static_cast<std::size_t>(i - 1)] = xd_i;
    }
    return s;
}

/// Full scenario validation: static config checks plus the initial
/// admissibility of every tracking error against its envelope.
inline std::vector<std::string> validate_scenario(const ScenarioConfig& cfg) {
    std::vector<std::string> errors = validate(cfg);
    if (!errors.empty()) return errors;
    try {
        const PlantModel model = make_plant(cfg);
        (void)initial_state(cfg, model);
    } catch (const EnvelopeViolation& v) {
        errors.push_back("inadmissible start: subsystem " + std::to_string(v.subsystem) +
                         " has |e_bar(t0)| = " + std::to_string(std::abs(v.e_bar)) +
                         " >= o(t0) = " + std::to_string(v.o));
    } catch (const std::exception& ex) {
        errors.push_back(ex.what());
    }
    return errors;
}

namespace detail {

inline void append_record(Trace& trace, const SimState& s, const ControlEval& ev) {
    const int n = static_cast<int>(s.x.size());
    auto& d = trace.data;
    d.push_back(s.t);
    auto push_vec = [&d](const Vec& v) { d.insert(d.end(), v.begin(), v.end()); };
    push_vec(s.x);
    push_vec(s.hae.x_hat);
    push_vec(ev.e);
    push_vec(ev.e_bar);
    push_vec(ev.xd);
    d.push_back(ev.u_raw);
    d.push_back(ev.u_sat);
    d.push_back(ev.delta_u);
    d.push_back(ev.f_load);
    push_vec(ev.o);
    push_vec(ev.q);
    push_vec(s.hae.psi);
    push_vec(s.hacblf.theta);
    push_vec(ev.f_star);
    push_vec(ev.f_bar);
    push_vec(ev.d_star);
    push_vec(ev.external);
    for (int i = 0; i + 1 < n; ++i) trace.filter_memory.push_back(s.hacblf.filter[static_cast<std::size_t>(i)]);
}

}  // namespace detail

/// Integrates the scenario from t0 to t_end at fixed dt and returns the full
/// trace plus a verdict. Inadmissible starts are rejected before integration.
inline RunResult run(const ScenarioConfig& cfg) {
    const auto wall_start = std::chrono::steady_clock::now();
    RunResult result;
    const PlantModel model = make_plant(cfg);
    const double tau_f = cfg.resolved_tau_f();
    result.trace.n = model.n;
    result.trace.columns = trace_columns(model.n);

    SimState s;
    try {
        s = initial_state(cfg, model);
    } catch (const EnvelopeViolation& v) {
        result.status = RunStatus::Rejected;
        result.subsystem = v.subsystem;
        result.fail_time = v.t;
        result.message = std::string("rejected before integration: ") + v.what();
        return result;
    }

    const long steps = std::lround((cfg.sim.t_end - cfg.sim.t0) / cfg.sim.dt);
    const std::size_t cols = result.trace.columns.size();
    result.trace.data.reserve(static_cast<std::size_t>(steps + 1) * cols);

    try {
        for (long k = 0;; ++k) {
            const ControlEval ev =
                closed_loop_derivative(s, model, cfg.hae, cfg.hacblf, cfg.trajectory, tau_f);
            detail::append_record(result.trace, s, ev);
            if (k >= steps) break;
            step(s, cfg.sim.dt, model, cfg.hae, cfg.hacblf, cfg.trajectory, tau_f, &ev);
        }
        result.status = RunStatus::Completed;
    } catch (const EnvelopeViolation& v) {
        result.status = RunStatus::EnvelopeViolated;
        result.subsystem = v.subsystem;
        result.fail_time = v.t;
        result.message = v.what();
    } catch (const NumericFailure& f) {
        result.status = RunStatus::NumericFailed;
        result.subsystem = f.index;
        result.fail_time = f.t;
        result.message = f.what();
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

}  // namespace mrbc
