#pragma once

// Offline stability monitors: Lyapunov values, decay/offset parameters, the
// proved exponential bounds and rate inequalities, and decay-rate fitting,
// all evaluated along a recorded trace.

#include <algorithm>

#include "mrbc/config.hpp"
#include "mrbc/trace.hpp"

namespace mrbc {

/// Estimator-side Lyapunov value: sum of 1/2*(e_i^2 + psi_i^2).
[[nodiscard]] inline double v_ob(const Vec& e, const Vec& psi) {
    double v = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) v += 0.5 * (e[i] * e[i] + psi[i] * psi[i]);
    return v;
}

/// Controller-side barrier Lyapunov value: sum of 1/2*log(o^2/Q) + 1/2*theta^2.
/// Requires every tracking error strictly inside its envelope.
[[nodiscard]] inline double v_cont(const Vec& e_bar, const Vec& o, const Vec& theta) {
    double v = 0.0;
    for (std::size_t i = 0; i < e_bar.size(); ++i) {
        const double q = envelope_gap(e_bar[i], o[i], static_cast<int>(i) + 1);
        v += 0.5 * std::log(o[i] * o[i] / q) + 0.5 * theta[i] * theta[i];
    }
    return v;
}

[[nodiscard]] inline double v_all(const Vec& e, const Vec& psi, const Vec& e_bar,
                                  const Vec& o, const Vec& theta) {
    return v_ob(e, psi) + v_cont(e_bar, o, theta);
}

/// Stability connectors s_i = e_i * e_{i+1}, length n-1.
[[nodiscard]] inline Vec connectors(const Vec& e) {
    Vec s(e.size() > 0 ? e.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < e.size(); ++i) s[i] = e[i] * e[i + 1];
    return s;
}

/// Barrier-weighted connectors sbar_i = (ebar_i / Q_i) * ebar_{i+1}.
[[nodiscard]] inline Vec connectors_bar(const Vec& e_bar, const Vec& q) {
    Vec s(e_bar.size() > 0 ? e_bar.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < e_bar.size(); ++i) s[i] = (e_bar[i] / q[i]) * e_bar[i + 1];
    return s;
}

/// Cached column layout of the fixed trace schema.
struct TraceView {
    const Trace* tr;
    int n;
    int c_t, c_x, c_xhat, c_e, c_ebar, c_xd, c_u_raw, c_u_sat, c_delta_u, c_fl;
    int c_o, c_q, c_psi, c_theta, c_fstar, c_fbar, c_dstar, c_gamma;

    explicit TraceView(const Trace& trace) : tr(&trace), n(trace.n) {
        auto idx = [&trace](const std::string& name) {
            const int c = trace.column_index(name);
            if (c < 0) throw std::runtime_error("trace is missing column '" + name + "'");
            return c;
        };
        c_t = idx("t");
        c_x = idx("x1");
        c_xhat = idx("xhat1");
        c_e = idx("e1");
        c_ebar = idx("ebar1");
        c_xd = idx("xd1");
        c_u_raw = idx("u_raw");
        c_u_sat = idx("u_sat");
        c_delta_u = idx("delta_u");
        c_fl = idx("F_L");
        c_o = idx("o1");
        c_q = idx("Q1");
        c_psi = idx("psi1");
        c_theta = idx("theta1");
        c_fstar = idx("fstar1");
        c_fbar = idx("fbar1");
        c_dstar = idx("dstar1");
        c_gamma = idx("gamma1");
    }

    [[nodiscard]] std::size_t rows() const { return tr->rows(); }
    [[nodiscard]] double t(std::size_t r) const { return tr->at(r, static_cast<std::size_t>(c_t)); }
    [[nodiscard]] double get(std::size_t r, int base, int i) const {  // i is 1-based
        return tr->at(r, static_cast<std::size_t>(base + i - 1));
    }
    [[nodiscard]] Vec group(std::size_t r, int base) const {
        Vec v(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) v[static_cast<std::size_t>(i - 1)] = get(r, base, i);
        return v;
    }
    [[nodiscard]] double scalar(std::size_t r, int col) const {
        return tr->at(r, static_cast<std::size_t>(col));
    }

    [[nodiscard]] double v_ob_at(std::size_t r) const {
        double v = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double e = get(r, c_e, i), psi = get(r, c_psi, i);
            v += 0.5 * (e * e + psi * psi);
        }
        return v;
    }
    [[nodiscard]] double barrier_sum_at(std::size_t r) const {  // sum log(o^2/Q)
        double v = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double o = get(r, c_o, i), q = get(r, c_q, i);
            v += std::log(o * o / q);
        }
        return v;
    }
    [[nodiscard]] double v_cont_at(std::size_t r) const {
        double v = 0.5 * barrier_sum_at(r);
        for (int i = 1; i <= n; ++i) {
            const double th = get(r, c_theta, i);
            v += 0.5 * th * th;
        }
        return v;
    }
    [[nodiscard]] double e_ob_norm_at(std::size_t r) const {
        double v = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double e = get(r, c_e, i);
            v += e * e;
        }
        return std::sqrt(v);
    }
};

/// Decay rate and uncertainty offset for the estimator stage. The free
/// constants are delta_i = delta_frac*lambda_i and zeta_i = zeta_frac*lambda_i;
/// the offset uses the running supremum of the ground-truth uncertainty
/// columns over the analyzed window. Throws when positivity fails.
inline std::pair<double, double> decay_params_ob(const HaeConfig& cfg, const Trace& trace,
                                                 const AnalysisParams& ap = {}) {
    const int n = cfg.order();
    double rho = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double lam = cfg.lambda[static_cast<std::size_t>(i)];
        const double margin = lam * (1.0 - ap.delta_frac - ap.zeta_frac);
        if (!(margin > 0.0))
            throw std::domain_error("decay_params_ob: lambda margin nonpositive for subsystem " +
                                    std::to_string(i + 1));
        rho = std::min({rho, margin, 2.0 * cfg.beta[static_cast<std::size_t>(i)]});
    }
    const TraceView view(trace);
    double ell = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double delta = ap.delta_frac * cfg.lambda[static_cast<std::size_t>(i - 1)];
        const double zeta = ap.zeta_frac * cfg.lambda[static_cast<std::size_t>(i - 1)];
        double sup = 0.0;
        for (std::size_t r = 0; r < view.rows(); ++r) {
            const double ds = view.get(r, view.c_dstar, i);
            const double g = view.get(r, view.c_gamma, i);
            sup = std::max(sup, ds * ds / (2.0 * delta) + g * g / (2.0 * zeta));
        }
        ell += sup;
    }
    return {rho, ell};
}

/// Decay rate and saturation offset for the controller stage, with
/// v_n = vn_frac*gamma_n and v_i = 0 below the input level.
inline std::pair<double, double> decay_params_cont(const HacBlfConfig& cfg, const Trace& trace,
                                                   const AnalysisParams& ap = {}) {
    const int n = cfg.order();
    const double v_n = ap.vn_frac * cfg.gamma[static_cast<std::size_t>(n - 1)];
    double rho = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double v_i = (i == n - 1) ? v_n : 0.0;
        const double margin = cfg.gamma[static_cast<std::size_t>(i)] - v_i;
        if (!(margin > 0.0))
            throw std::domain_error("decay_params_cont: gamma margin nonpositive for subsystem " +
                                    std::to_string(i + 1));
        rho = std::min({rho, margin, 2.0 * cfg.kappa[static_cast<std::size_t>(i)]});
    }
    const TraceView view(trace);
    double ell = 0.0;
    for (std::size_t r = 0; r < view.rows(); ++r) {
        const double du = view.scalar(r, view.c_delta_u);
        const double qn = view.get(r, view.c_q, n);
        ell = std::max(ell, du * du / (2.0 * v_n * qn));
    }
    return {rho, ell};
}

namespace detail {

inline double rhs_tol(double rhs, const AnalysisParams& ap) {
    return ap.tol_abs + ap.tol_rel * std::abs(rhs);
}

}  // namespace detail

/// Fraction of samples obeying the estimator convergence bound:
/// ||e_ob(t)|| <= sqrt(2 V_ob(t0)) e^{-rho (t-t0)/2} + sqrt(2 ell / rho).
inline double check_bound_ob(const Trace& trace, double rho, double ell,
                             const AnalysisParams& ap = {}) {
    const TraceView view(trace);
    if (view.rows() == 0) return 1.0;
    const double v0 = view.v_ob_at(0);
    const double t0 = view.t(0);
    const double radius = std::sqrt(2.0 * ell / rho);
    std::size_t ok = 0;
    for (std::size_t r = 0; r < view.rows(); ++r) {
        const double rhs =
            std::sqrt(2.0 * v0) * std::exp(-0.5 * rho * (view.t(r) - t0)) + radius;
        if (view.e_ob_norm_at(r) <= rhs + detail::rhs_tol(rhs, ap)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(view.rows());
}

/// Fraction of samples obeying the barrier convergence bound:
/// sum log(o^2/Q) <= 2 Vcont(t0) e^{-rho (t-t0)} + 2 ell / rho.
inline double check_bound_cont(const Trace& trace, double rho, double ell,
                               const AnalysisParams& ap = {}) {
    const TraceView view(trace);
    if (view.rows() == 0) return 1.0;
    const double v0 = view.v_cont_at(0);
    const double t0 = view.t(0);
    std::size_t ok = 0;
    for (std::size_t r = 0; r < view.rows(); ++r) {
        const double rhs = 2.0 * v0 * std::exp(-rho * (view.t(r) - t0)) + 2.0 * ell / rho;
        if (view.barrier_sum_at(r) <= rhs + detail::rhs_tol(rhs, ap)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(view.rows());
}

/// Fraction of samples obeying the combined bound:
/// sum e^2 + log(o^2/Q) <= 2 Vall(t0) e^{-rho (t-t0)} + 2 ell / rho.
inline double check_bound_all(const Trace& trace, double rho, double ell,
                              const AnalysisParams& ap = {}) {
    const TraceView view(trace);
    if (view.rows() == 0) return 1.0;
    const double v0 = view.v_ob_at(0) + view.v_cont_at(0);
    const double t0 = view.t(0);
    std::size_t ok = 0;
    for (std::size_t r = 0; r < view.rows(); ++r) {
        const double en = view.e_ob_norm_at(r);
        const double lhs = en * en + view.barrier_sum_at(r);
        const double rhs = 2.0 * v0 * std::exp(-rho * (view.t(r) - t0)) + 2.0 * ell / rho;
        if (lhs <= rhs + detail::rhs_tol(rhs, ap)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(view.rows());
}

enum class RateKind { Ob, Cont, All };

/// Fraction of interior samples with central-difference Vdot <= -rho V + l(t),
/// where l(t) uses the instantaneous ground-truth uncertainty magnitudes.
inline double check_lyapunov_rate(const Trace& trace, double rho, RateKind which,
                                  const HaeConfig& hae_cfg, const HacBlfConfig& ctl_cfg,
                                  const AnalysisParams& ap = {}) {
    const TraceView view(trace);
    const std::size_t rows = view.rows();
    if (rows < 3) return 1.0;
    const int n = view.n;
    const double v_n = ap.vn_frac * ctl_cfg.gamma[static_cast<std::size_t>(n - 1)];

    auto v_at = [&](std::size_t r) {
        switch (which) {
            case RateKind::Ob: return view.v_ob_at(r);
            case RateKind::Cont: return view.v_cont_at(r);
            case RateKind::All: return view.v_ob_at(r) + view.v_cont_at(r);
        }
        return 0.0;
    };
    auto offset_at = [&](std::size_t r) {
        double l = 0.0;
        if (which != RateKind::Cont) {
            for (int i = 1; i <= n; ++i) {
                const double delta = ap.delta_frac * hae_cfg.lambda[static_cast<std::size_t>(i - 1)];
                const double zeta = ap.zeta_frac * hae_cfg.lambda[static_cast<std::size_t>(i - 1)];
                const double ds = view.get(r, view.c_dstar, i);
                const double g = view.get(r, view.c_gamma, i);
                l += ds * ds / (2.0 * delta) + g * g / (2.0 * zeta);
            }
        }
        if (which != RateKind::Ob) {
            const double du = view.scalar(r, view.c_delta_u);
            const double qn = view.get(r, view.c_q, n);
            l += du * du / (2.0 * v_n * qn);
        }
        return l;
    };

    std::size_t ok = 0;
    for (std::size_t r = 1; r + 1 < rows; ++r) {
        const double vdot = (v_at(r + 1) - v_at(r - 1)) / (view.t(r + 1) - view.t(r - 1));
        const double rhs = -rho * v_at(r) + offset_at(r);
        if (vdot <= rhs + detail::rhs_tol(rhs, ap)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(rows - 2);
}

/// Least-squares exponential decay rate of a positive series over its
/// transient window (samples above the floor). Returns the positive rate for
/// a decaying series, 0 for a constant one.
inline double fit_decay_rate(const Vec& t, const Vec& value, double floor = 1e-12) {
    double st = 0, sv = 0, stt = 0, stv = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(value[i] > floor)) continue;
        const double lv = std::log(value[i]);
        st += t[i];
        sv += lv;
        stt += t[i] * t[i];
        stv += t[i] * lv;
        ++m;
    }
    if (m < 2) return 0.0;
    const double denom = m * stt - st * st;
    if (denom == 0.0) return 0.0;
    const double slope = (m * stv - st * sv) / denom;
    return -slope;
}

/// Per-sample telescoping residuals of the stability connectors: the sum of
/// each subsystem's own connector contribution, computed the way the
/// per-subsystem decomposition produces them. Returns (plain, barrier).
inline std::pair<double, double> connector_cancellation(const Trace& trace, std::size_t row) {
    const TraceView view(trace);
    const int n = view.n;
    double s_sum = 0.0, sbar_sum = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double e_i = view.get(row, view.c_e, i);
        const double eb_i = view.get(row, view.c_ebar, i);
        const double q_i = view.get(row, view.c_q, i);
        if (i < n) {  // destabilizing connector from the subsystem above
            s_sum += e_i * view.get(row, view.c_e, i + 1);
            sbar_sum += (eb_i / q_i) * view.get(row, view.c_ebar, i + 1);
        }
        if (i > 1) {  // stabilizing counterpart through the coupling term
            const double e_prev = view.get(row, view.c_e, i - 1);
            const double eb_prev = view.get(row, view.c_ebar, i - 1);
            const double q_prev = view.get(row, view.c_q, i - 1);
            s_sum -= e_i * e_prev;
            sbar_sum -= (eb_i / q_i) * (q_i / q_prev) * eb_prev;
        }
    }
    return {s_sum, sbar_sum};
}

struct ViolationRecord {
    int subsystem = 0;
    double t = 0.0;
    double e_bar = 0.0;
    double o = 0.0;
};

struct StabilityReport {
    double rho_ob = 0.0, ell_ob = 0.0;
    double rho_cont = 0.0, ell_cont = 0.0;
    double rho_all = 0.0, ell_all = 0.0;
    double bound_ob_ok = 0.0, bound_cont_ok = 0.0, bound_all_ok = 0.0;
    double rate_ob_ok = 0.0, rate_cont_ok = 0.0, rate_all_ok = 0.0;
    double fitted_decay = 0.0;       // of ||e_ob||
    double fitted_decay_cont = 0.0;  // of sum log(o^2/Q)
    double sup_e_ob = 0.0, sup_e_ob_steady = 0.0;
    double sup_ebar = 0.0, sup_ebar_steady = 0.0;
    double sup_log_barrier_steady = 0.0;
    double sup_delta_u = 0.0;
    double connector_s_max = 0.0, connector_sbar_max = 0.0;
    double radius_all_rooted = 0.0;  // sqrt(2 ell_all / rho_all), reported alongside
    Vec sup_xd;                      // runtime suprema |x_id| per subsystem
    std::vector<ViolationRecord> violations;
};

/// Runs every monitor over a trace: decay/offset parameters, the three bound
/// checks, the three rate inequalities, fitted decay rates, steady-state
/// suprema and the envelope-violation scan.
inline StabilityReport analyze_trace(const Trace& trace, const ScenarioConfig& cfg) {
    StabilityReport rep;
    const auto [rho_ob, ell_ob] = decay_params_ob(cfg.hae, trace, cfg.analysis);
    const auto [rho_cont, ell_cont] = decay_params_cont(cfg.hacblf, trace, cfg.analysis);
    rep.rho_ob = rho_ob;
    rep.ell_ob = ell_ob;
    rep.rho_cont = rho_cont;
    rep.ell_cont = ell_cont;
    rep.rho_all = std::min(rho_ob, rho_cont);
    rep.ell_all = ell_ob + ell_cont;
    rep.radius_all_rooted = std::sqrt(2.0 * rep.ell_all / rep.rho_all);

    rep.bound_ob_ok = check_bound_ob(trace, rho_ob, ell_ob, cfg.analysis);
    rep.bound_cont_ok = check_bound_cont(trace, rho_cont, ell_cont, cfg.analysis);
    rep.bound_all_ok = check_bound_all(trace, rep.rho_all, rep.ell_all, cfg.analysis);
    rep.rate_ob_ok =
        check_lyapunov_rate(trace, rho_ob, RateKind::Ob, cfg.hae, cfg.hacblf, cfg.analysis);
    rep.rate_cont_ok =
        check_lyapunov_rate(trace, rho_cont, RateKind::Cont, cfg.hae, cfg.hacblf, cfg.analysis);
    rep.rate_all_ok =
        check_lyapunov_rate(trace, rep.rho_all, RateKind::All, cfg.hae, cfg.hacblf, cfg.analysis);

    const TraceView view(trace);
    const std::size_t rows = view.rows();
    if (rows == 0) return rep;
    const std::size_t steady_from =
        rows - std::max<std::size_t>(1, static_cast<std::size_t>(
                                            std::ceil(cfg.analysis.steady_frac * rows)));
    rep.sup_xd.assign(static_cast<std::size_t>(view.n), 0.0);

    Vec ts(rows), e_norm(rows), barrier(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        ts[r] = view.t(r);
        e_norm[r] = view.e_ob_norm_at(r);
        barrier[r] = view.barrier_sum_at(r);
        rep.sup_e_ob = std::max(rep.sup_e_ob, e_norm[r]);
        rep.sup_delta_u = std::max(rep.sup_delta_u, std::abs(view.scalar(r, view.c_delta_u)));
        double max_eb = 0.0;
        for (int i = 1; i <= view.n; ++i) {
            const double eb = view.get(r, view.c_ebar, i);
            const double o = view.get(r, view.c_o, i);
            max_eb = std::max(max_eb, std::abs(eb));
            rep.sup_xd[static_cast<std::size_t>(i - 1)] =
                std::max(rep.sup_xd[static_cast<std::size_t>(i - 1)],
                         std::abs(view.get(r, view.c_xd, i)));
            if (std::abs(eb) >= o)
                rep.violations.push_back({i, ts[r], eb, o});
        }
        rep.sup_ebar = std::max(rep.sup_ebar, max_eb);
        if (r >= steady_from) {
            rep.sup_e_ob_steady = std::max(rep.sup_e_ob_steady, e_norm[r]);
            rep.sup_ebar_steady = std::max(rep.sup_ebar_steady, max_eb);
            rep.sup_log_barrier_steady = std::max(rep.sup_log_barrier_steady, barrier[r]);
        }
        const auto [s_res, sbar_res] = connector_cancellation(trace, r);
        rep.connector_s_max = std::max(rep.connector_s_max, std::abs(s_res));
        rep.connector_sbar_max = std::max(rep.connector_sbar_max, std::abs(sbar_res));
    }
    rep.fitted_decay = fit_decay_rate(ts, e_norm, cfg.analysis.fit_floor);
    rep.fitted_decay_cont = fit_decay_rate(ts, barrier, cfg.analysis.fit_floor);
    return rep;
}

inline std::vector<std::pair<std::string, double>> report_fields(const StabilityReport& r) {
    std::vector<std::pair<std::string, double>> f = {
        {"rho_ob", r.rho_ob},
        {"ell_ob", r.ell_ob},
        {"rho_cont", r.rho_cont},
        {"ell_cont", r.ell_cont},
        {"rho_all", r.rho_all},
        {"ell_all", r.ell_all},
        {"bound_ob_ok", r.bound_ob_ok},
        {"bound_cont_ok", r.bound_cont_ok},
        {"bound_all_ok", r.bound_all_ok},
        {"rate_ob_ok", r.rate_ob_ok},
        {"rate_cont_ok", r.rate_cont_ok},
        {"rate_all_ok", r.rate_all_ok},
        {"fitted_decay", r.fitted_decay},
        {"fitted_decay_cont", r.fitted_decay_cont},
        {"sup_e_ob", r.sup_e_ob},
        {"sup_e_ob_steady", r.sup_e_ob_steady},
        {"sup_ebar", r.sup_ebar},
        {"sup_ebar_steady", r.sup_ebar_steady},
        {"sup_log_barrier_steady", r.sup_log_barrier_steady},
        {"sup_delta_u", r.sup_delta_u},
        {"connector_s_max", r.connector_s_max},
        {"connector_sbar_max", r.connector_sbar_max},
        {"radius_all_rooted", r.radius_all_rooted},
        {"violation_count", static_cast<double>(r.violations.size())},
    };
    for (std::size_t i = 0; i < r.sup_xd.size(); ++i)
        f.emplace_back("sup_xd" + std::to_string(i + 1), r.sup_xd[i]);
    return f;
}

/// Flat key = value rendering, one line per quantity plus a line per logged
/// envelope violation.
inline std::string report_to_text(const StabilityReport& r) {
    std::string out;
    for (const auto& [k, v] : report_fields(r)) out += k + " = " + format_full(v) + "\n";
    for (const auto& viol : r.violations)
        out += "violation = " + std::to_string(viol.subsystem) + ":" + format_full(viol.t) +
               ":" + format_full(viol.e_bar) + ":" + format_full(viol.o) + "\n";
    return out;
}

/// Machine-readable single-row CSV (header + one row).
inline std::string report_to_csv(const StabilityReport& r) {
    const auto fields = report_fields(r);
    std::string header, row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            header += ',';
            row += ',';
        }
        header += fields[i].first;
        row += format_full(fields[i].second);
    }
    return header + "\n" + row + "\n";
}

}  // namespace mrbc
