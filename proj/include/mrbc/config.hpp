#pragma once

// Scenario configuration: flat "key = value" text with dotted sections.
// Unknown keys are rejected; serialize() emits a canonical form so that
// serialize(parse(text)) is idempotent.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "mrbc/hacblf.hpp"
#include "mrbc/hae.hpp"
#include "mrbc/plant.hpp"
#include "mrbc/trajectory.hpp"
#include "mrbc/types.hpp"

namespace mrbc {

struct SimParams {
    double t0 = 0.0;
    double t_end = 1.0;
    double dt = 1e-3;
    double tau_f = 0.0;  // derivative-filter constant; 0 selects 10*dt
};

/// Free constants of the stability analysis and the shared check tolerances.
struct AnalysisParams {
    double delta_frac = 0.25;  // delta_i = delta_frac * lambda_i
    double zeta_frac = 0.25;   // zeta_i  = zeta_frac * lambda_i
    double vn_frac = 0.5;      // v_n     = vn_frac * gamma_n
    double tol_abs = 1e-6;
    double tol_rel = 1e-3;
    double steady_frac = 0.2;  // trailing fraction of a run used for steady metrics
    double fit_floor = 1e-12;  // decay-fit window: samples with value above this
};

enum class PlantKind { Emla, Chain };

struct ScenarioConfig {
    std::string name = "scenario";
    unsigned long seed = 0;
    SimParams sim;

    PlantKind plant_kind = PlantKind::Emla;
    int chain_order = 2;
    EmlaParams emla;

    Vec init_x;
    Vec init_x_hat;  // empty: copy of init_x
    Vec init_psi;
    Vec init_theta;

    HaeConfig hae;
    HacBlfConfig hacblf;
    TrajectorySpec trajectory;
    LoadSpec load;
    Vec eta;  // declared reference bounds per subsystem; empty: not declared

    AnalysisParams analysis;

    [[nodiscard]] int order() const {
        return plant_kind == PlantKind::Chain ? chain_order : 2;
    }
    [[nodiscard]] double resolved_tau_f() const {
        return sim.tau_f > 0.0 ? sim.tau_f : 10.0 * sim.dt;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& s, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("invalid number '" + s + "' for key " + key);
    return v;
}

inline Vec parse_vec(const std::string& s, const std::string& key) {
    Vec v;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) v.push_back(parse_double(tok, key));
    return v;
}

/// "a:b" or "a:b:c" tokens separated by whitespace.
inline std::vector<Vec> parse_tuples(const std::string& s, std::size_t arity,
                                     const std::string& key) {
    std::vector<Vec> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        Vec t;
        std::size_t pos = 0;
        while (pos <= tok.size()) {
            const auto colon = tok.find(':', pos);
            const std::string part =
                colon == std::string::npos ? tok.substr(pos) : tok.substr(pos, colon - pos);
            t.push_back(parse_double(part, key));
            if (colon == std::string::npos) break;
            pos = colon + 1;
        }
        if (t.size() != arity)
            throw ConfigError("expected " + std::to_string(arity) +
                              " colon-separated fields per entry for key " + key);
        out.push_back(std::move(t));
    }
    return out;
}

inline std::string vec_to_string(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += format_full(v[i]);
    }
    return s;
}

}  // namespace detail

/// Key/value view of a config text: comments stripped, duplicates rejected.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError("duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

inline ScenarioConfig parse_config(const std::string& text) {
    using detail::parse_double;
    using detail::parse_tuples;
    using detail::parse_vec;

    auto kv = parse_key_values(text);
    ScenarioConfig cfg;

    auto take = [&kv](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_double = [&](const std::string& key, double& dst) {
        if (auto v = take(key)) dst = parse_double(*v, key);
    };
    auto take_vec = [&](const std::string& key, Vec& dst) {
        if (auto v = take(key)) dst = parse_vec(*v, key);
    };

    if (auto v = take("name")) cfg.name = *v;
    if (auto v = take("seed")) {
        const double d = parse_double(*v, "seed");
        if (d < 0.0) throw ConfigError("seed must be nonnegative");
        cfg.seed = static_cast<unsigned long>(d);
    }

    take_double("sim.t0", cfg.sim.t0);
    take_double("sim.t_end", cfg.sim.t_end);
    take_double("sim.dt", cfg.sim.dt);
    take_double("sim.tau_f", cfg.sim.tau_f);

    if (auto v = take("plant.kind")) {
        if (*v == "emla")
            cfg.plant_kind = PlantKind::Emla;
        else if (*v == "chain")
            cfg.plant_kind = PlantKind::Chain;
        else
            throw ConfigError("plant.kind must be 'emla' or 'chain'");
    }
    if (auto v = take("plant.order")) {
        const double d = parse_double(*v, "plant.order");
        cfg.chain_order = static_cast<int>(d);
        if (cfg.chain_order != d) throw ConfigError("plant.order must be an integer");
    }
    take_double("plant.inertia", cfg.emla.inertia);
    take_double("plant.damping", cfg.emla.damping);
    take_double("plant.spring", cfg.emla.spring);
    take_double("plant.load_coeff", cfg.emla.load_coeff);
    take_double("plant.capacity", cfg.emla.torque_capacity);
    take_double("plant.sensor_wobble_amp", cfg.emla.sensor_wobble_amp);
    take_double("plant.sensor_wobble_freq", cfg.emla.sensor_wobble_freq);
    take_double("plant.sensor_noise_amp", cfg.emla.sensor_noise_amp);
    take_double("plant.sensor_noise_cutoff", cfg.emla.sensor_noise_cutoff);

    take_vec("init.x", cfg.init_x);
    take_vec("init.xhat", cfg.init_x_hat);
    take_vec("init.psi", cfg.init_psi);
    take_vec("init.theta", cfg.init_theta);

    take_vec("hae.xi", cfg.hae.xi);
    take_vec("hae.lambda", cfg.hae.lambda);
    take_vec("hae.beta", cfg.hae.beta);

    take_vec("hacblf.gamma", cfg.hacblf.gamma);
    take_vec("hacblf.epsilon", cfg.hacblf.epsilon);
    take_vec("hacblf.kappa", cfg.hacblf.kappa);
    cfg.hacblf.u_min = -19.5;
    cfg.hacblf.u_max = 6.0;
    take_double("hacblf.u_min", cfg.hacblf.u_min);
    take_double("hacblf.u_max", cfg.hacblf.u_max);

    if (auto v = take("trajectory.kind")) {
        if (*v == "setpoint")
            cfg.trajectory.kind = TrajectoryKind::Setpoint;
        else if (*v == "quintic")
            cfg.trajectory.kind = TrajectoryKind::Quintic;
        else
            throw ConfigError("trajectory.kind must be 'setpoint' or 'quintic'");
    }
    take_double("trajectory.setpoint", cfg.trajectory.setpoint);
    if (auto v = take("trajectory.segments")) {
        for (const auto& t : parse_tuples(*v, 3, "trajectory.segments"))
            cfg.trajectory.segments.push_back({t[0], t[1], t[2]});
    }

    if (auto v = take("load.kind")) {
        if (*v == "none")
            cfg.load.kind = LoadKind::None;
        else if (*v == "constant")
            cfg.load.kind = LoadKind::Constant;
        else if (*v == "piecewise")
            cfg.load.kind = LoadKind::Piecewise;
        else if (*v == "sine")
            cfg.load.kind = LoadKind::Sine;
        else
            throw ConfigError("load.kind must be none|constant|piecewise|sine");
    }
    take_double("load.fraction", cfg.load.fraction);
    if (auto v = take("load.points")) {
        for (const auto& t : parse_tuples(*v, 2, "load.points"))
            cfg.load.points.emplace_back(t[0], t[1]);
    }
    take_double("load.offset", cfg.load.offset);
    take_double("load.amp", cfg.load.amp);
    take_double("load.freq", cfg.load.freq);
    take_double("load.phase", cfg.load.phase);

    take_vec("eta", cfg.eta);

    take_double("analysis.delta_frac", cfg.analysis.delta_frac);
    take_double("analysis.zeta_frac", cfg.analysis.zeta_frac);
    take_double("analysis.vn_frac", cfg.analysis.vn_frac);
    take_double("analysis.tol_abs", cfg.analysis.tol_abs);
    take_double("analysis.tol_rel", cfg.analysis.tol_rel);
    take_double("analysis.steady_frac", cfg.analysis.steady_frac);
    take_double("analysis.fit_floor", cfg.analysis.fit_floor);

    // Resolve the order before envelope keys so defaults can broadcast.
    int n = cfg.order();
    if (!cfg.hae.lambda.empty()) n = static_cast<int>(cfg.hae.lambda.size());
    if (cfg.plant_kind == PlantKind::Chain) n = cfg.chain_order;

    auto broadcast = [n](Vec& v, double dflt) {
        if (v.empty()) v.assign(static_cast<std::size_t>(n), dflt);
    };
    broadcast(cfg.hae.xi, 0.08);
    broadcast(cfg.hae.lambda, 500.0);
    broadcast(cfg.hae.beta, 0.8);
    broadcast(cfg.hacblf.gamma, 40.0);
    broadcast(cfg.hacblf.epsilon, 0.8);
    broadcast(cfg.hacblf.kappa, 1.0);
    broadcast(cfg.init_x, 0.0);
    broadcast(cfg.init_psi, 0.0);
    broadcast(cfg.init_theta, 0.0);
    if (cfg.init_x_hat.empty()) cfg.init_x_hat = cfg.init_x;

    cfg.hacblf.envelopes.assign(static_cast<std::size_t>(n), EnvelopeParams{0.1, 0.005, 2e-4});
    for (int i = 1; i <= n; ++i) {
        const std::string key = "hacblf.envelope." + std::to_string(i);
        if (auto v = take(key)) {
            const Vec e = parse_vec(*v, key);
            if (e.size() != 3)
                throw ConfigError(key + " expects 'shoot bound rate'");
            cfg.hacblf.envelopes[static_cast<std::size_t>(i - 1)] = {e[0], e[1], e[2]};
        }
    }

    cfg.trajectory.t_start = cfg.sim.t0;

    if (!kv.empty())
        throw ConfigError("unknown key '" + kv.begin()->first + "'");
    return cfg;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Static validity checks; the initial-admissibility check lives with the
/// simulator since it needs one controller evaluation.
inline std::vector<std::string> validate(const ScenarioConfig& cfg) {
    std::vector<std::string> errors;
    auto err = [&errors](const std::string& m) { errors.push_back(m); };

    const int n = cfg.order();
    if (n < 1) err("system order must be >= 1");
    if (!(cfg.sim.dt > 0.0)) err("sim.dt must be > 0");
    if (cfg.sim.t_end < cfg.sim.t0) err("sim.t_end must be >= sim.t0");
    if (cfg.sim.tau_f < 0.0) err("sim.tau_f must be >= 0");

    if (cfg.plant_kind == PlantKind::Emla && !cfg.emla.valid())
        err("invalid EMLA parameters (inertia > 0, others nonnegative)");

    auto check_len = [&](const Vec& v, const std::string& what) {
        if (v.size() != static_cast<std::size_t>(n))
            err(what + " must have " + std::to_string(n) + " entries");
    };
    check_len(cfg.hae.xi, "hae.xi");
    check_len(cfg.hae.lambda, "hae.lambda");
    check_len(cfg.hae.beta, "hae.beta");
    check_len(cfg.hacblf.gamma, "hacblf.gamma");
    check_len(cfg.hacblf.epsilon, "hacblf.epsilon");
    check_len(cfg.hacblf.kappa, "hacblf.kappa");
    check_len(cfg.init_x, "init.x");
    check_len(cfg.init_x_hat, "init.xhat");
    check_len(cfg.init_psi, "init.psi");
    check_len(cfg.init_theta, "init.theta");

    if (errors.empty()) {
        if (!cfg.hae.valid()) err("hae gains must all be positive");
        if (!cfg.hacblf.valid())
            err("hacblf gains must be positive, envelopes must satisfy "
                "shoot > bound > 0 and rate > 0, and u_min < u_max");
        if (!all_finite(cfg.init_x) || !all_finite(cfg.init_x_hat))
            err("initial states must be finite");
        for (double p : cfg.init_psi)
            if (p < 0.0) err("init.psi entries must be >= 0");
        for (double th : cfg.init_theta)
            if (th < 0.0) err("init.theta entries must be >= 0");
    }

    if (!cfg.trajectory.valid())
        err("trajectory invalid: quintic segments must be contiguous with positive durations");
    if (!cfg.load.valid()) err("load.points must have nondecreasing times");

    if (!cfg.eta.empty()) {
        if (cfg.eta.size() != static_cast<std::size_t>(n))
            err("eta must have " + std::to_string(n) + " entries");
        else if (!all_positive(cfg.eta))
            err("eta entries must be positive");
        else if (cfg.trajectory.sup_abs() > cfg.eta[0])
            err("reference trajectory exceeds its declared bound eta_1");
    }

    const auto& a = cfg.analysis;
    if (!(a.delta_frac > 0.0) || !(a.zeta_frac > 0.0) || a.delta_frac + a.zeta_frac >= 1.0)
        err("analysis.delta_frac and analysis.zeta_frac must be positive with sum < 1");
    if (!(a.vn_frac > 0.0) || !(a.vn_frac < 1.0))
        err("analysis.vn_frac must be in (0, 1)");
    if (a.tol_abs < 0.0 || a.tol_rel < 0.0) err("analysis tolerances must be >= 0");
    if (!(a.steady_frac > 0.0) || a.steady_frac > 1.0)
        err("analysis.steady_frac must be in (0, 1]");
    return errors;
}

/// Canonical text form; parse(serialize(cfg)) reproduces cfg exactly.
inline std::string serialize(const ScenarioConfig& cfg) {
    using detail::vec_to_string;
    std::ostringstream out;
    out << "name = " << cfg.name << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "sim.t0 = " << format_full(cfg.sim.t0) << "\n";
    out << "sim.t_end = " << format_full(cfg.sim.t_end) << "\n";
    out << "sim.dt = " << format_full(cfg.sim.dt) << "\n";
    out << "sim.tau_f = " << format_full(cfg.sim.tau_f) << "\n";
    out << "plant.kind = " << (cfg.plant_kind == PlantKind::Emla ? "emla" : "chain") << "\n";
    out << "plant.order = " << cfg.chain_order << "\n";
    out << "plant.inertia = " << format_full(cfg.emla.inertia) << "\n";
    out << "plant.damping = " << format_full(cfg.emla.damping) << "\n";
    out << "plant.spring = " << format_full(cfg.emla.spring) << "\n";
    out << "plant.load_coeff = " << format_full(cfg.emla.load_coeff) << "\n";
    out << "plant.capacity = " << format_full(cfg.emla.torque_capacity) << "\n";
    out << "plant.sensor_wobble_amp = " << format_full(cfg.emla.sensor_wobble_amp) << "\n";
    out << "plant.sensor_wobble_freq = " << format_full(cfg.emla.sensor_wobble_freq) << "\n";
    out << "plant.sensor_noise_amp = " << format_full(cfg.emla.sensor_noise_amp) << "\n";
    out << "plant.sensor_noise_cutoff = " << format_full(cfg.emla.sensor_noise_cutoff) << "\n";
    out << "init.x = " << vec_to_string(cfg.init_x) << "\n";
    out << "init.xhat = " << vec_to_string(cfg.init_x_hat) << "\n";
    out << "init.psi = " << vec_to_string(cfg.init_psi) << "\n";
    out << "init.theta = " << vec_to_string(cfg.init_theta) << "\n";
    out << "hae.xi = " << vec_to_string(cfg.hae.xi) << "\n";
    out << "hae.lambda = " << vec_to_string(cfg.hae.lambda) << "\n";
    out << "hae.beta = " << vec_to_string(cfg.hae.beta) << "\n";
    out << "hacblf.gamma = " << vec_to_string(cfg.hacblf.gamma) << "\n";
    out << "hacblf.epsilon = " << vec_to_string(cfg.hacblf.epsilon) << "\n";
    out << "hacblf.kappa = " << vec_to_string(cfg.hacblf.kappa) << "\n";
    out << "hacblf.u_min = " << format_full(cfg.hacblf.u_min) << "\n";
    out << "hacblf.u_max = " << format_full(cfg.hacblf.u_max) << "\n";
    for (std::size_t i = 0; i < cfg.hacblf.envelopes.size(); ++i) {
        const auto& e = cfg.hacblf.envelopes[i];
        out << "hacblf.envelope." << (i + 1) << " = " << format_full(e.shoot) << ' '
            << format_full(e.bound) << ' ' << format_full(e.rate) << "\n";
    }
    out << "trajectory.kind = "
        << (cfg.trajectory.kind == TrajectoryKind::Setpoint ? "setpoint" : "quintic") << "\n";
    out << "trajectory.setpoint = " << format_full(cfg.trajectory.setpoint) << "\n";
    if (!cfg.trajectory.segments.empty()) {
        out << "trajectory.segments =";
        for (const auto& s : cfg.trajectory.segments)
            out << ' ' << format_full(s.x0) << ':' << format_full(s.xf) << ':'
                << format_full(s.duration);
        out << "\n";
    }
    const char* load_kind = "none";
    if (cfg.load.kind == LoadKind::Constant) load_kind = "constant";
    if (cfg.load.kind == LoadKind::Piecewise) load_kind = "piecewise";
    if (cfg.load.kind == LoadKind::Sine) load_kind = "sine";
    out << "load.kind = " << load_kind << "\n";
    out << "load.fraction = " << format_full(cfg.load.fraction) << "\n";
    if (!cfg.load.points.empty()) {
        out << "load.points =";
        for (const auto& [t, f] : cfg.load.points)
            out << ' ' << format_full(t) << ':' << format_full(f);
        out << "\n";
    }
    out << "load.offset = " << format_full(cfg.load.offset) << "\n";
    out << "load.amp = " << format_full(cfg.load.amp) << "\n";
    out << "load.freq = " << format_full(cfg.load.freq) << "\n";
    out << "load.phase = " << format_full(cfg.load.phase) << "\n";
    if (!cfg.eta.empty()) out << "eta = " << vec_to_string(cfg.eta) << "\n";
    out << "analysis.delta_frac = " << format_full(cfg.analysis.delta_frac) << "\n";
    out << "analysis.zeta_frac = " << format_full(cfg.analysis.zeta_frac) << "\n";
    out << "analysis.vn_frac = " << format_full(cfg.analysis.vn_frac) << "\n";
    out << "analysis.tol_abs = " << format_full(cfg.analysis.tol_abs) << "\n";
    out << "analysis.tol_rel = " << format_full(cfg.analysis.tol_rel) << "\n";
    out << "analysis.steady_frac = " << format_full(cfg.analysis.steady_frac) << "\n";
    out << "analysis.fit_floor = " << format_full(cfg.analysis.fit_floor) << "\n";
    return out.str();
}

/// Instantiates the simulated plant with the scenario's load schedule and
/// noise seed applied.
inline PlantModel make_plant(const ScenarioConfig& cfg) {
    if (cfg.plant_kind == PlantKind::Chain) return chain_model(cfg.chain_order);
    const double cap = cfg.emla.torque_capacity;
    TimeTerm load = [spec = cfg.load, cap](double t) { return load_profile(t, spec, cap); };
    PlantModel m = emla_model(cfg.emla, std::move(load));
    reseed_emla_noise(m, cfg.emla, cfg.seed);
    return m;
}

}  // namespace mrbc
