#pragma once

// Parameter-sensitivity sweeps: run + analyze over a grid of config
// overrides, with declared monotonicity/insensitivity claims checked on the
// measured metrics.

#include <future>

#include "mrbc/analysis.hpp"
#include "mrbc/simulation.hpp"

namespace mrbc {

struct SweepAxis {
    std::string path;
    Vec values;
};

struct TrendClaim {
    enum class Kind { NonDecreasing, NonIncreasing, Insensitive };
    std::string metric;
    Kind kind = Kind::NonDecreasing;
};

struct SweepGrid {
    std::vector<SweepAxis> axes;      // Cartesian axes, declared order
    std::vector<SweepAxis> zip_axes;  // equal-length lists advancing together
    std::vector<TrendClaim> trends;
    double slack_rel = 0.02;
    double slack_abs = 1e-9;
    double insensitive_threshold = 0.05;

    [[nodiscard]] bool empty() const { return axes.empty() && zip_axes.empty(); }
};

/// Applies one numeric override to a scenario config. Vector-valued gains
/// broadcast the value across all subsystems.
inline void apply_param(ScenarioConfig& cfg, const std::string& path, double value) {
    auto fill = [value](Vec& v) { std::fill(v.begin(), v.end(), value); };
    if (path == "hae.xi") return fill(cfg.hae.xi);
    if (path == "hae.lambda") return fill(cfg.hae.lambda);
    if (path == "hae.beta") return fill(cfg.hae.beta);
    if (path == "hacblf.gamma") return fill(cfg.hacblf.gamma);
    if (path == "hacblf.epsilon") return fill(cfg.hacblf.epsilon);
    if (path == "hacblf.kappa") return fill(cfg.hacblf.kappa);
    if (path == "hacblf.u_min") { cfg.hacblf.u_min = value; return; }
    if (path == "hacblf.u_max") { cfg.hacblf.u_max = value; return; }
    if (path == "sim.dt") { cfg.sim.dt = value; return; }
    if (path == "sim.tau_f") { cfg.sim.tau_f = value; return; }
    if (path == "seed") { cfg.seed = static_cast<unsigned long>(value); return; }
    if (path == "plant.inertia") { cfg.emla.inertia = value; return; }
    if (path == "plant.damping") { cfg.emla.damping = value; return; }
    if (path == "plant.spring") { cfg.emla.spring = value; return; }
    if (path == "plant.load_coeff") { cfg.emla.load_coeff = value; return; }
    if (path == "plant.capacity") { cfg.emla.torque_capacity = value; return; }
    if (path == "load.fraction") { cfg.load.fraction = value; return; }
    if (path == "load.offset") { cfg.load.offset = value; return; }
    if (path == "load.amp") { cfg.load.amp = value; return; }
    if (path == "load.freq") { cfg.load.freq = value; return; }
    throw ConfigError("sweep path does not resolve in the scenario config: " + path);
}

/// Grid file grammar: sweep.<path> / zip.<path> value lists, trend.<metric>
/// claims, and slack knobs. Declaration order defines the row order.
inline SweepGrid parse_grid(const std::string& text) {
    SweepGrid grid;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("grid line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError("duplicate grid key '" + key + "'");
        seen.push_back(key);

        if (key.rfind("sweep.", 0) == 0) {
            grid.axes.push_back({key.substr(6), detail::parse_vec(val, key)});
        } else if (key.rfind("zip.", 0) == 0) {
            grid.zip_axes.push_back({key.substr(4), detail::parse_vec(val, key)});
        } else if (key == "trend.slack_rel") {
            grid.slack_rel = detail::parse_double(val, key);
        } else if (key == "trend.slack_abs") {
            grid.slack_abs = detail::parse_double(val, key);
        } else if (key == "trend.threshold") {
            grid.insensitive_threshold = detail::parse_double(val, key);
        } else if (key.rfind("trend.", 0) == 0) {
            TrendClaim claim;
            claim.metric = key.substr(6);
            if (val == "non-decreasing")
                claim.kind = TrendClaim::Kind::NonDecreasing;
            else if (val == "non-increasing")
                claim.kind = TrendClaim::Kind::NonIncreasing;
            else if (val == "insensitive")
                claim.kind = TrendClaim::Kind::Insensitive;
            else
                throw ConfigError("trend kind must be non-decreasing|non-increasing|insensitive");
            grid.trends.push_back(std::move(claim));
        } else {
            throw ConfigError("unknown grid key '" + key + "'");
        }
    }
    if (grid.empty()) throw ConfigError("grid declares no sweep or zip axes");
    for (const auto& a : grid.axes)
        if (a.values.empty()) throw ConfigError("empty value list for " + a.path);
    if (!grid.zip_axes.empty()) {
        const std::size_t len = grid.zip_axes.front().values.size();
        if (len == 0) throw ConfigError("empty zip value lists");
        for (const auto& a : grid.zip_axes)
            if (a.values.size() != len)
                throw ConfigError("zip value lists must share one length");
    }
    return grid;
}

inline SweepGrid parse_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open grid file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_grid(ss.str());
}

struct SweepRow {
    std::vector<std::pair<std::string, double>> params;
    RunStatus status = RunStatus::Completed;
    std::string message;
    StabilityReport report;
};

struct SweepTable {
    std::vector<std::string> param_names;
    std::vector<SweepRow> rows;
};

namespace detail {

inline const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::EnvelopeViolated: return "envelope-violation";
        case RunStatus::NumericFailed: return "numeric-failure";
        case RunStatus::Rejected: return "rejected";
    }
    return "unknown";
}

}  // namespace detail

/// Runs one scenario per grid point (points execute concurrently, each owning
/// its state) and returns rows in declared grid order. Per-point failures
/// become rows with their verdict; the sweep itself never aborts.
inline SweepTable sweep(const ScenarioConfig& base, const SweepGrid& grid) {
    SweepTable table;
    for (const auto& a : grid.axes) table.param_names.push_back(a.path);
    for (const auto& a : grid.zip_axes) table.param_names.push_back(a.path);

    // Enumerate points: Cartesian axes (first declared is slowest), then the
    // zipped block as the innermost axis.
    std::vector<std::vector<std::pair<std::string, double>>> points;
    const std::size_t zip_len =
        grid.zip_axes.empty() ? 1 : grid.zip_axes.front().values.size();
    std::vector<std::size_t> idx(grid.axes.size(), 0);
    bool done = false;
    while (!done) {
        for (std::size_t z = 0; z < zip_len; ++z) {
            std::vector<std::pair<std::string, double>> p;
            for (std::size_t a = 0; a < grid.axes.size(); ++a)
                p.emplace_back(grid.axes[a].path, grid.axes[a].values[idx[a]]);
            for (const auto& a : grid.zip_axes) p.emplace_back(a.path, a.values[z]);
            points.push_back(std::move(p));
        }
        // Odometer over the Cartesian axes, last declared axis fastest.
        done = true;
        for (std::size_t a = grid.axes.size(); a-- > 0;) {
            if (++idx[a] < grid.axes[a].values.size()) {
                done = false;
                break;
            }
            idx[a] = 0;
        }
    }

    auto run_point = [&base](const std::vector<std::pair<std::string, double>>& params) {
        SweepRow row;
        row.params = params;
        try {
            ScenarioConfig cfg = base;
            for (const auto& [path, value] : params) apply_param(cfg, path, value);
            const auto errors = validate(cfg);
            if (!errors.empty()) {
                row.status = RunStatus::Rejected;
                row.message = errors.front();
                return row;
            }
            RunResult r = run(cfg);
            row.status = r.status;
            row.message = r.message;
            if (r.completed()) row.report = analyze_trace(r.trace, cfg);
        } catch (const std::exception& ex) {
            row.status = RunStatus::NumericFailed;
            row.message = ex.what();
        }
        return row;
    };

    std::vector<std::future<SweepRow>> futures;
    futures.reserve(points.size());
    for (const auto& p : points)
        futures.push_back(std::async(std::launch::async, run_point, p));
    table.rows.reserve(points.size());
    for (auto& f : futures) table.rows.push_back(f.get());
    return table;
}

inline double row_metric(const SweepRow& row, const std::string& metric) {
    for (const auto& [k, v] : report_fields(row.report))
        if (k == metric) return v;
    throw std::out_of_range("sweep table has no metric '" + metric + "'");
}

inline std::string table_to_csv(const SweepTable& table) {
    std::string out;
    for (const auto& p : table.param_names) out += p + ",";
    out += "verdict";
    const std::vector<std::pair<std::string, double>> proto = report_fields(StabilityReport{});
    for (const auto& [k, v] : proto) out += "," + k;
    out += "\n";
    for (const auto& row : table.rows) {
        for (const auto& [k, v] : row.params) out += format_full(v) + ",";
        out += detail::status_name(row.status);
        if (row.status == RunStatus::Completed) {
            for (const auto& [k, v] : report_fields(row.report)) out += "," + format_full(v);
        } else {
            for (std::size_t i = 0; i < proto.size(); ++i) out += ",nan";
        }
        out += "\n";
    }
    return out;
}

struct TrendVerdict {
    std::string claim;
    bool pass = false;
    std::string details;
};

/// Checks each declared claim against the measured metric across rows (in
/// grid order), with a slack band for monotone claims and a relative spread
/// threshold for insensitivity claims.
inline std::vector<TrendVerdict> trend_report(const SweepTable& table, const SweepGrid& grid) {
    std::vector<TrendVerdict> verdicts;
    for (const auto& claim : grid.trends) {
        TrendVerdict v;
        const char* kind_name = claim.kind == TrendClaim::Kind::NonDecreasing
                                    ? "non-decreasing"
                                    : claim.kind == TrendClaim::Kind::NonIncreasing
                                          ? "non-increasing"
                                          : "insensitive";
        v.claim = claim.metric + " " + kind_name;

        Vec values;
        for (const auto& row : table.rows)
            if (row.status == RunStatus::Completed)
                values.push_back(row_metric(row, claim.metric));
        if (values.size() < 2) {
            v.pass = false;
            v.details = "fewer than two successful grid points";
            verdicts.push_back(std::move(v));
            continue;
        }

        if (claim.kind == TrendClaim::Kind::Insensitive) {
            const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
            const double scale = std::max({std::abs(*mn), std::abs(*mx), 1e-300});
            const double spread = (*mx - *mn) / scale;
            v.pass = spread < grid.insensitive_threshold;
            v.details = "relative spread " + format_full(spread);
        } else {
            v.pass = true;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                const double slack = grid.slack_abs + grid.slack_rel * std::abs(values[i]);
                const bool ok = claim.kind == TrendClaim::Kind::NonDecreasing
                                    ? values[i + 1] >= values[i] - slack
                                    : values[i + 1] <= values[i] + slack;
                if (!ok) {
                    v.pass = false;
                    v.details = "broken between points " + std::to_string(i) + " and " +
                                std::to_string(i + 1) + " (" + format_full(values[i]) + " -> " +
                                format_full(values[i + 1]) + ")";
                    break;
                }
            }
            if (v.pass) v.details = "holds across " + std::to_string(values.size()) + " points";
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace mrbc
