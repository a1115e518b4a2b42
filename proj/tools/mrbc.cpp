// mrbc: scenario runner, trace analyzer, plotter and sweep driver for the
// model-reference barrier-control simulation lab.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "mrbc/analysis.hpp"
#include "mrbc/plot.hpp"
#include "mrbc/simulation.hpp"
#include "mrbc/sweep.hpp"
#include "mrbc/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitEnvelope = 2;
constexpr int kExitNumeric = 3;

void apply_seed_override(mrbc::ScenarioConfig& cfg) {
    if (const char* env = std::getenv("MRBC_SEED")) {
        char* end = nullptr;
        const unsigned long seed = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0') {
            std::cerr << "warning: ignoring non-numeric MRBC_SEED '" << env << "'\n";
            return;
        }
        cfg.seed = seed;
    }
}

mrbc::ScenarioConfig load_validated(const std::string& path) {
    mrbc::ScenarioConfig cfg = mrbc::parse_config_file(path);
    apply_seed_override(cfg);
    const auto errors = mrbc::validate(cfg);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
        throw mrbc::ConfigError("invalid scenario config: " + path);
    }
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_path) {
    const mrbc::ScenarioConfig cfg = load_validated(config_path);
    const mrbc::RunResult result = mrbc::run(cfg);
    mrbc::emit(result.trace, out_path);
    std::cout << "scenario: " << cfg.name << "\n"
              << "records:  " << result.trace.rows() << "\n"
              << "wall:     " << result.wall_seconds << " s\n";
    switch (result.status) {
        case mrbc::RunStatus::Completed:
            std::cout << "verdict:  completed\n";
            return kExitOk;
        case mrbc::RunStatus::EnvelopeViolated:
        case mrbc::RunStatus::Rejected:
            std::cout << "verdict:  envelope violation (" << result.message << ")\n";
            return kExitEnvelope;
        case mrbc::RunStatus::NumericFailed:
            std::cout << "verdict:  numeric failure (" << result.message << ")\n";
            return kExitNumeric;
    }
    return kExitUsage;
}

int cmd_analyze(const std::string& trace_path, const std::string& config_path,
                const std::string& report_path) {
    const mrbc::ScenarioConfig cfg = load_validated(config_path);
    const mrbc::Trace trace = mrbc::parse_trace_file(trace_path);
    const mrbc::StabilityReport report = mrbc::analyze_trace(trace, cfg);

    std::ofstream txt(report_path);
    if (!txt) throw std::runtime_error("cannot open report path: " + report_path);
    txt << mrbc::report_to_text(report);
    std::ofstream csv(report_path + ".csv");
    csv << mrbc::report_to_csv(report);

    std::cout << mrbc::report_to_text(report);
    if (!cfg.eta.empty()) {
        for (std::size_t i = 0; i < cfg.eta.size() && i < report.sup_xd.size(); ++i)
            if (report.sup_xd[i] > cfg.eta[i])
                std::cout << "note: sup |x_" << (i + 1) << "d| = " << report.sup_xd[i]
                          << " exceeds declared eta_" << (i + 1) << " = " << cfg.eta[i] << "\n";
    }
    return kExitOk;
}

int cmd_plot(const std::string& trace_path, const std::string& signals_arg,
             const std::string& out_path) {
    const mrbc::Trace trace = mrbc::parse_trace_file(trace_path);
    std::vector<std::string> signals;
    std::size_t pos = 0;
    while (pos <= signals_arg.size()) {
        const auto comma = signals_arg.find(',', pos);
        const std::string s = signals_arg.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!s.empty()) signals.push_back(s);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    mrbc::plot(trace, signals, out_path);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path,
              const std::string& out_path) {
    const mrbc::ScenarioConfig base = load_validated(config_path);
    const mrbc::SweepGrid grid = mrbc::parse_grid_file(grid_path);
    const mrbc::SweepTable table = mrbc::sweep(base, grid);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open sweep output: " + out_path);
    out << mrbc::table_to_csv(table);

    int failures = 0;
    for (const auto& v : mrbc::trend_report(table, grid)) {
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << v.claim << ": " << v.details << "\n";
        if (!v.pass) ++failures;
    }
    std::cout << "wrote " << out_path << " (" << table.rows.size() << " points)\n";
    return failures == 0 ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRBC simulation lab: adaptive barrier control of uncertain "
                 "strict-feedback systems"};
    app.require_subcommand(1);

    std::string config_path, out_path, trace_path, report_path, signals, grid_path;

    auto* run_cmd = app.add_subcommand("run", "integrate a scenario and write its trace CSV");
    run_cmd->add_option("--config", config_path, "scenario config file")->required();
    run_cmd->add_option("--out", out_path, "output trace CSV")->required();

    auto* an_cmd = app.add_subcommand("analyze", "evaluate stability monitors over a trace");
    an_cmd->add_option("--trace", trace_path, "trace CSV")->required();
    an_cmd->add_option("--config", config_path, "scenario config file")->required();
    an_cmd->add_option("--report", report_path, "report output path")->required();

    auto* plot_cmd = app.add_subcommand("plot", "render trace signals to an SVG image");
    plot_cmd->add_option("--trace", trace_path, "trace CSV")->required();
    plot_cmd->add_option("--signals", signals, "comma-separated column names")->required();
    plot_cmd->add_option("--out", out_path, "output image path")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid and report trends");
    sweep_cmd->add_option("--config", config_path, "base scenario config")->required();
    sweep_cmd->add_option("--grid", grid_path, "grid file")->required();
    sweep_cmd->add_option("--out", out_path, "output table CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, out_path);
        if (an_cmd->parsed()) return cmd_analyze(trace_path, config_path, report_path);
        if (plot_cmd->parsed()) return cmd_plot(trace_path, signals, out_path);
        if (sweep_cmd->parsed()) return cmd_sweep(config_path, grid_path, out_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
