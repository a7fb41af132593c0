#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "qle/qle.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 verdict pass, 1 verdict not pass, 2 configuration or runtime error.
constexpr int exit_pass = 0, exit_verdict = 1, exit_error = 2;

fs::path resolve_scenario(const std::string& arg) {
    fs::path p(arg);
    if (fs::exists(p)) return p;
    for (const auto& cand : {qle::bundled_scenario_dir() / p, qle::bundled_scenario_dir() / (arg + ".toml")})
        if (fs::exists(cand)) return cand;
    throw qle::ConfigError("no scenario file or bundled scenario named '" + arg + "'");
}

void print_summary(const qle::ConvergenceReport& rep, std::ostream& os) {
    os << "scenario " << rep.scenario << " (" << qle::to_string(rep.quantity) << ")\n";
    std::string last;
    for (const auto& r : rep.rows) {
        if (r.series != last) {
            os << "  " << r.series << '\n';
            last = r.series;
        }
        os << "    hbar=" << std::setw(12) << std::left << qle::format_number(r.hbar) << std::right
           << " sim=" << std::setw(12) << std::setprecision(6) << r.sim_value << " theory=" << std::setw(12)
           << r.theory_value << " gap=" << r.gap << '\n';
    }
    for (const auto& v : rep.series)
        os << "  [" << v.verdict << "] " << v.series << (v.reason.empty() ? "" : ": " + v.reason) << '\n';
    for (const auto& w : rep.warnings) os << "  warning: " << w << '\n';
    os << "verdict: " << rep.verdict << '\n';
}

// Checks that every rung builds a state in its window.
void check_windows(const qle::Scenario& s) {
    const double tmax = s.t_grid.empty() ? 0.0 : *std::max_element(s.t_grid.begin(), s.t_grid.end());
    const double margin = s.quantity == qle::Quantity::echo ? qle::detail::dynamics_margin(s.potential, tmax) : 4.0;
    for (double hbar : s.ladder) {
        const auto b = qle::build_state(s.initial, hbar, margin, 0);
        std::cout << "  hbar=" << qle::format_number(hbar) << " window=" << b.state.size() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loschmidt echo simulator and limit oracles on the flat 2-torus"};
    app.require_subcommand(1);

    std::string scenario_arg, out_dir, run_dir;
    int workers = 0;
    bool no_plots = false;

    auto* run = app.add_subcommand("run", "run a scenario ladder, write report and plots");
    run->add_option("scenario", scenario_arg, "scenario file or bundled name")->required();
    run->add_option("--out", out_dir, "output directory (default from the scenario)");
    run->add_option("--workers", workers, "worker threads (default QLE_WORKERS or core count)");
    run->add_flag("--no-plots", no_plots, "skip SVG output");

    auto* plot = app.add_subcommand("plot", "redraw plots from a run directory");
    plot->add_option("run_dir", run_dir, "directory holding samples.csv and report.csv")->required();
    plot->add_option("--out", out_dir, "plot directory (default: run_dir)");

    std::string list_dir;
    auto* list = app.add_subcommand("list-scenarios", "list bundled scenarios");
    list->add_option("--dir", list_dir, "scenario directory (default QLE_SCENARIO_DIR or bundled)");

    std::vector<std::string> to_validate;
    auto* validate = app.add_subcommand("validate", "parse scenarios and check their windows");
    validate->add_option("scenario", to_validate, "scenario files or bundled names")->required();

    auto* echo_run = app.add_subcommand("echo-run", "simulation only: per-sample CSV and manifest");
    echo_run->add_option("--scenario", scenario_arg, "scenario file")->required();
    echo_run->add_option("--out", out_dir, "output directory")->required();
    echo_run->add_option("--workers", workers, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto s = qle::load_scenario(resolve_scenario(scenario_arg));
            qle::RunOptions opt;
            opt.workers = workers;
            const auto rep = qle::run_scenario(s, opt);
            const fs::path dir = out_dir.empty() ? fs::path(s.output_dir) : fs::path(out_dir);
            qle::write_report(s, rep, dir, opt.quadrature);
            if (!no_plots)
                for (const auto& f : qle::emit_plots(rep, dir)) std::cout << "wrote " << f.string() << '\n';
            print_summary(rep, std::cout);
            std::cout << "results in " << dir.string() << '\n';
            return rep.passed() ? exit_pass : exit_verdict;
        }
        if (*plot) {
            const auto rep = qle::read_report(run_dir);
            for (const auto& f : qle::emit_plots(rep, out_dir.empty() ? fs::path(run_dir) : fs::path(out_dir)))
                std::cout << "wrote " << f.string() << '\n';
            return rep.passed() ? exit_pass : exit_verdict;
        }
        if (*list) {
            const auto files = list_dir.empty() ? qle::list_scenarios() : qle::list_scenarios(list_dir);
            for (const auto& f : files) {
                try {
                    const auto s = qle::load_scenario(f);
                    std::cout << std::setw(28) << std::left << s.name << ' ' << s.description << '\n';
                } catch (const std::exception& e) {
                    std::cout << std::setw(28) << std::left << f.stem().string() << " invalid: " << e.what() << '\n';
                }
            }
            return exit_pass;
        }
        if (*validate) {
            int bad = 0;
            for (const auto& arg : to_validate) {
                try {
                    const auto s = qle::load_scenario(resolve_scenario(arg));
                    std::cout << s.name << ": ok, config " << qle::hex64(s.config_hash) << '\n';
                    check_windows(s);
                } catch (const std::exception& e) {
                    ++bad;
                    std::cout << arg << ": " << e.what() << '\n';
                }
            }
            return bad ? exit_error : exit_pass;
        }
        if (*echo_run) {
            const auto s = qle::load_scenario(resolve_scenario(scenario_arg));
            if (s.quantity != qle::Quantity::echo) throw qle::ConfigError("echo-run needs an echo scenario");
            qle::RunOptions opt;
            opt.workers = workers;
            opt.with_theory = false;
            opt.theory_curve = false;
            const auto rep = qle::run_scenario(s, opt);
            fs::create_directories(out_dir);
            qle::write_text(fs::path(out_dir) / "samples.csv", qle::samples_csv(rep));
            qle::write_text(fs::path(out_dir) / "manifest.json", qle::manifest(s, rep, opt.quadrature).dump(2) + "\n");
            std::cout << "wrote " << rep.rows.size() << " samples to " << out_dir << '\n';
            return exit_pass;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}
