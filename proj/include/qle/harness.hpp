#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qle/errors.hpp"
#include "qle/fft.hpp"
#include "qle/initial_data.hpp"
#include "qle/microlocal.hpp"
#include "qle/propagator.hpp"
#include "qle/scenario.hpp"
#include "qle/theory.hpp"

namespace qle {

inline constexpr const char* library_version = "1.0.0";

// One (series, hbar) cell of a convergence table.
struct ReportRow {
    std::string series;  // "t=<value>" for echoes, observable name for pairings
    double t = 0.0;
    double hbar = 0.0;
    double epsilon = 0.0;
    cplx sim{};
    std::optional<cplx> theory;  // complex prediction when one exists
    double sim_value = 0.0;      // echo, or Re of the pairing
    double theory_value = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
    // Diagnostics.
    int window = 0;
    double dt_used = 0.0;
    double dt_coarse = 0.0;
    long steps = 0;
    double norm_drift = 0.0;
    double prenormalization_norm = 1.0;
    std::vector<Mode> modes;
    std::string convention;
    std::string dir;
    double bound = 0.0;
    double convention_gap_bound = 0.0;
};

struct SeriesVerdict {
    std::string series;
    double t = 0.0;
    std::string verdict;  // pass | fail | insufficient ladder | no theory
    double final_gap = std::numeric_limits<double>::quiet_NaN();
    std::string reason;
};

struct ConvergenceReport {
    std::string scenario;
    Quantity quantity = Quantity::echo;
    TheoryKind theory = TheoryKind::automatic;
    std::vector<ReportRow> rows;
    std::vector<SeriesVerdict> series;
    std::string verdict = "pass";
    // Dense limit curve (t, echo) for plotting, when the theory is hbar-independent.
    std::vector<std::pair<double, double>> theory_curve;
    std::vector<std::string> warnings;

    bool passed() const { return verdict == "pass"; }

    std::vector<const ReportRow*> rows_of(const std::string& s) const {
        std::vector<const ReportRow*> out;
        for (const auto& r : rows)
            if (r.series == s) out.push_back(&r);
        return out;
    }
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string series_name(double t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "t=%.12g", t);
    return buf;
}

// Verdict of one series from its rows alone, ordered by decreasing hbar.
inline SeriesVerdict judge_series(const std::string& name, double t, const std::vector<const ReportRow*>& rows,
                                  const VerdictRule& rule) {
    SeriesVerdict v{name, t, "pass", std::numeric_limits<double>::quiet_NaN(), ""};
    if (rows.empty()) {
        v.verdict = "fail";
        v.reason = "no samples";
        return v;
    }
    for (const auto* r : rows)
        if (std::isnan(r->gap)) {
            v.verdict = "no theory";
            v.reason = "no closed-form prediction";
            return v;
        }
    v.final_gap = rows.back()->gap;
    if (rule.deficit_ratio) {
        for (const auto* r : rows) {
            const double allowed = *rule.deficit_ratio * (1.0 - r->sim_value);
            if (!(r->gap <= allowed)) {
                v.verdict = "fail";
                v.reason = "gap " + format_number(r->gap) + " exceeds " + format_number(allowed) + " at hbar " +
                           format_number(r->hbar);
                return v;
            }
        }
        return v;
    }
    if (rows.size() < 2) {
        v.verdict = "insufficient ladder";
        v.reason = "a trend needs at least two rungs";
        return v;
    }
    if (!(v.final_gap <= rule.final_gap)) {
        v.verdict = "fail";
        v.reason = "final gap " + format_number(v.final_gap) + " above " + format_number(rule.final_gap);
        return v;
    }
    if (rule.trend_rungs >= 0) {
        const std::size_t n = rows.size();
        const std::size_t start =
            rule.trend_rungs == 0 ? 0 : n - std::min<std::size_t>(n, static_cast<std::size_t>(rule.trend_rungs));
        for (std::size_t i = start + 1; i < n; ++i) {
            if (!(rows[i]->gap <= rows[i - 1]->gap + rule.jitter)) {
                v.verdict = "fail";
                v.reason = "gap rises from " + format_number(rows[i - 1]->gap) + " to " + format_number(rows[i]->gap) +
                           " at hbar " + format_number(rows[i]->hbar);
                return v;
            }
        }
        if (rule.last_below_first && !(rows[n - 1]->gap <= rows[start]->gap)) {
            v.verdict = "fail";
            v.reason = "last gap above the first of the trend window";
            return v;
        }
    }
    return v;
}

inline void judge(ConvergenceReport& rep, const VerdictRule& rule) {
    rep.series.clear();
    std::vector<std::pair<std::string, double>> names;
    for (const auto& r : rep.rows)
        if (std::find_if(names.begin(), names.end(), [&](const auto& p) { return p.first == r.series; }) == names.end())
            names.push_back({r.series, r.t});
    for (const auto& [n, t] : names) rep.series.push_back(judge_series(n, t, rep.rows_of(n), rule));
    auto any = [&](const char* v) {
        return std::any_of(rep.series.begin(), rep.series.end(), [&](const auto& s) { return s.verdict == v; });
    };
    if (rep.series.empty()) rep.verdict = "fail";
    else if (any("fail")) rep.verdict = "fail";
    else if (any("no theory")) rep.verdict = "no theory";
    else if (any("insufficient ladder")) rep.verdict = "insufficient ladder";
    else rep.verdict = "pass";
}

inline int worker_count() {
    if (const char* env = std::getenv("QLE_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i < count on a fixed pool; the first exception is rethrown after all
// workers stop.
template <class F>
void parallel_for(std::size_t count, int workers, F&& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace detail {

// Room for the potential to move mass over rescaled time t.
inline double dynamics_margin(const TrigPotential& v, double t) {
    const double s = static_cast<double>(v.support_radius());
    return s * (2.0 * t * v.oscillation_bound() + 12.0) + 4.0;
}

// Builds the state and runs `body`, enlarging the window while the run reports it too small.
template <class Body>
auto with_window(const InitialDataSpec& data, double hbar, double margin, Body&& body) {
    int min_size = 0;
    for (int attempt = 0;; ++attempt) {
        BuiltState built = build_state(data, hbar, margin, min_size);
        try {
            return body(built);
        } catch (const WindowTooSmall& e) {
            if (attempt >= 4) throw;
            min_size = std::max(e.required_window(), 2 * built.state.size());
        } catch (const TruncationError&) {
            if (attempt >= 4) throw;
            min_size = 2 * built.state.size();
        }
    }
}

inline std::string describe_sample(const Scenario& s, double hbar, const std::string& series) {
    std::ostringstream m;
    m << "scenario '" << s.name << "', sample hbar=" << format_number(hbar) << " " << series;
    return m.str();
}

}  // namespace detail

struct RunOptions {
    int workers = 0;  // 0 = QLE_WORKERS or hardware concurrency
    bool with_theory = true;
    bool theory_curve = true;
    int curve_points = 33;
    QuadratureSettings quadrature{};
};

// hbar-independent limit value of the echo at rescaled time t, if one exists.
inline std::optional<cplx> limit_overlap(const Scenario& s, double t, const QuadratureSettings& q,
                                         double hbar_for_modes = 0.0) {
    if (s.regime.alpha <= 1.0 + 1e-12)
        return cplx{predict_strong(s.initial, s.potential, t, s.regime, hbar_for_modes, q), 0.0};
    const auto spec = classify_limit(s.initial, s.regime);
    if (!spec.recognized()) return std::nullopt;
    return predict_theorem(spec, s.potential, t, q);
}

inline ConvergenceReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
    s.validate();
    ConvergenceReport rep;
    rep.scenario = s.name;
    rep.quantity = s.quantity;
    rep.theory = opt.with_theory ? s.theory : TheoryKind::none;
    const int workers = opt.workers > 0 ? opt.workers : worker_count();
    // Strong-regime echoes of explicit mode sequences depend on the rung through the direction.
    const bool rung_dependent_theory =
        s.regime.alpha <= 1.0 + 1e-12 &&
        std::any_of(s.initial.components.begin(), s.initial.components.end(),
                    [](const auto& c) { return std::holds_alternative<PlaneWaveModes>(c); });

    if (s.quantity == Quantity::echo) {
        const std::size_t nt = s.t_grid.size();
        rep.rows.resize(s.ladder.size() * nt);
        parallel_for(rep.rows.size(), workers, [&](std::size_t idx) {
            const std::size_t ti = idx / s.ladder.size(), hi = idx % s.ladder.size();
            const double t = s.t_grid[ti], hbar = s.ladder[hi];
            ReportRow& row = rep.rows[idx];
            row.series = series_name(t);
            row.t = t;
            try {
                detail::with_window(s.initial, hbar, detail::dynamics_margin(s.potential, t),
                                    [&](const BuiltState& b) {
                                        const auto e = echo(b.state, s.potential, s.regime, t, s.dt_control);
                                        row.hbar = e.hbar;
                                        row.epsilon = e.epsilon;
                                        row.sim = e.overlap;
                                        row.sim_value = e.echo;
                                        row.window = e.window;
                                        row.dt_used = e.dt_used;
                                        row.dt_coarse = e.dt_coarse;
                                        row.steps = e.steps;
                                        row.norm_drift = e.norm_drift;
                                        row.prenormalization_norm = b.prenormalization_norm;
                                        row.modes = b.modes;
                                        if (rep.theory == TheoryKind::peres) {
                                            const double tp = t * s.regime.critical_time(e.hbar);
                                            row.theory_value = peres_quadratic(b.state, s.potential, s.regime, tp);
                                        }
                                        return 0;
                                    });
            } catch (const std::exception& ex) {
                throw Error(detail::describe_sample(s, hbar, row.series) + ": " + ex.what());
            }
        });
        if (rep.theory == TheoryKind::automatic) {
            std::vector<std::optional<cplx>> limits(nt);
            if (!rung_dependent_theory)
                parallel_for(nt, workers, [&](std::size_t i) { limits[i] = limit_overlap(s, s.t_grid[i], opt.quadrature); });
            for (std::size_t i = 0; i < rep.rows.size(); ++i) {
                auto& r = rep.rows[i];
                const auto lim = rung_dependent_theory
                                     ? limit_overlap(s, r.t, opt.quadrature, r.hbar)
                                     : limits[i / s.ladder.size()];
                if (lim) {
                    r.theory = *lim;
                    r.theory_value = s.regime.alpha <= 1.0 + 1e-12 ? lim->real() : std::norm(*lim);
                }
            }
            if (opt.theory_curve && !rung_dependent_theory && nt > 0) {
                const double tmax = *std::max_element(s.t_grid.begin(), s.t_grid.end());
                if (tmax > 0.0) {
                    rep.theory_curve.resize(opt.curve_points);
                    std::atomic<bool> missing{false};
                    parallel_for(rep.theory_curve.size(), workers, [&](std::size_t i) {
                        const double t = tmax * static_cast<double>(i) / (opt.curve_points - 1);
                        const auto lim = limit_overlap(s, t, opt.quadrature);
                        if (!lim) missing = true;
                        rep.theory_curve[i] = {t, lim ? (s.regime.alpha <= 1.0 + 1e-12 ? lim->real() : std::norm(*lim))
                                                      : 0.0};
                    });
                    if (missing) rep.theory_curve.clear();
                }
            }
        }
        for (auto& r : rep.rows)
            if (!std::isnan(r.theory_value)) r.gap = std::abs(r.sim_value - r.theory_value);
    } else {
        const std::size_t no = s.observables.size();
        rep.rows.resize(s.ladder.size() * no);
        int margin = 2;
        for (const auto& o : s.observables)
            margin = std::max<int>(margin, static_cast<int>(o.observable.support_radius()) + 2);
        parallel_for(rep.rows.size(), workers, [&](std::size_t idx) {
            const std::size_t oi = idx / s.ladder.size(), hi = idx % s.ladder.size();
            const auto& o = s.observables[oi];
            const double hbar = s.ladder[hi];
            ReportRow& row = rep.rows[idx];
            row.series = o.observable.name;
            row.convention = to_string(o.convention);
            row.dir = o.dir.to_string();
            try {
                detail::with_window(s.initial, hbar, margin, [&](const BuiltState& b) {
                    const auto& psi = b.state;
                    const auto smp = two_microlocal(psi, psi, o.dir, o.observable, s.regime, o.convention);
                    row.hbar = psi.hbar();
                    row.epsilon = s.regime.epsilon(psi.hbar());
                    row.sim = smp.value;
                    row.sim_value = smp.value.real();
                    row.bound = smp.bound;
                    row.convention_gap_bound = convention_gap_bound(psi, psi, o.dir, o.observable, s.regime);
                    row.window = psi.size();
                    row.prenormalization_norm = b.prenormalization_norm;
                    row.modes = b.modes;
                    if (std::abs(smp.value) > smp.bound * (1.0 + 1e-12))
                        throw Error("pairing exceeds its operator-norm bound");
                    return 0;
                });
            } catch (const std::exception& ex) {
                throw Error(detail::describe_sample(s, hbar, row.series) + ": " + ex.what());
            }
        });
        if (rep.theory == TheoryKind::automatic) {
            const auto spec = classify_limit(s.initial, s.regime);
            for (std::size_t oi = 0; oi < no; ++oi) {
                std::optional<cplx> pred;
                if (spec.recognized()) {
                    try {
                        pred = predict_pairing(spec, s.observables[oi].dir, s.observables[oi].observable, opt.quadrature);
                    } catch (const RegimeError&) {
                    } catch (const ConvergenceFailure&) {
                        throw;
                    } catch (const Error& e) {
                        rep.warnings.push_back(s.observables[oi].observable.name + ": " + e.what());
                    }
                }
                for (std::size_t hi = 0; hi < s.ladder.size(); ++hi) {
                    auto& r = rep.rows[oi * s.ladder.size() + hi];
                    if (!pred) continue;
                    r.theory = *pred;
                    r.theory_value = pred->real();
                    r.gap = std::abs(r.sim - *pred);
                }
            }
        }
    }
    judge(rep, s.verdict);
    return rep;
}

// ---- persistence ----

inline std::string modes_string(const std::vector<Mode>& ms) {
    std::string out;
    for (const auto& m : ms) {
        if (!out.empty()) out += ";";
        out += "(" + std::to_string(m.x) + "," + std::to_string(m.y) + ")";
    }
    return out;
}

// Per-sample CSV; simulation and theory rows share one schema.
inline std::string samples_csv(const ConvergenceReport& rep) {
    std::ostringstream o;
    if (rep.quantity == Quantity::echo) {
        o << "source,hbar,epsilon,t,re_overlap,im_overlap,echo,dt_used,norm_drift\n";
        for (const auto& r : rep.rows) {
            o << "simulation," << format_number(r.hbar) << ',' << format_number(r.epsilon) << ',' << format_number(r.t)
              << ',' << format_number(r.sim.real()) << ',' << format_number(r.sim.imag()) << ','
              << format_number(r.sim_value) << ',' << format_number(r.dt_used) << ',' << format_number(r.norm_drift)
              << '\n';
            if (!std::isnan(r.theory_value)) {
                const cplx th = r.theory.value_or(cplx{r.theory_value, 0.0});
                o << "theory," << format_number(r.hbar) << ',' << format_number(r.epsilon) << ','
                  << format_number(r.t) << ',' << format_number(th.real()) << ',' << format_number(th.imag()) << ','
                  << format_number(r.theory_value) << ",0,0\n";
            }
        }
    } else {
        o << "source,observable,dir,convention,hbar,epsilon,re_value,im_value,bound,convention_gap_bound\n";
        for (const auto& r : rep.rows) {
            o << "simulation," << r.series << ',' << r.dir << ',' << r.convention << ',' << format_number(r.hbar) << ','
              << format_number(r.epsilon) << ',' << format_number(r.sim.real()) << ',' << format_number(r.sim.imag())
              << ',' << format_number(r.bound) << ',' << format_number(r.convention_gap_bound) << '\n';
            if (r.theory)
                o << "theory," << r.series << ',' << r.dir << ',' << r.convention << ',' << format_number(r.hbar) << ','
                  << format_number(r.epsilon) << ',' << format_number(r.theory->real()) << ','
                  << format_number(r.theory->imag()) << ",0,0\n";
        }
    }
    return o.str();
}

inline std::string report_csv(const ConvergenceReport& rep) {
    std::ostringstream o;
    o << "series,t,hbar,sim,theory,gap\n";
    for (const auto& r : rep.rows)
        o << r.series << ',' << format_number(r.t) << ',' << format_number(r.hbar) << ',' << format_number(r.sim_value)
          << ',' << format_number(r.theory_value) << ',' << format_number(r.gap) << '\n';
    return o.str();
}

inline std::string curve_csv(const ConvergenceReport& rep) {
    std::ostringstream o;
    o << "t,theory\n";
    for (const auto& [t, v] : rep.theory_curve) o << format_number(t) << ',' << format_number(v) << '\n';
    return o.str();
}

inline nlohmann::json manifest(const Scenario& s, const ConvergenceReport& rep, const QuadratureSettings& q = {}) {
    using nlohmann::json;
    json m;
    m["scenario"] = s.name;
    m["source"] = std::filesystem::path(s.source_path).filename().string();
    m["config_hash"] = hex64(s.config_hash);
    m["library_version"] = library_version;
    m["fftw_version"] = fftw_version_string();
    m["quantity"] = to_string(s.quantity);
    m["theory"] = to_string(rep.theory);
    m["regime"] = {{"c", s.regime.c}, {"alpha", s.regime.alpha}};
    m["dt_control"] = s.dt_control;
    m["quadrature"] = {{"torus_grid", q.torus_grid},   {"torus_check", q.torus_check},
                       {"box_nodes", q.box_nodes},     {"box_check", q.box_check},
                       {"box_sigmas", q.box_sigmas},   {"self_consistency", q.self_consistency},
                       {"rational_search_bound", rational_search_bound}};
    m["verdict_rule"] = {{"final_gap", s.verdict.final_gap},
                         {"jitter", s.verdict.jitter},
                         {"trend_rungs", s.verdict.trend_rungs},
                         {"last_below_first", s.verdict.last_below_first}};
    if (s.verdict.deficit_ratio) m["verdict_rule"]["deficit_ratio"] = *s.verdict.deficit_ratio;
    json conventions = json::array();
    for (const auto& o : s.observables)
        conventions.push_back({{"observable", o.observable.name}, {"dir", o.dir.to_string()},
                               {"convention", to_string(o.convention)}});
    m["conventions"] = conventions;
    json samples = json::array();
    for (const auto& r : rep.rows) {
        json j{{"series", r.series},
               {"hbar", r.hbar},
               {"window", r.window},
               {"prenormalization_norm", r.prenormalization_norm},
               {"modes", modes_string(r.modes)}};
        if (s.quantity == Quantity::echo) {
            j["t"] = r.t;
            j["dt_used"] = r.dt_used;
            j["dt_coarse"] = r.dt_coarse;
            j["steps"] = r.steps;
        }
        samples.push_back(j);
    }
    m["samples"] = samples;
    json verdicts = json::array();
    for (const auto& v : rep.series)
        verdicts.push_back({{"series", v.series}, {"verdict", v.verdict}, {"final_gap", format_number(v.final_gap)},
                            {"reason", v.reason}});
    m["series"] = verdicts;
    m["verdict"] = rep.verdict;
    m["warnings"] = rep.warnings;
    return m;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

inline void write_report(const Scenario& s, const ConvergenceReport& rep, const std::filesystem::path& dir,
                         const QuadratureSettings& q = {}) {
    std::filesystem::create_directories(dir);
    write_text(dir / "samples.csv", samples_csv(rep));
    write_text(dir / "report.csv", report_csv(rep));
    if (!rep.theory_curve.empty()) write_text(dir / "curve.csv", curve_csv(rep));
    write_text(dir / "manifest.json", manifest(s, rep, q).dump(2) + "\n");
}

namespace detail {

inline double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw Error("malformed number '" + s + "' in report");
    }
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// Reads back report.csv (and curve.csv when present) from a run directory.
inline ConvergenceReport read_report(const std::filesystem::path& dir) {
    ConvergenceReport rep;
    std::ifstream in(dir / "report.csv");
    if (!in) throw Error("no report.csv in " + dir.string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 6) throw Error("malformed report row: " + line);
        ReportRow r;
        r.series = f[0];
        r.t = detail::parse_number(f[1]);
        r.hbar = detail::parse_number(f[2]);
        r.sim_value = detail::parse_number(f[3]);
        r.theory_value = detail::parse_number(f[4]);
        r.gap = detail::parse_number(f[5]);
        rep.rows.push_back(r);
    }
    rep.quantity = std::all_of(rep.rows.begin(), rep.rows.end(),
                               [](const ReportRow& r) { return r.series.rfind("t=", 0) == 0; })
                       ? Quantity::echo
                       : Quantity::pairing;
    std::ifstream cin(dir / "curve.csv");
    if (cin) {
        std::getline(cin, line);
        while (std::getline(cin, line)) {
            if (line.empty()) continue;
            const auto f = detail::split_csv(line);
            if (f.size() != 2) throw Error("malformed curve row: " + line);
            rep.theory_curve.push_back({detail::parse_number(f[0]), detail::parse_number(f[1])});
        }
    }
    std::ifstream min(dir / "manifest.json");
    if (min) {
        const auto j = nlohmann::json::parse(min, nullptr, false);
        if (!j.is_discarded()) {
            rep.scenario = j.value("scenario", "");
            rep.verdict = j.value("verdict", "");
        }
    }
    return rep;
}

}  // namespace qle
