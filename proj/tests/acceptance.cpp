// Acceptance checks. One PASS/FAIL line per criterion on stdout, per-sample detail on stderr.
// Every tolerance is pinned here; the bundled scenarios only supply the setups.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qle/qle.hpp"

using namespace qle;

namespace {

namespace tol {
constexpr double c1_gap = 0.05;
constexpr int c1_trend_rungs = 3;
constexpr double c1_theory_vs_oracle = 1e-8;
constexpr double c2_min_echo = 0.95;
constexpr double c2_jitter = 1e-3;  // the echo sits within 1e-4 of 1 along the whole ladder
constexpr double c3_gap = 0.1;
constexpr double c4_gap = 0.1;
constexpr double c4_jitter = 0.02;
constexpr double c5_gap = 0.05;
constexpr double c6_ratio = 0.1;
constexpr double c7_unitarity = 1e-9;
constexpr double c7_eps_zero = 1e-12;
constexpr double c7_multiplier = 1e-12;
constexpr double c7_closed_form = 1e-12;
constexpr double c7_filter = 1e-10;
constexpr double c8_gap = 0.05;
}  // namespace tol

struct Outcome {
    bool pass = true;
    std::string summary;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ConvergenceReport run_bundled(const std::string& name, bool with_theory = true) {
    const auto s = load_scenario(bundled_scenario_dir() / (name + ".toml"));
    RunOptions opt;
    opt.with_theory = with_theory;
    opt.theory_curve = false;
    return run_scenario(s, opt);
}

void detail(const ReportRow& r, double reference) {
    std::fprintf(stderr, "  %-16s hbar=%-12.6g sim=%.10f reference=%.10f gap=%.3e\n", r.series.c_str(), r.hbar,
                 r.sim_value, reference, std::abs(r.sim_value - reference));
}

// Non-increasing within jitter over the last `rungs` entries (all when rungs <= 0).
bool non_increasing(const std::vector<double>& v, double jitter, int rungs = 0) {
    const std::size_t start = rungs <= 0 ? 0 : v.size() - std::min<std::size_t>(v.size(), rungs);
    for (std::size_t i = start + 1; i < v.size(); ++i)
        if (!(v[i] <= v[i - 1] + jitter)) return false;
    return true;
}

Outcome criterion1() {
    const auto rep = run_bundled("plane_wave_rational");
    Outcome o;
    for (double t : {0.5, 1.0, 2.0}) {
        const double ref = oracle::bessel_echo_quadrature(t);
        std::vector<double> gaps;
        for (const auto* r : rep.rows_of(series_name(t))) {
            detail(*r, ref);
            gaps.push_back(std::abs(r->sim_value - ref));
            if (std::abs(r->theory_value - ref) > tol::c1_theory_vs_oracle) o.pass = false;
        }
        const bool ok = gaps.back() < tol::c1_gap && non_increasing(gaps, 0.0, tol::c1_trend_rungs);
        o.pass = o.pass && ok;
        o.summary += fmt(" t=%g:", t) + fmt("gap %.3g", gaps.back()) + (ok ? "" : "(x)");
    }
    return o;
}

Outcome criterion2() {
    const auto rep = run_bundled("plane_wave_golden", false);
    std::vector<double> deficits;
    for (const auto& r : rep.rows) {
        detail(r, 1.0);
        deficits.push_back(1.0 - r.sim_value);
    }
    const double last = rep.rows.back().sim_value;
    Outcome o;
    o.pass = last >= tol::c2_min_echo && non_increasing(deficits, tol::c2_jitter);
    o.summary = fmt(" echo %.6f at largest k", last) + fmt(" over %g rungs", static_cast<double>(rep.rows.size()));
    return o;
}

Outcome criterion3() {
    const auto rep = run_bundled("coherent_pair_revival");
    Outcome o;
    for (const double t : {oracle::pi / 4, oracle::pi / 2, oracle::pi}) {
        const double ref = std::pow(std::cos(t), 2);
        const auto rows = rep.rows_of(series_name(t));
        for (const auto* r : rows) detail(*r, ref);
        const auto* last = rows.back();
        const double gap = std::abs(last->sim_value - ref);
        const bool ok = last->hbar == std::ldexp(1.0, -8) && gap < tol::c3_gap;
        o.pass = o.pass && ok;
        o.summary += fmt(" t=%.4g:", t) + fmt("gap %.3g", gap) + (ok ? "" : "(x)");
    }
    return o;
}

Outcome criterion4() {
    const auto rep = run_bundled("coherent_critical");
    std::vector<double> gaps;
    for (const auto& r : rep.rows) {
        detail(r, r.theory_value);
        gaps.push_back(r.gap);
    }
    // Pushforward prediction re-derived by direct quadrature over the Gaussian momentum law.
    const auto s = load_scenario(bundled_scenario_dir() / "coherent_critical.toml");
    const double scale = 2.0 * oracle::pi / s.regime.c, x0 = 0.0, t = 1.0;
    oracle::cplx acc{};
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
        const double xi = -2.0 + 4.0 * i / n, eta = scale * xi;
        const double theta = std::abs(eta) < 1e-12 ? t * std::cos(2.0 * oracle::pi * x0)
                                                   : (std::sin(2.0 * oracle::pi * (x0 + t * eta)) -
                                                      std::sin(2.0 * oracle::pi * x0)) /
                                                         (2.0 * oracle::pi * eta);
        const double dens = 2.0 * std::sqrt(oracle::pi) * std::exp(-4.0 * oracle::pi * oracle::pi * xi * xi);
        acc += (i == 0 || i == n ? 0.5 : 1.0) * dens * std::polar(1.0, theta);
    }
    const double ref = std::norm(acc * (4.0 / n));
    Outcome o;
    const bool theory_ok = std::abs(rep.rows.back().theory_value - ref) < 1e-6;
    o.pass = theory_ok && rep.rows.back().hbar == std::ldexp(1.0, -8) && gaps.back() < tol::c4_gap &&
             non_increasing(gaps, tol::c4_jitter) && gaps.back() <= gaps.front();
    o.summary = fmt(" limit %.6f", ref) + fmt(" final gap %.3g", gaps.back()) + (theory_ok ? "" : " theory mismatch");
    return o;
}

Outcome criterion5() {
    Outcome o;
    const double ref = oracle::bessel_echo_quadrature(1.0);
    for (const char* name : {"strong_eps_hbar", "strong_eps_sqrt_hbar"}) {
        const auto rep = run_bundled(name);
        for (const auto& r : rep.rows) detail(r, ref);
        const auto& last = rep.rows.back();
        const double gap = std::abs(last.sim_value - ref);
        const bool ok = last.hbar == std::ldexp(1.0, -9) && gap < tol::c5_gap && std::abs(last.theory_value - ref) < 1e-8;
        o.pass = o.pass && ok;
        o.summary += std::string(" ") + name + fmt(": gap %.3g", gap) + (ok ? "" : "(x)");
    }
    return o;
}

Outcome criterion6() {
    const auto rep = run_bundled("peres_short_time");
    Outcome o;
    double worst = 0.0;
    for (const auto& r : rep.rows) {
        // Plane wave under cos(2 pi x1): Var V = 1/2, and eps t_phys / hbar = t.
        const double quad = 1.0 - 0.5 * r.t * r.t;
        detail(r, quad);
        const double lhs = std::abs(r.sim_value - quad), rhs = tol::c6_ratio * (1.0 - r.sim_value);
        if (!(r.t <= 0.1 && lhs <= rhs && std::abs(r.theory_value - quad) < 1e-12)) o.pass = false;
        worst = std::max(worst, lhs / rhs);
    }
    o.summary = fmt(" worst |E - E_quad| / (0.1 (1 - E)) = %.3g", worst);
    return o;
}

// Property suite with fixed-seed draws.
Outcome criterion7() {
    oracle::Gen gen(2024);
    Outcome o;
    auto check = [&](bool ok, const std::string& what) {
        std::fprintf(stderr, "  %-44s %s\n", what.c_str(), ok ? "ok" : "VIOLATED");
        if (!ok) {
            o.pass = false;
            o.summary += " " + what;
        }
    };
    auto random_state = [&](double hbar, Window w) {
        FourierState s(hbar, w);
        const auto h = w.size / 4;
        for (std::size_t i = 0; i < s.coefficients().size(); ++i) {
            const Mode k = s.mode_at(i);
            if (std::abs(k.x - w.center.x) < h && std::abs(k.y - w.center.y) < h)
                s.coefficients()[i] = {gen.uniform(-1, 1), gen.uniform(-1, 1)};
        }
        s.normalize();
        return s;
    };
    auto random_observable = [&](int terms, bool with_xi) {
        Observable a{"random", {}, 0.0};
        for (int i = 0; i < terms; ++i) {
            ObservableTerm t;
            t.l = {gen.integer(-2, 2), gen.integer(-2, 2)};
            t.amplitude = {gen.uniform(-1, 1), gen.uniform(-1, 1)};
            t.eta = gen.integer(0, 1) ? WindowFn::gaussian(gen.uniform(-1, 1), gen.uniform(0.3, 2))
                                      : WindowFn::cosine(gen.uniform(-1, 1), gen.uniform(0.5, 3));
            if (with_xi) t.xi_cutoff = WindowFn::gaussian(gen.uniform(0, 4), gen.uniform(0.5, 2));
            a.terms.push_back(t);
        }
        return a;
    };
    const auto v = TrigPotential::cosine({1, 0}, 1.0) + TrigPotential::cosine({1, 1}, 0.4);

    // Unitarity of both evolutions.
    double drift = 0.0;
    for (int trial = 0; trial < 6; ++trial) {
        const auto psi = random_state(1.0 / 32, Window{32, {0, 0}});
        drift = std::max(drift, std::abs(free_evolve(psi, gen.uniform(0.1, 5.0)).norm() - 1.0));
        drift = std::max(drift, std::abs(perturbed_evolve(psi, v, 0.05, 2.0, 0.01).norm() - 1.0));
        drift = std::max(drift, echo(psi, v, RegimeSpec{1.0, 1.5}, 1.0).norm_drift);
    }
    check(drift <= tol::c7_unitarity, "unitarity drift " + fmt("%.2e", drift));

    // eps = 0: the perturbed flow is the free flow and the echo is 1.
    double dev = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
        const auto psi = random_state(1.0 / 16, Window{32, {0, 0}});
        dev = std::max(dev, std::abs(echo(psi, v, RegimeSpec{0.0, 1.5}, 1.5).echo - 1.0));
        dev = std::max(dev, distance(perturbed_evolve(psi, v, 0.0, 0.7, 0.007), free_evolve(psi, 0.7)));
    }
    check(dev <= tol::c7_eps_zero, "eps = 0 echo " + fmt("%.2e", dev));

    // Op on a single mode: coefficient sum of amplitude * eta(0) * cutoff(|2 pi hbar k|) at k + l.
    double mult = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double hbar = 1.0 / gen.integer(4, 40);
        const Mode k{gen.integer(-6, 6), gen.integer(-6, 6)};
        const Window w{16, k};
        const auto a = random_observable(gen.integer(1, 4), gen.integer(0, 1) == 1);
        FourierState e(hbar, w);
        e.at(k) = 1.0;
        const auto out = op_apply(a, e);
        const double xi = 2.0 * oracle::pi * hbar * std::hypot(static_cast<double>(k.x), static_cast<double>(k.y));
        for (std::size_t i = 0; i < out.coefficients().size(); ++i) {
            const Mode m = out.mode_at(i);
            oracle::cplx want{};
            for (const auto& t : a.terms)
                if (t.l.x == m.x - k.x && t.l.y == m.y - k.y)
                    want += t.amplitude * t.eta(0.0) * (t.xi_cutoff ? (*t.xi_cutoff)(xi) : 1.0);
            mult = std::max(mult, std::abs(out.coefficients()[i] - want));
        }
    }
    check(mult <= tol::c7_multiplier, "Op multiplier identity " + fmt("%.2e", mult));

    // Plane-wave pairing <e_{k+l}, Op e_k> along Lambda: amplitude * eta-profile at 2 pi (hbar^2/eps) <k, v>/|v|.
    double closed = 0.0;
    const auto dirs = enumerate_primitive(3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const RegimeSpec r{gen.uniform(0.5, 2.0), gen.uniform(1.1, 1.6)};
        const double hbar = 1.0 / gen.integer(8, 64);
        const auto& dir = dirs[static_cast<std::size_t>(gen.integer(0, static_cast<int>(dirs.size()) - 1))];
        const Mode g = dir.generator();
        const int j = gen.integer(-1, 1);
        const Mode k{gen.integer(-8, 8), gen.integer(-8, 8)};
        const Mode kl{k.x + j * g.x, k.y + j * g.y};
        const Window w{16, k};
        FourierState in(hbar, w), outp(hbar, w);
        in.at(k) = 1.0;
        outp.at(kl) = 1.0;
        const auto prof = WindowFn::gaussian(gen.uniform(-2, 2), gen.uniform(0.5, 2));
        const oracle::cplx amp{gen.uniform(-1, 1), gen.uniform(-1, 1)};
        Observable a{"o", {{Mode{j * g.x, j * g.y}, amp, prof, std::nullopt}, {{g.y, -g.x}, 3.0, prof, std::nullopt}}, 0.0};
        const double len = std::hypot(static_cast<double>(g.x), static_cast<double>(g.y));
        const double eta = 2.0 * oracle::pi * hbar * hbar / r.epsilon(hbar) *
                           (static_cast<double>(k.x) * g.x + static_cast<double>(k.y) * g.y) / len;
        closed = std::max(closed, std::abs(two_microlocal(outp, in, dir, a, r).value - amp * prof(eta)));
    }
    check(closed <= tol::c7_closed_form, "plane-wave pairing closed form " + fmt("%.2e", closed));

    // I_Lambda by Fourier filtering against the line average along the invariant circle.
    double filter = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<TrigPotential::Entry> es{{{0, 0}, gen.uniform(-1, 1)}};
        for (const Mode m : {Mode{1, 0}, Mode{0, 1}, Mode{1, 1}, Mode{1, -1}, Mode{2, 1}, Mode{1, 2}})
            es.push_back({m, {gen.uniform(-1, 1), gen.uniform(-1, 1)}});
        const auto b = TrigPotential::from_entries(es);
        const auto& dir = dirs[static_cast<std::size_t>(trial) % dirs.size()];
        const auto ib = project_I_lambda(b, dir);
        const auto u = dir.perp();
        const double len = dir.length();
        for (int i = 0; i < 8; ++i) {
            const double x1 = gen.uniform(0, 1), x2 = gen.uniform(0, 1);
            const double avg = oracle::line_average([&](double p, double q) { return eval(b, {p, q}); }, x1, x2,
                                                    static_cast<double>(u.x) / len, static_cast<double>(u.y) / len, len);
            filter = std::max(filter, std::abs(eval(ib, {x1, x2}) - avg));
        }
    }
    check(filter <= tol::c7_filter, "I_Lambda filter vs line average " + fmt("%.2e", filter));

    // Calderon-Vaillancourt bound over 200 randomized observables.
    int violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const RegimeSpec r{1.0, gen.uniform(1.1, 1.6)};
        const auto p1 = random_state(1.0 / 20, Window{12, {2, 20}});
        const auto p2 = random_state(1.0 / 20, Window{12, {2, 20}});
        const auto a = random_observable(gen.integer(1, 5), gen.integer(0, 1) == 1);
        const auto& dir = dirs[static_cast<std::size_t>(gen.integer(0, static_cast<int>(dirs.size()) - 1))];
        const auto s = two_microlocal(p1, p2, dir, a, r);
        if (std::abs(s.value) > s.bound * (1.0 + 1e-12)) ++violations;
    }
    check(violations == 0, "bound violations " + std::to_string(violations) + " / 200");

    // Convention-gap bound shrinks along ladders of coherent data.
    bool shrinks = true;
    for (int trial = 0; trial < 4; ++trial) {
        const RegimeSpec r{1.0, gen.uniform(1.1, 1.4)};
        const CoherentSpec spec{{gen.uniform(0, 1), gen.uniform(0, 1)}, {0.0, 0.5}, Profile::gaussian()};
        const auto a = Observable::cosine({1, 0}, 1.0, WindowFn::gaussian(gen.uniform(-1, 1), 1.0),
                                          WindowFn::gaussian(3.0, 1.0));
        double prev = std::numeric_limits<double>::infinity();
        for (int j = 4; j <= 10; j += 2) {
            const double hbar = std::ldexp(1.0, -j);
            const auto psi = coherent_state(spec, hbar, coherent_window(spec, hbar, 2));
            const double g = convention_gap_bound(psi, psi, PrimitiveDirection(1, 0), a, r);
            if (!(g < prev)) shrinks = false;
            prev = g;
        }
    }
    check(shrinks, "convention-gap bound shrinks along ladders");
    if (o.pass) o.summary = " all properties hold";
    return o;
}

Outcome criterion8() {
    struct Case {
        const char* name;
        std::function<double(const ReportRow&)> limit;
    };
    const auto g = [](double center) { return [center](double eta) { return std::exp(-0.5 * (eta - center) * (eta - center)); }; };
    const std::vector<Case> cases{
        // eta pinned at -2 pi m0 / c = -pi/2.
        {"microlocal_plane_shifted", [&](const ReportRow&) { return g(-1.5)(-oracle::pi / 2); }},
        // Half the mass on each direction; only the (0, 1) plane wave sits on Lambda = Z(1, 0) at eta = 0.
        {"microlocal_two_planes", [&](const ReportRow&) { return 0.5 * g(0.0)(0.0); }},
        // Point mass at (x0, eta = 0) with a = 1 + cos(2 pi x1).
        {"microlocal_coherent", [&](const ReportRow&) { return (1.0 + std::cos(2.0 * oracle::pi * 0.1)) * g(0.0)(0.0); }},
    };
    Outcome o;
    for (const auto& c : cases) {
        const auto rep = run_bundled(c.name);
        std::vector<double> gaps;
        bool theory_ok = true;
        for (const auto& r : rep.rows) {
            const double ref = c.limit(r);
            detail(r, ref);
            gaps.push_back(std::abs(r.sim_value - ref));
            if (!(std::abs(r.theory_value - ref) < 1e-8)) theory_ok = false;
        }
        const bool ok = theory_ok && gaps.back() < tol::c8_gap && non_increasing(gaps, 0.0);
        o.pass = o.pass && ok;
        o.summary += std::string(" ") + c.name + fmt(": %.2e", gaps.back()) + (ok ? "" : "(x)");
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-8); default all")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8};
    bool all = true;
    for (int n = 1; n <= 8; ++n) {
        if (only && n != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string(" error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d %s%s (%.1fs)\n", n, o.pass ? "PASS" : "FAIL", o.summary.c_str(), secs);
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
