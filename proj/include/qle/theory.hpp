#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qle/errors.hpp"
#include "qle/initial_data.hpp"
#include "qle/lattice.hpp"
#include "qle/observable.hpp"
#include "qle/potential.hpp"
#include "qle/states.hpp"

namespace qle {

// dx (uniform on T^2) times delta at eta.
struct UniformX {
    double eta = 0.0;
};
// delta at x0 times delta at eta.
struct DiracX {
    Vec2 x0{0.0, 0.0};
    double eta = 0.0;
};
// delta at x0 times the law of eta = scale * H_Lambda(xi) with xi ~ |phi^(xi)|^2 dxi.
struct Pushforward {
    Vec2 x0{0.0, 0.0};
    Profile profile = Profile::gaussian();
    double scale = two_pi;
};

using LimitKind = std::variant<UniformX, DiracX, Pushforward>;

inline std::string kind_name(const LimitKind& k) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, UniformX>) return "uniform_x";
            else if constexpr (std::is_same_v<T, DiracX>) return "dirac_x";
            else return "pushforward";
        },
        k);
}

struct LimitEntry {
    PrimitiveDirection dir{0, 1};
    double weight = 1.0;
    LimitKind kind = UniformX{};
};

struct LimitMeasureSpec {
    std::vector<LimitEntry> entries;
    // Set when the data fall outside every family with a known closed form.
    std::optional<std::string> no_closed_form;

    double total_weight() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.weight;
        return s;
    }
    double residual_mass() const { return 1.0 - total_weight(); }
    bool recognized() const { return !no_closed_form.has_value(); }

    void validate() const {
        for (const auto& e : entries)
            if (!(e.weight >= 0.0)) throw Error("limit measure: negative weight");
        if (total_weight() > 1.0 + 1e-12) throw Error("limit measure: weights exceed 1");
    }
};

// Directions longer than this are treated as irrational when classifying data.
inline constexpr double rational_search_bound = 64.0;

namespace detail {

inline bool alpha_is(double alpha, double value) { return std::abs(alpha - value) < 1e-12; }

inline LimitMeasureSpec classify_component(const InitialComponent& c, const RegimeSpec& regime) {
    LimitMeasureSpec out;
    if (const auto* f = std::get_if<PlaneWaveRational>(&c)) {
        // 2 pi m hbar^2/eps = (2 pi m0/c) hbar^{2 - beta - alpha}.
        const double expo = 2.0 - f->beta - regime.alpha;
        double omega = 0.0;
        if (f->m0 != 0.0) {
            if (expo < -1e-12) return out;  // |omega| = infinity: no concentration
            if (alpha_is(expo, 0.0)) omega = two_pi * f->m0 / regime.c;
        }
        const PrimitiveDirection dir = f->base.orthogonal();
        // H_Lambda(k) = sigma m L0 with v_Lambda = sigma v0^perp.
        const double sigma = dir.generator() == f->base.perp() ? 1.0 : -1.0;
        out.entries.push_back({dir, 1.0, UniformX{sigma * omega * f->base.length()}});
        return out;
    }
    if (std::holds_alternative<PlaneWaveGolden>(c)) return out;
    if (const auto* f = std::get_if<PlaneWaveModes>(&c)) {
        if (f->ks.empty()) throw ConfigError("plane-wave sequence is empty");
        const PrimitiveDirection d = PrimitiveDirection::spanned_by(f->ks.back());
        for (const auto& k : f->ks)
            if (!d.contains(k)) {
                out.no_closed_form = "explicit plane-wave sequence does not stay on one direction";
                return out;
            }
        if (d.length() > rational_search_bound) return out;
        out.entries.push_back({d.orthogonal(), 1.0, UniformX{0.0}});
        return out;
    }
    const auto& coh = std::get<CoherentData>(c).spec;
    const auto along = rational_direction(coh.xi0, rational_search_bound);
    if (!along) return out;
    const PrimitiveDirection dir = along->orthogonal();
    if (regime.alpha > 1.5 + 1e-12) return out;
    if (alpha_is(regime.alpha, 1.5)) {
        out.entries.push_back({dir, 1.0, Pushforward{coh.x0, coh.profile, two_pi / regime.c}});
        return out;
    }
    out.entries.push_back({dir, 1.0, DiracX{coh.x0, 0.0}});
    return out;
}

}  // namespace detail

// Limit measures of the recognized families in the regime hbar^2 << eps << hbar. Components
// of a superposition contribute with weight |w_j|^2 / sum |w|^2.
inline LimitMeasureSpec classify_limit(const InitialDataSpec& data, const RegimeSpec& regime) {
    data.validate();
    LimitMeasureSpec out;
    if (!regime.in_main_regime()) {
        out.no_closed_form = "perturbation exponent outside (1, 2)";
        return out;
    }
    double total = 0.0;
    for (double w : data.weights) total += w * w;
    if (!(total > 0.0)) throw ConfigError("initial data: weights vanish");
    for (std::size_t i = 0; i < data.components.size(); ++i) {
        auto part = detail::classify_component(data.components[i], regime);
        if (!part.recognized()) return part;
        for (auto& e : part.entries) {
            e.weight *= data.weights[i] * data.weights[i] / total;
            out.entries.push_back(e);
        }
    }
    out.validate();
    return out;
}

// Product trapezoid over a square box; the caller checks self-consistency by doubling.
template <class F>
cplx box_quadrature(F&& f, double half_width, int nodes) {
    const double h = 2.0 * half_width / nodes;
    cplx s{};
    for (int i = 0; i <= nodes; ++i) {
        const double wi = (i == 0 || i == nodes) ? 0.5 : 1.0;
        const double a = -half_width + i * h;
        for (int j = 0; j <= nodes; ++j) {
            const double wj = (j == 0 || j == nodes) ? 0.5 : 1.0;
            s += wi * wj * f(a, -half_width + j * h);
        }
    }
    return s * h * h;
}

// Periodic rectangle rule on T^2 with n^2 points.
template <class F>
cplx torus_quadrature(F&& f, int n) {
    cplx s{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += f(static_cast<double>(i) / n, static_cast<double>(j) / n);
    return s / static_cast<double>(n) / static_cast<double>(n);
}

struct QuadratureSettings {
    int torus_grid = 512;
    int torus_check = 256;
    int box_nodes = 256;
    int box_check = 128;
    double box_sigmas = 10.0;
    double self_consistency = 1e-6;
};

namespace detail {

inline cplx checked(const std::function<cplx(int)>& q, int fine, int coarse, double tol, const char* what) {
    const cplx a = q(fine);
    const cplx b = q(coarse);
    if (std::abs(a - b) > tol) {
        std::ostringstream msg;
        msg << what << ": quadrature doubling check failed (" << std::abs(a - b) << ")";
        throw ConvergenceFailure(msg.str());
    }
    return a;
}

// Half-width of the xi-box carrying the profile's |phi^|^2.
inline double profile_box(const Profile& p, double sigmas) {
    if (p.kind == Profile::Kind::gaussian) return sigmas / (2.0 * std::sqrt(2.0) * pi * p.width);
    return p.capture_radius(1e-14);
}

// int f(xi) |phi^(xi)|^2 dxi with the separable profile.
inline cplx profile_average(const Profile& p, const std::function<cplx(const Vec2&)>& f, const QuadratureSettings& q,
                            const char* what) {
    const double half = profile_box(p, q.box_sigmas);
    auto run = [&](int nodes) {
        std::vector<double> dens(nodes + 1);
        for (int i = 0; i <= nodes; ++i) {
            const double v = p.fourier(-half + 2.0 * half * i / nodes);
            dens[i] = v * v;
        }
        const double h = 2.0 * half / nodes;
        cplx s{};
        for (int i = 0; i <= nodes; ++i) {
            const double wi = (i == 0 || i == nodes) ? 0.5 : 1.0;
            for (int j = 0; j <= nodes; ++j) {
                const double wj = (j == 0 || j == nodes) ? 0.5 : 1.0;
                s += wi * wj * dens[i] * dens[j] * f({-half + i * h, -half + j * h});
            }
        }
        return s * h * h;
    };
    return checked(run, q.box_nodes, q.box_check, q.self_consistency, what);
}

}  // namespace detail

// Limit overlap e^{it mean V} (1 - sum <F_Lambda, 1>) + sum_Lambda int e^{i Theta_Lambda} dF_Lambda.
inline cplx predict_theorem(const LimitMeasureSpec& spec, const TrigPotential& v, double t,
                            const QuadratureSettings& q = {}) {
    if (!spec.recognized()) throw RegimeError("predict_theorem: " + *spec.no_closed_form);
    spec.validate();
    cplx total = std::polar(spec.residual_mass(), t * v.mean());
    for (const auto& e : spec.entries) {
        const TrigPotential iv = project_I_lambda(v, e.dir);
        cplx part{};
        if (const auto* u = std::get_if<UniformX>(&e.kind)) {
            auto run = [&](int n) {
                return torus_quadrature(
                    [&](double a, double b) { return std::polar(1.0, phase_integral(iv, e.dir, {a, b}, u->eta, t)); },
                    n);
            };
            part = detail::checked(run, q.torus_grid, q.torus_check, q.self_consistency, "uniform_x");
        } else if (const auto* d = std::get_if<DiracX>(&e.kind)) {
            part = std::polar(1.0, phase_integral(iv, e.dir, d->x0, d->eta, t));
        } else {
            const auto& p = std::get<Pushforward>(e.kind);
            part = detail::profile_average(
                p.profile,
                [&](const Vec2& xi) {
                    return std::polar(1.0, phase_integral(iv, e.dir, p.x0, p.scale * h_lambda(e.dir, xi), t));
                },
                q, "pushforward");
        }
        total += e.weight * part;
    }
    return total;
}

// Limit of <F_Lambda,hbar, a> for observables a(x, eta) without a xi-dependence.
inline cplx predict_pairing(const LimitMeasureSpec& spec, const PrimitiveDirection& dir, const Observable& a,
                            const QuadratureSettings& q = {}) {
    if (!spec.recognized()) throw RegimeError("predict_pairing: " + *spec.no_closed_form);
    for (const auto& t : a.terms)
        if (t.xi_cutoff) throw Error("predict_pairing: observables with a xi-cutoff have no closed-form limit here");
    if (a.flow_shift != 0.0) throw Error("predict_pairing: flow-shifted observables have no closed-form limit here");
    const Observable f = a.filtered(dir);
    cplx total{};
    for (const auto& e : spec.entries) {
        if (!(e.dir == dir)) continue;
        cplx part{};
        for (const auto& t : f.terms) {
            if (const auto* u = std::get_if<UniformX>(&e.kind)) {
                if (t.l == Mode{}) part += t.amplitude * t.eta(u->eta);
            } else if (const auto* d = std::get_if<DiracX>(&e.kind)) {
                part += t.amplitude * t.eta(d->eta) * std::polar(1.0, two_pi * dot(d->x0, t.l));
            } else {
                const auto& p = std::get<Pushforward>(e.kind);
                const cplx avg = detail::profile_average(
                    p.profile, [&](const Vec2& xi) { return cplx{t.eta(p.scale * h_lambda(dir, xi)), 0.0}; }, q,
                    "pushforward pairing");
                part += t.amplitude * avg * std::polar(1.0, two_pi * dot(p.x0, t.l));
            }
        }
        total += e.weight * part;
    }
    return total;
}

namespace detail {

// Semiclassical measure of one component: (position law, momentum xi0) for plane waves or
// coherent states.
struct StrongComponent {
    bool uniform = true;
    Vec2 x0{0.0, 0.0};
    Vec2 xi0{0.0, 0.0};
};

inline StrongComponent strong_component(const InitialComponent& c, double hbar) {
    if (const auto* coh = std::get_if<CoherentData>(&c)) {
        return {false, coh->spec.x0, {two_pi * coh->spec.xi0[0], two_pi * coh->spec.xi0[1]}};
    }
    Vec2 dir{};
    if (const auto* f = std::get_if<PlaneWaveRational>(&c)) {
        const auto g = f->base.generator();
        dir = {static_cast<double>(g.x) / f->base.length(), static_cast<double>(g.y) / f->base.length()};
    } else if (std::holds_alternative<PlaneWaveGolden>(c)) {
        const double phi = 0.5 * (1.0 + std::sqrt(5.0));
        const double n = std::hypot(1.0, phi);
        dir = {1.0 / n, phi / n};
    } else {
        const Mode k = realize_mode(c, hbar);
        dir = {static_cast<double>(k.x) / k.norm(), static_cast<double>(k.y) / k.norm()};
    }
    return {true, {0.0, 0.0}, {two_pi * dir[0], two_pi * dir[1]}};
}

}  // namespace detail

// Limit echo for hbar <= eps <= 1: eps = c hbar gives |<F0, e^{i int_0^t V(x + (s/c) xi) ds}>|^2,
// alpha < 1 gives |<F0, e^{itV}>|^2. `hbar` selects the rung of explicit plane-wave sequences.
inline double predict_strong(const InitialDataSpec& data, const TrigPotential& v, double t, const RegimeSpec& regime,
                             double hbar = 0.0, const QuadratureSettings& q = {}) {
    if (regime.alpha > 1.0 + 1e-12) throw RegimeError("predict_strong: needs eps >= hbar (alpha <= 1)");
    data.validate();
    const bool flow = detail::alpha_is(regime.alpha, 1.0);
    double total_w = 0.0;
    for (double w : data.weights) total_w += w * w;
    cplx total{};
    for (std::size_t i = 0; i < data.components.size(); ++i) {
        const auto m = detail::strong_component(data.components[i], hbar);
        const Vec2 vel{m.xi0[0] / regime.c, m.xi0[1] / regime.c};
        auto phase = [&](const Vec2& x) { return flow ? flow_integral(v, x, vel, t) : t * eval(v, x); };
        cplx part{};
        if (m.uniform) {
            auto run = [&](int n) {
                return torus_quadrature([&](double a, double b) { return std::polar(1.0, phase({a, b})); }, n);
            };
            part = detail::checked(run, q.torus_grid, q.torus_check, q.self_consistency, "strong");
        } else {
            part = std::polar(1.0, phase(m.x0));
        }
        total += data.weights[i] * data.weights[i] / total_w * part;
    }
    return std::norm(total);
}

}  // namespace qle
