#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qle/errors.hpp"
#include "qle/fourier_state.hpp"
#include "qle/lattice.hpp"

namespace qle {

// Bounded profile on the real line with sup-norm 1 and a known Lipschitz constant.
struct WindowFn {
    enum class Kind { constant, gaussian, cosine };
    Kind kind = Kind::constant;
    double center = 0.0;
    double width = 1.0;  // gaussian: standard width; cosine: half-width of the support

    static WindowFn constant() { return {}; }
    static WindowFn gaussian(double center, double width) { return {Kind::gaussian, center, width}; }
    static WindowFn cosine(double center, double halfwidth) { return {Kind::cosine, center, halfwidth}; }

    void validate() const {
        if (kind != Kind::constant && !(width > 0.0)) throw ConfigError("profile width must be positive");
    }

    double operator()(double s) const {
        switch (kind) {
            case Kind::constant:
                return 1.0;
            case Kind::gaussian: {
                const double u = (s - center) / width;
                return std::exp(-0.5 * u * u);
            }
            case Kind::cosine: {
                const double u = (s - center) / width;
                if (std::abs(u) >= 1.0) return 0.0;
                const double c = std::cos(0.5 * pi * u);
                return c * c;
            }
        }
        return 0.0;
    }

    double sup() const { return 1.0; }

    double lipschitz() const {
        switch (kind) {
            case Kind::constant:
                return 0.0;
            case Kind::gaussian:
                return 1.0 / (width * std::sqrt(std::exp(1.0)));
            case Kind::cosine:
                return pi / (2.0 * width);
        }
        return 0.0;
    }

    std::string name() const {
        switch (kind) {
            case Kind::constant:
                return "constant";
            case Kind::gaussian:
                return "gaussian";
            case Kind::cosine:
                return "cosine";
        }
        return "";
    }

    friend bool operator==(const WindowFn&, const WindowFn&) = default;
};

// One x-Fourier component: amplitude * eta_profile(eta) * xi_cutoff(|xi|) e^{2 pi i l.x}.
struct ObservableTerm {
    Mode l{};
    cplx amplitude{1.0, 0.0};
    WindowFn eta = WindowFn::constant();
    std::optional<WindowFn> xi_cutoff;
};

// Symbol a(x, xi, eta) = sum_terms. A nonzero flow_shift s replaces a by a o phi^s,
// phi^s(x, xi) = (x + s xi, xi), which multiplies the l-th component by e^{2 pi i s l.xi}.
struct Observable {
    std::string name;
    std::vector<ObservableTerm> terms;
    double flow_shift = 0.0;

    static Observable one() { return {"one", {ObservableTerm{}}, 0.0}; }

    // amplitude * cos(2 pi l.x) times the given profiles.
    static Observable cosine(Mode l, double amplitude = 1.0, WindowFn eta = WindowFn::constant(),
                             std::optional<WindowFn> xi = std::nullopt) {
        if (l == Mode{}) return {"cosine", {{l, amplitude, eta, xi}}, 0.0};
        return {"cosine", {{l, 0.5 * amplitude, eta, xi}, {-l, 0.5 * amplitude, eta, xi}}, 0.0};
    }

    void validate() const {
        if (terms.empty()) throw ConfigError("observable '" + name + "' has no terms");
        for (const auto& t : terms) {
            t.eta.validate();
            if (t.xi_cutoff) t.xi_cutoff->validate();
        }
    }

    // Value of the l-component for one term at (xi, eta).
    cplx component(const ObservableTerm& t, const Vec2& xi, double eta) const {
        cplx v = t.amplitude * t.eta(eta);
        if (t.xi_cutoff) v *= (*t.xi_cutoff)(std::hypot(xi[0], xi[1]));
        if (flow_shift != 0.0) v *= std::polar(1.0, two_pi * flow_shift * dot(xi, t.l));
        return v;
    }

    Observable shifted_by_flow(double s) const {
        Observable out = *this;
        out.flow_shift += s;
        return out;
    }

    // Keeps only components with l in the given sublattice (the I_Lambda projection).
    Observable filtered(const PrimitiveDirection& dir) const {
        Observable out = *this;
        std::erase_if(out.terms, [&](const ObservableTerm& t) { return !dir.contains(t.l); });
        return out;
    }

    // Real symbol: every term at l has a partner at -l with conjugate amplitude and equal profiles.
    bool is_hermitian(double tol = 1e-14) const {
        for (const auto& t : terms) {
            bool found = false;
            for (const auto& u : terms) {
                if (u.l == -t.l && u.eta == t.eta && u.xi_cutoff == t.xi_cutoff &&
                    std::abs(u.amplitude - std::conj(t.amplitude)) <= tol) {
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
        return true;
    }

    // sum_l sup |a^(l, .)|.
    double sup_bound() const {
        double s = 0.0;
        for (const auto& t : terms) s += std::abs(t.amplitude);
        return s;
    }

    std::int64_t support_radius() const {
        std::int64_t r = 0;
        for (const auto& t : terms) r = std::max({r, std::abs(t.l.x), std::abs(t.l.y)});
        return r;
    }
};

}  // namespace qle
