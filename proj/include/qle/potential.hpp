#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qle/errors.hpp"
#include "qle/fourier_state.hpp"
#include "qle/lattice.hpp"

namespace qle {

// Real trigonometric polynomial V(x) = sum_k V_k e^{2 pi i k.x} with V_{-k} = conj(V_k).
class TrigPotential {
public:
    struct Entry {
        Mode k;
        cplx value;
    };

    TrigPotential() = default;

    // Builds from a coefficient list. Missing partners -k are filled in by conjugation;
    // an explicit partner must agree with conj(V_k) to within tol.
    static TrigPotential from_entries(const std::vector<Entry>& entries, double tol = 1e-12) {
        std::map<Mode, cplx> given;
        for (const auto& e : entries) {
            if (given.contains(e.k)) {
                throw ConfigError("potential: duplicate coefficient for mode (" + std::to_string(e.k.x) + "," +
                                  std::to_string(e.k.y) + ")");
            }
            given[e.k] = e.value;
        }
        TrigPotential v;
        for (const auto& [k, c] : given) {
            if (k == Mode{}) {
                if (std::abs(c.imag()) > tol) throw ConfigError("potential: mean coefficient must be real");
                v.coeffs_[k] = cplx{c.real(), 0.0};
                continue;
            }
            const auto partner = given.find(-k);
            if (partner != given.end() && std::abs(partner->second - std::conj(c)) > tol) {
                throw ConfigError("potential: coefficients at (" + std::to_string(k.x) + "," + std::to_string(k.y) +
                                  ") and its negative are not Hermitian-symmetric");
            }
            v.coeffs_[k] = c;
            v.coeffs_[-k] = std::conj(c);
        }
        v.prune();
        return v;
    }

    static TrigPotential constant(double v0) {
        TrigPotential v;
        if (v0 != 0.0) v.coeffs_[Mode{}] = v0;
        return v;
    }

    // amplitude * cos(2 pi l.x + phase).
    static TrigPotential cosine(Mode l, double amplitude, double phase = 0.0) {
        if (l == Mode{}) return constant(amplitude * std::cos(phase));
        const cplx c = 0.5 * amplitude * std::polar(1.0, phase);
        return from_entries({{l, c}});
    }

    cplx coefficient(Mode k) const {
        const auto it = coeffs_.find(k);
        return it == coeffs_.end() ? cplx{} : it->second;
    }
    const std::map<Mode, cplx>& coefficients() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }

    double mean() const { return coefficient(Mode{}).real(); }

    // Keeps the modes satisfying pred (the I_Lambda projection uses this).
    template <class Pred>
    TrigPotential filtered(Pred&& pred) const {
        TrigPotential out;
        for (const auto& [k, c] : coeffs_)
            if (pred(k)) out.coeffs_[k] = c;
        return out;
    }

    // sum |V_k|: bounds sup |V|.
    double sup_bound() const {
        double s = 0.0;
        for (const auto& [k, c] : coeffs_) s += std::abs(c);
        return s;
    }
    // sum |V_k| over k != 0: bounds sup |V - mean|.
    double oscillation_bound() const { return sup_bound() - std::abs(coefficient(Mode{})); }
    // sum |V_k| |k|: bounds |grad V| / (2 pi).
    double gradient_bound() const {
        double s = 0.0;
        for (const auto& [k, c] : coeffs_) s += std::abs(c) * k.norm();
        return s;
    }
    // Largest |k|_inf in the support.
    std::int64_t support_radius() const {
        std::int64_t r = 0;
        for (const auto& [k, c] : coeffs_) r = std::max({r, std::abs(k.x), std::abs(k.y)});
        return r;
    }

    TrigPotential operator+(const TrigPotential& other) const {
        TrigPotential out = *this;
        for (const auto& [k, c] : other.coeffs_) out.coeffs_[k] += c;
        out.prune();
        return out;
    }
    TrigPotential operator*(double s) const {
        TrigPotential out = *this;
        for (auto& [k, c] : out.coeffs_) c *= s;
        out.prune();
        return out;
    }

    // x -> V(x + shift).
    TrigPotential translated(const Vec2& shift) const {
        TrigPotential out = *this;
        for (auto& [k, c] : out.coeffs_) c *= std::polar(1.0, two_pi * dot(shift, k));
        return out;
    }

    std::vector<Entry> entries() const {
        std::vector<Entry> out;
        for (const auto& [k, c] : coeffs_) out.push_back({k, c});
        return out;
    }

private:
    void prune() {
        std::erase_if(coeffs_, [](const auto& kv) { return kv.second == cplx{}; });
    }

    std::map<Mode, cplx> coeffs_;
};

inline double eval(const TrigPotential& v, const Vec2& x) {
    double s = 0.0;
    for (const auto& [k, c] : v.coefficients()) s += (c * std::polar(1.0, two_pi * dot(x, k))).real();
    return s;
}

// Perturbation law eps(hbar) = c hbar^alpha and critical time tau(hbar) = hbar/eps(hbar).
struct RegimeSpec {
    double c = 1.0;
    double alpha = 1.5;

    double epsilon(double hbar) const { return c * std::pow(hbar, alpha); }
    double critical_time(double hbar) const { return hbar / epsilon(hbar); }

    // hbar^2 << eps << hbar.
    bool in_main_regime() const { return alpha > 1.0 && alpha < 2.0; }
    // hbar <= eps <= 1 (asymptotically).
    bool is_strong() const { return alpha <= 1.0 && alpha >= 0.0; }
    bool is_zero() const { return c == 0.0; }

    void validate() const {
        if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("regime: c must be a finite non-negative number");
        if (!std::isfinite(alpha)) throw ConfigError("regime: alpha must be finite");
    }
};

// V psi computed by exact convolution on the state window.
inline FourierState apply_potential(const TrigPotential& v, const FourierState& psi, double escape_tol = 1e-24) {
    FourierState out(psi.hbar(), psi.window());
    const auto in = psi.coefficients();
    auto dst = out.coefficients();
    const auto& w = psi.window();
    double escaped = 0.0;
    Mode worst{};
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == cplx{}) continue;
        const Mode n = w.mode_at(i);
        for (const auto& [l, c] : v.coefficients()) {
            const auto j = w.index(n + l);
            if (j) {
                dst[*j] += c * in[i];
            } else {
                escaped += std::norm(c * in[i]);
                worst = n + l;
            }
        }
    }
    if (escaped > escape_tol) {
        throw TruncationError("apply_potential: V-shifted modes leave the window (mass " + std::to_string(escaped) +
                              ", e.g. mode (" + std::to_string(worst.x) + "," + std::to_string(worst.y) +
                              ")); required window " + std::to_string(psi.required_size_for(worst)));
    }
    return out;
}

struct Moments {
    double mean = 0.0;    // <psi, V psi>
    double second = 0.0;  // <psi, V^2 psi>
    double variance() const { return second - mean * mean; }
};

inline Moments moments(const TrigPotential& v, const FourierState& psi) {
    const FourierState vpsi = apply_potential(v, psi);
    return {inner(psi, vpsi).real(), vpsi.norm2()};
}

namespace detail {

// (e^{i w t} - 1)/(i w), continuous at w = 0 with value t.
inline cplx phase_kernel(double w, double t) {
    const double z = w * t;
    if (z == 0.0) return t;
    // e^{iz} - 1 without cancellation at small z.
    const double h = std::sin(0.5 * z);
    return cplx{-2.0 * h * h, std::sin(z)} / cplx{0.0, w};
}

}  // namespace detail

// int_0^t I_Lambda(V)(x + s eta v/L) ds, in closed form mode by mode.
inline double phase_integral(const TrigPotential& v, const PrimitiveDirection& dir, const Vec2& x, double eta,
                             double t) {
    cplx s{};
    const double len = dir.length();
    for (const auto& [k, c] : v.coefficients()) {
        if (!dir.contains(k)) continue;
        const auto j = static_cast<double>(dir.multiple_of(k));
        s += c * std::polar(1.0, two_pi * dot(x, k)) * detail::phase_kernel(two_pi * eta * j * len, t);
    }
    return s.real();
}

// int_0^t V(x + s*velocity) ds for an arbitrary velocity (the geodesic-flow average used
// by the strong-perturbation limits).
inline double flow_integral(const TrigPotential& v, const Vec2& x, const Vec2& velocity, double t) {
    cplx s{};
    for (const auto& [k, c] : v.coefficients())
        s += c * std::polar(1.0, two_pi * dot(x, k)) * detail::phase_kernel(two_pi * dot(velocity, k), t);
    return s.real();
}

}  // namespace qle
