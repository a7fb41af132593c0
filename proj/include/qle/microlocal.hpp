#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>

#include "qle/errors.hpp"
#include "qle/fourier_state.hpp"
#include "qle/lattice.hpp"
#include "qle/observable.hpp"
#include "qle/potential.hpp"
#include "qle/propagator.hpp"

namespace qle {

// Which Fourier mode feeds the symbol: the mode acted on (input, exact for the standard
// quantization) or the mode produced (output).
enum class Convention { input_mode, output_mode };

inline std::string to_string(Convention c) { return c == Convention::input_mode ? "input" : "output"; }

inline Convention parse_convention(const std::string& s) {
    if (s == "input" || s == "input-mode" || s == "input_mode") return Convention::input_mode;
    if (s == "output" || s == "output-mode" || s == "output_mode") return Convention::output_mode;
    throw ConfigError("convention must be 'input' or 'output', got '" + s + "'");
}

// Rescaled frame eta = 2 pi (hbar^2/eps) H_Lambda(mode) of a two-microlocal pairing.
struct TwoMicrolocalFrame {
    PrimitiveDirection dir;
    double scale;  // hbar^2 / eps

    double eta(Mode k) const { return two_pi * scale * h_lambda(dir, k); }
};

namespace detail {

inline cplx symbol_at(const Observable& a, const ObservableTerm& t, double hbar, Mode k,
                      const std::optional<TwoMicrolocalFrame>& frame) {
    const Vec2 xi{two_pi * hbar * static_cast<double>(k.x), two_pi * hbar * static_cast<double>(k.y)};
    return a.component(t, xi, frame ? frame->eta(k) : 0.0);
}

}  // namespace detail

// Op_hbar(a) psi with output coefficient sum_n a^(m - n, .) psi_n at m. Without a frame the
// eta-profiles are read at eta = 0.
inline FourierState op_apply(const Observable& a, const FourierState& psi,
                             const std::optional<TwoMicrolocalFrame>& frame = std::nullopt,
                             Convention convention = Convention::input_mode, double escape_tol = 1e-24) {
    FourierState out(psi.hbar(), psi.window());
    const auto in = psi.coefficients();
    auto dst = out.coefficients();
    const auto& w = psi.window();
    double escaped = 0.0;
    Mode worst{};
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == cplx{}) continue;
        const Mode n = w.mode_at(i);
        for (const auto& t : a.terms) {
            const Mode m = n + t.l;
            const cplx s = detail::symbol_at(a, t, psi.hbar(), convention == Convention::input_mode ? n : m, frame);
            const auto j = w.index(m);
            if (j) {
                dst[*j] += s * in[i];
            } else {
                escaped += std::norm(s * in[i]);
                worst = m;
            }
        }
    }
    if (escaped > escape_tol) {
        throw TruncationError("op_apply: observable support leaves the window (mass " + std::to_string(escaped) +
                              "); required window " + std::to_string(psi.required_size_for(worst)));
    }
    return out;
}

struct TwoMicrolocalSample {
    PrimitiveDirection dir{0, 1};
    double hbar = 0.0;
    cplx value{};
    Convention convention = Convention::input_mode;
    double bound = 0.0;  // Schur bound |value| <= bound
};

// ||psi1|| ||psi2|| sum_l sup |a^(l, .)|: the Schur bound on |<psi1, Op(a) psi2>|.
inline double calderon_vaillancourt_bound(const Observable& a, const FourierState& psi1, const FourierState& psi2) {
    return psi1.norm() * psi2.norm() * a.sup_bound();
}

// <psi1, Op_hbar(I_Lambda(a)(x, hbar H_Lambda(xi)/eps)) psi2>.
inline TwoMicrolocalSample two_microlocal(const FourierState& psi1, const FourierState& psi2,
                                          const PrimitiveDirection& dir, const Observable& a,
                                          const RegimeSpec& regime, Convention convention = Convention::input_mode) {
    require_same_window(psi1, psi2, "two_microlocal");
    if (std::abs(psi1.hbar() - psi2.hbar()) > 1e-14 * psi1.hbar())
        throw Error("two_microlocal: states carry different hbar");
    const double hbar = psi1.hbar();
    const double eps = regime.epsilon(hbar);
    if (!(eps > 0.0)) throw RegimeError("two_microlocal: needs a nonzero perturbation size");
    const TwoMicrolocalFrame frame{dir, hbar * hbar / eps};
    const Observable f = a.filtered(dir);

    const auto c1 = psi1.coefficients();
    const auto c2 = psi2.coefficients();
    const auto& w = psi1.window();
    cplx value{};
    for (std::size_t i = 0; i < c2.size(); ++i) {
        if (c2[i] == cplx{}) continue;
        const Mode n = w.mode_at(i);
        for (const auto& t : f.terms) {
            const Mode m = n + t.l;
            const auto j = w.index(m);
            if (!j || c1[*j] == cplx{}) continue;
            value += std::conj(c1[*j]) * c2[i] *
                     detail::symbol_at(f, t, hbar, convention == Convention::input_mode ? n : m, frame);
        }
    }
    return {dir, hbar, value, convention, calderon_vaillancourt_bound(f, psi1, psi2)};
}

// Bound on |value(input) - value(output)|: moving the symbol argument from n to n + l changes
// eta by 2 pi (hbar^2/eps) |H_Lambda(l)| and xi by 2 pi hbar |l|.
inline double convention_gap_bound(const FourierState& psi1, const FourierState& psi2, const PrimitiveDirection& dir,
                                   const Observable& a, const RegimeSpec& regime) {
    const double hbar = psi1.hbar();
    const double scale = hbar * hbar / regime.epsilon(hbar);
    double s = 0.0;
    for (const auto& t : a.filtered(dir).terms) {
        const double lip_xi =
            (t.xi_cutoff ? t.xi_cutoff->lipschitz() : 0.0) + two_pi * std::abs(a.flow_shift) * t.l.norm();
        s += std::abs(t.amplitude) * (two_pi * scale * std::abs(h_lambda(dir, t.l)) * t.eta.lipschitz() +
                                      two_pi * hbar * t.l.norm() * lip_xi);
    }
    return psi1.norm() * psi2.norm() * s;
}

struct FidelitySample {
    double hbar = 0.0;
    double t_rescaled = 0.0;
    cplx value{};
    double dt_used = 0.0;
    double dt_coarse = 0.0;
};

// <u1^eps(t tau), Op_hbar(a) u2(t tau)> with u1^eps perturbed and u2 free. For a = 1 and
// psi1 = psi2 this is the echo overlap.
inline FidelitySample fidelity_functional(const FourierState& psi1, const FourierState& psi2, const TrigPotential& v,
                                          const RegimeSpec& regime, double t_rescaled, const Observable& a,
                                          double dt_control = 1e-4) {
    require_same_window(psi1, psi2, "fidelity_functional");
    FidelitySample s;
    s.hbar = psi1.hbar();
    s.t_rescaled = t_rescaled;
    const double eps = regime.epsilon(s.hbar);
    if (t_rescaled == 0.0 || eps == 0.0 || v.empty()) {
        const double t = (t_rescaled == 0.0 || eps == 0.0) ? 0.0 : t_rescaled * regime.critical_time(s.hbar);
        s.value = inner(free_evolve(psi1, t), op_apply(a, free_evolve(psi2, t)));
        return s;
    }
    const double t = t_rescaled * regime.critical_time(s.hbar);
    const FourierState target = op_apply(a, free_evolve(psi2, t));
    auto run = adaptive_perturbed(psi1, v, eps, t, dt_control,
                                  [&](const FourierState& w) { return inner(w, target); });
    s.value = inner(run.state, target);
    s.dt_used = run.dt_used;
    s.dt_coarse = run.dt_coarse;
    return s;
}

}  // namespace qle
