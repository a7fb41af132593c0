#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <sstream>
#include <vector>

#include "qle/errors.hpp"
#include "qle/fft.hpp"
#include "qle/fourier_state.hpp"
#include "qle/potential.hpp"

namespace qle {

// Kinetic energy of mode k: hbar (2 pi |k|)^2 / 2.
inline double kinetic_energy(double hbar, Mode k) {
    return 0.5 * hbar * two_pi * two_pi * static_cast<double>(k.norm2());
}

// Exact free propagation: mode k picks up e^{-i t hbar (2 pi |k|)^2 / 2}.
inline FourierState free_evolve(const FourierState& psi, double t) {
    FourierState out = psi;
    auto c = out.coefficients();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == cplx{}) continue;
        c[i] *= std::polar(1.0, -t * kinetic_energy(psi.hbar(), psi.mode_at(i)));
    }
    return out;
}

namespace detail {

// V sampled at x_j = j/N; row index is the first coordinate.
inline std::vector<double> sample_potential(const TrigPotential& v, int n) {
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (const auto& [k, c] : v.coefficients()) {
        std::vector<cplx> ex(n), ey(n);
        for (int j = 0; j < n; ++j) {
            ex[j] = std::polar(1.0, two_pi * static_cast<double>((k.x * j) % n) / n);
            ey[j] = std::polar(1.0, two_pi * static_cast<double>((k.y * j) % n) / n);
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) out[static_cast<std::size_t>(a) * n + b] += (c * ex[a] * ey[b]).real();
    }
    return out;
}

inline void check_aliasing(const FourierState& psi, const char* where) {
    const double shell = psi.shell_mass(0.45);
    if (shell > 1e-10) {
        std::ostringstream msg;
        msg << where << ": mass " << shell << " reached the outer shell of the " << psi.size() << " window";
        throw WindowTooSmall(msg.str(), 2 * psi.size());
    }
}

}  // namespace detail

// Strang splitting with n steps of length t/n:
// e^{-i eps dt V/(2 hbar)} e^{-i dt K/hbar} e^{-i eps dt V/(2 hbar)} per step,
// with interior half steps merged. The buffer `fft` must match the window size.
inline FourierState perturbed_evolve_steps(const FourierState& psi, const TrigPotential& v, double epsilon, double t,
                                           long steps, Fft2d& fft) {
    if (steps < 1) throw Error("perturbed_evolve: need at least one step");
    if (fft.size() != psi.size()) throw Error("perturbed_evolve: transform size does not match window");
    const int n = psi.size();
    const double hbar = psi.hbar();
    const double dt = t / static_cast<double>(steps);
    const auto count = psi.window().count();

    std::vector<cplx> kin(count);
    for (std::size_t i = 0; i < count; ++i) kin[i] = std::polar(1.0, -dt * kinetic_energy(hbar, psi.mode_at(i)));

    const auto vx = detail::sample_potential(v, n);
    std::vector<cplx> half(count), full(count);
    for (std::size_t i = 0; i < count; ++i) {
        half[i] = std::polar(1.0, -0.5 * epsilon * dt * vx[i] / hbar);
        full[i] = half[i] * half[i];
    }

    auto buf = fft.data();
    const auto src = psi.coefficients();
    std::copy(src.begin(), src.end(), buf.begin());
    const double scale = 1.0 / static_cast<double>(count);

    // The carrier e^{2 pi i (center - N/2).x_j} cancels between the two transforms.
    auto potential_step = [&](const std::vector<cplx>& phase) {
        fft.to_position();
        for (std::size_t i = 0; i < count; ++i) buf[i] *= phase[i] * scale;
        fft.to_fourier();
    };

    potential_step(half);
    for (long s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i < count; ++i) buf[i] *= kin[i];
        potential_step(s + 1 < steps ? full : half);
    }

    FourierState out(hbar, psi.window());
    auto dst = out.coefficients();
    std::copy(buf.begin(), buf.end(), dst.begin());
    out.set_prenormalization_norm(psi.prenormalization_norm());
    detail::check_aliasing(out, "perturbed_evolve");
    return out;
}

// Physical-time perturbed propagation with a fixed step; dt must divide t.
inline FourierState perturbed_evolve(const FourierState& psi, const TrigPotential& v, double epsilon, double t,
                                     double dt) {
    if (!(dt > 0.0)) throw Error("perturbed_evolve: dt must be positive");
    if (t == 0.0) return psi;
    const double ratio = std::abs(t) / dt;
    const long steps = std::max(1L, std::lround(ratio));
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
        throw Error("perturbed_evolve: dt does not divide t");
    Fft2d fft(psi.size());
    return perturbed_evolve_steps(psi, v, epsilon, t, steps, fft);
}

// Largest kinetic-phase rate between two modes coupled by V, over modes carrying mass.
inline double coupling_frequency(const FourierState& psi, const TrigPotential& v) {
    double w = 0.0;
    const auto c = psi.coefficients();
    const double total = psi.norm2();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::norm(c[i]) <= 1e-14 * total) continue;
        const Mode k = psi.mode_at(i);
        const double e = kinetic_energy(psi.hbar(), k);
        for (const auto& [l, vl] : v.coefficients()) w = std::max(w, std::abs(kinetic_energy(psi.hbar(), k + l) - e));
    }
    return w;
}

struct EchoSample {
    double hbar = 0.0;
    double epsilon = 0.0;
    double t_rescaled = 0.0;
    cplx overlap{1.0, 0.0};
    double echo = 1.0;
    double dt_used = 0.0;    // step of the accepted level
    double dt_coarse = 0.0;  // step of the level it was compared with
    long steps = 0;
    double norm_drift = 0.0;
    int window = 0;
};

struct AdaptiveRun {
    FourierState state;
    double dt_used = 0.0;
    double dt_coarse = 0.0;
    long steps = 0;
};

// Refines the step count by halving dt until `measure` changes by less than tol between
// consecutive levels. Starts from a step resolving both the coupled kinetic phases and the
// potential phase.
inline AdaptiveRun adaptive_perturbed(const FourierState& psi, const TrigPotential& v, double epsilon, double t,
                                      double tol, const std::function<cplx(const FourierState&)>& measure,
                                      int max_halvings = 12) {
    const double rate = coupling_frequency(psi, v);
    const double vphase = epsilon * std::abs(t) * v.oscillation_bound() / psi.hbar();
    auto steps = static_cast<long>(std::ceil(std::max({1.0, rate * std::abs(t), vphase / 0.5})));
    Fft2d fft(psi.size());
    FourierState prev = perturbed_evolve_steps(psi, v, epsilon, t, steps, fft);
    cplx prev_value = measure(prev);
    for (int h = 1; h <= max_halvings; ++h) {
        const long next_steps = 2 * steps;
        FourierState next = perturbed_evolve_steps(psi, v, epsilon, t, next_steps, fft);
        const cplx value = measure(next);
        if (std::abs(value - prev_value) < tol)
            return {std::move(next), t / static_cast<double>(next_steps), t / static_cast<double>(steps), next_steps};
        prev = std::move(next);
        prev_value = value;
        steps = next_steps;
    }
    std::ostringstream msg;
    msg << "step refinement did not settle after " << max_halvings << " halvings (hbar " << psi.hbar() << ", t "
        << t << ", last dt " << t / static_cast<double>(steps) << ")";
    throw ConvergenceFailure(msg.str());
}

// Echo |<u^eps(t tau), u(t tau)>|^2 at rescaled time t.
inline EchoSample echo(const FourierState& psi, const TrigPotential& v, const RegimeSpec& regime, double t_rescaled,
                       double dt_control = 1e-4) {
    EchoSample s;
    s.hbar = psi.hbar();
    s.epsilon = regime.epsilon(psi.hbar());
    s.t_rescaled = t_rescaled;
    s.window = psi.size();
    const double norm0 = psi.norm();
    // Both equations coincide; tau is infinite when eps = 0.
    if (t_rescaled == 0.0 || s.epsilon == 0.0 || v.empty()) {
        s.overlap = psi.norm2();
        s.echo = std::norm(s.overlap);
        return s;
    }
    const double t = t_rescaled * regime.critical_time(s.hbar);
    const FourierState u = free_evolve(psi, t);
    auto run = adaptive_perturbed(psi, v, s.epsilon, t, dt_control,
                                  [&](const FourierState& w) { return inner(w, u); });
    s.overlap = inner(run.state, u);
    s.echo = std::norm(s.overlap);
    s.dt_used = run.dt_used;
    s.dt_coarse = run.dt_coarse;
    s.steps = run.steps;
    s.norm_drift = std::abs(run.state.norm() - norm0);
    return s;
}

// 1 - (eps t / hbar)^2 Var_psi(V).
inline double peres_quadratic(const FourierState& psi, const TrigPotential& v, const RegimeSpec& regime,
                              double t_physical) {
    const double g = regime.epsilon(psi.hbar()) * t_physical / psi.hbar();
    return 1.0 - g * g * moments(v, psi).variance();
}

}  // namespace qle
