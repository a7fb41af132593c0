#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "qle/errors.hpp"
#include "qle/fourier_state.hpp"
#include "qle/lattice.hpp"

namespace qle {

// Smallest even n' >= n whose prime factors are 2, 3 and 5.
inline int fft_friendly_size(int n) {
    n = std::max(n, 2);
    for (int m = n + (n % 2);; m += 2) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

// Window of the given size whose interior (the 0.45 shell) holds a disc of radius r around c.
inline Window window_around(Vec2 c, double radius) {
    const Mode centre{std::llround(c[0]), std::llround(c[1])};
    const double off = std::hypot(c[0] - static_cast<double>(centre.x), c[1] - static_cast<double>(centre.y));
    return {fft_friendly_size(static_cast<int>(std::ceil((radius + off) / 0.45)) + 2), centre};
}

// One-dimensional coherent-state profile; the two-dimensional profile is the product
// phi(x) = f(x1) f(x2) with ||f||_2 = 1.
struct Profile {
    enum class Kind { gaussian, bump };
    Kind kind = Kind::gaussian;
    // Gaussian: f(s) = (pi w^2)^{-1/4} e^{-s^2/(2 w^2)}. Bump: support (-w/2, w/2), w <= 1.
    double width = 1.0;

    static Profile gaussian(double w = 1.0) { return {Kind::gaussian, w}; }
    static Profile bump(double w = 1.0) { return {Kind::bump, w}; }

    std::string name() const { return kind == Kind::gaussian ? "gaussian" : "bump"; }

    void validate() const {
        if (!(width > 0.0)) throw ConfigError("profile: width must be positive");
        if (kind == Kind::bump && width > 1.0) throw ConfigError("profile: bump width must be <= 1");
    }

    // f(s).
    double value(double s) const {
        if (kind == Kind::gaussian)
            return std::pow(pi * width * width, -0.25) * std::exp(-s * s / (2.0 * width * width));
        return bump_normalization() * raw_bump(s);
    }

    // f^(xi) = int f(s) e^{-2 pi i s xi} ds (real and even for both kinds).
    double fourier(double xi) const {
        if (kind == Kind::gaussian) {
            return std::pow(pi * width * width, -0.25) * width * std::sqrt(two_pi) *
                   std::exp(-2.0 * pi * pi * width * width * xi * xi);
        }
        // Trapezoid on [0, w/2]; the integrand is flat to all orders at both ends.
        constexpr int nodes = 8192;
        const double h = 0.5 * width / nodes;
        double s = 0.0;
        for (int i = 1; i < nodes; ++i) {
            const double x = i * h;
            s += raw_bump(x) * std::cos(two_pi * x * xi);
        }
        s += 0.5 * raw_bump(0.0);
        return 2.0 * h * s * bump_normalization();
    }

    // Radius rho in frequency space with int_{|xi| > rho} |phi^(xi)|^2 dxi < tol (2D).
    double capture_radius(double tol = 1e-12) const {
        if (kind == Kind::gaussian) return std::sqrt(-std::log(tol)) / (two_pi * width);
        return bump_capture_radius(width, tol);
    }

private:
    double raw_bump(double s) const {
        const double u = 2.0 * s / width;
        if (std::abs(u) >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - u * u));
    }

    double bump_normalization() const {
        // int raw^2 ds over (-w/2, w/2) by the same flat-endpoint trapezoid.
        constexpr int nodes = 4096;
        const double h = 0.5 * width / nodes;
        double s = 0.5 * raw_bump(0.0) * raw_bump(0.0);
        for (int i = 1; i < nodes; ++i) s += raw_bump(i * h) * raw_bump(i * h);
        return 1.0 / std::sqrt(2.0 * h * s);
    }

    static double bump_capture_radius(double width, double tol) {
        static std::mutex mu;
        static std::map<std::pair<double, double>, double> cache;
        std::lock_guard lock(mu);
        const auto key = std::make_pair(width, tol);
        if (auto it = cache.find(key); it != cache.end()) return it->second;

        const Profile p = bump(width);
        const double step = 0.05 / width;
        const double top = 400.0 / width;
        std::vector<double> dens;
        for (double xi = 0.0; xi <= top; xi += step) dens.push_back(std::pow(p.fourier(xi), 2));
        // 1D tails by reverse accumulation; 2D tail <= 2 * T1(rho/sqrt 2).
        std::vector<double> tail(dens.size() + 1, 0.0);
        for (std::size_t i = dens.size(); i-- > 0;) tail[i] = tail[i + 1] + 2.0 * step * dens[i];
        double rho = top * std::sqrt(2.0);
        for (std::size_t i = 0; i < dens.size(); ++i) {
            if (2.0 * tail[i] < tol) {
                rho = static_cast<double>(i) * step * std::sqrt(2.0);
                break;
            }
        }
        cache[key] = rho;
        return rho;
    }
};

struct CoherentSpec {
    Vec2 x0{0.0, 0.0};
    Vec2 xi0{0.0, 0.5};
    Profile profile = Profile::gaussian();

    void validate() const {
        if (xi0[0] == 0.0 && xi0[1] == 0.0) throw ConfigError("coherent state: xi0 must be nonzero");
        profile.validate();
    }

    // Radius in modes around xi0/hbar that carries all but `tol` of the mass.
    double capture_radius(double hbar, double tol = 1e-12) const {
        return profile.capture_radius(tol) / std::sqrt(hbar);
    }

    Vec2 centre(double hbar) const { return {xi0[0] / hbar, xi0[1] / hbar}; }
};

// e_k with hbar = 1/|k|.
inline FourierState plane_wave(Mode k, Window window) {
    if (k.norm2() < 1) throw Error("plane_wave: |k| must be at least 1");
    FourierState psi(1.0 / k.norm(), window);
    if (!window.contains(k)) throw WindowTooSmall("plane_wave: mode outside window", psi.required_size_for(k));
    psi.at(k) = 1.0;
    return psi;
}
inline FourierState plane_wave(Mode k, int window_size) { return plane_wave(k, Window::centered(window_size)); }

// Window sizing used when the caller does not pick one: the state's capture disc plus
// `margin` modes.
inline Window coherent_window(const CoherentSpec& spec, double hbar, double margin = 0.0) {
    return window_around(spec.centre(hbar), spec.capture_radius(hbar) + margin);
}

// Periodized coherent state, built from
// psi_k = hbar^{1/2} e^{-2 pi i (k - xi0/hbar).x0} phi^(hbar^{1/2}(k - xi0/hbar)),
// then renormalized; the norm before renormalization is kept on the state.
inline FourierState coherent_state(const CoherentSpec& spec, double hbar, Window window) {
    spec.validate();
    if (!(hbar > 0.0)) throw Error("coherent_state: hbar must be positive");
    const Vec2 c = spec.centre(hbar);
    const double needed = std::hypot(c[0] - static_cast<double>(window.center.x),
                                     c[1] - static_cast<double>(window.center.y)) +
                          spec.capture_radius(hbar);
    if (needed > 0.45 * window.size) {
        throw WindowTooSmall("coherent_state: window does not capture the packet",
                             fft_friendly_size(static_cast<int>(std::ceil(needed / 0.45)) + 2));
    }
    FourierState psi(hbar, window);
    const int n = window.size;
    const auto h = static_cast<std::int64_t>(n / 2);
    const double sq = std::sqrt(hbar);
    // Separable profile: tabulate each axis once.
    std::vector<cplx> ax(n), ay(n);
    for (int i = 0; i < n; ++i) {
        const double qx = static_cast<double>(window.center.x - h + i) - c[0];
        const double qy = static_cast<double>(window.center.y - h + i) - c[1];
        ax[i] = std::polar(spec.profile.fourier(sq * qx), -two_pi * qx * spec.x0[0]);
        ay[i] = std::polar(spec.profile.fourier(sq * qy), -two_pi * qy * spec.x0[1]);
    }
    auto out = psi.coefficients();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<std::size_t>(i) * n + j] = sq * ax[i] * ay[j];
    psi.normalize();
    return psi;
}

// Weighted sum of states sharing hbar and window, renormalized.
inline FourierState superpose(const std::vector<FourierState>& states, const std::vector<cplx>& weights) {
    if (states.empty() || states.size() != weights.size())
        throw Error("superpose: need matching non-empty state and weight lists");
    const auto& first = states.front();
    FourierState out(first.hbar(), first.window());
    auto dst = out.coefficients();
    for (std::size_t s = 0; s < states.size(); ++s) {
        if (std::abs(states[s].hbar() - first.hbar()) > 1e-14 * first.hbar())
            throw Error("superpose: states carry different hbar");
        require_same_window(states[s], first, "superpose");
        const auto src = states[s].coefficients();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weights[s] * src[i];
    }
    out.normalize();
    return out;
}

struct FrequencyMasses {
    double low = 0.0;   // mass on hbar^2 (2 pi |k|)^2 <= delta
    double high = 0.0;  // mass on hbar^2 (2 pi |k|)^2 >= R

    bool localized(double tol = 1e-6) const { return low <= tol && high <= tol; }
};

inline FrequencyMasses frequency_localization(const FourierState& psi, double delta, double big_r) {
    FrequencyMasses m;
    const auto c = psi.coefficients();
    const double h2 = psi.hbar() * psi.hbar();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double e = h2 * two_pi * two_pi * static_cast<double>(psi.mode_at(i).norm2());
        const double p = std::norm(c[i]);
        if (e <= delta) m.low += p;
        if (e >= big_r) m.high += p;
    }
    return m;
}

}  // namespace qle
