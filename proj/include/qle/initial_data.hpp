#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "qle/errors.hpp"
#include "qle/fourier_state.hpp"
#include "qle/lattice.hpp"
#include "qle/states.hpp"

namespace qle {

// k(hbar) = n v0 + m v0^perp with n = round(1/(hbar L0)) and m = round(m0 hbar^{-beta}).
struct PlaneWaveRational {
    PrimitiveDirection base{0, 1};
    double m0 = 0.0;
    double beta = 0.0;

    std::int64_t m_of(double hbar) const { return std::llround(m0 * std::pow(hbar, -beta)); }
    std::int64_t n_of(double hbar) const { return std::max<std::int64_t>(1, std::llround(1.0 / (hbar * base.length()))); }
    Mode realize(double hbar) const { return n_of(hbar) * base.generator() + m_of(hbar) * base.perp(); }
};

// Consecutive Fibonacci pairs (F_j, F_{j+1}); the direction tends to (1, golden ratio).
struct PlaneWaveGolden {
    static std::vector<Mode> pairs(double max_norm) {
        std::vector<Mode> out;
        std::int64_t a = 1, b = 1;
        while (Mode{a, b}.norm() <= max_norm) {
            out.push_back({a, b});
            const auto c = a + b;
            a = b;
            b = c;
        }
        return out;
    }
    // The pair whose length is closest to 1/hbar.
    Mode realize(double hbar) const {
        const double target = 1.0 / hbar;
        Mode best{1, 1};
        std::int64_t a = 1, b = 1;
        while (true) {
            const Mode k{a, b};
            if (std::abs(k.norm() - target) < std::abs(best.norm() - target)) best = k;
            if (k.norm() > target) break;
            const auto c = a + b;
            a = b;
            b = c;
        }
        return best;
    }
};

// An explicit lattice-vector sequence; the rung at hbar uses the k with 1/|k| closest to hbar.
struct PlaneWaveModes {
    std::vector<Mode> ks;

    Mode realize(double hbar) const {
        if (ks.empty()) throw ConfigError("plane-wave sequence is empty");
        return *std::min_element(ks.begin(), ks.end(), [&](Mode a, Mode b) {
            return std::abs(1.0 / a.norm() - hbar) < std::abs(1.0 / b.norm() - hbar);
        });
    }
    std::vector<double> ladder() const {
        std::vector<double> out;
        for (const auto& k : ks) out.push_back(1.0 / k.norm());
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    }
};

struct CoherentData {
    CoherentSpec spec;
};

using InitialComponent = std::variant<PlaneWaveRational, PlaneWaveGolden, PlaneWaveModes, CoherentData>;

inline bool is_plane_wave(const InitialComponent& c) { return !std::holds_alternative<CoherentData>(c); }

inline Mode realize_mode(const InitialComponent& c, double hbar) {
    return std::visit(
        [&](const auto& f) -> Mode {
            if constexpr (std::is_same_v<std::decay_t<decltype(f)>, CoherentData>)
                throw Error("realize_mode: coherent component has no single mode");
            else
                return f.realize(hbar);
        },
        c);
}

// A single component (weights {1}) or a superposition sum_j w_j psi_j, renormalized.
struct InitialDataSpec {
    std::vector<InitialComponent> components;
    std::vector<double> weights;

    static InitialDataSpec single(InitialComponent c) { return {{std::move(c)}, {1.0}}; }

    void validate() const {
        if (components.empty()) throw ConfigError("initial data: no components");
        if (weights.size() != components.size()) throw ConfigError("initial data: one weight per component required");
        for (const auto& c : components)
            if (const auto* coh = std::get_if<CoherentData>(&c)) coh->spec.validate();
    }

    bool superposition() const { return components.size() > 1; }

    // A lone plane wave runs at hbar = 1/|k|; everything else at the nominal hbar.
    double realized_hbar(double hbar) const {
        if (!superposition() && is_plane_wave(components.front()))
            return 1.0 / realize_mode(components.front(), hbar).norm();
        return hbar;
    }
};

struct BuiltState {
    FourierState state;
    std::vector<Mode> modes;          // realized plane-wave modes, one per plane-wave component
    double prenormalization_norm = 1.0;
};

// Builds the initial state at nominal hbar on a window holding every component plus
// `margin` modes of room for the dynamics.
inline BuiltState build_state(const InitialDataSpec& spec, double hbar, double margin, int min_size = 0) {
    spec.validate();
    const double h = spec.realized_hbar(hbar);
    std::vector<Vec2> centres;
    std::vector<double> radii;
    std::vector<Mode> modes;
    for (const auto& c : spec.components) {
        if (const auto* coh = std::get_if<CoherentData>(&c)) {
            centres.push_back(coh->spec.centre(h));
            radii.push_back(coh->spec.capture_radius(h));
        } else {
            const Mode k = realize_mode(c, hbar);
            modes.push_back(k);
            centres.push_back({static_cast<double>(k.x), static_cast<double>(k.y)});
            radii.push_back(0.0);
        }
    }
    Vec2 mid{0.0, 0.0};
    for (const auto& c : centres) {
        mid[0] += c[0] / static_cast<double>(centres.size());
        mid[1] += c[1] / static_cast<double>(centres.size());
    }
    const Mode centre{std::llround(mid[0]), std::llround(mid[1])};
    double reach = 0.0;
    for (std::size_t i = 0; i < centres.size(); ++i) {
        reach = std::max(reach, std::hypot(centres[i][0] - static_cast<double>(centre.x),
                                           centres[i][1] - static_cast<double>(centre.y)) +
                                    radii[i]);
    }
    const int size = std::max(min_size, fft_friendly_size(static_cast<int>(std::ceil((reach + margin) / 0.45)) + 2));
    const Window w{fft_friendly_size(size), centre};

    std::vector<FourierState> parts;
    for (const auto& c : spec.components) {
        if (const auto* coh = std::get_if<CoherentData>(&c))
            parts.push_back(coherent_state(coh->spec, h, w));
        else
            parts.push_back(plane_wave(realize_mode(c, hbar), w));
    }
    if (parts.size() == 1) {
        FourierState s = std::move(parts.front());
        if (s.hbar() != h) {
            FourierState t(h, w);
            std::copy(s.coefficients().begin(), s.coefficients().end(), t.coefficients().begin());
            t.set_prenormalization_norm(s.prenormalization_norm());
            s = std::move(t);
        }
        const double pre = s.prenormalization_norm();
        return {std::move(s), modes, pre};
    }
    // Plane waves built at 1/|k|; re-tag them with the shared hbar.
    std::vector<FourierState> tagged;
    for (auto& p : parts) {
        FourierState t(h, w);
        std::copy(p.coefficients().begin(), p.coefficients().end(), t.coefficients().begin());
        tagged.push_back(std::move(t));
    }
    std::vector<cplx> wts(spec.weights.begin(), spec.weights.end());
    FourierState s = superpose(tagged, wts);
    const double pre = s.prenormalization_norm();
    return {std::move(s), modes, pre};
}

}  // namespace qle
