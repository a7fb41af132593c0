#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qle/errors.hpp"

namespace qle {

// An integer lattice vector of Z^2, used both for Fourier modes and lattice generators.
struct Mode {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend constexpr auto operator<=>(const Mode&, const Mode&) = default;
    friend constexpr Mode operator+(Mode a, Mode b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Mode operator-(Mode a, Mode b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Mode operator-(Mode a) { return {-a.x, -a.y}; }
    friend constexpr Mode operator*(std::int64_t s, Mode a) { return {s * a.x, s * a.y}; }

    constexpr std::int64_t norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(static_cast<double>(norm2())); }
};

constexpr std::int64_t dot(Mode a, Mode b) { return a.x * b.x + a.y * b.y; }
constexpr std::int64_t cross(Mode a, Mode b) { return a.x * b.y - a.y * b.x; }

// A point of R^2 (positions on the torus, frequencies).
using Vec2 = std::array<double, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double dot(const Vec2& a, Mode b) {
    return a[0] * static_cast<double>(b.x) + a[1] * static_cast<double>(b.y);
}

// Primitive rank-one sublattice Z*v of Z^2, stored through its canonical generator
// v = (p, q): p > 0, or p == 0 and q == 1.
class PrimitiveDirection {
public:
    // Canonical generator of the sublattice spanned by (p, q); (p, q) must be primitive.
    PrimitiveDirection(std::int64_t p, std::int64_t q) {
        if (p == 0 && q == 0) throw Error("primitive direction: zero vector");
        if (std::gcd(std::abs(p), std::abs(q)) != 1)
            throw Error("primitive direction: (" + std::to_string(p) + "," + std::to_string(q) +
                        ") is not primitive");
        if (p < 0 || (p == 0 && q < 0)) {
            p = -p;
            q = -q;
        }
        v_ = {p, q};
    }

    // Sublattice spanned by an arbitrary nonzero lattice vector.
    static PrimitiveDirection spanned_by(Mode k) {
        if (k.x == 0 && k.y == 0) throw Error("primitive direction: zero vector");
        const auto g = std::gcd(std::abs(k.x), std::abs(k.y));
        return {k.x / g, k.y / g};
    }

    std::int64_t p() const { return v_.x; }
    std::int64_t q() const { return v_.y; }
    Mode generator() const { return v_; }
    Mode perp() const { return {-v_.y, v_.x}; }
    double length() const { return v_.norm(); }
    double angle() const { return std::atan2(static_cast<double>(v_.y), static_cast<double>(v_.x)); }

    // The sublattice orthogonal to this one.
    PrimitiveDirection orthogonal() const { return spanned_by(perp()); }

    bool contains(Mode k) const { return cross(k, v_) == 0; }

    // j such that k = j*v; only meaningful when contains(k).
    std::int64_t multiple_of(Mode k) const { return dot(k, v_) / v_.norm2(); }

    std::string to_string() const { return std::to_string(v_.x) + "/" + std::to_string(v_.y); }

    // Parses "p/q"; any primitive (p, q) is accepted and canonicalized.
    static PrimitiveDirection parse(std::string_view text) {
        const auto slash = text.find('/');
        if (slash == std::string_view::npos) throw ConfigError("direction must look like \"p/q\": " + std::string(text));
        try {
            const auto p = std::stoll(std::string(text.substr(0, slash)));
            const auto q = std::stoll(std::string(text.substr(slash + 1)));
            return {p, q};
        } catch (const std::logic_error&) {
            throw ConfigError("direction must look like \"p/q\": " + std::string(text));
        }
    }

    friend bool operator==(const PrimitiveDirection&, const PrimitiveDirection&) = default;
    friend auto operator<=>(const PrimitiveDirection& a, const PrimitiveDirection& b) {
        return a.v_ <=> b.v_;
    }

private:
    Mode v_;
};

// H_Lambda(xi) = <xi, v>/L.
inline double h_lambda(const PrimitiveDirection& dir, const Vec2& xi) {
    return dot(xi, dir.generator()) / dir.length();
}
inline double h_lambda(const PrimitiveDirection& dir, Mode k) {
    return static_cast<double>(dot(k, dir.generator())) / dir.length();
}

// H_Lambda^perp(xi) = <xi, v^perp>/L.
inline double h_lambda_perp(const PrimitiveDirection& dir, const Vec2& xi) {
    return dot(xi, dir.perp()) / dir.length();
}
inline double h_lambda_perp(const PrimitiveDirection& dir, Mode k) {
    return static_cast<double>(dot(k, dir.perp())) / dir.length();
}

// All canonical primitive directions with generator length <= max_norm, sorted by
// (length, p, q).
inline std::vector<PrimitiveDirection> enumerate_primitive(double max_norm) {
    std::vector<PrimitiveDirection> out;
    if (!(max_norm >= 1.0)) return out;
    const auto bound = static_cast<std::int64_t>(std::floor(max_norm));
    const double limit2 = max_norm * max_norm;
    for (std::int64_t p = 0; p <= bound; ++p) {
        for (std::int64_t q = -bound; q <= bound; ++q) {
            if (p == 0 && q != 1) continue;
            if (static_cast<double>(p * p + q * q) > limit2) continue;
            if (std::gcd(p, std::abs(q)) != 1) continue;
            out.emplace_back(p, q);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const auto na = a.generator().norm2(), nb = b.generator().norm2();
        if (na != nb) return na < nb;
        return a < b;
    });
    return out;
}

// Rational direction of a real vector: the primitive direction parallel to xi, searched
// among generators of length <= max_norm. Returns nullopt for (numerically) irrational
// directions and for xi == 0.
inline std::optional<PrimitiveDirection> rational_direction(const Vec2& xi, double max_norm = 64.0,
                                                            double rel_tol = 1e-12) {
    const double n = std::hypot(xi[0], xi[1]);
    if (n == 0.0) return std::nullopt;
    for (const auto& d : enumerate_primitive(max_norm)) {
        const auto v = d.generator();
        const double c = xi[0] * static_cast<double>(v.y) - xi[1] * static_cast<double>(v.x);
        if (std::abs(c) <= rel_tol * n * d.length()) return d;
    }
    return std::nullopt;
}

// Averaging along the periodic flow of H_Lambda^perp. Any Fourier series type exposing
// `filtered(predicate)` over its modes qualifies; only modes k in Z*v survive.
template <class Series>
Series project_I_lambda(const Series& b, const PrimitiveDirection& dir) {
    return b.filtered([&](Mode k) { return dir.contains(k); });
}

}  // namespace qle
