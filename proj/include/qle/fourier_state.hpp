#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qle/errors.hpp"
#include "qle/lattice.hpp"

namespace qle {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Square box of Fourier modes k with k - center in [-size/2, size/2)^2.
struct Window {
    int size = 0;
    Mode center{};

    static Window centered(int size) { return {size, {}}; }

    std::size_t count() const { return static_cast<std::size_t>(size) * static_cast<std::size_t>(size); }

    bool contains(Mode k) const {
        const auto h = static_cast<std::int64_t>(size / 2);
        const auto dx = k.x - center.x, dy = k.y - center.y;
        return dx >= -h && dx < size - h && dy >= -h && dy < size - h;
    }

    // Flat row-major offset of k; the first component is the slow index.
    std::optional<std::size_t> index(Mode k) const {
        if (!contains(k)) return std::nullopt;
        const auto h = static_cast<std::int64_t>(size / 2);
        const auto a = static_cast<std::size_t>(k.x - center.x + h);
        const auto b = static_cast<std::size_t>(k.y - center.y + h);
        return a * static_cast<std::size_t>(size) + b;
    }

    Mode mode_at(std::size_t i) const {
        const auto n = static_cast<std::size_t>(size);
        const auto h = static_cast<std::int64_t>(size / 2);
        return {static_cast<std::int64_t>(i / n) - h + center.x, static_cast<std::int64_t>(i % n) - h + center.y};
    }

    // Distance of k from the window centre.
    double offset(Mode k) const { return (k - center).norm(); }

    friend bool operator==(const Window&, const Window&) = default;
};

// A wavefunction on T^2 given by its Fourier coefficients on a window, paired with the
// semiclassical parameter hbar. Coefficients outside the window are zero.
class FourierState {
public:
    FourierState(double hbar, Window window) : hbar_(hbar), window_(window), coeffs_(window.count()) {
        if (!(hbar > 0.0)) throw Error("FourierState: hbar must be positive");
        if (window.size < 2) throw Error("FourierState: window size must be at least 2");
    }

    double hbar() const { return hbar_; }
    const Window& window() const { return window_; }
    int size() const { return window_.size; }

    std::span<cplx> coefficients() { return coeffs_; }
    std::span<const cplx> coefficients() const { return coeffs_; }

    cplx operator[](Mode k) const {
        const auto i = window_.index(k);
        return i ? coeffs_[*i] : cplx{};
    }

    cplx& at(Mode k) {
        const auto i = window_.index(k);
        if (!i) {
            throw WindowTooSmall("mode (" + std::to_string(k.x) + "," + std::to_string(k.y) + ") outside window",
                                 required_size_for(k));
        }
        return coeffs_[*i];
    }

    Mode mode_at(std::size_t i) const { return window_.mode_at(i); }

    double norm2() const {
        double s = 0.0;
        for (const auto& c : coeffs_) s += std::norm(c);
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    // Scales to unit norm and records the norm seen before scaling.
    void normalize() {
        const double n = norm();
        if (n == 0.0) throw Error("FourierState: cannot normalize the zero state");
        for (auto& c : coeffs_) c /= n;
        prenormalization_norm_ = n;
    }

    double prenormalization_norm() const { return prenormalization_norm_; }
    void set_prenormalization_norm(double n) { prenormalization_norm_ = n; }

    // Mass carried by modes at distance >= fraction*size from the window centre.
    double shell_mass(double fraction = 0.45) const {
        const double r = fraction * window_.size;
        double s = 0.0;
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            if (window_.offset(window_.mode_at(i)) >= r) s += std::norm(coeffs_[i]);
        return s;
    }

    // Smallest window size (same centre) whose interior shell holds mode k.
    int required_size_for(Mode k) const {
        const int need = static_cast<int>(std::ceil(window_.offset(k) / 0.45)) + 2;
        return std::max(need, window_.size * 2);
    }

    // Mass-weighted mean mode, useful for diagnostics.
    Vec2 mean_mode() const {
        Vec2 m{0.0, 0.0};
        double w = 0.0;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            const double p = std::norm(coeffs_[i]);
            const auto k = window_.mode_at(i);
            m[0] += p * static_cast<double>(k.x);
            m[1] += p * static_cast<double>(k.y);
            w += p;
        }
        if (w > 0.0) {
            m[0] /= w;
            m[1] /= w;
        }
        return m;
    }

private:
    double hbar_;
    Window window_;
    std::vector<cplx> coeffs_;
    double prenormalization_norm_ = 1.0;
};

inline void require_same_window(const FourierState& a, const FourierState& b, const char* where) {
    if (!(a.window() == b.window())) throw Error(std::string(where) + ": states live on different windows");
}

// <a, b> = sum conj(a_k) b_k.
inline cplx inner(const FourierState& a, const FourierState& b) {
    require_same_window(a, b, "inner");
    const auto ca = a.coefficients();
    const auto cb = b.coefficients();
    cplx s{};
    for (std::size_t i = 0; i < ca.size(); ++i) s += std::conj(ca[i]) * cb[i];
    return s;
}

// l2 distance between coefficient arrays.
inline double distance(const FourierState& a, const FourierState& b) {
    require_same_window(a, b, "distance");
    const auto ca = a.coefficients();
    const auto cb = b.coefficients();
    double s = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) s += std::norm(ca[i] - cb[i]);
    return std::sqrt(s);
}

// Position-space value sum_k psi_k e^{2 pi i k.x}.
inline cplx evaluate(const FourierState& psi, const Vec2& x) {
    cplx s{};
    const auto c = psi.coefficients();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == cplx{}) continue;
        s += c[i] * std::polar(1.0, two_pi * dot(x, psi.mode_at(i)));
    }
    return s;
}

}  // namespace qle
