#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// Coprime (p, q) with p^2 + q^2 <= B^2, one representative per +-pair.
inline std::size_t coprime_half_plane(int bound) {
    std::size_t n = 0;
    for (int p = -bound; p <= bound; ++p)
        for (int q = -bound; q <= bound; ++q) {
            if (p * p + q * q > bound * bound || (p == 0 && q == 0)) continue;
            int a = std::abs(p), b = std::abs(q);
            while (b != 0) {
                const int r = a % b;
                a = b;
                b = r;
            }
            if (a != 1) continue;
            if (p > 0 || (p == 0 && q > 0)) ++n;
        }
    return n;
}

// (1/L) int_0^L f(x + s u) ds for a periodic integrand; u has length 1 and L u is a lattice vector.
inline double line_average(const std::function<double(double, double)>& f, double x1, double x2, double u1, double u2,
                           double len, int samples = 4096) {
    double s = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = len * i / samples;
        s += f(x1 + t * u1, x2 + t * u2);
    }
    return s / samples;
}

// int_0^t g(s) ds by composite trapezoid.
inline double trapezoid(const std::function<double(double)>& g, double t, int samples = 10000) {
    const double h = t / samples;
    double s = 0.5 * (g(0.0) + g(t));
    for (int i = 1; i < samples; ++i) s += g(i * h);
    return s * h;
}

inline double bessel_j0_series(double t) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 80; ++k) {
        term *= -(t * t / 4.0) / (static_cast<double>(k) * k);
        sum += term;
    }
    return sum;
}

// int_0^t g(s) ds by composite Simpson with an even number of intervals.
inline double simpson(const std::function<double(double)>& g, double t, int intervals = 20000) {
    const double h = t / intervals;
    double s = g(0.0) + g(t);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
    return s * h / 3.0;
}

// |int_0^1 e^{i t cos(2 pi x)} dx|^2 by the rectangle rule.
inline double bessel_echo_quadrature(double t, int samples = 4096) {
    cplx s{};
    for (int i = 0; i < samples; ++i) s += std::polar(1.0, t * std::cos(2.0 * pi * i / samples));
    return std::norm(s / static_cast<double>(samples));
}

// Echo of e_(0,n) under V = cos(2 pi x1), reduced to the x1 line in rescaled time: i u' = A u with
// A_mm = kappa m^2, A_(m,m+-1) = 1/2, kappa = (hbar^2/eps)(2 pi)^2/2. Classical RK4 on modes |m| <= M.
inline double reduced_line_echo(double kappa, double t, int modes = 24, int steps = 40000) {
    const int n = 2 * modes + 1;
    std::vector<cplx> u(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
    u[modes] = 1.0;
    auto rhs = [&](const std::vector<cplx>& x, std::vector<cplx>& out) {
        for (int i = 0; i < n; ++i) {
            const double m = i - modes;
            cplx a = kappa * m * m * x[i];
            if (i > 0) a += 0.5 * x[i - 1];
            if (i + 1 < n) a += 0.5 * x[i + 1];
            out[i] = cplx{0.0, -1.0} * a;
        }
    };
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        rhs(u, k1);
        for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (int i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
        rhs(tmp, k4);
        for (int i = 0; i < n; ++i) u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return std::norm(u[modes]);
}

struct Coeff {
    int kx, ky;
    cplx v;
};

inline double naive_eval(const std::vector<Coeff>& cs, double x1, double x2) {
    cplx s{};
    for (const auto& c : cs) s += c.v * std::exp(cplx{0.0, 2.0 * pi * (c.kx * x1 + c.ky * x2)});
    return s.real();
}

// One coordinate of a periodized Gaussian packet:
// g(x) = sum_l hbar^{-1/4} f((x + l - x0)/sqrt(hbar)) e^{2 pi i xi0 (x + l)/hbar},
// f(s) = (pi w^2)^{-1/4} e^{-s^2/(2 w^2)}.
inline cplx periodized_gaussian(double x, double x0, double xi0, double hbar, double w = 1.0) {
    cplx s{};
    for (int l = -6; l <= 6; ++l) {
        const double y = (x + l - x0) / std::sqrt(hbar);
        s += std::pow(pi * w * w, -0.25) * std::exp(-y * y / (2.0 * w * w)) *
             std::exp(cplx{0.0, 2.0 * pi * xi0 * (x + l) / hbar});
    }
    return s * std::pow(hbar, -0.25);
}

// int_0^1 g(x) e^{-2 pi i k x} dx by the rectangle rule on `samples` points.
inline std::vector<cplx> fourier_1d(const std::function<cplx(double)>& g, int kmin, int kmax, int samples = 2048) {
    std::vector<cplx> vals(samples);
    for (int i = 0; i < samples; ++i) vals[i] = g(static_cast<double>(i) / samples);
    std::vector<cplx> out;
    for (int k = kmin; k <= kmax; ++k) {
        cplx s{};
        for (int i = 0; i < samples; ++i) s += vals[i] * std::polar(1.0, -2.0 * pi * k * i / samples);
        out.push_back(s / static_cast<double>(samples));
    }
    return out;
}

// int_0^1 h(x) dx by the rectangle rule.
inline double integrate_1d(const std::function<double(double)>& h, int samples = 4096) {
    double s = 0.0;
    for (int i = 0; i < samples; ++i) s += h(static_cast<double>(i) / samples);
    return s / samples;
}

// Deterministic draws for property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
};

}  // namespace oracle
