#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <string>

#include "qle/errors.hpp"

namespace qle {

// FFTW plan creation and destruction are not thread-safe; fftw_execute is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

inline std::string fftw_version_string() { return fftw_version; }

// In-place N x N complex transform pair on an owned, FFTW-aligned buffer. One instance
// per worker; instances are movable but not copyable.
class Fft2d {
public:
    explicit Fft2d(int n) : n_(n) {
        if (n < 2) throw Error("Fft2d: size must be at least 2");
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count()));
        if (!buf_) throw Error("Fft2d: allocation failed");
        std::lock_guard lock(fftw_planner_mutex());
        to_position_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        to_fourier_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    }

    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;
    Fft2d(Fft2d&& o) noexcept { swap(o); }
    Fft2d& operator=(Fft2d&& o) noexcept {
        swap(o);
        return *this;
    }

    ~Fft2d() {
        if (!buf_) return;
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(to_position_);
        fftw_destroy_plan(to_fourier_);
        fftw_free(buf_);
    }

    int size() const { return n_; }
    std::size_t count() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }

    std::span<std::complex<double>> data() {
        return {reinterpret_cast<std::complex<double>*>(buf_), count()};
    }

    // Unnormalized: data[j] <- sum_a data[a] e^{+2 pi i a.j/N}.
    void to_position() { fftw_execute(to_position_); }
    // Unnormalized: data[a] <- sum_j data[j] e^{-2 pi i a.j/N}.
    void to_fourier() { fftw_execute(to_fourier_); }

private:
    void swap(Fft2d& o) noexcept {
        std::swap(n_, o.n_);
        std::swap(buf_, o.buf_);
        std::swap(to_position_, o.to_position_);
        std::swap(to_fourier_, o.to_fourier_);
    }

    int n_ = 0;
    fftw_complex* buf_ = nullptr;
    fftw_plan to_position_ = nullptr;
    fftw_plan to_fourier_ = nullptr;
};

}  // namespace qle
