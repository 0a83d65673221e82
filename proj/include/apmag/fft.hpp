#pragma once
/*
================================================================================
 fft.hpp — self-contained FFT for arbitrary lengths
--------------------------------------------------------------------------------
 The analysis layer needs discrete Fourier transforms of traces whose lengths
 are set by physics, not by powers of two (e.g. 1 s at 250 kHz = 250000
 samples, 2^4 * 5^6). Two pieces cover every case:

   * an iterative radix-2 Cooley-Tukey transform with precomputed twiddles
     for power-of-two lengths, and
   * a Bluestein chirp-z wrapper that evaluates an arbitrary-N DFT as a
     circular convolution of length m = next power of two >= 2N-1.

 FourierPlan caches the twiddle tables and the transformed Bluestein chirp for
 one length, so repeated transforms of equal-length traces (150 sensitivity
 trials of 1 s each) pay the setup cost once.

 Conventions: forward DFT X_k = sum_j x_j exp(-2*pi*i*j*k/N), inverse scaled
 by 1/N, so ifft(fft(x)) == x.
================================================================================
*/
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "apmag/constants.hpp"

namespace apmag {

using cplx = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// In-place iterative radix-2 FFT. `tw` holds exp(-2*pi*i*k/n), k < n/2.
inline void fft_pow2(std::vector<cplx>& a, const std::vector<cplx>& tw, bool inverse) {
    const std::size_t n = a.size();
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx w = tw[k * step];
                if (inverse) w = std::conj(w);
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

} // namespace detail

/// Reusable transform plan for one length n (any n >= 1).
class FourierPlan {
  public:
    explicit FourierPlan(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("FourierPlan: empty length");
        if (detail::is_pow2(n)) {
            make_twiddles(n, tw_);
            return;
        }
        // Bluestein setup: chirp c_k = exp(-i*pi*k^2/n) and the padded,
        // pre-transformed convolution kernel b with b_j = conj(c_j) at lags
        // -(n-1)..(n-1) wrapped modulo m.
        m_ = detail::next_pow2(2 * n - 1);
        make_twiddles(m_, tw_);
        chirp_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n avoids precision loss of pi*k^2 for large k.
            const auto k2 = static_cast<double>((k * k) % (2 * n));
            const double ang = constants::pi * k2 / static_cast<double>(n);
            chirp_[k] = cplx(std::cos(ang), -std::sin(ang));
        }
        bfft_.assign(m_, cplx(0.0, 0.0));
        bfft_[0] = std::conj(chirp_[0]);
        for (std::size_t k = 1; k < n; ++k) {
            bfft_[k] = std::conj(chirp_[k]);
            bfft_[m_ - k] = std::conj(chirp_[k]);
        }
        detail::fft_pow2(bfft_, tw_, false);
    }

    std::size_t size() const { return n_; }

    /// Forward DFT of x (x.size() == n).
    std::vector<cplx> forward(const std::vector<cplx>& x) const { return run(x, false); }

    /// Inverse DFT (includes the 1/n factor).
    std::vector<cplx> inverse(const std::vector<cplx>& x) const { return run(x, true); }

  private:
    static void make_twiddles(std::size_t n, std::vector<cplx>& tw) {
        tw.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = constants::two_pi * static_cast<double>(k) / static_cast<double>(n);
            tw[k] = cplx(std::cos(ang), -std::sin(ang));
        }
    }

    std::vector<cplx> run(const std::vector<cplx>& x, bool inverse) const {
        if (x.size() != n_) throw std::invalid_argument("FourierPlan: length mismatch");
        if (detail::is_pow2(n_)) {
            std::vector<cplx> a = x;
            detail::fft_pow2(a, tw_, inverse);
            return a;
        }
        // Bluestein: X_k = c_k * (a (*) b)_k with a_j = x_j c_j.
        // The inverse transform reuses the forward machinery via conjugation.
        std::vector<cplx> a(m_, cplx(0.0, 0.0));
        if (!inverse) {
            for (std::size_t j = 0; j < n_; ++j) a[j] = x[j] * chirp_[j];
        } else {
            for (std::size_t j = 0; j < n_; ++j) a[j] = std::conj(x[j]) * chirp_[j];
        }
        detail::fft_pow2(a, tw_, false);
        for (std::size_t j = 0; j < m_; ++j) a[j] *= bfft_[j];
        detail::fft_pow2(a, tw_, true);
        std::vector<cplx> out(n_);
        if (!inverse) {
            for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * chirp_[k];
        } else {
            const double inv = 1.0 / static_cast<double>(n_);
            for (std::size_t k = 0; k < n_; ++k)
                out[k] = std::conj(a[k] * chirp_[k]) * inv;
        }
        return out;
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0;              // Bluestein pad length (0 for pow2 n)
    std::vector<cplx> tw_;           // twiddles for the pow2 kernel
    std::vector<cplx> chirp_;        // Bluestein chirp c_k
    std::vector<cplx> bfft_;         // FFT of the chirp kernel
};

/// Forward DFT of a real vector (convenience, allocates a plan).
inline std::vector<cplx> fft_real(const std::vector<double>& x, const FourierPlan& plan) {
    std::vector<cplx> in(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) in[i] = cplx(x[i], 0.0);
    return plan.forward(in);
}

inline std::vector<cplx> fft_real(const std::vector<double>& x) {
    return fft_real(x, FourierPlan(x.size()));
}

} // namespace apmag
