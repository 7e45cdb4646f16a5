#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vdamp/image.hpp"

namespace vdamp {
namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Roots table: w[k] = exp(sign * 2*pi*i * k / n), k = 0..n/2-1.
inline std::vector<cplx> fft_roots(int n, int sign) {
    std::vector<cplx> w(static_cast<size_t>(n) / 2);
    for (int k = 0; k < n / 2; ++k) {
        const double a = sign * 2.0 * M_PI * k / n;
        w[static_cast<size_t>(k)] = {std::cos(a), std::sin(a)};
    }
    return w;
}

// In-place iterative radix-2 Cooley-Tukey; n power of two, unnormalized.
inline void fft_pow2(cplx* a, int n, const std::vector<cplx>& roots) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < len / 2; ++k) {
                const cplx w = roots[static_cast<size_t>(k) * step];
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

// Scratch shared across the rows/columns of one 2D transform.
struct FftPlan {
    int n = 0;
    int sign = -1;
    std::vector<cplx> roots;            // for n when pow2, else for conv length
    // Bluestein state (non-pow2 lengths only)
    int conv_n = 0;
    std::vector<cplx> chirp;            // exp(sign*pi*i*k^2/n)
    std::vector<cplx> chirp_fft;        // FFT of padded conjugate chirp
    std::vector<cplx> work;

    FftPlan(int n_, int sign_) : n(n_), sign(sign_) {
        if (is_pow2(n)) {
            roots = fft_roots(n, sign);
            return;
        }
        conv_n = next_pow2(2 * n - 1);
        roots = fft_roots(conv_n, -1);
        chirp.resize(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the angle argument small
            const int64_t q = (static_cast<int64_t>(k) * k) % (2LL * n);
            const double a = sign * M_PI * static_cast<double>(q) / n;
            chirp[static_cast<size_t>(k)] = {std::cos(a), std::sin(a)};
        }
        std::vector<cplx> b(static_cast<size_t>(conv_n), cplx(0.0, 0.0));
        b[0] = std::conj(chirp[0]);
        for (int k = 1; k < n; ++k) {
            b[static_cast<size_t>(k)] = std::conj(chirp[static_cast<size_t>(k)]);
            b[static_cast<size_t>(conv_n - k)] = std::conj(chirp[static_cast<size_t>(k)]);
        }
        fft_pow2(b.data(), conv_n, roots);
        chirp_fft = std::move(b);
        work.resize(static_cast<size_t>(conv_n));
    }

    // Unnormalized DFT of length n with exponent sign, in place.
    void run(cplx* a) {
        if (conv_n == 0) {
            fft_pow2(a, n, roots);
            return;
        }
        // Bluestein: x_k chirped, circularly convolved with the conjugate chirp.
        std::fill(work.begin(), work.end(), cplx(0.0, 0.0));
        for (int k = 0; k < n; ++k) work[static_cast<size_t>(k)] = a[k] * chirp[static_cast<size_t>(k)];
        fft_pow2(work.data(), conv_n, roots);
        for (int k = 0; k < conv_n; ++k) work[static_cast<size_t>(k)] *= chirp_fft[static_cast<size_t>(k)];
        // inverse FFT via conjugation
        for (auto& z : work) z = std::conj(z);
        fft_pow2(work.data(), conv_n, roots);
        const double inv = 1.0 / conv_n;
        for (int k = 0; k < n; ++k) a[k] = std::conj(work[static_cast<size_t>(k)]) * inv * chirp[static_cast<size_t>(k)];
    }
};

inline int shift_forward(int n) { return n / 2; }   // index 0 -> n/2 (fftshift)
inline int shift_inverse(int n) { return (n + 1) / 2; }

// out[(i + off) mod n] = in[i] along both axes.
inline ComplexImage circshift(const ComplexImage& img, int off_r, int off_c) {
    ComplexImage out(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        const int rr = (r + off_r) % img.height;
        for (int c = 0; c < img.width; ++c) {
            const int cc = (c + off_c) % img.width;
            out.at(rr, cc) = img.at(r, c);
        }
    }
    return out;
}

inline void fft2_core(ComplexImage& img, int sign) {
    const int h = img.height, w = img.width;
    FftPlan row_plan(w, sign);
    for (int r = 0; r < h; ++r) row_plan.run(img.data.data() + static_cast<size_t>(r) * w);
    FftPlan col_plan(h, sign);
    std::vector<cplx> col(static_cast<size_t>(h));
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) col[static_cast<size_t>(r)] = img.at(r, c);
        col_plan.run(col.data());
        for (int r = 0; r < h; ++r) img.at(r, c) = col[static_cast<size_t>(r)];
    }
}

}  // namespace detail

// Unitary 2D DFT with the zero-frequency bin moved to the array center
// (h/2, w/2), so that low frequencies occupy the middle of the grid.
inline ComplexImage fft2_unitary(const ComplexImage& img) {
    ComplexImage out = img;
    detail::fft2_core(out, -1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(img.size()));
    for (auto& z : out.data) z *= scale;
    return detail::circshift(out, detail::shift_forward(img.height), detail::shift_forward(img.width));
}

// Exact inverse of fft2_unitary.
inline ComplexImage ifft2_unitary(const ComplexImage& spec) {
    ComplexImage out = detail::circshift(spec, detail::shift_inverse(spec.height), detail::shift_inverse(spec.width));
    detail::fft2_core(out, +1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.size()));
    for (auto& z : out.data) z *= scale;
    return out;
}

}  // namespace vdamp
