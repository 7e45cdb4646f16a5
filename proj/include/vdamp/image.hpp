#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vdamp {

using cplx = std::complex<double>;

// Row-major h*w grid of complex samples. Used for image-domain signals and
// Fourier-domain vectors alike.
struct ComplexImage {
    int height = 0;
    int width = 0;
    std::vector<cplx> data;

    ComplexImage() = default;
    ComplexImage(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("ComplexImage: dimensions must be positive");
    }

    int size() const { return height * width; }

    cplx& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    const cplx& at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }

    bool same_shape(const ComplexImage& o) const { return height == o.height && width == o.width; }
};

inline double norm_sq(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return s;
}

inline double norm_sq(const ComplexImage& img) { return norm_sq(img.data); }

inline double rel_error(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("rel_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ||est - ref||^2 / ||ref||^2 in dB.
inline double nmse_db(const ComplexImage& est, const ComplexImage& ref) {
    if (!est.same_shape(ref)) throw std::invalid_argument("nmse_db: shape mismatch");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < ref.size(); ++i) {
        num += std::norm(est.data[i] - ref.data[i]);
        den += std::norm(ref.data[i]);
    }
    if (den == 0.0) throw std::invalid_argument("nmse_db: zero reference");
    return 10.0 * std::log10(num / den);
}

inline bool all_finite(const std::vector<cplx>& v) {
    for (const cplx& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

}  // namespace vdamp
