#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdamp/image.hpp"

namespace vdamp {

enum class Orient : uint8_t { approx = 0, horizontal = 1, vertical = 2, diagonal = 3 };

struct Subband {
    int offset = 0;  // start index into the flat coefficient array
    int rows = 0;
    int cols = 0;
    int scale = 0;   // 1 = finest detail scale, s = coarsest; s for the approximation
    Orient orient = Orient::approx;

    int count() const { return rows * cols; }
    bool operator==(const Subband&) const = default;
};

// Index ranges J_b for the 1+3s subbands of an s-scale decimated 2D
// decomposition. Order: approximation first, then per scale from coarsest
// to finest with horizontal, vertical, diagonal details.
struct SubbandLayout {
    int height = 0;
    int width = 0;
    int scales = 0;
    std::vector<Subband> bands;

    int total() const { return height * width; }
    int count() const { return static_cast<int>(bands.size()); }

    int approx_index() const { return 0; }
    int detail_index(int scale, Orient o) const {
        return 1 + 3 * (scales - scale) + (static_cast<int>(o) - 1);
    }

    bool operator==(const SubbandLayout&) const = default;

    static SubbandLayout make(int h, int w, int s) {
        if (s < 1) throw std::invalid_argument("SubbandLayout: scales must be >= 1");
        const int div = 1 << s;
        if (h % div != 0) throw std::invalid_argument("SubbandLayout: height " + std::to_string(h) +
                                                      " not divisible by 2^" + std::to_string(s));
        if (w % div != 0) throw std::invalid_argument("SubbandLayout: width " + std::to_string(w) +
                                                      " not divisible by 2^" + std::to_string(s));
        SubbandLayout lay;
        lay.height = h;
        lay.width = w;
        lay.scales = s;
        lay.bands.reserve(static_cast<size_t>(1 + 3 * s));
        int off = 0;
        lay.bands.push_back({0, h >> s, w >> s, s, Orient::approx});
        off += (h >> s) * (w >> s);
        for (int j = s; j >= 1; --j) {
            for (Orient o : {Orient::horizontal, Orient::vertical, Orient::diagonal}) {
                lay.bands.push_back({off, h >> j, w >> j, j, o});
                off += (h >> j) * (w >> j);
            }
        }
        return lay;
    }
};

// Subband-ordered coefficients of an orthonormal 2D Haar decomposition.
struct WaveletCoeffs {
    SubbandLayout layout;
    std::vector<cplx> data;

    WaveletCoeffs() = default;
    explicit WaveletCoeffs(SubbandLayout lay)
        : layout(std::move(lay)), data(static_cast<size_t>(layout.total())) {}

    int scales() const { return layout.scales; }
    std::span<cplx> band(int b) {
        return {data.data() + layout.bands[static_cast<size_t>(b)].offset,
                static_cast<size_t>(layout.bands[static_cast<size_t>(b)].count())};
    }
    std::span<const cplx> band(int b) const {
        return {data.data() + layout.bands[static_cast<size_t>(b)].offset,
                static_cast<size_t>(layout.bands[static_cast<size_t>(b)].count())};
    }
};

// One real scalar per subband; expands to a length-N vector that is
// piecewise constant on each band.
struct SubbandVector {
    SubbandLayout layout;
    std::vector<double> values;

    SubbandVector() = default;
    explicit SubbandVector(SubbandLayout lay, double fill = 0.0)
        : layout(std::move(lay)), values(static_cast<size_t>(layout.count()), fill) {}

    double& operator[](int b) { return values[static_cast<size_t>(b)]; }
    double operator[](int b) const { return values[static_cast<size_t>(b)]; }
    int count() const { return static_cast<int>(values.size()); }
};

// Orthonormal 2D Haar analysis. Each level maps disjoint 2x2 blocks
// [[a,b],[c,d]] to (a+b+c+d)/2, (a+b-c-d)/2, (a-b+c-d)/2, (a-b-c+d)/2
// (approximation, horizontal, vertical, diagonal), then recurses on the
// approximation.
inline WaveletCoeffs dwt_forward(const ComplexImage& img, int scales) {
    WaveletCoeffs out(SubbandLayout::make(img.height, img.width, scales));
    std::vector<cplx> cur = img.data;
    std::vector<cplx> next;
    int ch = img.height, cw = img.width;
    for (int level = 1; level <= scales; ++level) {
        const int hh = ch / 2, hw = cw / 2;
        next.assign(static_cast<size_t>(hh) * hw, cplx(0.0, 0.0));
        cplx* hdet = out.data.data() + out.layout.bands[static_cast<size_t>(out.layout.detail_index(level, Orient::horizontal))].offset;
        cplx* vdet = out.data.data() + out.layout.bands[static_cast<size_t>(out.layout.detail_index(level, Orient::vertical))].offset;
        cplx* ddet = out.data.data() + out.layout.bands[static_cast<size_t>(out.layout.detail_index(level, Orient::diagonal))].offset;
        for (int r = 0; r < hh; ++r) {
            const cplx* top = cur.data() + static_cast<size_t>(2 * r) * cw;
            const cplx* bot = top + cw;
            for (int c = 0; c < hw; ++c) {
                const cplx a = top[2 * c], b = top[2 * c + 1];
                const cplx cc = bot[2 * c], d = bot[2 * c + 1];
                const size_t i = static_cast<size_t>(r) * hw + c;
                next[i] = (a + b + cc + d) * 0.5;
                hdet[i] = (a + b - cc - d) * 0.5;
                vdet[i] = (a - b + cc - d) * 0.5;
                ddet[i] = (a - b - cc + d) * 0.5;
            }
        }
        cur.swap(next);
        ch = hh;
        cw = hw;
    }
    auto approx = out.band(out.layout.approx_index());
    for (size_t i = 0; i < approx.size(); ++i) approx[i] = cur[i];
    return out;
}

// Exact synthesis (inverse of dwt_forward).
inline ComplexImage dwt_inverse(const WaveletCoeffs& coeffs) {
    const SubbandLayout& lay = coeffs.layout;
    const int s = lay.scales;
    int ch = lay.height >> s, cw = lay.width >> s;
    std::vector<cplx> cur(coeffs.band(lay.approx_index()).begin(), coeffs.band(lay.approx_index()).end());
    std::vector<cplx> next;
    for (int level = s; level >= 1; --level) {
        const int fh = ch * 2, fw = cw * 2;
        next.assign(static_cast<size_t>(fh) * fw, cplx(0.0, 0.0));
        const cplx* hdet = coeffs.data.data() + lay.bands[static_cast<size_t>(lay.detail_index(level, Orient::horizontal))].offset;
        const cplx* vdet = coeffs.data.data() + lay.bands[static_cast<size_t>(lay.detail_index(level, Orient::vertical))].offset;
        const cplx* ddet = coeffs.data.data() + lay.bands[static_cast<size_t>(lay.detail_index(level, Orient::diagonal))].offset;
        for (int r = 0; r < ch; ++r) {
            for (int c = 0; c < cw; ++c) {
                const size_t i = static_cast<size_t>(r) * cw + c;
                const cplx ll = cur[i], h = hdet[i], v = vdet[i], d = ddet[i];
                cplx* top = next.data() + static_cast<size_t>(2 * r) * fw + 2 * c;
                cplx* bot = top + fw;
                top[0] = (ll + h + v + d) * 0.5;
                top[1] = (ll + h - v - d) * 0.5;
                bot[0] = (ll - h + v - d) * 0.5;
                bot[1] = (ll - h - v + d) * 0.5;
            }
        }
        cur.swap(next);
        ch = fh;
        cw = fw;
    }
    ComplexImage out(lay.height, lay.width);
    out.data = std::move(cur);
    return out;
}

// Per-subband empirical mean of a length-N real vector. The sum is anchored
// at the first entry of each band so constant blocks (and therefore
// subband_expand round trips) average back bit-exactly.
inline SubbandVector subband_average(std::span<const double> vec, const SubbandLayout& lay) {
    if (static_cast<int>(vec.size()) != lay.total())
        throw std::invalid_argument("subband_average: length mismatch");
    SubbandVector out(lay);
    for (int b = 0; b < lay.count(); ++b) {
        const Subband& sb = lay.bands[static_cast<size_t>(b)];
        const double anchor = vec[static_cast<size_t>(sb.offset)];
        double s = 0.0;
        for (int j = 0; j < sb.count(); ++j) s += vec[static_cast<size_t>(sb.offset + j)] - anchor;
        out[b] = anchor + s / sb.count();
    }
    return out;
}

// Piecewise-constant expansion to length N; subband_average of the result
// returns the input exactly.
inline std::vector<double> subband_expand(const SubbandVector& sv) {
    std::vector<double> out(static_cast<size_t>(sv.layout.total()));
    for (int b = 0; b < sv.layout.count(); ++b) {
        const Subband& sb = sv.layout.bands[static_cast<size_t>(b)];
        for (int j = 0; j < sb.count(); ++j) out[static_cast<size_t>(sb.offset + j)] = sv[b];
    }
    return out;
}

}  // namespace vdamp
