#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "vdamp/image.hpp"

namespace vdamp {

struct EllipseSpec {
    double intensity;
    double cx, cy;      // center in [-1,1]^2
    double a, b;        // semi-axes
    double phi;         // rotation, radians
};

namespace detail {

// Standard 10-ellipse head phantom table; the modified variant keeps the
// geometry and raises the soft-tissue contrast.
inline std::array<EllipseSpec, 10> shepp_logan_table(bool modified) {
    const double d = M_PI / 180.0;
    std::array<EllipseSpec, 10> e = {{
        {1.0, 0.0, 0.0, 0.69, 0.92, 0.0},
        {-0.98, 0.0, -0.0184, 0.6624, 0.8740, 0.0},
        {-0.02, 0.22, 0.0, 0.11, 0.31, -18.0 * d},
        {-0.02, -0.22, 0.0, 0.16, 0.41, 18.0 * d},
        {0.01, 0.0, 0.35, 0.21, 0.25, 0.0},
        {0.01, 0.0, 0.1, 0.046, 0.046, 0.0},
        {0.01, 0.0, -0.1, 0.046, 0.046, 0.0},
        {0.01, -0.08, -0.605, 0.046, 0.023, 0.0},
        {0.01, 0.0, -0.605, 0.023, 0.023, 0.0},
        {0.01, 0.06, -0.605, 0.023, 0.046, 0.0},
    }};
    if (modified) {
        const double contrast[10] = {1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
        for (int i = 0; i < 10; ++i) e[static_cast<size_t>(i)].intensity = contrast[i];
    }
    return e;
}

}  // namespace detail

// Rasterizes the Shepp-Logan phantom at pixel centers (no anti-aliasing),
// summing ellipse intensities and normalizing the maximum to 1. The result
// is real-valued; the imaginary part is zero.
inline ComplexImage shepp_logan(int h, int w, bool modified = false) {
    if (h < 16 || w < 16) throw std::invalid_argument("shepp_logan: dimensions must be >= 16");
    const auto table = detail::shepp_logan_table(modified);
    ComplexImage img(h, w);
    double maxval = 0.0;
    for (int r = 0; r < h; ++r) {
        const double y = -(2.0 * r + 1.0 - h) / h;  // row 0 is +y
        for (int c = 0; c < w; ++c) {
            const double x = (2.0 * c + 1.0 - w) / w;
            double v = 0.0;
            for (const EllipseSpec& e : table) {
                const double dx = x - e.cx, dy = y - e.cy;
                const double xr = dx * std::cos(e.phi) + dy * std::sin(e.phi);
                const double yr = -dx * std::sin(e.phi) + dy * std::cos(e.phi);
                if ((xr / e.a) * (xr / e.a) + (yr / e.b) * (yr / e.b) <= 1.0) v += e.intensity;
            }
            img.at(r, c) = v;
            maxval = std::max(maxval, v);
        }
    }
    if (maxval > 0.0)
        for (auto& z : img.data) z /= maxval;
    return img;
}

}  // namespace vdamp
