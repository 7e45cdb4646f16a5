#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdamp/fft.hpp"
#include "vdamp/image.hpp"
#include "vdamp/rng.hpp"

namespace vdamp {

// Bernoulli sampling probabilities over the centered Fourier grid.
struct ProbabilityMap {
    int height = 0;
    int width = 0;
    std::vector<double> p;

    ProbabilityMap() = default;
    ProbabilityMap(int h, int w, double fill = 1.0)
        : height(h), width(w), p(static_cast<size_t>(h) * w, fill) {}

    int size() const { return height * width; }
};

struct SamplingSet {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> mask;
    int n_observed = 0;

    SamplingSet() = default;
    SamplingSet(int h, int w) : height(h), width(w), mask(static_cast<size_t>(h) * w, 0) {}

    int size() const { return height * width; }
};

namespace detail {

// Normalized radius of a Fourier bin from the grid center, pixel-center
// convention; 1.0 at the edge midpoints.
inline double bin_radius(int r, int c, int h, int w) {
    const double u = (2.0 * r + 1.0 - h) / h;
    const double v = (2.0 * c + 1.0 - w) / w;
    return std::sqrt(u * u + v * v);
}

}  // namespace detail

// Radially symmetric variable-density map: 1 inside the fully sampled
// center, scale*(1-r)^decay clamped to [p_min, 1] outside, with the scale
// bisected so the expected sampling fraction hits target_fraction.
inline ProbabilityMap make_density(int h, int w, double target_fraction,
                                   double fully_sampled_radius = 1.0 / 32.0,
                                   double decay = 4.0, double p_min = 0.01) {
    if (!(target_fraction > 0.0) || target_fraction > 1.0)
        throw std::invalid_argument("make_density: target_fraction must be in (0,1]");
    if (!(p_min > 0.0)) throw std::invalid_argument("make_density: p_min must be positive");

    const int n = h * w;
    std::vector<double> base(static_cast<size_t>(n));
    std::vector<uint8_t> center(static_cast<size_t>(n), 0);
    int n_center = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const size_t i = static_cast<size_t>(r) * w + c;
            const double rad = detail::bin_radius(r, c, h, w);
            if (rad <= fully_sampled_radius) {
                center[i] = 1;
                ++n_center;
            } else {
                base[i] = std::pow(std::max(1.0 - rad, 0.0), decay);
            }
        }
    }

    auto fill = [&](ProbabilityMap& pm, double scale) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = center[static_cast<size_t>(i)]
                                 ? 1.0
                                 : std::min(std::max(scale * base[static_cast<size_t>(i)], p_min), 1.0);
            pm.p[static_cast<size_t>(i)] = v;
            sum += v;
        }
        return sum / n;
    };

    ProbabilityMap pm(h, w);
    const double target = target_fraction;
    const double tol = 1e-3 * target;

    const double lo_frac = fill(pm, 0.0);  // everything clamped to p_min outside the center
    if (lo_frac > target + tol)
        throw std::runtime_error("make_density: infeasible target; p_min floor alone gives fraction " +
                                 std::to_string(lo_frac));
    if (target >= 1.0 - 1e-12) {
        fill(pm, 0.0);
        for (auto& v : pm.p) v = 1.0;
        return pm;
    }
    if (std::abs(lo_frac - target) <= tol) return pm;

    double lo = 0.0, hi = 1.0;
    while (fill(pm, hi) < target && hi < 1e12) hi *= 2.0;
    if (fill(pm, hi) + tol < target)
        throw std::runtime_error("make_density: infeasible target; p=1 everywhere falls short");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = fill(pm, mid);
        if (std::abs(f - target) <= tol) return pm;
        (f < target ? lo : hi) = mid;
    }
    throw std::runtime_error("make_density: bisection failed to meet the 0.1% tolerance");
}

// Independent Bernoulli(p_j) draw; deterministic in the seed.
inline SamplingSet draw_mask(const ProbabilityMap& pmap, uint64_t seed) {
    SamplingSet s(pmap.height, pmap.width);
    Rng rng(seed, streams::mask);
    for (int i = 0; i < pmap.size(); ++i) {
        const bool hit = rng.uniform(static_cast<uint64_t>(i)) < pmap.p[static_cast<size_t>(i)];
        s.mask[static_cast<size_t>(i)] = hit ? 1 : 0;
        s.n_observed += hit;
    }
    return s;
}

// Forward model y = M_Omega (F x0 + eps) with eps ~ CN(0, sigma_eps^2 I).
// Bins off the sampling set are exactly zero.
inline ComplexImage measure(const ComplexImage& x0, const SamplingSet& mask, double sigma_eps,
                            uint64_t rng_seed) {
    if (x0.height != mask.height || x0.width != mask.width)
        throw std::invalid_argument("measure: shape mismatch");
    if (sigma_eps < 0.0) throw std::invalid_argument("measure: negative sigma");
    ComplexImage y = fft2_unitary(x0);
    Rng rng(rng_seed, streams::noise);
    for (int i = 0; i < y.size(); ++i) {
        if (!mask.mask[static_cast<size_t>(i)]) {
            y.data[static_cast<size_t>(i)] = 0.0;
        } else if (sigma_eps > 0.0) {
            y.data[static_cast<size_t>(i)] += rng.cnormal(static_cast<uint64_t>(i), sigma_eps);
        }
    }
    return y;
}

// sigma_eps for a target measurement SNR ||x0||^2 / (N sigma^2), in dB.
inline double snr_to_sigma(const ComplexImage& x0, double snr_db) {
    const double energy = norm_sq(x0);
    if (energy == 0.0) throw std::invalid_argument("snr_to_sigma: zero image");
    return std::sqrt(energy / (x0.size() * std::pow(10.0, snr_db / 10.0)));
}

// --- flat binary serialization (little-endian; header VDMP,version,h,w,kind) ---

namespace io {

inline constexpr uint8_t kind_probability_map = 1;
inline constexpr uint8_t kind_sampling_mask = 2;
inline constexpr uint32_t format_version = 1;

inline void write_header(std::ofstream& f, uint32_t h, uint32_t w, uint8_t kind) {
    f.write("VDMP", 4);
    const uint32_t v = format_version;
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.write(reinterpret_cast<const char*>(&h), 4);
    f.write(reinterpret_cast<const char*>(&w), 4);
    f.write(reinterpret_cast<const char*>(&kind), 1);
}

inline void read_header(std::ifstream& f, uint32_t& h, uint32_t& w, uint8_t& kind) {
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "VDMP") throw std::runtime_error("bad magic in VDMP file");
    uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != format_version) throw std::runtime_error("unsupported VDMP version");
    f.read(reinterpret_cast<char*>(&h), 4);
    f.read(reinterpret_cast<char*>(&w), 4);
    f.read(reinterpret_cast<char*>(&kind), 1);
    if (!f) throw std::runtime_error("truncated VDMP header");
}

}  // namespace io

inline void save_probability_map(const ProbabilityMap& pm, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    io::write_header(f, static_cast<uint32_t>(pm.height), static_cast<uint32_t>(pm.width),
                     io::kind_probability_map);
    f.write(reinterpret_cast<const char*>(pm.p.data()),
            static_cast<std::streamsize>(pm.p.size() * sizeof(double)));
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline ProbabilityMap load_probability_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    uint32_t h = 0, w = 0;
    uint8_t kind = 0;
    io::read_header(f, h, w, kind);
    if (kind != io::kind_probability_map) throw std::runtime_error("not a probability map: " + path);
    ProbabilityMap pm(static_cast<int>(h), static_cast<int>(w));
    f.read(reinterpret_cast<char*>(pm.p.data()),
           static_cast<std::streamsize>(pm.p.size() * sizeof(double)));
    if (!f) throw std::runtime_error("truncated probability map: " + path);
    return pm;
}

inline void save_sampling_set(const SamplingSet& s, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    io::write_header(f, static_cast<uint32_t>(s.height), static_cast<uint32_t>(s.width),
                     io::kind_sampling_mask);
    f.write(reinterpret_cast<const char*>(s.mask.data()), static_cast<std::streamsize>(s.mask.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline SamplingSet load_sampling_set(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    uint32_t h = 0, w = 0;
    uint8_t kind = 0;
    io::read_header(f, h, w, kind);
    if (kind != io::kind_sampling_mask) throw std::runtime_error("not a sampling mask: " + path);
    SamplingSet s(static_cast<int>(h), static_cast<int>(w));
    f.read(reinterpret_cast<char*>(s.mask.data()), static_cast<std::streamsize>(s.mask.size()));
    if (!f) throw std::runtime_error("truncated sampling mask: " + path);
    for (uint8_t m : s.mask) s.n_observed += (m != 0);
    return s;
}

}  // namespace vdamp
