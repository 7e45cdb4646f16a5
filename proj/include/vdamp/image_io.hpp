#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "vdamp/image.hpp"

namespace vdamp {

namespace detail {

inline int largest_pow2_at_most(int n) {
    int p = 1;
    while (2 * p <= n) p *= 2;
    return p;
}

inline int pgm_next_token(std::istream& f) {
    // skips whitespace and '#' comment lines
    for (;;) {
        int ch = f.peek();
        if (ch == '#') {
            std::string line;
            std::getline(f, line);
        } else if (std::isspace(ch)) {
            f.get();
        } else {
            break;
        }
    }
    int value = 0;
    f >> value;
    if (!f) throw std::runtime_error("malformed PGM header");
    return value;
}

}  // namespace detail

// Loads a binary (P5) PGM, 8- or 16-bit, mapped to [0,1] with zero imaginary
// part. Non-dyadic dimensions are cropped to the largest centered
// power-of-two region, with a warning on stderr.
inline ComplexImage load_grayscale(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic(2, '\0');
    f.read(magic.data(), 2);
    if (magic != "P5") throw std::runtime_error("unsupported image format (want binary PGM P5): " + path);
    const int w = detail::pgm_next_token(f);
    const int h = detail::pgm_next_token(f);
    const int maxval = detail::pgm_next_token(f);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("malformed PGM dimensions: " + path);
    f.get();  // single whitespace after maxval

    const bool wide = maxval > 255;
    std::vector<uint8_t> raw(static_cast<size_t>(h) * w * (wide ? 2 : 1));
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw std::runtime_error("truncated PGM data: " + path);

    ComplexImage full(h, w);
    for (int i = 0; i < h * w; ++i) {
        const double v = wide ? (raw[static_cast<size_t>(2 * i)] * 256.0 + raw[static_cast<size_t>(2 * i + 1)])
                              : raw[static_cast<size_t>(i)];
        full.data[static_cast<size_t>(i)] = v / maxval;
    }

    const int ch = detail::largest_pow2_at_most(h);
    const int cw = detail::largest_pow2_at_most(w);
    if (ch == h && cw == w) return full;

    std::cerr << "warning: " << path << " is " << h << "x" << w << "; cropping to centered " << ch
              << "x" << cw << "\n";
    ComplexImage crop(ch, cw);
    const int r0 = (h - ch) / 2, c0 = (w - cw) / 2;
    for (int r = 0; r < ch; ++r)
        for (int c = 0; c < cw; ++c) crop.at(r, c) = full.at(r0 + r, c0 + c);
    return crop;
}

// Writes the magnitude, clipped to [0,1] and quantized to 16 bits, as a
// binary PGM (big-endian sample bytes per the format).
inline void save_grayscale(const ComplexImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (int i = 0; i < img.size(); ++i) {
        const double m = std::clamp(std::abs(img.data[static_cast<size_t>(i)]), 0.0, 1.0);
        const uint16_t q = static_cast<uint16_t>(std::lround(m * 65535.0));
        const uint8_t bytes[2] = {static_cast<uint8_t>(q >> 8), static_cast<uint8_t>(q & 0xff)};
        f.write(reinterpret_cast<const char*>(bytes), 2);
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace vdamp
