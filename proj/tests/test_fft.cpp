#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vdamp/fft.hpp"

using namespace vdamp;

TEST_CASE("all-zeros transforms to all-zeros") {
    ComplexImage z(4, 4);
    const ComplexImage f = fft2_unitary(z);
    for (const cplx& v : f.data) CHECK(v == cplx(0.0, 0.0));
}

TEST_CASE("constant image concentrates at the center bin") {
    const int h = 8, w = 16;
    const cplx c(0.7, -0.3);
    ComplexImage img(h, w);
    for (auto& v : img.data) v = c;
    const ComplexImage f = fft2_unitary(img);
    const double root_n = std::sqrt(static_cast<double>(h * w));
    for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
            if (r == h / 2 && col == w / 2) {
                CHECK(std::abs(f.at(r, col) - c * root_n) < 1e-12 * root_n);
            } else {
                CHECK(std::abs(f.at(r, col)) < 1e-12 * root_n);
            }
        }
    }
}

TEST_CASE("center-bin impulse inverts to constant ones") {
    const int h = 8, w = 8;
    ComplexImage spec(h, w);
    spec.at(h / 2, w / 2) = std::sqrt(static_cast<double>(h * w));
    const ComplexImage img = ifft2_unitary(spec);
    for (const cplx& v : img.data) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("matches the direct DFT oracle") {
    for (auto [h, w] : {std::pair{8, 8}, {16, 8}, {12, 10}, {7, 9}}) {
        const ComplexImage x = oracle::random_image(h, w, 100 + h + w);
        const ComplexImage fast = fft2_unitary(x);
        const ComplexImage slow = oracle::dft2_direct(x, -1);
        CHECK(rel_error(fast.data, slow.data) < 1e-12);

        const ComplexImage back_fast = ifft2_unitary(fast);
        const ComplexImage back_slow = oracle::idft2_direct(fast);
        CHECK(rel_error(back_fast.data, back_slow.data) < 1e-10);
        CHECK(rel_error(back_fast.data, x.data) < 1e-12);
    }
}

TEST_CASE("unitarity: Parseval and round trips over random inputs") {
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 << (2 + trial % 4);               // 8..64
        const int w = 1 << (2 + (trial / 4) % 4);
        const ComplexImage x = oracle::random_image(h, w, 1000 + trial);
        const ComplexImage f = fft2_unitary(x);
        CHECK(std::abs(std::sqrt(norm_sq(f)) - std::sqrt(norm_sq(x))) <= 1e-12 * std::sqrt(norm_sq(x)));
        const ComplexImage back = ifft2_unitary(f);
        CHECK(rel_error(back.data, x.data) < 1e-12);
    }
}

TEST_CASE("non-power-of-two sizes round trip") {
    const ComplexImage x = oracle::random_image(6, 15, 77);
    const ComplexImage f = fft2_unitary(x);
    CHECK(std::abs(norm_sq(f) - norm_sq(x)) < 1e-10 * norm_sq(x));
    CHECK(rel_error(ifft2_unitary(f).data, x.data) < 1e-11);
}
