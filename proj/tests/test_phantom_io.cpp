#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "vdamp/image_io.hpp"
#include "vdamp/phantom.hpp"

using namespace vdamp;

namespace {

// independent point-in-ellipse predicate via the implicit conic form
double conic_value(const EllipseSpec& e, double x, double y) {
    const double c = std::cos(e.phi), s = std::sin(e.phi);
    const double A = (c * c) / (e.a * e.a) + (s * s) / (e.b * e.b);
    const double B = 2.0 * c * s * (1.0 / (e.a * e.a) - 1.0 / (e.b * e.b));
    const double C = (s * s) / (e.a * e.a) + (c * c) / (e.b * e.b);
    const double dx = x - e.cx, dy = y - e.cy;
    return A * dx * dx + B * dx * dy + C * dy * dy;
}

}  // namespace

TEST_CASE("shepp_logan basics") {
    const ComplexImage img = shepp_logan(64, 64);
    CHECK(img.at(0, 0) == cplx(0.0, 0.0));
    CHECK(img.at(0, 63) == cplx(0.0, 0.0));
    CHECK(img.at(63, 0) == cplx(0.0, 0.0));
    CHECK(img.at(63, 63) == cplx(0.0, 0.0));
    double maxval = 0.0;
    for (const cplx& v : img.data) {
        CHECK(v.imag() == 0.0);
        maxval = std::max(maxval, v.real());
    }
    CHECK(maxval == 1.0);
    CHECK_THROWS_AS(shepp_logan(8, 64), std::invalid_argument);
}

TEST_CASE("shepp_logan matches a geometric oracle") {
    const int n = 64;
    const ComplexImage img = shepp_logan(n, n);
    const auto table = detail::shepp_logan_table(false);

    // oracle render: conic form instead of rotated coordinates
    std::vector<double> expect(static_cast<size_t>(n) * n, 0.0);
    double maxval = 0.0;
    for (int r = 0; r < n; ++r) {
        const double y = -(2.0 * r + 1.0 - n) / n;
        for (int c = 0; c < n; ++c) {
            const double x = (2.0 * c + 1.0 - n) / n;
            double v = 0.0;
            for (const EllipseSpec& e : table) {
                const double q = conic_value(e, x, y);
                REQUIRE(std::abs(q - 1.0) > 1e-9);  // no pixel sits on a boundary
                if (q <= 1.0) v += e.intensity;
            }
            expect[static_cast<size_t>(r) * n + c] = v;
            maxval = std::max(maxval, v);
        }
    }
    for (int i = 0; i < n * n; ++i)
        CHECK(img.data[static_cast<size_t>(i)].real() == Catch::Approx(expect[static_cast<size_t>(i)] / maxval).margin(1e-14));
}

TEST_CASE("shepp_logan resolution consistency") {
    const ComplexImage hi = shepp_logan(512, 512);
    const ComplexImage lo = shepp_logan(256, 256);
    double sq = 0.0;
    for (int r = 0; r < 256; ++r) {
        for (int c = 0; c < 256; ++c) {
            const double avg = 0.25 * (hi.at(2 * r, 2 * c).real() + hi.at(2 * r, 2 * c + 1).real() +
                                       hi.at(2 * r + 1, 2 * c).real() + hi.at(2 * r + 1, 2 * c + 1).real());
            const double d = avg - lo.at(r, c).real();
            sq += d * d;
        }
    }
    // point sampling leaves ~0.04 RMS of edge-pixel disagreement
    CHECK(std::sqrt(sq / (256.0 * 256.0)) < 0.05);
}

TEST_CASE("modified variant raises soft-tissue contrast") {
    const ComplexImage std_img = shepp_logan(64, 64, false);
    const ComplexImage mod_img = shepp_logan(64, 64, true);
    // interior of the head: standard drops to 0.02, modified to 0.2
    CHECK(std_img.at(32, 32).real() < 0.05);
    CHECK(mod_img.at(32, 32).real() > 0.1);
}

TEST_CASE("PGM round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vdamp_pgm_test";
    fs::create_directories(dir);
    const std::string path = (dir / "phantom.pgm").string();

    const ComplexImage img = shepp_logan(64, 64);
    save_grayscale(img, path);
    const ComplexImage back = load_grayscale(path);
    REQUIRE(back.height == 64);
    REQUIRE(back.width == 64);
    double max_err = 0.0;
    for (int i = 0; i < img.size(); ++i)
        max_err = std::max(max_err, std::abs(back.data[static_cast<size_t>(i)].real() - img.data[static_cast<size_t>(i)].real()));
    CHECK(max_err <= 1.0 / 65535.0 + 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("all-black file loads as zero image") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vdamp_pgm_test2";
    fs::create_directories(dir);
    const std::string path = (dir / "black.pgm").string();
    save_grayscale(ComplexImage(32, 32), path);
    const ComplexImage img = load_grayscale(path);
    for (const cplx& v : img.data) CHECK(v == cplx(0.0, 0.0));
    fs::remove_all(dir);
}

TEST_CASE("8-bit PGM and non-dyadic crop") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vdamp_pgm_test3";
    fs::create_directories(dir);
    const std::string path = (dir / "gray300.pgm").string();
    {
        std::ofstream f(path, std::ios::binary);
        f << "P5\n# comment line\n300 300\n255\n";
        for (int i = 0; i < 300 * 300; ++i) {
            const uint8_t v = static_cast<uint8_t>(i % 251);
            f.write(reinterpret_cast<const char*>(&v), 1);
        }
    }
    const ComplexImage img = load_grayscale(path);
    CHECK(img.height == 256);
    CHECK(img.width == 256);
    // center crop: pixel (0,0) of the crop is (22,22) of the source
    CHECK(img.at(0, 0).real() == Catch::Approx(((22 * 300 + 22) % 251) / 255.0).margin(1e-12));
    CHECK_THROWS_AS(load_grayscale((dir / "missing.pgm").string()), std::runtime_error);

    const std::string bad = (dir / "bad.pgm").string();
    {
        std::ofstream f(bad, std::ios::binary);
        f << "P6\n2 2\n255\n";  // color PPM, not grayscale
        f.write("\0\0\0\0\0\0\0\0\0\0\0\0", 12);
    }
    CHECK_THROWS_WITH(load_grayscale(bad), Catch::Matchers::ContainsSubstring("unsupported"));
    fs::remove_all(dir);
}
