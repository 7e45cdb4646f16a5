#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "vdamp/sampling.hpp"

using namespace vdamp;

TEST_CASE("make_density hits the target fraction") {
    for (double target : {1.0, 0.5, 0.25, 0.125}) {
        const ProbabilityMap pm = make_density(64, 64, target);
        double sum = 0.0;
        for (double p : pm.p) sum += p;
        CHECK(std::abs(sum / pm.size() - target) <= 1e-3 * target);
        if (target == 1.0)
            for (double p : pm.p) CHECK(p == 1.0);
    }
}

TEST_CASE("make_density shape: floor, full center, radial monotonicity") {
    const ProbabilityMap pm = make_density(64, 64, 0.25, 1.0 / 32.0, 4.0, 0.01);
    double pmin = 1.0;
    for (double p : pm.p) pmin = std::min(pmin, p);
    CHECK(pmin >= 0.01);
    CHECK(pm.p[32 * 64 + 32] == 1.0);

    // scan oracle: p must be non-increasing in bin radius
    std::vector<std::pair<double, double>> rp;
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
            rp.push_back({detail::bin_radius(r, c, 64, 64), pm.p[static_cast<size_t>(r) * 64 + c]});
    std::sort(rp.begin(), rp.end());
    for (size_t i = 1; i < rp.size(); ++i) CHECK(rp[i].second <= rp[i - 1].second + 1e-12);
}

TEST_CASE("make_density rejects infeasible targets") {
    CHECK_THROWS_AS(make_density(64, 64, 0.001, 1.0 / 32.0, 4.0, 0.01), std::runtime_error);
    CHECK_THROWS_AS(make_density(64, 64, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_density(64, 64, 1.5), std::invalid_argument);
}

TEST_CASE("draw_mask basics") {
    ProbabilityMap ones(16, 16, 1.0);
    const SamplingSet full = draw_mask(ones, 3);
    CHECK(full.n_observed == full.size());

    ProbabilityMap half(256, 256, 0.5);
    const SamplingSet s = draw_mask(half, 11);
    const double frac = static_cast<double>(s.n_observed) / s.size();
    CHECK(frac >= 0.49);
    CHECK(frac <= 0.51);

    const SamplingSet again = draw_mask(half, 11);
    CHECK(again.mask == s.mask);
    const SamplingSet other = draw_mask(half, 12);
    CHECK(other.mask != s.mask);
}

TEST_CASE("draw_mask marginals match the probabilities") {
    const ProbabilityMap pm = make_density(16, 16, 0.3, 1.0 / 8.0, 2.0, 0.05);
    const int trials = 10000;
    std::vector<int> hits(static_cast<size_t>(pm.size()), 0);
    for (int t = 0; t < trials; ++t) {
        const SamplingSet s = draw_mask(pm, 1000 + static_cast<uint64_t>(t));
        for (int i = 0; i < pm.size(); ++i) hits[static_cast<size_t>(i)] += s.mask[static_cast<size_t>(i)];
    }
    for (int i = 0; i < pm.size(); i += 7) {
        const double p = pm.p[static_cast<size_t>(i)];
        const double freq = static_cast<double>(hits[static_cast<size_t>(i)]) / trials;
        const double se = std::sqrt(p * (1.0 - p) / trials);
        CHECK(std::abs(freq - p) <= 4.0 * se + 1e-12);
    }
}

TEST_CASE("measure forward model") {
    const ComplexImage x0 = oracle::random_image(16, 16, 21);
    ProbabilityMap ones(16, 16, 1.0);
    const SamplingSet full = draw_mask(ones, 0);

    // sigma = 0, full mask: y equals the unitary FFT exactly
    const ComplexImage y = measure(x0, full, 0.0, 5);
    const ComplexImage f = fft2_unitary(x0);
    CHECK(y.data == f.data);

    // entries off the sampling set are exactly zero
    ProbabilityMap half(16, 16, 0.5);
    const SamplingSet part = draw_mask(half, 1);
    const ComplexImage yp = measure(x0, part, 0.7, 5);
    for (int i = 0; i < yp.size(); ++i) {
        if (!part.mask[static_cast<size_t>(i)]) CHECK(yp.data[static_cast<size_t>(i)] == cplx(0.0, 0.0));
    }

    CHECK_THROWS_AS(measure(x0, full, -1.0, 5), std::invalid_argument);
}

TEST_CASE("measure noise level") {
    ComplexImage zero(64, 64);
    ProbabilityMap ones(64, 64, 1.0);
    const SamplingSet full = draw_mask(ones, 0);
    const ComplexImage y = measure(zero, full, 1.0, 99);
    double mean_power = 0.0;
    for (const cplx& v : y.data) mean_power += std::norm(v);
    mean_power /= y.size();
    CHECK(mean_power >= 0.95);
    CHECK(mean_power <= 1.05);
}

TEST_CASE("snr_to_sigma") {
    ComplexImage ones_img(8, 8);
    for (auto& v : ones_img.data) v = 1.0;  // ||x0||^2 = N
    CHECK(snr_to_sigma(ones_img, 0.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(snr_to_sigma(ones_img, 40.0) == Catch::Approx(0.01).epsilon(1e-14));
    ComplexImage twos(8, 8);
    for (auto& v : twos.data) v = 2.0;  // ||x0||^2 = 4N
    CHECK(snr_to_sigma(twos, 40.0) == Catch::Approx(0.02).epsilon(1e-14));
    ComplexImage zero(8, 8);
    CHECK_THROWS_AS(snr_to_sigma(zero, 40.0), std::invalid_argument);
}

TEST_CASE("density compensation is unbiased over mask draws") {
    const int h = 16, w = 16, trials = 10000;
    const ComplexImage x0 = oracle::random_image(h, w, 33);
    const ComplexImage y0 = fft2_unitary(x0);
    const ProbabilityMap pm = make_density(h, w, 0.4, 1.0 / 8.0, 2.0, 0.05);

    std::vector<cplx> acc(static_cast<size_t>(h * w), cplx(0.0, 0.0));
    for (int t = 0; t < trials; ++t) {
        const SamplingSet s = draw_mask(pm, 7000 + static_cast<uint64_t>(t));
        for (int i = 0; i < h * w; ++i) {
            if (s.mask[static_cast<size_t>(i)])
                acc[static_cast<size_t>(i)] += y0.data[static_cast<size_t>(i)] / pm.p[static_cast<size_t>(i)];
        }
    }
    for (int i = 0; i < h * w; ++i) {
        const double p = pm.p[static_cast<size_t>(i)];
        const cplx mean = acc[static_cast<size_t>(i)] / static_cast<double>(trials);
        const double se = std::abs(y0.data[static_cast<size_t>(i)]) * std::sqrt((1.0 - p) / p / trials);
        CHECK(std::abs(mean - y0.data[static_cast<size_t>(i)]) <= 4.0 * se + 1e-12);
    }
}

TEST_CASE("binary serialization round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vdamp_io_test";
    fs::create_directories(dir);

    const ProbabilityMap pm = make_density(32, 16, 0.3, 1.0 / 8.0, 3.0, 0.02);
    const std::string pmap_path = (dir / "pmap.bin").string();
    save_probability_map(pm, pmap_path);
    const ProbabilityMap pm2 = load_probability_map(pmap_path);
    CHECK(pm2.height == pm.height);
    CHECK(pm2.width == pm.width);
    CHECK(pm2.p == pm.p);

    const SamplingSet s = draw_mask(pm, 5);
    const std::string mask_path = (dir / "mask.bin").string();
    save_sampling_set(s, mask_path);
    const SamplingSet s2 = load_sampling_set(mask_path);
    CHECK(s2.mask == s.mask);
    CHECK(s2.n_observed == s.n_observed);

    CHECK_THROWS_AS(load_sampling_set(pmap_path), std::runtime_error);
    fs::remove_all(dir);
}
