#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vdamp/phantom.hpp"
#include "vdamp/spectrum.hpp"

using namespace vdamp;

namespace {

// spectrum row for an arbitrary atom of a subband, for translation checks
std::vector<double> atom_spectrum(const SubbandLayout& lay, int band, int k) {
    WaveletCoeffs impulse(lay);
    impulse.data[static_cast<size_t>(lay.bands[static_cast<size_t>(band)].offset + k)] = 1.0;
    const ComplexImage spec = fft2_unitary(dwt_inverse(impulse));
    std::vector<double> row(static_cast<size_t>(lay.total()));
    for (int i = 0; i < lay.total(); ++i) row[static_cast<size_t>(i)] = std::norm(spec.data[static_cast<size_t>(i)]);
    return row;
}

}  // namespace

TEST_CASE("subband spectra rows are unit mass and non-negative") {
    for (int s : {1, 2}) {
        const SubbandSpectra S = build_subband_spectra(16, 16, s);
        for (const auto& row : S.rows) {
            double sum = 0.0;
            for (double v : row) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("rows are invariant to the atom position within a subband") {
    const SubbandSpectra S = build_subband_spectra(16, 16, 2);
    Rng rng(4, streams::test);
    for (int b = 0; b < S.layout.count(); ++b) {
        const int nb = S.layout.bands[static_cast<size_t>(b)].count();
        for (int pair = 0; pair < 3; ++pair) {
            const int k1 = static_cast<int>(rng.uniform(static_cast<uint64_t>(10 * b + pair)) * nb);
            const int k2 = static_cast<int>(rng.uniform(static_cast<uint64_t>(10 * b + pair + 500)) * nb);
            const auto r1 = atom_spectrum(S.layout, b, k1);
            const auto r2 = atom_spectrum(S.layout, b, k2);
            double max_diff = 0.0;
            for (size_t i = 0; i < r1.size(); ++i) max_diff = std::max(max_diff, std::abs(r1[i] - r2[i]));
            CHECK(max_diff < 1e-12);
        }
    }
}

TEST_CASE("approximation row concentrates at low frequencies") {
    // direct-computation oracle on the 8x8, s=1 approximation atom: the
    // centered 4x4 low-frequency block holds most of the mass and the DC bin
    // is the single largest entry
    const SubbandSpectra S = build_subband_spectra(8, 8, 1);
    const auto& row = S.rows[static_cast<size_t>(S.layout.approx_index())];
    double center_mass = 0.0;
    for (int r = 2; r < 6; ++r)
        for (int c = 2; c < 6; ++c) center_mass += row[static_cast<size_t>(r) * 8 + c];
    CHECK(center_mass > 0.5);
    const double dc = row[4 * 8 + 4];
    for (size_t i = 0; i < row.size(); ++i) CHECK(row[i] <= dc + 1e-15);
}

TEST_CASE("aliasing_spectrum_exact closed forms") {
    const ComplexImage x0 = oracle::random_image(8, 8, 50);
    const ComplexImage y0 = fft2_unitary(x0);

    ProbabilityMap ones(8, 8, 1.0);
    for (double v : aliasing_spectrum_exact(y0, ones, 0.0)) CHECK(v == 0.0);

    ProbabilityMap half(8, 8, 0.5);
    const auto spec = aliasing_spectrum_exact(y0, half, 0.0);
    for (int i = 0; i < y0.size(); ++i)
        CHECK(spec[static_cast<size_t>(i)] == Catch::Approx(std::norm(y0.data[static_cast<size_t>(i)])).margin(1e-15));
}

TEST_CASE("aliasing_spectrum_exact matches Monte Carlo") {
    const int h = 16, w = 16, trials = 4000;
    const ComplexImage x0 = oracle::random_image(h, w, 51);
    const ComplexImage y0 = fft2_unitary(x0);
    ProbabilityMap pm(h, w);
    Rng prng(60, streams::test);
    for (int i = 0; i < h * w; ++i) pm.p[static_cast<size_t>(i)] = 0.1 + 0.9 * prng.uniform(static_cast<uint64_t>(i));
    const double sigma = 0.1;

    std::vector<double> acc(static_cast<size_t>(h * w), 0.0);
    std::vector<double> acc2(static_cast<size_t>(h * w), 0.0);
    for (int t = 0; t < trials; ++t) {
        const SamplingSet s = draw_mask(pm, 4000 + static_cast<uint64_t>(t));
        Rng nrng(9000 + static_cast<uint64_t>(t), streams::noise);
        for (int i = 0; i < h * w; ++i) {
            cplx y = 0.0;
            if (s.mask[static_cast<size_t>(i)])
                y = y0.data[static_cast<size_t>(i)] + nrng.cnormal(static_cast<uint64_t>(i), sigma);
            const double err = std::norm(y0.data[static_cast<size_t>(i)] - y / pm.p[static_cast<size_t>(i)]);
            acc[static_cast<size_t>(i)] += err;
            acc2[static_cast<size_t>(i)] += err * err;
        }
    }
    const auto exact = aliasing_spectrum_exact(y0, pm, sigma);
    for (int i = 0; i < h * w; ++i) {
        const double mean = acc[static_cast<size_t>(i)] / trials;
        const double var = std::max(acc2[static_cast<size_t>(i)] / trials - mean * mean, 0.0);
        const double se = std::sqrt(var / trials);
        CHECK(std::abs(mean - exact[static_cast<size_t>(i)]) <= 4.0 * se + 1e-12);
    }
}

TEST_CASE("tau_y_estimate closed forms and unbiasedness") {
    // single-entry arithmetic: m=1, p=1/2, z=2, sigma=0 -> 2*(1*4) = 8
    ComplexImage z(16, 16);
    z.data[0] = 2.0;
    SamplingSet full(16, 16);
    std::fill(full.mask.begin(), full.mask.end(), 1);
    full.n_observed = full.size();
    ProbabilityMap half(16, 16, 0.5);
    const auto tau = tau_y_estimate(z, full, half, 0.0);
    CHECK(tau[0] == Catch::Approx(8.0).margin(1e-14));

    // full sampling, p = 1, sigma = 0 -> zero
    ProbabilityMap ones(16, 16, 1.0);
    for (double v : tau_y_estimate(z, full, ones, 0.0)) CHECK(v == 0.0);

    // Monte Carlo mean matches the exact spectrum
    const int h = 16, w = 16, trials = 4000;
    const ComplexImage x0 = oracle::random_image(h, w, 52);
    const ComplexImage y0 = fft2_unitary(x0);
    ProbabilityMap pm(h, w);
    Rng prng(61, streams::test);
    for (int i = 0; i < h * w; ++i) pm.p[static_cast<size_t>(i)] = 0.15 + 0.85 * prng.uniform(static_cast<uint64_t>(i));
    const double sigma = 0.05;

    std::vector<double> acc(static_cast<size_t>(h * w), 0.0), acc2(static_cast<size_t>(h * w), 0.0);
    for (int t = 0; t < trials; ++t) {
        const SamplingSet s = draw_mask(pm, 12000 + static_cast<uint64_t>(t));
        const ComplexImage y = measure(x0, s, sigma, 15000 + static_cast<uint64_t>(t));
        const auto est = tau_y_estimate(y, s, pm, sigma);  // z_0 = y when r~_0 = 0
        for (int i = 0; i < h * w; ++i) {
            acc[static_cast<size_t>(i)] += est[static_cast<size_t>(i)];
            acc2[static_cast<size_t>(i)] += est[static_cast<size_t>(i)] * est[static_cast<size_t>(i)];
        }
    }
    const auto exact = aliasing_spectrum_exact(y0, pm, sigma);
    for (int i = 0; i < h * w; ++i) {
        const double mean = acc[static_cast<size_t>(i)] / trials;
        const double var = std::max(acc2[static_cast<size_t>(i)] / trials - mean * mean, 0.0);
        const double se = std::sqrt(var / trials);
        CHECK(std::abs(mean - exact[static_cast<size_t>(i)]) <= 4.0 * se + 1e-12);
    }
}

TEST_CASE("tau_wavelet closed forms") {
    const SubbandSpectra S = build_subband_spectra(16, 16, 2);
    const std::vector<double> zeros(static_cast<size_t>(16 * 16), 0.0);
    for (double v : tau_wavelet(S, zeros).values) CHECK(v == 0.0);

    const double c = 3.7;
    const std::vector<double> constant(static_cast<size_t>(16 * 16), c);
    for (double v : tau_wavelet(S, constant).values) CHECK(std::abs(v - c) < 1e-10 * c);
}

TEST_CASE("tau_wavelet tracks the subband error power at k=0") {
    // light version of the appendix oracle: phantom, moderate acceleration
    const int n = 64, s = 2, trials = 500;
    const ComplexImage x0 = shepp_logan(n, n);
    const WaveletCoeffs w0 = dwt_forward(x0, s);
    const ProbabilityMap pm = make_density(n, n, 0.25);
    const double sigma = snr_to_sigma(x0, 40.0);
    const SubbandSpectra S = build_subband_spectra(n, n, s);
    const SubbandLayout& lay = S.layout;

    std::vector<double> tau_mean(static_cast<size_t>(lay.count()), 0.0);
    std::vector<double> mse_mean(static_cast<size_t>(lay.count()), 0.0);
    for (int t = 0; t < trials; ++t) {
        const SamplingSet mask = draw_mask(pm, 500 + static_cast<uint64_t>(t));
        const ComplexImage y = measure(x0, mask, sigma, 800 + static_cast<uint64_t>(t));
        const auto tau_y = tau_y_estimate(y, mask, pm, sigma);
        const SubbandVector tau = tau_wavelet(S, tau_y);

        ComplexImage comp = y;
        for (int i = 0; i < comp.size(); ++i) comp.data[static_cast<size_t>(i)] /= pm.p[static_cast<size_t>(i)];
        const WaveletCoeffs r0 = dwt_forward(ifft2_unitary(comp), s);
        for (int b = 0; b < lay.count(); ++b) {
            const auto rb = r0.band(b);
            const auto wb = w0.band(b);
            double mse = 0.0;
            for (size_t j = 0; j < rb.size(); ++j) mse += std::norm(rb[j] - wb[j]);
            mse_mean[static_cast<size_t>(b)] += mse / static_cast<double>(rb.size());
            tau_mean[static_cast<size_t>(b)] += tau[b];
        }
    }
    for (int b = 0; b < lay.count(); ++b) {
        const double ratio = tau_mean[static_cast<size_t>(b)] / mse_mean[static_cast<size_t>(b)];
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.1);
    }
}
