#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vdamp/fft.hpp"
#include "vdamp/image.hpp"
#include "vdamp/sampling.hpp"
#include "vdamp/wavelet.hpp"

namespace vdamp {

// The 1+3s unique rows of the wavelet power spectrum |F Psi^H|^2: row b is
// the Fourier power spectrum shared by every atom of subband b. Stored as
// rows, never as an N x N matrix, so the wavelet transfer of an aliasing
// spectrum costs 1+3s inner products.
struct SubbandSpectra {
    SubbandLayout layout;
    std::vector<std::vector<double>> rows;  // (3s+1) x N
};

// Row b = |F psi_b|^2 for one atom of subband b; translates within a subband
// change only the phase, so one atom per subband suffices.
inline SubbandSpectra build_subband_spectra(int h, int w, int s) {
    SubbandSpectra out;
    out.layout = SubbandLayout::make(h, w, s);
    out.rows.resize(static_cast<size_t>(out.layout.count()));
    for (int b = 0; b < out.layout.count(); ++b) {
        WaveletCoeffs impulse(out.layout);
        impulse.data[static_cast<size_t>(out.layout.bands[static_cast<size_t>(b)].offset)] = 1.0;
        const ComplexImage spec = fft2_unitary(dwt_inverse(impulse));
        auto& row = out.rows[static_cast<size_t>(b)];
        row.resize(static_cast<size_t>(out.layout.total()));
        for (int i = 0; i < out.layout.total(); ++i) row[static_cast<size_t>(i)] = std::norm(spec.data[static_cast<size_t>(i)]);
    }
    return out;
}

// Exact aliasing power spectrum ((1-p)/p)|y_ref|^2 + sigma^2/p. Test oracle
// only; solvers use tau_y_estimate, which does not need the reference.
inline std::vector<double> aliasing_spectrum_exact(const ComplexImage& y_ref,
                                                   const ProbabilityMap& pmap, double sigma_eps) {
    if (y_ref.height != pmap.height || y_ref.width != pmap.width)
        throw std::invalid_argument("aliasing_spectrum_exact: shape mismatch");
    std::vector<double> out(static_cast<size_t>(y_ref.size()));
    const double s2 = sigma_eps * sigma_eps;
    for (int i = 0; i < y_ref.size(); ++i) {
        const double p = pmap.p[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)] = ((1.0 - p) / p) * std::norm(y_ref.data[static_cast<size_t>(i)]) + s2 / p;
    }
    return out;
}

// Importance-sampled estimate of the aliasing power spectrum from the masked
// residual z: entrywise (m/p) * [((1-p)/p)|z|^2 + sigma^2], zero off the
// sampling set. Unbiased for aliasing_spectrum_exact.
inline std::vector<double> tau_y_estimate(const ComplexImage& z, const SamplingSet& mask,
                                          const ProbabilityMap& pmap, double sigma_eps) {
    if (z.height != pmap.height || z.width != pmap.width || z.height != mask.height || z.width != mask.width)
        throw std::invalid_argument("tau_y_estimate: shape mismatch");
    std::vector<double> out(static_cast<size_t>(z.size()), 0.0);
    const double s2 = sigma_eps * sigma_eps;
    for (int i = 0; i < z.size(); ++i) {
        if (!mask.mask[static_cast<size_t>(i)]) continue;
        const double p = pmap.p[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)] = (((1.0 - p) / p) * std::norm(z.data[static_cast<size_t>(i)]) + s2) / p;
    }
    return out;
}

// Transfer of a Fourier-domain aliasing spectrum to per-subband effective
// noise variances: value b = <row_b, tau_y>.
inline SubbandVector tau_wavelet(const SubbandSpectra& spectra, const std::vector<double>& tau_y) {
    if (tau_y.size() != static_cast<size_t>(spectra.layout.total()))
        throw std::invalid_argument("tau_wavelet: length mismatch");
    SubbandVector out(spectra.layout);
    for (int b = 0; b < spectra.layout.count(); ++b) {
        const auto& row = spectra.rows[static_cast<size_t>(b)];
        double acc = 0.0;
        for (size_t i = 0; i < tau_y.size(); ++i) acc += row[i] * tau_y[i];
        out[b] = acc;
    }
    return out;
}

}  // namespace vdamp
