#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "vdamp/image.hpp"
#include "vdamp/wavelet.hpp"

namespace vdamp {

// Complex soft thresholding, v * (1 - min(t/|v|, 1)); maps 0 to 0.
inline cplx soft_threshold(cplx v, double t) {
    const double mag = std::abs(v);
    if (mag <= t) return {0.0, 0.0};
    return v * (1.0 - t / mag);
}

// Averaged real/imaginary partial derivative of the soft threshold:
// 0 for |v| <= t, else 1 - t/(2|v|).
inline double soft_threshold_partial(cplx v, double t) {
    const double mag = std::abs(v);
    if (mag <= t) return 0.0;
    return 1.0 - t / (2.0 * mag);
}

namespace detail {

// Sorted magnitudes with prefix/suffix sums; one build serves every
// threshold evaluation bit-identically, so the fast candidate scan and
// csure_soft agree exactly.
struct SurePartition {
    std::vector<double> mags;        // ascending
    std::vector<double> prefix_sq;   // prefix_sq[i] = sum_{j<i} mags[j]^2
    std::vector<double> suffix_inv;  // suffix_inv[i] = sum_{j>=i} 1/mags[j] (zeros skipped)
    double tau = 0.0;

    SurePartition(std::span<const cplx> v, double tau_v) : tau(tau_v) {
        if (v.empty()) throw std::invalid_argument("cSURE: empty input");
        if (!(tau_v > 0.0)) throw std::invalid_argument("cSURE: tau_v must be positive");
        mags.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
        std::sort(mags.begin(), mags.end());
        prefix_sq.resize(v.size() + 1, 0.0);
        for (size_t i = 0; i < v.size(); ++i) prefix_sq[i + 1] = prefix_sq[i] + mags[i] * mags[i];
        suffix_inv.resize(v.size() + 1, 0.0);
        for (size_t i = v.size(); i-- > 0;)
            suffix_inv[i] = suffix_inv[i + 1] + (mags[i] > 0.0 ? 1.0 / mags[i] : 0.0);
    }

    double evaluate(double t) const {
        const size_t n = mags.size();
        const size_t i0 = static_cast<size_t>(std::upper_bound(mags.begin(), mags.end(), t) - mags.begin());
        const double k = static_cast<double>(n - i0);
        return (t * t + 2.0 * tau) * k - static_cast<double>(n) * tau + prefix_sq[i0] -
               t * tau * suffix_inv[i0];
    }
};

}  // namespace detail

// Unbiased risk estimate for complex soft thresholding at threshold t, for
// v = v0 + CN(0, tau_v I):
//   (t^2 + 2 tau) #{|v_j| > t} - N tau + sum_{|v_j|<=t} |v_j|^2
//   - sum_{|v_j|>t} t tau / |v_j|.
inline double csure_soft(std::span<const cplx> v, double tau_v, double t) {
    return detail::SurePartition(v, tau_v).evaluate(t);
}

struct ThresholdChoice {
    double t_hat = 0.0;
    double sure_min = 0.0;
};

// Minimizes csure_soft over the candidate set {0} u {|v_1|, ..., |v_N|}.
// O(N log N); ties break toward the smallest candidate.
inline ThresholdChoice optimize_threshold(std::span<const cplx> v, double tau_v) {
    const detail::SurePartition part(v, tau_v);
    double best_t = 0.0;
    double best_sure = part.evaluate(0.0);
    for (size_t i = 0; i < part.mags.size(); ++i) {
        const double t = part.mags[i];
        if (i > 0 && t == part.mags[i - 1]) continue;
        const double s = part.evaluate(t);
        if (s < best_sure) {
            best_sure = s;
            best_t = t;
        }
    }
    return {best_t, best_sure};
}

// Output of the SURE-tuned subband denoiser.
struct DenoiseResult {
    WaveletCoeffs w_hat;
    SubbandVector thresholds;   // chosen t per subband, in whitened units
    SubbandVector alpha;        // per-subband mean of the soft-threshold partials
    SubbandVector sure_values;  // minimized cSURE per subband (whitened units)
    bool small_subband_warning = false;
};

// Subband-wise SURE-tuned complex soft thresholding: each band is whitened
// by sqrt(tau_b), thresholded at the cSURE minimizer for unit variance, and
// unwhitened. `forced_thresholds`, when finite at a band, bypasses the
// optimization (used to freeze degenerate bands).
inline DenoiseResult gsure_denoise(const WaveletCoeffs& r, const SubbandVector& tau,
                                   const std::vector<double>* forced_thresholds = nullptr) {
    const SubbandLayout& lay = r.layout;
    if (tau.layout != lay) throw std::invalid_argument("gsure_denoise: layout mismatch");
    DenoiseResult out;
    out.w_hat = WaveletCoeffs(lay);
    out.thresholds = SubbandVector(lay);
    out.alpha = SubbandVector(lay);
    out.sure_values = SubbandVector(lay);

    std::vector<double> partials(static_cast<size_t>(lay.total()), 0.0);
    std::vector<cplx> whitened;
    for (int b = 0; b < lay.count(); ++b) {
        if (!(tau[b] > 0.0)) throw std::invalid_argument("gsure_denoise: tau must be positive (after flooring)");
        const Subband& sb = lay.bands[static_cast<size_t>(b)];
        if (sb.count() < 16) out.small_subband_warning = true;

        const double root_tau = std::sqrt(tau[b]);
        const auto rb = r.band(b);
        whitened.assign(rb.begin(), rb.end());
        for (cplx& z : whitened) z /= root_tau;

        double t_white;
        if (forced_thresholds && std::isfinite((*forced_thresholds)[static_cast<size_t>(b)])) {
            t_white = (*forced_thresholds)[static_cast<size_t>(b)];
            out.sure_values[b] = csure_soft(whitened, 1.0, t_white);
        } else {
            const ThresholdChoice choice = optimize_threshold(whitened, 1.0);
            t_white = choice.t_hat;
            out.sure_values[b] = choice.sure_min;
        }
        out.thresholds[b] = t_white;

        const double t = t_white * root_tau;  // threshold in signal units
        auto wb = out.w_hat.band(b);
        for (size_t j = 0; j < rb.size(); ++j) {
            wb[j] = soft_threshold(rb[j], t);
            partials[static_cast<size_t>(sb.offset) + j] = soft_threshold_partial(rb[j], t);
        }
    }
    out.alpha = subband_average(partials, lay);
    return out;
}

// Onsager-corrected update c (.) (g - alpha (.) r), the subband-expanded
// entrywise products.
inline WaveletCoeffs onsager_correct(const WaveletCoeffs& g, const WaveletCoeffs& r,
                                     const SubbandVector& alpha, const SubbandVector& c) {
    if (g.layout != r.layout) throw std::invalid_argument("onsager_correct: layout mismatch");
    WaveletCoeffs out(g.layout);
    for (int b = 0; b < g.layout.count(); ++b) {
        const Subband& sb = g.layout.bands[static_cast<size_t>(b)];
        for (int j = 0; j < sb.count(); ++j) {
            const size_t i = static_cast<size_t>(sb.offset + j);
            out.data[i] = c[b] * (g.data[i] - alpha[b] * r.data[i]);
        }
    }
    return out;
}

// c_b = 1/(1 - alpha_b). A band whose alpha reaches 1 (denoiser killed the
// whole band) is clamped to 1e6 and flagged.
inline SubbandVector c_alpha(const SubbandVector& alpha, std::vector<uint8_t>* clamped = nullptr) {
    SubbandVector c(alpha.layout);
    if (clamped) clamped->assign(static_cast<size_t>(alpha.count()), 0);
    for (int b = 0; b < alpha.count(); ++b) {
        if (alpha[b] >= 1.0 - 1e-6) {
            c[b] = 1e6;
            if (clamped) (*clamped)[static_cast<size_t>(b)] = 1;
        } else {
            c[b] = 1.0 / (1.0 - alpha[b]);
        }
    }
    return c;
}

// SURE-optimal gain: c_b = Re[r_b^H (g_b - alpha_b r_b)] / ||g_b - alpha_b r_b||^2,
// the minimizer of ||c (g_b - alpha_b r_b) - r_b||^2 over real c. Bands with a
// zero denominator fall back to 1/(1 - alpha_b) and are flagged.
inline SubbandVector c_sure(const WaveletCoeffs& r, const WaveletCoeffs& g,
                            const SubbandVector& alpha, std::vector<uint8_t>* fallback = nullptr) {
    if (g.layout != r.layout) throw std::invalid_argument("c_sure: layout mismatch");
    SubbandVector c(alpha.layout);
    if (fallback) fallback->assign(static_cast<size_t>(alpha.count()), 0);
    for (int b = 0; b < alpha.count(); ++b) {
        const Subband& sb = r.layout.bands[static_cast<size_t>(b)];
        double num = 0.0, den = 0.0;
        for (int j = 0; j < sb.count(); ++j) {
            const size_t i = static_cast<size_t>(sb.offset + j);
            const cplx d = g.data[i] - alpha[b] * r.data[i];
            num += std::real(std::conj(r.data[i]) * d);
            den += std::norm(d);
        }
        if (den > 0.0) {
            c[b] = num / den;
        } else {
            c[b] = alpha[b] >= 1.0 - 1e-6 ? 1e6 : 1.0 / (1.0 - alpha[b]);
            if (fallback) (*fallback)[static_cast<size_t>(b)] = 1;
        }
    }
    return c;
}

}  // namespace vdamp
