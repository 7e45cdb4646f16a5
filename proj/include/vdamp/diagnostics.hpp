#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "vdamp/solvers.hpp"
#include "vdamp/wavelet.hpp"

namespace vdamp {

namespace detail {

// Acklam's rational approximation for the standard normal quantile plus one
// Newton step through erfc, good to ~1e-15.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf > 0.0) x -= (cdf - p) / pdf;
    return x;
}

inline bool degenerate_variance(double var, double mean_sq) {
    return !(var > 1e-24 * std::max(mean_sq, std::numeric_limits<double>::min()));
}

}  // namespace detail

// Empirical excess kurtosis mu_4 / sigma^4 - 3 (population moments).
inline double excess_kurtosis(std::span<const double> samples) {
    if (samples.size() < 4) throw std::invalid_argument("excess_kurtosis: need at least 4 samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    double m2 = 0.0, m4 = 0.0, ms = 0.0;
    for (double x : samples) {
        const double d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
        ms += x * x;
    }
    m2 /= static_cast<double>(samples.size());
    m4 /= static_cast<double>(samples.size());
    ms /= static_cast<double>(samples.size());
    if (detail::degenerate_variance(m2, ms)) throw std::domain_error("excess_kurtosis: zero variance");
    return m4 / (m2 * m2) - 3.0;
}

enum class Part { real, imag };

struct MeanKurtosisResult {
    double value = 0.0;
    std::vector<int> skipped_subbands;  // degenerate (zero-variance) bands
};

// Mean of per-subband excess kurtosis of the chosen component of a
// wavelet-domain error vector. Degenerate bands are skipped and flagged.
inline MeanKurtosisResult mean_subband_kurtosis(const WaveletCoeffs& err, Part part) {
    MeanKurtosisResult res;
    double acc = 0.0;
    int used = 0;
    std::vector<double> comp;
    for (int b = 0; b < err.layout.count(); ++b) {
        const auto band = err.band(b);
        comp.resize(band.size());
        for (size_t j = 0; j < band.size(); ++j)
            comp[j] = part == Part::real ? band[j].real() : band[j].imag();
        try {
            acc += excess_kurtosis(comp);
            ++used;
        } catch (const std::domain_error&) {
            res.skipped_subbands.push_back(b);
        }
    }
    if (used == 0) throw std::domain_error("mean_subband_kurtosis: every subband degenerate");
    res.value = acc / used;
    return res;
}

struct QQPoint {
    double theoretical;
    double empirical;
};

// Quantile-quantile data against the standard normal: the sample is
// standardized (zero mean, unit population variance), and its quantiles at
// plotting positions (i - 0.5)/n_points are paired with normal quantiles.
// Linear output along the identity indicates Gaussianity.
inline std::vector<QQPoint> qq_data(std::span<const double> samples, int n_points) {
    if (n_points < 1 || static_cast<size_t>(n_points) > samples.size())
        throw std::invalid_argument("qq_data: n_points must be in [1, sample count]");
    const size_t n = samples.size();
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0, ms = 0.0;
    for (double x : samples) {
        var += (x - mean) * (x - mean);
        ms += x * x;
    }
    var /= static_cast<double>(n);
    ms /= static_cast<double>(n);
    if (detail::degenerate_variance(var, ms)) throw std::domain_error("qq_data: zero variance");
    const double inv_sd = 1.0 / std::sqrt(var);

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<QQPoint> out(static_cast<size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double q = (i + 0.5) / n_points;
        // Hazen position within the sorted sample, linearly interpolated
        const double pos = std::clamp(q * static_cast<double>(n) - 0.5, 0.0, static_cast<double>(n - 1));
        const size_t lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        const double sample_q = sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
        out[static_cast<size_t>(i)] = {detail::normal_quantile(q), (sample_q - mean) * inv_sd};
    }
    return out;
}

struct TauTrackingRow {
    int iter = 0;
    int subband = 0;
    double true_nmse = 0.0;   // ||r_b - w0_b||^2 / ||w0_b||^2
    double model_nmse = 0.0;  // N_b tau_b / ||w0_b||^2
    double ratio = 0.0;       // model / true
    bool ratio_defined = false;
};

// Per-iteration, per-subband comparison of the tau model against the true
// aliasing energy, from a trace recorded with ground truth.
inline std::vector<TauTrackingRow> tau_tracking_report(const std::vector<IterationRecord>& trace) {
    std::vector<TauTrackingRow> rows;
    for (const IterationRecord& rec : trace) {
        if (rec.subband_nmse.empty())
            throw std::invalid_argument("tau_tracking_report: trace lacks ground-truth columns");
        for (size_t b = 0; b < rec.subband_nmse.size(); ++b) {
            TauTrackingRow row;
            row.iter = rec.iter;
            row.subband = static_cast<int>(b);
            row.true_nmse = rec.subband_nmse[b];
            row.model_nmse = rec.subband_nmse_model[b];
            if (row.true_nmse > 0.0 && std::isfinite(row.true_nmse)) {
                row.ratio = row.model_nmse / row.true_nmse;
                row.ratio_defined = true;
            } else {
                row.ratio = std::numeric_limits<double>::quiet_NaN();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace vdamp
