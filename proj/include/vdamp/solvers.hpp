#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vdamp/denoise.hpp"
#include "vdamp/fft.hpp"
#include "vdamp/image.hpp"
#include "vdamp/sampling.hpp"
#include "vdamp/spectrum.hpp"
#include "vdamp/wavelet.hpp"

namespace vdamp {

enum class Algorithm { vdamp_alpha, vdamp_s, fista, sfista, sure_it };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::vdamp_alpha: return "vdamp_alpha";
        case Algorithm::vdamp_s: return "vdamp_s";
        case Algorithm::fista: return "fista";
        case Algorithm::sfista: return "sfista";
        case Algorithm::sure_it: return "sure_it";
    }
    return "?";
}

inline Algorithm algorithm_from_name(const std::string& name) {
    for (Algorithm a : {Algorithm::vdamp_alpha, Algorithm::vdamp_s, Algorithm::fista,
                        Algorithm::sfista, Algorithm::sure_it}) {
        if (name == algorithm_name(a)) return a;
    }
    throw std::invalid_argument("unknown algorithm: " + name);
}

inline bool is_vdamp(Algorithm a) { return a == Algorithm::vdamp_alpha || a == Algorithm::vdamp_s; }
inline bool needs_lambda(Algorithm a) { return a == Algorithm::fista || a == Algorithm::sfista; }

struct SolverConfig {
    Algorithm algorithm = Algorithm::vdamp_s;
    int iterations = 50;     // K_it
    int scales = 4;
    double lambda = 0.0;     // FISTA / S-FISTA sparse weighting
    double sigma_eps = 0.0;  // measurement noise level (known a priori)
    uint64_t seed = 0;       // provenance only; the solvers are deterministic
    bool oracle_tau = true;  // FISTA family: tau_k from the ground truth
    bool record_trace = true;
};

struct IterationRecord {
    int iter = 0;
    double nmse_db = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> subband_nmse;        // true ||r_b - w0_b||^2 / ||w0_b||^2
    std::vector<double> subband_nmse_model;  // N_b tau_b / ||w0_b||^2
    SubbandVector tau;
    SubbandVector alpha;  // NaN where the algorithm has no alpha
    SubbandVector c;      // NaN where the algorithm has no c
    double wall_ms = 0.0;
};

struct ReconResult {
    ComplexImage x_hat;
    WaveletCoeffs w_hat;
    std::vector<IterationRecord> trace;
    int converged_iteration = -1;
};

// Observer hook giving tests and diagnostics access to the full per-iteration
// state of VDAMP.
struct VdampIterationView {
    int k;
    const WaveletCoeffs& r;
    const SubbandVector& tau;
    const DenoiseResult& denoised;
    const SubbandVector& c;
    const WaveletCoeffs& r_tilde_next;
};
using VdampObserver = std::function<void(const VdampIterationView&)>;

inline int worker_count(int jobs) {
    int n = 0;
    if (const char* env = std::getenv("VDAMP_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    return std::min(n, std::max(jobs, 1));
}

// Runs fn(0..jobs-1) across worker threads (capped by VDAMP_THREADS); results
// must be written to per-index slots so the merge is deterministic.
inline void parallel_for(int jobs, const std::function<void(int)>& fn) {
    const int workers = worker_count(jobs);
    if (workers <= 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Smallest k such that every later trace entry is within 0.1 dB of the final
// value.
inline int convergence_iteration(std::span<const double> nmse_trace_db, double final_value_db) {
    if (nmse_trace_db.empty()) throw std::invalid_argument("convergence_iteration: empty trace");
    int last_bad = -1;
    for (int k = 0; k < static_cast<int>(nmse_trace_db.size()); ++k) {
        if (std::abs(nmse_trace_db[static_cast<size_t>(k)] - final_value_db) > 0.1) last_bad = k;
    }
    return last_bad + 1;
}

namespace detail {

// y - M_Omega F Psi^H w, the Fourier-domain residual of a coefficient estimate.
inline ComplexImage masked_residual(const WaveletCoeffs& w, const ComplexImage& y,
                                    const SamplingSet& mask) {
    const ComplexImage f = fft2_unitary(dwt_inverse(w));
    ComplexImage z = y;
    for (int i = 0; i < z.size(); ++i) {
        if (mask.mask[static_cast<size_t>(i)]) z.data[static_cast<size_t>(i)] -= f.data[static_cast<size_t>(i)];
    }
    return z;
}

inline void check_finite(const std::vector<cplx>& v, const char* what, int k) {
    if (!all_finite(v))
        throw std::runtime_error(std::string(what) + ": non-finite iterate at iteration " + std::to_string(k));
}

inline double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

inline void record_truth_columns(IterationRecord& rec, const WaveletCoeffs& r,
                                 const WaveletCoeffs& w0, const SubbandVector& tau) {
    const SubbandLayout& lay = r.layout;
    rec.subband_nmse.resize(static_cast<size_t>(lay.count()));
    rec.subband_nmse_model.resize(static_cast<size_t>(lay.count()));
    for (int b = 0; b < lay.count(); ++b) {
        const auto rb = r.band(b);
        const auto wb = w0.band(b);
        double err = 0.0, energy = 0.0;
        for (size_t j = 0; j < rb.size(); ++j) {
            err += std::norm(rb[j] - wb[j]);
            energy += std::norm(wb[j]);
        }
        rec.subband_nmse[static_cast<size_t>(b)] = energy > 0.0 ? err / energy : std::numeric_limits<double>::quiet_NaN();
        rec.subband_nmse_model[static_cast<size_t>(b)] =
            energy > 0.0 ? lay.bands[static_cast<size_t>(b)].count() * tau[b] / energy
                         : std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

// Final (and per-iteration, for traces) image estimate with high data
// fidelity: Psi^H w + F^H (y - M_Omega F Psi^H w). Measured Fourier
// coefficients pass through exactly.
inline ComplexImage data_consistent_estimate(const WaveletCoeffs& w, const ComplexImage& y,
                                             const SamplingSet& mask) {
    const ComplexImage img = dwt_inverse(w);
    const ComplexImage f = fft2_unitary(img);
    ComplexImage resid = y;
    for (int i = 0; i < resid.size(); ++i) {
        if (mask.mask[static_cast<size_t>(i)]) resid.data[static_cast<size_t>(i)] -= f.data[static_cast<size_t>(i)];
    }
    const ComplexImage corr = ifft2_unitary(resid);
    ComplexImage out = img;
    for (int i = 0; i < out.size(); ++i) out.data[static_cast<size_t>(i)] += corr.data[static_cast<size_t>(i)];
    return out;
}

// Density-compensated approximate message passing with the colored
// (per-subband) effective noise model and SURE-tuned subband thresholds.
// c update: 1/(1-alpha) for vdamp_alpha, the SURE-optimal gain for vdamp_s.
inline ReconResult vdamp(const ComplexImage& y, const SamplingSet& mask, const ProbabilityMap& pmap,
                         const SolverConfig& config, const ComplexImage* ground_truth = nullptr,
                         const VdampObserver& observer = {}) {
    if (!is_vdamp(config.algorithm)) throw std::invalid_argument("vdamp: config.algorithm is not a VDAMP variant");
    if (config.iterations < 1) throw std::invalid_argument("vdamp: iterations must be >= 1");
    if (config.sigma_eps < 0.0) throw std::invalid_argument("vdamp: negative sigma_eps");
    if (y.height != mask.height || y.width != mask.width || y.height != pmap.height || y.width != pmap.width)
        throw std::invalid_argument("vdamp: shape mismatch");

    const int h = y.height, w = y.width, s = config.scales;
    const SubbandSpectra spectra = build_subband_spectra(h, w, s);
    const SubbandLayout& lay = spectra.layout;
    const int nbands = lay.count();

    std::optional<WaveletCoeffs> w0;
    if (ground_truth) w0 = dwt_forward(*ground_truth, s);

    WaveletCoeffs r_tilde(lay);
    WaveletCoeffs w_hat(lay);
    std::vector<double> prev_thresholds(static_cast<size_t>(nbands), std::numeric_limits<double>::quiet_NaN());
    std::vector<int> floored_streak(static_cast<size_t>(nbands), 0);
    std::vector<double> forced(static_cast<size_t>(nbands));

    ReconResult out;
    if (config.record_trace) out.trace.reserve(static_cast<size_t>(config.iterations));

    for (int k = 0; k < config.iterations; ++k) {
        const double t0 = detail::now_ms();

        const ComplexImage z = detail::masked_residual(r_tilde, y, mask);

        // density compensated gradient: r = r~ + Psi F^H P^{-1} z
        ComplexImage comp = z;
        for (int i = 0; i < comp.size(); ++i) comp.data[static_cast<size_t>(i)] /= pmap.p[static_cast<size_t>(i)];
        WaveletCoeffs r = dwt_forward(ifft2_unitary(comp), s);
        for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += r_tilde.data[i];
        detail::check_finite(r.data, "vdamp", k);

        // colored effective noise model
        SubbandVector tau = tau_wavelet(spectra, tau_y_estimate(z, mask, pmap, config.sigma_eps));
        const double tau_floor = 1e-12 * norm_sq(r.data) / lay.total();
        std::fill(forced.begin(), forced.end(), std::numeric_limits<double>::quiet_NaN());
        for (int b = 0; b < nbands; ++b) {
            if (tau[b] < tau_floor) {
                tau[b] = tau_floor;
                ++floored_streak[static_cast<size_t>(b)];
            } else {
                floored_streak[static_cast<size_t>(b)] = 0;
            }
            // a band stuck on the floor is treated as converged: freeze its threshold
            if (floored_streak[static_cast<size_t>(b)] >= 3 && std::isfinite(prev_thresholds[static_cast<size_t>(b)]))
                forced[static_cast<size_t>(b)] = prev_thresholds[static_cast<size_t>(b)];
        }

        const DenoiseResult den = gsure_denoise(r, tau, &forced);
        prev_thresholds = den.thresholds.values;
        const SubbandVector c = config.algorithm == Algorithm::vdamp_alpha
                                    ? c_alpha(den.alpha)
                                    : c_sure(r, den.w_hat, den.alpha);
        const WaveletCoeffs r_tilde_next = onsager_correct(den.w_hat, r, den.alpha, c);
        detail::check_finite(r_tilde_next.data, "vdamp", k);

        if (observer) observer(VdampIterationView{k, r, tau, den, c, r_tilde_next});

        if (config.record_trace) {
            IterationRecord rec;
            rec.iter = k;
            rec.tau = tau;
            rec.alpha = den.alpha;
            rec.c = c;
            if (ground_truth) {
                rec.nmse_db = nmse_db(data_consistent_estimate(den.w_hat, y, mask), *ground_truth);
                detail::record_truth_columns(rec, r, *w0, tau);
            }
            rec.wall_ms = detail::now_ms() - t0;
            out.trace.push_back(std::move(rec));
        }

        w_hat = den.w_hat;
        r_tilde = r_tilde_next;
    }

    out.x_hat = data_consistent_estimate(w_hat, y, mask);
    out.w_hat = std::move(w_hat);
    if (ground_truth && config.record_trace) {
        std::vector<double> nmse(out.trace.size());
        for (size_t i = 0; i < out.trace.size(); ++i) nmse[i] = out.trace[i].nmse_db;
        out.converged_iteration = convergence_iteration(nmse, nmse.back());
    }
    return out;
}

// FISTA momentum sequence, h_k = (1 + sqrt(1 + 4 h_{k-1}^2)) / 2.
inline double fista_momentum(double h_prev) { return (1.0 + std::sqrt(1.0 + 4.0 * h_prev * h_prev)) / 2.0; }

// Momentum combination w_hat + (h_prev - 1) (w_hat - w_hat_prev) / h; with
// h_prev = 1 this collapses to plain ISTA.
inline WaveletCoeffs fista_combine(const WaveletCoeffs& w_hat, const WaveletCoeffs& w_hat_prev,
                                   double h_prev, double h) {
    WaveletCoeffs out = w_hat;
    const double gain = (h_prev - 1.0) / h;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += gain * (w_hat.data[i] - w_hat_prev.data[i]);
    return out;
}

// FISTA, S-FISTA (per-subband weights W) and SURE-IT (SURE-tuned subband
// thresholds with a scalar noise model). tau_k comes from the ground truth
// when oracle_tau is set, otherwise from the importance-sampled residual
// spectrum (pmap required; a uniform map at the realized sampling fraction
// is used when absent).
inline ReconResult fista_family(const ComplexImage& y, const SamplingSet& mask,
                                const SolverConfig& config, const SubbandVector& weights,
                                const WaveletCoeffs* ground_truth_w0 = nullptr,
                                const ProbabilityMap* pmap = nullptr) {
    if (is_vdamp(config.algorithm)) throw std::invalid_argument("fista_family: config.algorithm is a VDAMP variant");
    if (config.iterations < 1) throw std::invalid_argument("fista_family: iterations must be >= 1");
    if (needs_lambda(config.algorithm) && !(config.lambda > 0.0))
        throw std::invalid_argument("fista_family: missing lambda");
    if (config.oracle_tau && !ground_truth_w0)
        throw std::invalid_argument("fista_family: oracle_tau requires the ground truth");

    const int h = y.height, w = y.width, s = config.scales;
    const SubbandLayout lay = SubbandLayout::make(h, w, s);
    if (weights.layout != lay) throw std::invalid_argument("fista_family: weight layout mismatch");
    const int nbands = lay.count();

    std::optional<ComplexImage> x0;
    if (ground_truth_w0) x0 = dwt_inverse(*ground_truth_w0);

    ProbabilityMap uniform_p;
    const ProbabilityMap* tau_map = pmap;
    if (!config.oracle_tau && !tau_map) {
        uniform_p = ProbabilityMap(h, w, std::max(static_cast<double>(mask.n_observed) / mask.size(), 1e-6));
        tau_map = &uniform_p;
    }

    WaveletCoeffs r_tilde(lay);
    WaveletCoeffs w_hat_prev(lay);
    WaveletCoeffs w_hat(lay);
    double h_prev = 1.0;
    const SubbandVector nan_sv(lay, std::numeric_limits<double>::quiet_NaN());

    ReconResult out;
    if (config.record_trace) out.trace.reserve(static_cast<size_t>(config.iterations));

    for (int k = 0; k < config.iterations; ++k) {
        const double t0 = detail::now_ms();

        // line 3 as printed: residual without a mask on the estimate term
        const ComplexImage f = fft2_unitary(dwt_inverse(r_tilde));
        ComplexImage z = y;
        for (int i = 0; i < z.size(); ++i) z.data[static_cast<size_t>(i)] -= f.data[static_cast<size_t>(i)];

        // weighted gradient r = r~ + W^{-1} Psi F^H M_Omega z
        ComplexImage mz = z;
        for (int i = 0; i < mz.size(); ++i) {
            if (!mask.mask[static_cast<size_t>(i)]) mz.data[static_cast<size_t>(i)] = 0.0;
        }
        WaveletCoeffs grad = dwt_forward(ifft2_unitary(mz), s);
        WaveletCoeffs r = r_tilde;
        for (int b = 0; b < nbands; ++b) {
            const Subband& sb = lay.bands[static_cast<size_t>(b)];
            for (int j = 0; j < sb.count(); ++j) {
                const size_t i = static_cast<size_t>(sb.offset + j);
                r.data[i] += grad.data[i] / weights[b];
            }
        }
        detail::check_finite(r.data, "fista_family", k);

        double tau_k;
        if (config.oracle_tau) {
            double err = 0.0;
            for (size_t i = 0; i < r.data.size(); ++i) err += std::norm(r.data[i] - ground_truth_w0->data[i]);
            tau_k = err / lay.total();
        } else {
            const auto tau_y = tau_y_estimate(z, mask, *tau_map, config.sigma_eps);
            double acc = 0.0;
            for (double v : tau_y) acc += v;
            tau_k = acc / lay.total();
        }

        SubbandVector alpha_rec = nan_sv;
        SubbandVector tau_rec(lay, tau_k);
        if (config.algorithm == Algorithm::sure_it) {
            const double floor = 1e-12 * norm_sq(r.data) / lay.total();
            SubbandVector tau_sv(lay, std::max(tau_k, floor));
            const DenoiseResult den = gsure_denoise(r, tau_sv);
            w_hat = den.w_hat;
            alpha_rec = den.alpha;
        } else {
            w_hat = WaveletCoeffs(lay);
            for (int b = 0; b < nbands; ++b) {
                const Subband& sb = lay.bands[static_cast<size_t>(b)];
                const double threshold = tau_k * config.lambda / weights[b];
                for (int j = 0; j < sb.count(); ++j) {
                    const size_t i = static_cast<size_t>(sb.offset + j);
                    w_hat.data[i] = soft_threshold(r.data[i], threshold);
                }
            }
        }

        const double h_k = fista_momentum(h_prev);
        r_tilde = fista_combine(w_hat, w_hat_prev, h_prev, h_k);
        w_hat_prev = w_hat;
        h_prev = h_k;

        if (config.record_trace) {
            IterationRecord rec;
            rec.iter = k;
            rec.tau = tau_rec;
            rec.alpha = alpha_rec;
            rec.c = nan_sv;
            if (ground_truth_w0) {
                rec.nmse_db = nmse_db(data_consistent_estimate(w_hat, y, mask), *x0);
                detail::record_truth_columns(rec, r, *ground_truth_w0, tau_rec);
            }
            rec.wall_ms = detail::now_ms() - t0;
            out.trace.push_back(std::move(rec));
        }
    }

    out.x_hat = data_consistent_estimate(w_hat, y, mask);
    out.w_hat = std::move(w_hat);
    if (ground_truth_w0 && config.record_trace) {
        std::vector<double> nmse(out.trace.size());
        for (size_t i = 0; i < out.trace.size(); ++i) nmse[i] = out.trace[i].nmse_db;
        out.converged_iteration = convergence_iteration(nmse, nmse.back());
    }
    return out;
}

struct PowerIterationResult {
    double lambda_max = 0.0;
    int iterations = 0;
    double rel_change = 0.0;
    bool converged = false;
};

// Largest eigenvalue of a Hermitian PSD operator given matrix-free.
// `zero_floor` declares an eigenvalue numerically zero (the operators here
// are built from unitary transforms and masks, so their norms are O(1)).
inline PowerIterationResult power_iteration(
    int dim, const std::function<void(std::span<const cplx>, std::span<cplx>)>& apply,
    int max_iters, double tol, uint64_t seed = 0, double zero_floor = 1e-14) {
    Rng rng(seed, streams::power_iteration);
    std::vector<cplx> u(static_cast<size_t>(dim));
    double nu = 0.0;
    for (int i = 0; i < dim; ++i) {
        u[static_cast<size_t>(i)] = rng.cnormal(static_cast<uint64_t>(i), 1.0);
        nu += std::norm(u[static_cast<size_t>(i)]);
    }
    nu = std::sqrt(nu);
    for (auto& z : u) z /= nu;

    std::vector<cplx> v(static_cast<size_t>(dim));
    PowerIterationResult res;
    double lambda_prev = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        apply(u, v);
        double rayleigh = 0.0, nv = 0.0;
        for (int i = 0; i < dim; ++i) {
            rayleigh += std::real(std::conj(u[static_cast<size_t>(i)]) * v[static_cast<size_t>(i)]);
            nv += std::norm(v[static_cast<size_t>(i)]);
        }
        nv = std::sqrt(nv);
        res.iterations = it;
        res.lambda_max = rayleigh;
        if (nv <= zero_floor || std::abs(rayleigh) <= zero_floor) {
            res.lambda_max = 0.0;
            res.rel_change = 0.0;
            res.converged = true;
            return res;
        }
        res.rel_change = std::abs(rayleigh - lambda_prev) / std::max(std::abs(rayleigh), 1e-300);
        if (it > 1 && res.rel_change <= tol) {
            res.converged = true;
            return res;
        }
        lambda_prev = rayleigh;
        for (int i = 0; i < dim; ++i) u[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] / nv;
    }
    return res;
}

struct SfistaWeightReport {
    SubbandVector weights;
    std::vector<std::vector<double>> lambda_max;  // pairwise spectral norms squared
    std::vector<double> inv_weight_sums;          // sum_b' sqrt(lambda_max(b,b'))
};

// S-FISTA per-subband weights: for every subband pair, the largest
// eigenvalue of Phi_{b'}^H Phi_b Phi_b^H Phi_{b'} is estimated matrix-free
// by power iteration (Phi = M_Omega F Psi^H), and
// w_b = (1 - margin) / sum_b' sqrt(lambda_max(b,b')). Computed once per
// sampling set.
inline SfistaWeightReport sfista_weight_report(const SamplingSet& mask, int h, int w, int s,
                                               int power_iters = 500, double tol = 1e-6,
                                               uint64_t seed = 0) {
    const SubbandLayout lay = SubbandLayout::make(h, w, s);
    const int nbands = lay.count();

    // Phi_b u: embed into band b, synthesize, transform, mask.
    auto phi = [&](int b, std::span<const cplx> u) {
        WaveletCoeffs wc(lay);
        auto band = wc.band(b);
        for (size_t j = 0; j < band.size(); ++j) band[j] = u[j];
        ComplexImage f = fft2_unitary(dwt_inverse(wc));
        for (int i = 0; i < f.size(); ++i) {
            if (!mask.mask[static_cast<size_t>(i)]) f.data[static_cast<size_t>(i)] = 0.0;
        }
        return f;
    };
    // Phi_b^H v: mask, back-transform, analyze, restrict to band b.
    auto phi_h = [&](int b, const ComplexImage& v) {
        ComplexImage m = v;
        for (int i = 0; i < m.size(); ++i) {
            if (!mask.mask[static_cast<size_t>(i)]) m.data[static_cast<size_t>(i)] = 0.0;
        }
        const WaveletCoeffs wc = dwt_forward(ifft2_unitary(m), s);
        const auto band = wc.band(b);
        return std::vector<cplx>(band.begin(), band.end());
    };

    SfistaWeightReport rep;
    rep.lambda_max.assign(static_cast<size_t>(nbands), std::vector<double>(static_cast<size_t>(nbands), 0.0));
    std::vector<std::pair<int, int>> pairs;  // upper triangle; the operator spectrum is swap-symmetric
    for (int b = 0; b < nbands; ++b)
        for (int bp = b; bp < nbands; ++bp) pairs.push_back({b, bp});
    parallel_for(static_cast<int>(pairs.size()), [&](int idx) {
        const auto [b, bp] = pairs[static_cast<size_t>(idx)];
        const int dim = lay.bands[static_cast<size_t>(bp)].count();
        auto apply = [&](std::span<const cplx> u, std::span<cplx> out) {
            const auto step2 = phi_h(b, phi(bp, u));
            const auto step4 = phi_h(bp, phi(b, step2));
            for (size_t j = 0; j < out.size(); ++j) out[j] = step4[j];
        };
        const PowerIterationResult pi = power_iteration(dim, apply, power_iters, tol,
                                                        seed + static_cast<uint64_t>(b * nbands + bp));
        if (!pi.converged)
            throw std::runtime_error("sfista_weight_report: power iteration did not converge for pair (" +
                                     std::to_string(b) + "," + std::to_string(bp) +
                                     "); last relative change " + std::to_string(pi.rel_change));
        const double lam = std::max(pi.lambda_max, 0.0);
        rep.lambda_max[static_cast<size_t>(b)][static_cast<size_t>(bp)] = lam;
        rep.lambda_max[static_cast<size_t>(bp)][static_cast<size_t>(b)] = lam;
    });

    rep.weights = SubbandVector(lay);
    rep.inv_weight_sums.resize(static_cast<size_t>(nbands));
    const double margin = 1e-3;
    for (int b = 0; b < nbands; ++b) {
        double sum = 0.0;
        for (int bp = 0; bp < nbands; ++bp) sum += std::sqrt(rep.lambda_max[static_cast<size_t>(b)][static_cast<size_t>(bp)]);
        rep.inv_weight_sums[static_cast<size_t>(b)] = sum;
        rep.weights[b] = (1.0 - margin) / sum;
    }
    return rep;
}

inline SubbandVector sfista_weights(const SamplingSet& mask, int h, int w, int s,
                                    int power_iters = 500, double tol = 1e-6, uint64_t seed = 0) {
    return sfista_weight_report(mask, h, w, s, power_iters, tol, seed).weights;
}

// --- problem bundling and lambda tuning -----------------------------------

struct ProblemInstance {
    ComplexImage x0;
    WaveletCoeffs w0;
    ComplexImage y;
    SamplingSet mask;
    ProbabilityMap pmap;
    double sigma_eps = 0.0;
    int scales = 4;
};

// Experiment-level density defaults. Calibrated so the density-compensated
// iteration stays contractive at the benchmark accelerations: a small p floor
// turns the P^{-1} weighting into a noise amplifier at the k-space edge and
// the solver stalls (measured at p_min = 0.01, accel 8).
struct DensityParams {
    double fully_sampled_radius = 0.05;
    double decay = 2.0;
    double p_min = 0.08;
};

inline ProblemInstance make_problem(const ComplexImage& x0, int scales, double accel, double snr_db,
                                    uint64_t mask_seed, uint64_t noise_seed,
                                    const DensityParams& density = {}) {
    if (accel < 1.0) throw std::invalid_argument("make_problem: acceleration must be >= 1");
    ProblemInstance p;
    p.x0 = x0;
    p.scales = scales;
    p.w0 = dwt_forward(x0, scales);
    p.pmap = make_density(x0.height, x0.width, 1.0 / accel, density.fully_sampled_radius,
                          density.decay, density.p_min);
    p.mask = draw_mask(p.pmap, mask_seed);
    p.sigma_eps = snr_to_sigma(x0, snr_db);
    p.y = measure(x0, p.mask, p.sigma_eps, noise_seed);
    return p;
}

struct TuneResult {
    double lambda = 0.0;
    double nmse_db = 0.0;
    std::vector<double> grid_nmse_db;
};

// Exhaustive search over the lambda grid: each candidate runs the solver to
// k_eval iterations and the NMSE argmin wins, ties toward the smaller value.
inline TuneResult tune_lambda(const ProblemInstance& problem, Algorithm algorithm,
                              std::vector<double> grid, int k_eval,
                              const SubbandVector* weights = nullptr) {
    if (grid.empty()) throw std::invalid_argument("tune_lambda: empty grid");
    if (!needs_lambda(algorithm)) throw std::invalid_argument("tune_lambda: algorithm has no lambda");
    std::sort(grid.begin(), grid.end());

    const SubbandLayout lay = SubbandLayout::make(problem.y.height, problem.y.width, problem.scales);
    const SubbandVector ones(lay, 1.0);
    const SubbandVector& w = weights ? *weights : ones;

    TuneResult res;
    res.grid_nmse_db.resize(grid.size());
    parallel_for(static_cast<int>(grid.size()), [&](int i) {
        SolverConfig cfg;
        cfg.algorithm = algorithm;
        cfg.iterations = k_eval;
        cfg.scales = problem.scales;
        cfg.lambda = grid[static_cast<size_t>(i)];
        cfg.sigma_eps = problem.sigma_eps;
        cfg.oracle_tau = true;
        cfg.record_trace = false;
        const ReconResult r = fista_family(problem.y, problem.mask, cfg, w, &problem.w0, &problem.pmap);
        res.grid_nmse_db[static_cast<size_t>(i)] = nmse_db(r.x_hat, problem.x0);
    });

    size_t best = 0;
    for (size_t i = 1; i < grid.size(); ++i) {
        if (res.grid_nmse_db[i] < res.grid_nmse_db[best]) best = i;
    }
    res.lambda = grid[best];
    res.nmse_db = res.grid_nmse_db[best];
    return res;
}

// Default grid: 16 points per decade across [1e-4, 1e1], scaled so the
// span covers thresholds from far below to well above the initial effective
// noise level.
inline std::vector<double> default_lambda_grid(const ProblemInstance& problem) {
    // unweighted FISTA r_0 = Psi F^H M_Omega y; lambda multiplies tau_0
    const WaveletCoeffs r0 = dwt_forward(ifft2_unitary(problem.y), problem.scales);
    double err = 0.0;
    for (size_t i = 0; i < r0.data.size(); ++i) err += std::norm(r0.data[i] - problem.w0.data[i]);
    const double tau0 = err / problem.w0.layout.total();
    const double scale = 1.0 / std::sqrt(std::max(tau0, 1e-300));
    std::vector<double> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back(std::pow(10.0, -4.0 + i / 16.0) * scale);
    return grid;
}

// --- trace serialization ----------------------------------------------------

// CSV schema: iter,nmse_db,subband_nmse_1..B,tau_1..B,alpha_1..B,c_1..B,wall_ms.
// Wall times are environment noise, so they are zeroed unless requested; every
// other column is deterministic under a fixed seed.
inline void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace,
                            int nbands, bool include_timing = false) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "iter,nmse_db";
    for (int b = 1; b <= nbands; ++b) f << ",subband_nmse_" << b;
    for (int b = 1; b <= nbands; ++b) f << ",tau_" << b;
    for (int b = 1; b <= nbands; ++b) f << ",alpha_" << b;
    for (int b = 1; b <= nbands; ++b) f << ",c_" << b;
    f << ",wall_ms\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        f << ',' << buf;
    };
    for (const IterationRecord& rec : trace) {
        f << rec.iter;
        put(rec.nmse_db);
        for (int b = 0; b < nbands; ++b)
            put(rec.subband_nmse.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : rec.subband_nmse[static_cast<size_t>(b)]);
        for (int b = 0; b < nbands; ++b) put(rec.tau.values.empty() ? std::numeric_limits<double>::quiet_NaN() : rec.tau[b]);
        for (int b = 0; b < nbands; ++b) put(rec.alpha.values.empty() ? std::numeric_limits<double>::quiet_NaN() : rec.alpha[b]);
        for (int b = 0; b < nbands; ++b) put(rec.c.values.empty() ? std::numeric_limits<double>::quiet_NaN() : rec.c[b]);
        put(include_timing ? rec.wall_ms : 0.0);
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace vdamp
