// Command-line surface: mask generation, phantom rendering, reconstruction
// runs, benchmark sweeps, and state-evolution diagnostics. Every run writes
// its resolved configuration next to its outputs; all outputs are
// deterministic under fixed seeds (wall-clock timings only with --timing).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vdamp/diagnostics.hpp"
#include "vdamp/image_io.hpp"
#include "vdamp/phantom.hpp"
#include "vdamp/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vdamp;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_solver = 3;
constexpr int exit_usage = 64;

struct Shape {
    int h = 256;
    int w = 256;
};

Shape parse_shape(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--shape", "expected HxW, e.g. 256x256");
    Shape s;
    s.h = std::stoi(text.substr(0, x));
    s.w = std::stoi(text.substr(x + 1));
    if (s.h <= 0 || s.w <= 0) throw CLI::ValidationError("--shape", "dimensions must be positive");
    return s;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<int> parse_ints(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_doubles(text)) out.push_back(static_cast<int>(v));
    return out;
}

std::vector<std::string> parse_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << j.dump(2) << "\n";
}

// Experiment parameters shared by reconstruct/benchmark/diagnose.
struct ExperimentArgs {
    std::string image = "phantom";
    std::string shape_text = "256x256";
    bool modified = false;
    double snr_db = 40.0;
    int scales = 4;
    uint64_t seed = 1;
    int64_t noise_seed = -1;  // derived from seed when negative
    double pmin = DensityParams{}.p_min;
    double decay = DensityParams{}.decay;
    double center_frac = DensityParams{}.fully_sampled_radius;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--image", image, "'phantom' or a PGM file path")->capture_default_str();
        cmd->add_option("--shape", shape_text, "phantom size HxW")->capture_default_str();
        cmd->add_flag("--modified", modified, "high-contrast phantom variant");
        cmd->add_option("--snr-db", snr_db, "measurement SNR in dB")->capture_default_str();
        cmd->add_option("--scales", scales, "wavelet decomposition scales")->capture_default_str();
        cmd->add_option("--seed", seed, "mask seed")->capture_default_str();
        cmd->add_option("--noise-seed", noise_seed, "noise seed (default seed+1000)");
        cmd->add_option("--pmin", pmin, "density floor")->capture_default_str();
        cmd->add_option("--decay", decay, "density decay exponent")->capture_default_str();
        cmd->add_option("--center-frac", center_frac, "fully sampled center radius")->capture_default_str();
    }

    ComplexImage load_image() const {
        if (image == "phantom") {
            const Shape s = parse_shape(shape_text);
            return shepp_logan(s.h, s.w, modified);
        }
        return load_grayscale(image);
    }

    uint64_t effective_noise_seed() const {
        return noise_seed >= 0 ? static_cast<uint64_t>(noise_seed) : seed + 1000;
    }

    DensityParams density() const { return {center_frac, decay, pmin}; }

    json to_json() const {
        return {{"image", image},        {"shape", shape_text}, {"modified", modified},
                {"snr_db", snr_db},      {"scales", scales},    {"mask_seed", seed},
                {"noise_seed", effective_noise_seed()},         {"pmin", pmin},
                {"decay", decay},        {"center_frac", center_frac}};
    }
};

ProblemInstance build_problem(const ExperimentArgs& args, double accel, uint64_t mask_seed,
                              uint64_t noise_seed) {
    const ComplexImage x0 = args.load_image();
    return make_problem(x0, args.scales, accel, args.snr_db, mask_seed, noise_seed, args.density());
}

json summary_of(const ReconResult& res, const ProblemInstance& prob, Algorithm alg, double lambda,
                bool timing, double wall_ms) {
    json j = {{"algorithm", algorithm_name(alg)},
              {"final_nmse_db", nmse_db(res.x_hat, prob.x0)},
              {"converged_iteration", res.converged_iteration},
              {"iterations", res.trace.size()},
              {"n_observed", prob.mask.n_observed},
              {"sigma_eps", prob.sigma_eps}};
    if (needs_lambda(alg)) j["lambda"] = lambda;
    j["wall_ms"] = timing ? wall_ms : 0.0;
    return j;
}

// One benchmark/reconstruct execution. S-FISTA weights are computed once per
// mask and cached by the caller when sweeping.
ReconResult run_algorithm(const ProblemInstance& prob, Algorithm alg, int iterations, double lambda,
                          bool oracle_tau, const SubbandVector* sfista_w) {
    SolverConfig cfg;
    cfg.algorithm = alg;
    cfg.iterations = iterations;
    cfg.scales = prob.scales;
    cfg.sigma_eps = prob.sigma_eps;
    cfg.lambda = lambda;
    cfg.oracle_tau = oracle_tau;
    if (is_vdamp(alg)) return vdamp::vdamp(prob.y, prob.mask, prob.pmap, cfg, &prob.x0);
    const SubbandLayout lay = SubbandLayout::make(prob.y.height, prob.y.width, prob.scales);
    const SubbandVector ones(lay, 1.0);
    const SubbandVector& w = (alg == Algorithm::sfista && sfista_w) ? *sfista_w : ones;
    return fista_family(prob.y, prob.mask, cfg, w, &prob.w0, &prob.pmap);
}

int subband_index_from_label(const SubbandLayout& lay, const std::string& label) {
    if (label == "a") return lay.approx_index();
    if (label.size() < 2) throw std::invalid_argument("bad subband label: " + label);
    Orient o;
    switch (label[0]) {
        case 'h': o = Orient::horizontal; break;
        case 'v': o = Orient::vertical; break;
        case 'd': o = Orient::diagonal; break;
        default: throw std::invalid_argument("bad subband label: " + label);
    }
    const int scale = std::stoi(label.substr(1));
    if (scale < 1 || scale > lay.scales) throw std::invalid_argument("subband scale out of range: " + label);
    return lay.detail_index(scale, o);
}

std::string subband_label(const SubbandLayout& lay, int b) {
    const Subband& sb = lay.bands[static_cast<size_t>(b)];
    if (sb.orient == Orient::approx) return "a";
    const char o = sb.orient == Orient::horizontal ? 'h' : sb.orient == Orient::vertical ? 'v' : 'd';
    return std::string(1, o) + std::to_string(sb.scale);
}

// ---------------------------------------------------------------- mask ----

int cmd_mask(const std::string& shape_text, double accel, uint64_t seed, double pmin, double decay,
             double center_frac, const std::string& out_dir) {
    const Shape shape = parse_shape(shape_text);
    fs::create_directories(out_dir);
    ProbabilityMap pmap;
    try {
        pmap = make_density(shape.h, shape.w, 1.0 / accel, center_frac, decay, pmin);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }
    const SamplingSet mask = draw_mask(pmap, seed);
    save_probability_map(pmap, (fs::path(out_dir) / "pmap.bin").string());
    save_sampling_set(mask, (fs::path(out_dir) / "mask.bin").string());

    double sum_p = 0.0;
    for (double p : pmap.p) sum_p += p;
    write_json(fs::path(out_dir) / "summary.json",
               {{"height", shape.h},
                {"width", shape.w},
                {"acceleration", accel},
                {"target_fraction", 1.0 / accel},
                {"mean_p", sum_p / pmap.size()},
                {"expected_n", sum_p},
                {"n_observed", mask.n_observed},
                {"seed", seed}});
    write_json(fs::path(out_dir) / "config.json",
               {{"command", "mask"}, {"shape", shape_text}, {"accel", accel}, {"seed", seed},
                {"pmin", pmin}, {"decay", decay}, {"center_frac", center_frac}});
    return exit_ok;
}

// ------------------------------------------------------------- phantom ----

int cmd_phantom(const std::string& shape_text, bool modified, const std::string& out_path) {
    const Shape shape = parse_shape(shape_text);
    if (out_path.find('/') != std::string::npos)
        fs::create_directories(fs::path(out_path).parent_path());
    save_grayscale(shepp_logan(shape.h, shape.w, modified), out_path);
    return exit_ok;
}

// --------------------------------------------------------- reconstruct ----

int cmd_reconstruct(const ExperimentArgs& args, const std::string& algorithm_name_text, double accel,
                    int iterations, double lambda, bool tune, int k_eval, bool oracle_tau,
                    bool timing, const std::string& out_dir) {
    const Algorithm alg = algorithm_from_name(algorithm_name_text);
    if (needs_lambda(alg) && !(lambda > 0.0) && !tune) {
        std::fprintf(stderr, "error: %s requires --lambda or --tune-lambda\n", algorithm_name(alg));
        return exit_usage;
    }
    fs::create_directories(out_dir);

    ProblemInstance prob;
    try {
        prob = build_problem(args, accel, args.seed, args.effective_noise_seed());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }

    ReconResult res;
    double wall_ms = 0.0;
    try {
        std::optional<SubbandVector> weights;
        if (alg == Algorithm::sfista)
            weights = sfista_weights(prob.mask, prob.y.height, prob.y.width, prob.scales);
        if (tune && needs_lambda(alg))
            lambda = tune_lambda(prob, alg, default_lambda_grid(prob), k_eval,
                                 weights ? &*weights : nullptr)
                         .lambda;
        const double t0 = detail::now_ms();
        res = run_algorithm(prob, alg, iterations, lambda, oracle_tau, weights ? &*weights : nullptr);
        wall_ms = detail::now_ms() - t0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return exit_solver;
    }

    save_grayscale(res.x_hat, (fs::path(out_dir) / "xhat.pgm").string());
    const int nbands = 3 * args.scales + 1;
    write_trace_csv((fs::path(out_dir) / "trace.csv").string(), res.trace, nbands, timing);
    write_json(fs::path(out_dir) / "summary.json", summary_of(res, prob, alg, lambda, timing, wall_ms));
    json cfg = args.to_json();
    cfg["command"] = "reconstruct";
    cfg["algorithm"] = algorithm_name(alg);
    cfg["accel"] = accel;
    cfg["iterations"] = iterations;
    if (needs_lambda(alg)) cfg["lambda"] = lambda;
    cfg["oracle_tau"] = oracle_tau;
    write_json(fs::path(out_dir) / "config.json", cfg);
    std::printf("%s: NMSE %.2f dB, converged at %d\n", algorithm_name(alg),
                nmse_db(res.x_hat, prob.x0), res.converged_iteration);
    return exit_ok;
}

// ----------------------------------------------------------- benchmark ----

int cmd_benchmark(const ExperimentArgs& args, const std::string& algorithms_text,
                  const std::string& accels_text, const std::string& seeds_text, int iters_vdamp,
                  int iters_fista, int k_eval, bool timing, const std::string& out_dir) {
    std::vector<Algorithm> algorithms;
    for (const std::string& name : parse_names(algorithms_text))
        algorithms.push_back(algorithm_from_name(name));
    const std::vector<double> accels = parse_doubles(accels_text);
    const std::vector<int> seeds = parse_ints(seeds_text);
    if (algorithms.empty() || accels.empty() || seeds.empty()) {
        std::fprintf(stderr, "error: empty sweep\n");
        return exit_usage;
    }
    fs::create_directories(fs::path(out_dir) / "cells");

    struct Cell {
        Algorithm alg = Algorithm::fista;
        double accel = 0.0;
        int seed = 0;
        bool ok = false;
        std::string error;
        double lambda = 0.0;
        double final_nmse_db = 0.0;
        int converged_iteration = -1;
        double wall_ms = 0.0;
    };
    std::vector<Cell> cells;
    for (Algorithm a : algorithms)
        for (double acc : accels)
            for (int s : seeds) {
                Cell c;
                c.alg = a;
                c.accel = acc;
                c.seed = s;
                cells.push_back(std::move(c));
            }

    // problems and S-FISTA weights are shared across algorithms per (accel, seed)
    struct Instance {
        ProblemInstance prob;
        std::optional<SubbandVector> sfista_w;
        std::map<Algorithm, double> tuned_lambda;
        std::string error;
    };
    std::map<std::pair<double, int>, Instance> instances;
    const bool want_sfista = std::count(algorithms.begin(), algorithms.end(), Algorithm::sfista) > 0;
    for (double acc : accels) {
        for (int s : seeds) {
            Instance inst;
            try {
                inst.prob = build_problem(args, acc, static_cast<uint64_t>(s),
                                          args.noise_seed >= 0 ? args.effective_noise_seed()
                                                               : static_cast<uint64_t>(s) + 1000);
                if (want_sfista)
                    inst.sfista_w = sfista_weights(inst.prob.mask, inst.prob.y.height,
                                                   inst.prob.y.width, inst.prob.scales);
                for (Algorithm a : algorithms) {
                    if (needs_lambda(a))
                        inst.tuned_lambda[a] =
                            tune_lambda(inst.prob, a, default_lambda_grid(inst.prob), k_eval,
                                        a == Algorithm::sfista && inst.sfista_w ? &*inst.sfista_w
                                                                                : nullptr)
                                .lambda;
                }
            } catch (const std::exception& e) {
                inst.error = e.what();
            }
            instances.emplace(std::make_pair(acc, s), std::move(inst));
        }
    }

    parallel_for(static_cast<int>(cells.size()), [&](int i) {
        Cell& cell = cells[static_cast<size_t>(i)];
        const Instance& inst = instances.at({cell.accel, cell.seed});
        if (!inst.error.empty()) {
            cell.error = inst.error;
            return;
        }
        try {
            const double lambda =
                needs_lambda(cell.alg) ? inst.tuned_lambda.at(cell.alg) : 0.0;
            const int iters = is_vdamp(cell.alg) ? iters_vdamp : iters_fista;
            const double t0 = detail::now_ms();
            const ReconResult res = run_algorithm(inst.prob, cell.alg, iters, lambda, true,
                                                  inst.sfista_w ? &*inst.sfista_w : nullptr);
            cell.wall_ms = detail::now_ms() - t0;
            cell.lambda = lambda;
            cell.final_nmse_db = nmse_db(res.x_hat, inst.prob.x0);
            cell.converged_iteration = res.converged_iteration;
            cell.ok = true;

            char name[128];
            std::snprintf(name, sizeof(name), "%s_a%g_s%d", algorithm_name(cell.alg), cell.accel,
                          cell.seed);
            const fs::path cell_dir = fs::path(out_dir) / "cells" / name;
            fs::create_directories(cell_dir);
            write_trace_csv((cell_dir / "trace.csv").string(), res.trace,
                            3 * inst.prob.scales + 1, timing);
            write_json(cell_dir / "summary.json",
                       summary_of(res, inst.prob, cell.alg, lambda, timing, cell.wall_ms));
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    // ratio column only when the sweep pairs FISTA with a VDAMP variant
    const bool has_fista = std::count(algorithms.begin(), algorithms.end(), Algorithm::fista) > 0;
    bool has_vdamp = false;
    for (Algorithm a : algorithms) has_vdamp = has_vdamp || is_vdamp(a);
    const bool ratio_column = has_fista && has_vdamp;

    auto fista_conv = [&](double accel, int seed) -> int {
        for (const Cell& c : cells)
            if (c.alg == Algorithm::fista && c.accel == accel && c.seed == seed && c.ok)
                return c.converged_iteration;
        return -1;
    };

    std::ofstream csv(fs::path(out_dir) / "benchmark.csv");
    csv << "algorithm,accel,seed,status,lambda,final_nmse_db,converged_iteration";
    if (ratio_column) csv << ",conv_iter_ratio_vs_fista";
    csv << ",wall_ms\n";
    int failures = 0;
    for (const Cell& c : cells) {
        csv << algorithm_name(c.alg) << ',' << c.accel << ',' << c.seed << ','
            << (c.ok ? "ok" : "error");
        if (c.ok) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%d", c.lambda, c.final_nmse_db,
                          c.converged_iteration);
            csv << buf;
        } else {
            csv << ",,,";
            ++failures;
        }
        if (ratio_column) {
            const int fc = fista_conv(c.accel, c.seed);
            if (c.ok && is_vdamp(c.alg) && fc > 0 && c.converged_iteration > 0) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), ",%.6g",
                              static_cast<double>(fc) / c.converged_iteration);
                csv << buf;
            } else {
                csv << ',';
            }
        }
        csv << ',' << (timing ? c.wall_ms : 0.0) << '\n';
        if (!c.ok)
            std::fprintf(stderr, "cell %s a=%g s=%d failed: %s\n", algorithm_name(c.alg), c.accel,
                         c.seed, c.error.c_str());
    }
    csv.close();

    json cfg = args.to_json();
    cfg["command"] = "benchmark";
    cfg["algorithms"] = algorithms_text;
    cfg["accels"] = accels_text;
    cfg["seeds"] = seeds_text;
    cfg["iters_vdamp"] = iters_vdamp;
    cfg["iters_fista"] = iters_fista;
    cfg["k_eval"] = k_eval;
    write_json(fs::path(out_dir) / "config.json", cfg);

    return failures == static_cast<int>(cells.size()) ? exit_solver : exit_ok;
}

// ------------------------------------------------------------ diagnose ----

int cmd_diagnose(const ExperimentArgs& args, const std::string& algorithm_name_text, double accel,
                 int iterations, const std::string& subbands_text, const std::string& qq_iters_text,
                 int n_points, const std::string& out_dir) {
    const Algorithm alg = algorithm_from_name(algorithm_name_text);
    if (!is_vdamp(alg)) {
        std::fprintf(stderr, "error: diagnose requires a VDAMP variant\n");
        return exit_usage;
    }
    fs::create_directories(out_dir);

    ProblemInstance prob;
    try {
        prob = build_problem(args, accel, args.seed, args.effective_noise_seed());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }

    const SubbandLayout lay = prob.w0.layout;
    std::vector<int> qq_bands;
    for (const std::string& label : parse_names(subbands_text))
        qq_bands.push_back(subband_index_from_label(lay, label));
    const std::vector<int> qq_iters = parse_ints(qq_iters_text);

    struct BandStats {
        std::vector<double> kurt_real, kurt_imag;
        std::vector<bool> skipped;
    };
    std::vector<BandStats> stats(static_cast<size_t>(lay.count()));
    // captured standardized errors for the QQ files, keyed by (band, iter)
    std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>> qq_samples;

    SolverConfig cfg;
    cfg.algorithm = alg;
    cfg.iterations = iterations;
    cfg.scales = prob.scales;
    cfg.sigma_eps = prob.sigma_eps;

    const auto observer = [&](const VdampIterationView& v) {
        std::vector<double> comp;
        for (int b = 0; b < lay.count(); ++b) {
            const auto rb = v.r.band(b);
            const auto wb = prob.w0.band(b);
            BandStats& bs = stats[static_cast<size_t>(b)];
            for (Part part : {Part::real, Part::imag}) {
                comp.resize(rb.size());
                for (size_t j = 0; j < rb.size(); ++j) {
                    const cplx e = rb[j] - wb[j];
                    comp[j] = part == Part::real ? e.real() : e.imag();
                }
                auto& dst = part == Part::real ? bs.kurt_real : bs.kurt_imag;
                try {
                    dst.push_back(excess_kurtosis(comp));
                    if (part == Part::imag) bs.skipped.push_back(false);
                } catch (const std::domain_error&) {
                    dst.push_back(std::numeric_limits<double>::quiet_NaN());
                    if (part == Part::imag) bs.skipped.push_back(true);
                }
            }
        }
        if (std::count(qq_iters.begin(), qq_iters.end(), v.k)) {
            for (int b : qq_bands) {
                const auto rb = v.r.band(b);
                const auto wb = prob.w0.band(b);
                std::vector<double> re(rb.size()), im(rb.size());
                for (size_t j = 0; j < rb.size(); ++j) {
                    const cplx e = rb[j] - wb[j];
                    re[j] = e.real();
                    im[j] = e.imag();
                }
                qq_samples[{b, v.k}] = {std::move(re), std::move(im)};
            }
        }
    };

    ReconResult res;
    try {
        res = vdamp::vdamp(prob.y, prob.mask, prob.pmap, cfg, &prob.x0, observer);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return exit_solver;
    }

    // per iteration x subband report
    std::ofstream report(fs::path(out_dir) / "report.csv");
    report << "iter,subband,label,true_nmse,model_nmse,ratio,kurt_real,kurt_imag,skipped\n";
    const auto rows = tau_tracking_report(res.trace);
    char buf[256];
    for (const TauTrackingRow& row : rows) {
        const BandStats& bs = stats[static_cast<size_t>(row.subband)];
        std::snprintf(buf, sizeof(buf), "%d,%d,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n", row.iter,
                      row.subband, subband_label(lay, row.subband).c_str(), row.true_nmse,
                      row.model_nmse, row.ratio, bs.kurt_real[static_cast<size_t>(row.iter)],
                      bs.kurt_imag[static_cast<size_t>(row.iter)],
                      bs.skipped[static_cast<size_t>(row.iter)] ? 1 : 0);
        report << buf;
    }
    report.close();

    // QQ files: one per (subband, iteration), real and imaginary columns
    for (const auto& [key, samples] : qq_samples) {
        const auto& [b, k] = key;
        const int np = std::min<int>(n_points, static_cast<int>(samples.first.size()));
        const auto re = qq_data(samples.first, np);
        const auto im = qq_data(samples.second, np);
        std::snprintf(buf, sizeof(buf), "qq_%s_k%d.csv", subband_label(lay, b).c_str(), k);
        std::ofstream qf(fs::path(out_dir) / buf);
        qf << "theoretical,empirical_real,empirical_imag\n";
        for (size_t i = 0; i < re.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", re[i].theoretical,
                          re[i].empirical, im[i].empirical);
            qf << buf;
        }
    }

    // final-iteration summary
    double kr = 0.0, ki = 0.0;
    int used = 0;
    for (int b = 0; b < lay.count(); ++b) {
        const BandStats& bs = stats[static_cast<size_t>(b)];
        if (!bs.skipped.back()) {
            kr += bs.kurt_real.back();
            ki += bs.kurt_imag.back();
            ++used;
        }
    }
    write_json(fs::path(out_dir) / "summary.json",
               {{"mean_kurt_real", used ? kr / used : 0.0},
                {"mean_kurt_imag", used ? ki / used : 0.0},
                {"converged_iteration", res.converged_iteration},
                {"final_nmse_db", res.trace.back().nmse_db}});

    json cfg_json = args.to_json();
    cfg_json["command"] = "diagnose";
    cfg_json["algorithm"] = algorithm_name(alg);
    cfg_json["accel"] = accel;
    cfg_json["iterations"] = iterations;
    cfg_json["subbands"] = subbands_text;
    cfg_json["qq_iters"] = qq_iters_text;
    cfg_json["n_points"] = n_points;
    write_json(fs::path(out_dir) / "config.json", cfg_json);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compressed-sensing reconstruction toolkit (VDAMP + FISTA baselines)"};
    app.require_subcommand(1);

    // optional JSON config file; command-line flags override its values
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file with default option values");
    json file_cfg;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream f(argv[i + 1]);
            if (!f) {
                std::fprintf(stderr, "error: cannot open config %s\n", argv[i + 1]);
                return exit_config;
            }
            f >> file_cfg;
        }
    }
    auto cfg_or = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        return file_cfg.contains(key) ? file_cfg[key].get<T>() : fallback;
    };

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "build a variable-density map and sampling set");
    std::string mask_shape = cfg_or("shape", std::string("256x256"));
    double mask_accel = cfg_or("accel", 4.0);
    uint64_t mask_seed = cfg_or("seed", static_cast<uint64_t>(1));
    double mask_pmin = cfg_or("pmin", DensityParams{}.p_min);
    double mask_decay = cfg_or("decay", DensityParams{}.decay);
    double mask_cf = cfg_or("center_frac", DensityParams{}.fully_sampled_radius);
    std::string mask_out = cfg_or("out", std::string("mask_out"));
    mask_cmd->add_option("--shape", mask_shape)->capture_default_str();
    mask_cmd->add_option("--accel", mask_accel, "acceleration factor N/n")->capture_default_str();
    mask_cmd->add_option("--seed", mask_seed)->capture_default_str();
    mask_cmd->add_option("--pmin", mask_pmin)->capture_default_str();
    mask_cmd->add_option("--decay", mask_decay)->capture_default_str();
    mask_cmd->add_option("--center-frac", mask_cf)->capture_default_str();
    mask_cmd->add_option("--out", mask_out, "output directory")->capture_default_str();

    // phantom
    auto* phantom_cmd = app.add_subcommand("phantom", "render the Shepp-Logan phantom to PGM");
    std::string ph_shape = cfg_or("shape", std::string("512x512"));
    bool ph_modified = cfg_or("modified", false);
    std::string ph_out = cfg_or("out", std::string("phantom.pgm"));
    phantom_cmd->add_option("--shape", ph_shape)->capture_default_str();
    phantom_cmd->add_flag("--modified", ph_modified);
    phantom_cmd->add_option("--out", ph_out)->capture_default_str();

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "run one algorithm on one problem instance");
    ExperimentArgs rec_args;
    rec_args.add_options(rec_cmd);
    std::string rec_alg = cfg_or("algorithm", std::string("vdamp_s"));
    double rec_accel = cfg_or("accel", 8.0);
    int rec_iters = cfg_or("iters", 60);
    double rec_lambda = cfg_or("lambda", 0.0);
    bool rec_tune = cfg_or("tune_lambda", false);
    int rec_k_eval = cfg_or("k_eval", 100);
    bool rec_no_oracle = false;
    bool rec_timing = false;
    std::string rec_out = cfg_or("out", std::string("recon_out"));
    rec_cmd->add_option("--algorithm", rec_alg, "vdamp_alpha|vdamp_s|fista|sfista|sure_it")
        ->capture_default_str();
    rec_cmd->add_option("--accel", rec_accel)->capture_default_str();
    rec_cmd->add_option("--iters", rec_iters)->capture_default_str();
    rec_cmd->add_option("--lambda", rec_lambda, "sparse weighting (FISTA/S-FISTA)");
    rec_cmd->add_flag("--tune-lambda", rec_tune, "grid-search lambda before the run");
    rec_cmd->add_option("--k-eval", rec_k_eval, "tuning horizon")->capture_default_str();
    rec_cmd->add_flag("--no-oracle-tau", rec_no_oracle, "FISTA family: estimated tau instead of oracle");
    rec_cmd->add_flag("--timing", rec_timing, "record wall-clock times (breaks hash determinism)");
    rec_cmd->add_option("--out", rec_out)->capture_default_str();

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "sweep algorithms x accelerations x seeds");
    ExperimentArgs bench_args;
    bench_args.add_options(bench_cmd);
    std::string bench_algs = cfg_or("algorithms", std::string("vdamp_s,vdamp_alpha,fista"));
    std::string bench_accels = cfg_or("accels", std::string("8"));
    std::string bench_seeds = cfg_or("seeds", std::string("1,2,3"));
    int bench_iters_vdamp = cfg_or("iters_vdamp", 60);
    int bench_iters_fista = cfg_or("iters_fista", 500);
    int bench_k_eval = cfg_or("k_eval", 100);
    bool bench_timing = false;
    std::string bench_out = cfg_or("out", std::string("benchmark_out"));
    bench_cmd->add_option("--algorithms", bench_algs, "comma-separated list")->capture_default_str();
    bench_cmd->add_option("--accels", bench_accels, "comma-separated list")->capture_default_str();
    bench_cmd->add_option("--seeds", bench_seeds, "comma-separated list")->capture_default_str();
    bench_cmd->add_option("--iters-vdamp", bench_iters_vdamp)->capture_default_str();
    bench_cmd->add_option("--iters-fista", bench_iters_fista)->capture_default_str();
    bench_cmd->add_option("--k-eval", bench_k_eval)->capture_default_str();
    bench_cmd->add_flag("--timing", bench_timing);
    bench_cmd->add_option("--out", bench_out)->capture_default_str();

    // diagnose
    auto* diag_cmd = app.add_subcommand("diagnose", "state-evolution diagnostics for a VDAMP run");
    ExperimentArgs diag_args;
    diag_args.add_options(diag_cmd);
    std::string diag_alg = cfg_or("algorithm", std::string("vdamp_s"));
    double diag_accel = cfg_or("accel", 8.0);
    int diag_iters = cfg_or("iters", 30);
    std::string diag_subbands = cfg_or("subbands", std::string("d1,h2,v4"));
    std::string diag_qq_iters = cfg_or("qq_iters", std::string("0,5,20"));
    int diag_n_points = cfg_or("n_points", 64);
    std::string diag_out = cfg_or("out", std::string("diagnose_out"));
    diag_cmd->add_option("--algorithm", diag_alg, "vdamp_alpha|vdamp_s")->capture_default_str();
    diag_cmd->add_option("--accel", diag_accel)->capture_default_str();
    diag_cmd->add_option("--iters", diag_iters)->capture_default_str();
    diag_cmd->add_option("--subbands", diag_subbands, "labels like a,d1,h2,v4")->capture_default_str();
    diag_cmd->add_option("--qq-iters", diag_qq_iters)->capture_default_str();
    diag_cmd->add_option("--n-points", diag_n_points)->capture_default_str();
    diag_cmd->add_option("--out", diag_out)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (mask_cmd->parsed())
            return cmd_mask(mask_shape, mask_accel, mask_seed, mask_pmin, mask_decay, mask_cf, mask_out);
        if (phantom_cmd->parsed()) return cmd_phantom(ph_shape, ph_modified, ph_out);
        if (rec_cmd->parsed())
            return cmd_reconstruct(rec_args, rec_alg, rec_accel, rec_iters, rec_lambda, rec_tune,
                                   rec_k_eval, !rec_no_oracle, rec_timing, rec_out);
        if (bench_cmd->parsed())
            return cmd_benchmark(bench_args, bench_algs, bench_accels, bench_seeds,
                                 bench_iters_vdamp, bench_iters_fista, bench_k_eval, bench_timing,
                                 bench_out);
        if (diag_cmd->parsed())
            return cmd_diagnose(diag_args, diag_alg, diag_accel, diag_iters, diag_subbands,
                                diag_qq_iters, diag_n_points, diag_out);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_usage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_solver;
    }
    return exit_usage;
}
