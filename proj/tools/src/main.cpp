#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdnloc/errors.hpp"
#include "sdnloc/pipeline.hpp"
#include "sdnloc/rng.hpp"
#include "sdnloc/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdnloc;

namespace {

// ---- logging: line-delimited JSON on stderr ----

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };
LogLevel g_log_level = LogLevel::warn;

void log_line(LogLevel level, const std::string& msg) {
    if (level > g_log_level) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    json j{{"level", names[static_cast<int>(level)]}, {"msg", msg}};
    std::cerr << j.dump() << "\n";
}

// ---- numeric formatting: 9 significant digits for diff-stable output ----

double round9(double v) {
    if (!std::isfinite(v)) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

json round9(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(round9(x));
    return a;
}

// ---- resolved configuration ----

struct Config {
    std::size_t block_size = 32;
    double zeta = 50.0;
    double phi = 25.0;
    double lambda_steep = 100.0;
    double delta_shift = 0.05;
    std::size_t iter_max = 5;
    std::uint64_t seed = 0;
    std::string prior_path;

    void validate() const {
        if (block_size < 8) throw InputError("block_size must be >= 8");
        if (zeta <= 0.0) throw InputError("zeta must be positive");
        if (phi <= 0.0) throw InputError("phi must be positive");
        if (lambda_steep <= 0.0) throw InputError("lambda_steep must be positive");
        if (delta_shift <= 0.0 || delta_shift >= 1.0)
            throw InputError("delta_shift must be in (0,1)");
        if (iter_max < 1) throw InputError("iter_max must be >= 1");
    }

    DetectConfig to_detect() const {
        DetectConfig d;
        d.block_size = block_size;
        d.zeta = zeta;
        d.phi = phi;
        d.lambda_steep = lambda_steep;
        d.delta_shift = delta_shift;
        d.iter_max = iter_max;
        d.seed = seed;
        return d;
    }

    json to_json() const {
        return json{{"block_size", block_size},
                    {"zeta", round9(zeta)},
                    {"phi", round9(phi)},
                    {"lambda_steep", round9(lambda_steep)},
                    {"delta_shift", round9(delta_shift)},
                    {"iter_max", iter_max},
                    {"seed", seed},
                    {"prior_path", prior_path},
                    {"p_floor", round9(kProbFloor)},
                    {"sigma_min", round9(kSigmaMin)},
                    {"rng_algorithm", Rng::kAlgorithm}};
    }
};

// key=value file, '#' comments; unknown keys rejected
void apply_config_file(Config& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "block_size")
                cfg.block_size = std::stoul(val);
            else if (key == "zeta")
                cfg.zeta = std::stod(val);
            else if (key == "phi")
                cfg.phi = std::stod(val);
            else if (key == "lambda_steep")
                cfg.lambda_steep = std::stod(val);
            else if (key == "delta_shift")
                cfg.delta_shift = std::stod(val);
            else if (key == "iter_max")
                cfg.iter_max = std::stoul(val);
            else if (key == "seed")
                cfg.seed = std::stoull(val);
            else if (key == "prior_path")
                cfg.prior_path = val;
            else if (key == "p_floor") {
                if (std::stod(val) != kProbFloor)
                    throw InputError("p_floor is fixed at 1e-4 in this build");
            } else if (key == "sigma_min") {
                if (std::stod(val) != kSigmaMin)
                    throw InputError("sigma_min is fixed at 1e-4 in this build");
            } else {
                throw InputError("unknown config key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw InputError("config key " + key + ": invalid value '" + val + "'");
        }
    }
}

Crf parse_crf(const std::string& spec) {
    if (spec == "identity") return Crf::identity();
    if (spec.rfind("gamma:", 0) == 0) return Crf::gamma(std::stod(spec.substr(6)));
    if (spec.rfind("file:", 0) == 0) return Crf::load(spec.substr(5));
    throw InputError("unrecognized CRF spec: " + spec +
                     " (use identity, gamma:<g> or file:<path>)");
}

NoiseParams parse_sigmas(const std::string& spec) {
    const auto comma = spec.find(',');
    if (comma == std::string::npos)
        throw InputError("expected sigma_s,sigma_c pair, got: " + spec);
    NoiseParams p;
    p.sigma_s = std::stod(spec.substr(0, comma));
    p.sigma_c = std::stod(spec.substr(comma + 1));
    if (p.sigma_s < 0.0 || p.sigma_c < 0.0) throw InputError("sigmas must be >= 0");
    return p;
}

json metrics_json(const Metrics& m) {
    return json{{"tp", m.tp},
                {"tn", m.tn},
                {"fp", m.fp},
                {"fn", m.fn},
                {"precision", round9(m.precision)},
                {"recall", round9(m.recall)},
                {"accuracy", round9(m.accuracy)},
                {"f_score", round9(m.f_score)}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

// optimal 1-D two-cluster split of pixel values; returns the midpoint
// threshold, or nothing when the values are constant
std::optional<double> two_means_threshold(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n < 2 || v.front() == v.back()) return std::nullopt;
    std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        pre[i + 1] = pre[i] + v[i];
        pre2[i + 1] = pre2[i] + v[i] * v[i];
    }
    auto sse = [&](std::size_t lo, std::size_t hi) {
        const auto c = static_cast<double>(hi - lo);
        const double s = pre[hi] - pre[lo];
        return (pre2[hi] - pre2[lo]) - s * s / c;
    };
    std::size_t best = 1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t split = 1; split < n; ++split) {
        const double cost = sse(0, split) + sse(split, n);
        if (cost < best_cost) {
            best_cost = cost;
            best = split;
        }
    }
    return 0.5 * (v[best - 1] + v[best]);
}

// ---- subcommand payloads ----

int run_synth(const std::string& host, const std::string& alien, const std::string& crf,
              std::size_t size, std::size_t patch, long offset, std::uint64_t seed,
              const std::string& out, bool pristine) {
    SpliceSpec spec;
    spec.host = parse_sigmas(host);
    spec.alien = parse_sigmas(alien);
    const Crf parsed = parse_crf(crf);
    if (parsed.name().rfind("gamma", 0) != 0 && parsed.name() != "identity")
        throw InputError("synth supports identity and gamma CRFs");
    spec.crf_gamma = parsed.name() == "identity" ? 1.0 : std::stod(parsed.name().substr(6));
    spec.size = size;
    spec.patch = patch;
    if (offset >= 0) spec.offset = static_cast<std::size_t>(offset);
    spec.seed = seed;

    fs::create_directories(out);
    const SpliceSample sample = pristine ? synth_pristine(spec) : synth_splice(spec);
    save_png_rgb((fs::path(out) / "image.png").string(), sample.image);
    save_png_binary((fs::path(out) / "mask.png").string(), sample.mask);
    log_line(LogLevel::info, "wrote image.png and mask.png to " + out);
    return 0;
}

int run_prior(const std::vector<double>& gammas, const std::vector<double>& sigma_s,
              const std::vector<double>& sigma_c, std::size_t components, std::size_t mc_draws,
              std::uint64_t seed, const std::string& out) {
    std::vector<Crf> crfs;
    for (double g : gammas) crfs.push_back(g == 1.0 ? Crf::identity() : Crf::gamma(g));
    log_line(LogLevel::info, "training prior over " +
                                 std::to_string(crfs.size() * sigma_s.size() * sigma_c.size()) +
                                 " noise settings");
    const NlfPrior prior = build_prior(crfs, sigma_s, sigma_c, components, mc_draws, seed);
    prior.save(out);
    log_line(LogLevel::info, "wrote prior to " + out);
    return 0;
}

int run_detect(const std::string& image_path, const Config& cfg, const std::string& out,
               const std::vector<std::string>& dump_prob, bool dump_samples, bool dump_energy) {
    if (cfg.prior_path.empty()) throw InputError("detect requires --prior");
    const NlfPrior prior = NlfPrior::load(cfg.prior_path);
    const ImageRgb image = load_image(image_path);
    log_line(LogLevel::info, "detecting on " + image_path);

    const DetectionResult res = detect(image, prior, cfg.to_detect());

    fs::create_directories(out);
    const fs::path dir(out);
    save_png_binary((dir / "decision.png").string(), res.decision);
    save_tamper_map_png((dir / "heatmap.png").string(), res.combined_probs);

    for (const auto& kind : dump_prob) {
        const TamperMap* map = nullptr;
        if (kind == "bayes")
            map = &res.bayes_probs;
        else if (kind == "distance")
            map = &res.distance_probs;
        else if (kind == "combined")
            map = &res.combined_probs;
        else
            throw InputError("--dump-prob expects bayes, distance or combined");
        save_tamper_map_png((dir / ("prob_" + kind + ".png")).string(), *map);
    }
    if (dump_samples) {
        res.samples_coarse.save_csv((dir / "samples_coarse.csv").string());
        res.samples_fine.save_csv((dir / "samples_fine.csv").string());
    }

    double tampered = 0.0;
    for (double v : res.decision.values) tampered += v;
    tampered /= static_cast<double>(res.decision.values.size());

    json result;
    result["config"] = cfg.to_json();
    result["input"] = image_path;
    result["image"] = {{"width", image.width}, {"height", image.height}};
    result["degraded"] = res.degraded;
    result["warnings"] = res.warnings;
    result["area_fraction"] = round9(res.area_fraction);
    result["cluster_sep"] = round9(res.cluster_sep);
    result["tampered_fraction"] = round9(tampered);
    result["class_prior"] = {{"p0", round9(res.priors.p0)},
                             {"p1", round9(res.priors.p1)},
                             {"degenerate", res.priors.degenerate}};
    result["mrf_params"] = {{"alpha", round9(res.params.alpha)},
                            {"beta0", round9(res.params.beta0)},
                            {"beta1", round9(res.params.beta1)},
                            {"phi", round9(res.params.phi)}};
    result["nlf0"] = {{"converged", res.nlf0_converged}, {"values", round9(res.nlf0.values())}};
    result["nlf1"] = {{"converged", res.nlf1_converged}, {"values", round9(res.nlf1.values())}};
    json trace = json::array();
    for (const auto& e : res.energy_trace)
        trace.push_back({{"iteration", e.iteration},
                         {"before_total", round9(e.before_cut.total)},
                         {"after_total", round9(e.after_cut.total)}});
    result["energy_trace"] = trace;
    write_text(dir / "result.json", result.dump(2) + "\n");

    if (dump_energy) {
        json full = json::array();
        for (const auto& e : res.energy_trace) {
            auto breakdown = [](const EnergyBreakdown& b) {
                return json{{"likelihood", round9(b.likelihood_energy)},
                            {"unary", round9(b.unary_penalty)},
                            {"pairwise", round9(b.pairwise_penalty)},
                            {"total", round9(b.total)}};
            };
            full.push_back({{"iteration", e.iteration},
                            {"before_cut", breakdown(e.before_cut)},
                            {"after_cut", breakdown(e.after_cut)}});
        }
        write_text(dir / "energy.json", full.dump(2) + "\n");
    }

    for (const auto& w : res.warnings) log_line(LogLevel::warn, w);
    return res.warnings.empty() ? 0 : 3;
}

int run_eval(const std::string& pred_dir, const std::string& truth_dir,
             const std::string& out) {
    std::map<std::string, fs::path> truths;
    for (const auto& entry : fs::directory_iterator(truth_dir))
        if (entry.is_regular_file()) truths[entry.path().stem().string()] = entry.path();

    std::ostringstream csv;
    csv << "name,tp,tn,fp,fn,precision,recall,accuracy,f_score\n";
    csv.precision(9);

    json per_image = json::array();
    double sum_p = 0.0, sum_r = 0.0, sum_a = 0.0, sum_f = 0.0;
    std::size_t count = 0;

    std::vector<fs::path> preds;
    for (const auto& entry : fs::directory_iterator(pred_dir))
        if (entry.is_regular_file()) preds.push_back(entry.path());
    std::sort(preds.begin(), preds.end());

    for (const auto& pred_path : preds) {
        const std::string stem = pred_path.stem().string();
        const auto it = truths.find(stem);
        if (it == truths.end()) {
            log_line(LogLevel::warn, "no ground truth for " + stem + ", skipping");
            continue;
        }
        ImagePlane pred = load_image_gray(pred_path.string());
        const ImagePlane truth = load_image_gray(it->second.string());

        // soft heatmaps are binarized by an optimal two-cluster split; the
        // higher cluster is the tampered one
        bool binary = true;
        for (double v : pred.values)
            if (v != 0.0 && v != 1.0) {
                binary = false;
                break;
            }
        if (!binary) {
            const auto thr = two_means_threshold(pred.values);
            for (double& v : pred.values) v = (thr && v > *thr) ? 1.0 : 0.0;
        }

        const Metrics m = score(pred, truth);
        csv << stem << "," << m.tp << "," << m.tn << "," << m.fp << "," << m.fn << ","
            << round9(m.precision) << "," << round9(m.recall) << "," << round9(m.accuracy)
            << "," << round9(m.f_score) << "\n";
        json row = metrics_json(m);
        row["name"] = stem;
        per_image.push_back(row);
        sum_p += m.precision;
        sum_r += m.recall;
        sum_a += m.accuracy;
        sum_f += m.f_score;
        ++count;
    }
    if (count == 0) throw InputError("no prediction/ground-truth pairs found");

    fs::create_directories(out);
    write_text(fs::path(out) / "metrics.csv", csv.str());
    const auto n = static_cast<double>(count);
    json summary{{"images", count},
                 {"macro", {{"precision", round9(sum_p / n)},
                            {"recall", round9(sum_r / n)},
                            {"accuracy", round9(sum_a / n)},
                            {"f_score", round9(sum_f / n)}}},
                 {"per_image", per_image}};
    write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
    return 0;
}

int run_robustness(const std::string& image_path, const std::string& mask_path,
                   const Config& cfg, const std::vector<double>& jpeg,
                   const std::vector<double>& scale, const std::string& out) {
    if (cfg.prior_path.empty()) throw InputError("robustness requires --prior");
    const NlfPrior prior = NlfPrior::load(cfg.prior_path);
    const ImageRgb image = load_image(image_path);
    const ImagePlane mask = load_image_gray(mask_path);

    std::vector<AttackSpec> attacks;
    for (double q : jpeg) {
        if (q < 1.0 || q > 100.0) throw InputError("JPEG quality must be in [1,100]");
        attacks.push_back({AttackSpec::Kind::jpeg, q});
    }
    for (double s : scale) {
        if (s <= 0.0 || s > 1.0) throw InputError("scale factor must be in (0,1]");
        attacks.push_back({AttackSpec::Kind::scale, s});
    }
    if (attacks.empty()) throw InputError("no attacks given: use --jpeg and/or --scale");

    const auto rows = robustness_sweep(image, mask, prior, attacks, cfg.to_detect());

    std::ostringstream csv;
    csv << "attack,kind,factor,tp,tn,fp,fn,precision,recall,accuracy,f_score,failed,error\n";
    csv.precision(9);
    for (const auto& row : rows) {
        const auto& m = row.metrics;
        csv << row.attack.label() << ","
            << (row.attack.kind == AttackSpec::Kind::jpeg ? "jpeg" : "scale") << ","
            << round9(row.attack.factor) << "," << m.tp << "," << m.tn << "," << m.fp << ","
            << m.fn << "," << round9(m.precision) << "," << round9(m.recall) << ","
            << round9(m.accuracy) << "," << round9(m.f_score) << ","
            << (row.failed ? 1 : 0) << "," << row.error << "\n";
        if (row.failed) log_line(LogLevel::warn, row.attack.label() + " failed: " + row.error);
    }
    fs::create_directories(out);
    write_text(fs::path(out) / "sweep.csv", csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind image splicing localization from sensor noise statistics"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "Log verbosity on stderr (JSON lines)")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (0 = logical cores)");
    std::string config_path;
    app.add_option("--config", config_path, "key=value config file");

    Config cfg;

    // synth splice
    auto* synth = app.add_subcommand("synth", "Generate synthetic test images");
    auto* splice = synth->add_subcommand("splice", "Smooth scene with a spliced noise patch");
    std::string host = "0.02,0.02", alien = "0.08,0.06", crf = "gamma:2.2", synth_out = ".";
    std::size_t size = 256, patch = 96;
    long patch_offset = -1;
    std::uint64_t synth_seed = 0;
    bool pristine = false;
    splice->add_option("--host-sigmas", host, "Host noise sigma_s,sigma_c");
    splice->add_option("--patch-sigmas", alien, "Patch noise sigma_s,sigma_c");
    splice->add_option("--crf", crf, "CRF: identity, gamma:<g> or file:<path>");
    splice->add_option("--size", size, "Image side length")->check(CLI::Range(64, 8192));
    splice->add_option("--patch", patch, "Patch side length");
    splice->add_option("--offset", patch_offset, "Patch top-left corner (default: centered)");
    splice->add_option("--seed", synth_seed, "RNG seed");
    splice->add_option("--out", synth_out, "Output directory");
    splice->add_flag("--pristine", pristine, "Skip the patch: host noise everywhere");

    // prior build
    auto* prior_cmd = app.add_subcommand("prior", "NLF prior management");
    auto* build = prior_cmd->add_subcommand("build", "Train the PCA prior over an NLF family");
    std::vector<double> gammas{1.0, 1.4, 1.8, 2.2, 2.6};
    std::vector<double> sigma_s{0.02, 0.05, 0.08}, sigma_c{0.02, 0.04, 0.06};
    std::size_t components = 6, mc_draws = 10000;
    std::uint64_t prior_seed = 0;
    std::string prior_out = "prior.json";
    build->add_option("--gammas", gammas, "Gamma CRF family (1.0 = identity)")->delimiter(',');
    build->add_option("--sigma-s", sigma_s, "sigma_s training grid")->delimiter(',');
    build->add_option("--sigma-c", sigma_c, "sigma_c training grid")->delimiter(',');
    build->add_option("--components", components, "Principal component count");
    build->add_option("--mc-draws", mc_draws, "Monte-Carlo draws per grid intensity");
    build->add_option("--seed", prior_seed, "RNG seed");
    build->add_option("--out", prior_out, "Output prior file");

    // detect
    auto* det = app.add_subcommand("detect", "Localize spliced regions in one image");
    std::string det_image, det_out = ".";
    std::vector<std::string> dump_prob;
    bool dump_samples = false, dump_energy = false;
    det->add_option("image", det_image, "Input image (PNG/PPM/PGM)")->required();
    auto* opt_prior = det->add_option("--prior", cfg.prior_path, "NLF prior file");
    det->add_option("--out", det_out, "Output directory");
    auto* opt_seed = det->add_option("--seed", cfg.seed, "RNG seed");
    auto* opt_block = det->add_option("--block", cfg.block_size, "Coarse block size B");
    auto* opt_zeta = det->add_option("--zeta", cfg.zeta, "Difference-expanding operator");
    auto* opt_phi = det->add_option("--phi", cfg.phi, "Similarity attenuation");
    auto* opt_lambda = det->add_option("--lambda", cfg.lambda_steep, "Combination steepness");
    auto* opt_delta = det->add_option("--delta", cfg.delta_shift, "Combination area shift");
    auto* opt_iter = det->add_option("--iter-max", cfg.iter_max, "Alternation iteration cap");
    det->add_option("--dump-prob", dump_prob,
                    "Also write prob_<kind>.png: bayes, distance, combined");
    det->add_flag("--dump-samples", dump_samples, "Write per-block noise sample CSVs");
    det->add_flag("--dump-energy", dump_energy, "Write the full energy trace JSON");

    // eval
    auto* ev = app.add_subcommand("eval", "Score predictions against ground-truth masks");
    std::string pred_dir, truth_dir, eval_out = ".";
    ev->add_option("pred_dir", pred_dir, "Directory of predicted maps")->required();
    ev->add_option("truth_dir", truth_dir, "Directory of ground-truth masks")->required();
    ev->add_option("--out", eval_out, "Output directory");

    // robustness
    auto* rob = app.add_subcommand("robustness", "Re-detect under JPEG/scaling attacks");
    std::string rob_image, rob_mask, rob_out = ".";
    std::vector<double> jpeg_list, scale_list;
    rob->add_option("image", rob_image, "Input image")->required();
    rob->add_option("mask", rob_mask, "Ground-truth mask")->required();
    auto* rob_prior = rob->add_option("--prior", cfg.prior_path, "NLF prior file");
    rob->add_option("--jpeg", jpeg_list, "JPEG quality factors")->delimiter(',');
    rob->add_option("--scale", scale_list, "Scale factors")->delimiter(',');
    rob->add_option("--out", rob_out, "Output directory");
    auto* rob_seed = rob->add_option("--seed", cfg.seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (log_level == "error") g_log_level = LogLevel::error;
    else if (log_level == "warn") g_log_level = LogLevel::warn;
    else if (log_level == "info") g_log_level = LogLevel::info;
    else g_log_level = LogLevel::debug;

    try {
        // precedence: CLI flag > config file > default
        if (!config_path.empty()) {
            Config file_cfg;
            apply_config_file(file_cfg, config_path);
            if (!opt_seed->count() && !rob_seed->count()) cfg.seed = file_cfg.seed;
            if (!opt_block->count()) cfg.block_size = file_cfg.block_size;
            if (!opt_zeta->count()) cfg.zeta = file_cfg.zeta;
            if (!opt_phi->count()) cfg.phi = file_cfg.phi;
            if (!opt_lambda->count()) cfg.lambda_steep = file_cfg.lambda_steep;
            if (!opt_delta->count()) cfg.delta_shift = file_cfg.delta_shift;
            if (!opt_iter->count()) cfg.iter_max = file_cfg.iter_max;
            if (!opt_prior->count() && !rob_prior->count() && !file_cfg.prior_path.empty())
                cfg.prior_path = file_cfg.prior_path;
        }
        cfg.validate();
        (void)threads;  // analysis is single-threaded; kept for interface stability

        if (splice->parsed())
            return run_synth(host, alien, crf, size, patch, patch_offset, synth_seed, synth_out,
                             pristine);
        if (build->parsed())
            return run_prior(gammas, sigma_s, sigma_c, components, mc_draws, prior_seed,
                             prior_out);
        if (det->parsed())
            return run_detect(det_image, cfg, det_out, dump_prob, dump_samples, dump_energy);
        if (ev->parsed()) return run_eval(pred_dir, truth_dir, eval_out);
        if (rob->parsed())
            return run_robustness(rob_image, rob_mask, cfg, jpeg_list, scale_list, rob_out);
        std::cerr << app.help();
        return 2;
    } catch (const InputError& e) {
        log_line(LogLevel::error, e.what());
        return 2;
    } catch (const std::exception& e) {
        log_line(LogLevel::error, e.what());
        return 1;
    }
}
