#include "sdnloc/nlf_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sdnloc/errors.hpp"
#include "sdnloc/rng.hpp"

namespace sdnloc {

// --- Nlf ---

Nlf::Nlf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() != kGridSize) throw InputError("NLF must have 256 grid values");
    for (double v : values_)
        if (!std::isfinite(v) || v < 0.0) throw InputError("NLF values must be finite and >= 0");
}

std::size_t Nlf::grid_index(double intensity) {
    const long i = std::lround(std::clamp(intensity, 0.0, 1.0) * 255.0);
    return static_cast<std::size_t>(std::clamp(i, 0L, 255L));
}

void Nlf::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "intensity,sigma\n";
    out.precision(9);
    for (std::size_t i = 0; i < kGridSize; ++i)
        out << static_cast<double>(i) / 255.0 << "," << values_[i] << "\n";
}

// --- chi-square likelihood ---

LikelihoodContext::LikelihoodContext(std::size_t dof) : dof_(dof) {
    if (dof < 1) throw InputError("degrees of freedom must be >= 1");
    const double k = static_cast<double>(dof);
    log_norm_ = -(k / 2.0) * std::log(2.0) - std::lgamma(k / 2.0);
}

double chi2_log_likelihood(double s2, double sigma2, const LikelihoodContext& ctx) {
    if (sigma2 <= 0.0) throw InputError("population variance must be positive");
    if (s2 < 0.0) throw InputError("sample variance must be >= 0");
    const double k = static_cast<double>(ctx.dof());
    const double u = k * s2 / sigma2;
    if (u == 0.0) {
        if (ctx.dof() == 2) return std::log(0.5);
        return ctx.dof() > 2 ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
    }
    return (k / 2.0 - 1.0) * std::log(u) - u / 2.0 + ctx.log_norm();
}

double nlf_likelihood(const NoiseSample& sample, const Nlf& nlf, const LikelihoodContext& ctx) {
    const double sigma = std::max(nlf.at_intensity(sample.mean), kSigmaMin);
    return chi2_log_likelihood(sample.std * sample.std, sigma * sigma, ctx);
}

double log_norm_cdf(double t) {
    if (t > -8.0) return std::log(0.5 * std::erfc(-t / std::sqrt(2.0)));
    // asymptotic tail: Phi(t) ~ phi(t)/(-t) * (1 - 1/t^2 + 3/t^4)
    const double t2 = t * t;
    return -0.5 * t2 - 0.5 * std::log(2.0 * M_PI) - std::log(-t) +
           std::log1p(-1.0 / t2 + 3.0 / (t2 * t2));
}

// --- prior construction ---

NlfPrior build_prior(const std::vector<Crf>& crfs, const std::vector<double>& sigma_s_grid,
                     const std::vector<double>& sigma_c_grid, std::size_t m,
                     std::size_t mc_draws, std::uint64_t seed) {
    const std::size_t combos = crfs.size() * sigma_s_grid.size() * sigma_c_grid.size();
    if (combos < 20) throw InputError("prior needs >= 20 (crf, sigma_s, sigma_c) combinations");
    if (m == 0 || m > combos) throw InputError("component count out of range");

    std::vector<double> grid(Nlf::kGridSize);
    for (std::size_t i = 0; i < Nlf::kGridSize; ++i) grid[i] = static_cast<double>(i) / 255.0;

    const auto d = static_cast<Eigen::Index>(Nlf::kGridSize);
    Eigen::MatrixXd curves(d, static_cast<Eigen::Index>(combos));
    std::size_t col = 0;
    for (const auto& crf : crfs) {
        for (double ss : sigma_s_grid) {
            for (double sc : sigma_c_grid) {
                const Nlf nlf = nlf_ground_truth(crf, {ss, sc}, grid, mc_draws, seed + col);
                for (Eigen::Index i = 0; i < d; ++i)
                    curves(i, static_cast<Eigen::Index>(col)) =
                        nlf[static_cast<std::size_t>(i)];
                ++col;
            }
        }
    }

    const Eigen::VectorXd mean = curves.rowwise().mean();
    Eigen::MatrixXd centered = curves.colwise() - mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    NlfPrior prior;
    prior.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(m));
    prior.eigenvalues.resize(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        const double s = sv(static_cast<Eigen::Index>(i));
        prior.eigenvalues(static_cast<Eigen::Index>(i)) =
            s * s / static_cast<double>(combos - 1);
    }
    if (prior.eigenvalues(static_cast<Eigen::Index>(m - 1)) < 1e-14)
        throw InputError("degenerate training set: covariance rank below component count");

    std::vector<double> mean_vec(Nlf::kGridSize);
    for (Eigen::Index i = 0; i < d; ++i)
        mean_vec[static_cast<std::size_t>(i)] = std::max(0.0, mean(i));
    prior.mean = Nlf(std::move(mean_vec));

    for (const auto& c : crfs) prior.provenance.crf_names.push_back(c.name());
    prior.provenance.sigma_s_grid = sigma_s_grid;
    prior.provenance.sigma_c_grid = sigma_c_grid;
    prior.provenance.mc_draws = mc_draws;
    prior.provenance.seed = seed;
    prior.provenance.rng_algorithm = Rng::kAlgorithm;
    return prior;
}

void NlfPrior::save(const std::string& path) const {
    nlohmann::json j;
    j["mean"] = mean.values();
    j["components"] = component_count();
    std::vector<std::vector<double>> b(Nlf::kGridSize, std::vector<double>(component_count()));
    for (std::size_t r = 0; r < Nlf::kGridSize; ++r)
        for (std::size_t c = 0; c < component_count(); ++c)
            b[r][c] = basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    j["basis"] = b;
    std::vector<double> ev(component_count());
    for (std::size_t c = 0; c < component_count(); ++c)
        ev[c] = eigenvalues(static_cast<Eigen::Index>(c));
    j["eigenvalues"] = ev;
    j["provenance"] = {{"crf_names", provenance.crf_names},
                       {"sigma_s_grid", provenance.sigma_s_grid},
                       {"sigma_c_grid", provenance.sigma_c_grid},
                       {"mc_draws", provenance.mc_draws},
                       {"seed", provenance.seed},
                       {"rng_algorithm", provenance.rng_algorithm}};
    std::ofstream out(path);
    if (!out) throw InputError("cannot write prior file: " + path);
    out << j.dump(2) << "\n";
}

NlfPrior NlfPrior::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open prior file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed prior file: ") + e.what());
    }
    NlfPrior prior;
    try {
        prior.mean = Nlf(j.at("mean").get<std::vector<double>>());
        const auto m = j.at("components").get<std::size_t>();
        const auto b = j.at("basis").get<std::vector<std::vector<double>>>();
        if (b.size() != Nlf::kGridSize) throw InputError("prior basis must have 256 rows");
        prior.basis.resize(static_cast<Eigen::Index>(Nlf::kGridSize),
                           static_cast<Eigen::Index>(m));
        for (std::size_t r = 0; r < Nlf::kGridSize; ++r) {
            if (b[r].size() != m) throw InputError("ragged prior basis");
            for (std::size_t c = 0; c < m; ++c)
                prior.basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = b[r][c];
        }
        const auto ev = j.at("eigenvalues").get<std::vector<double>>();
        if (ev.size() != m) throw InputError("eigenvalue count mismatch");
        prior.eigenvalues.resize(static_cast<Eigen::Index>(m));
        for (std::size_t c = 0; c < m; ++c) {
            if (ev[c] <= 0.0) throw InputError("prior eigenvalues must be positive");
            prior.eigenvalues(static_cast<Eigen::Index>(c)) = ev[c];
        }
        const auto& prov = j.at("provenance");
        prior.provenance.crf_names = prov.at("crf_names").get<std::vector<std::string>>();
        prior.provenance.sigma_s_grid = prov.at("sigma_s_grid").get<std::vector<double>>();
        prior.provenance.sigma_c_grid = prov.at("sigma_c_grid").get<std::vector<double>>();
        prior.provenance.mc_draws = prov.at("mc_draws").get<std::size_t>();
        prior.provenance.seed = prov.at("seed").get<std::uint64_t>();
        prior.provenance.rng_algorithm = prov.at("rng_algorithm").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed prior file: ") + e.what());
    }
    return prior;
}

// --- MAP fit ---

namespace {

struct FitProblem {
    const NlfPrior& prior;
    std::vector<std::size_t> grid_idx;
    std::vector<double> s;       // floored sample stds
    std::vector<double> sqrt_k;
    Eigen::VectorXd lambda_inv;

    double objective(const Eigen::VectorXd& x) const {
        double obj = 0.0;
        for (std::size_t n = 0; n < s.size(); ++n) {
            const auto gi = static_cast<Eigen::Index>(grid_idx[n]);
            const double pred = prior.mean[grid_idx[n]] + prior.basis.row(gi).dot(x);
            const double t = sqrt_k[n] * (s[n] - pred) / s[n];
            obj += -log_norm_cdf(t) + 0.5 * t * t;
        }
        obj += x.dot(lambda_inv.cwiseProduct(x));
        return obj;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
        Eigen::VectorXd g = 2.0 * lambda_inv.cwiseProduct(x);
        for (std::size_t n = 0; n < s.size(); ++n) {
            const auto gi = static_cast<Eigen::Index>(grid_idx[n]);
            const double pred = prior.mean[grid_idx[n]] + prior.basis.row(gi).dot(x);
            const double t = sqrt_k[n] * (s[n] - pred) / s[n];
            // d/dt [-log Phi(t) + t^2/2] = t - phi(t)/Phi(t)
            const double log_ratio = -0.5 * t * t - 0.5 * std::log(2.0 * M_PI) - log_norm_cdf(t);
            const double dcost_dt = t - std::exp(log_ratio);
            const double dt_dpred = -sqrt_k[n] / s[n];
            g += dcost_dt * dt_dpred * prior.basis.row(gi).transpose();
        }
        return g;
    }

    // Gauss-Newton curvature bound: the per-sample cost as a function of t has
    // second derivative in (1, 2], so 2*(sqrt_k/s)^2 b b^T dominates the data
    // block and 2 Lambda^{-1} the prior block. Used as a fixed preconditioner.
    Eigen::MatrixXd curvature() const {
        const auto m = static_cast<Eigen::Index>(lambda_inv.size());
        Eigen::MatrixXd h = (2.0 * lambda_inv).asDiagonal();
        for (std::size_t n = 0; n < s.size(); ++n) {
            const auto gi = static_cast<Eigen::Index>(grid_idx[n]);
            const double c = 2.0 * (sqrt_k[n] / s[n]) * (sqrt_k[n] / s[n]);
            h.noalias() += c * prior.basis.row(gi).transpose() * prior.basis.row(gi);
        }
        return h;
    }

    // pull x back toward the feasible set (curve >= 0)
    Eigen::VectorXd project(Eigen::VectorXd x) const {
        for (int pass = 0; pass < 10; ++pass) {
            Eigen::VectorXd curve =
                Eigen::Map<const Eigen::VectorXd>(prior.mean.values().data(),
                                                  static_cast<Eigen::Index>(Nlf::kGridSize)) +
                prior.basis * x;
            if ((curve.array() >= -1e-12).all()) break;
            const Eigen::VectorXd clipped = curve.cwiseMax(0.0);
            x = prior.basis.transpose() *
                (clipped - Eigen::Map<const Eigen::VectorXd>(
                               prior.mean.values().data(),
                               static_cast<Eigen::Index>(Nlf::kGridSize)));
        }
        return x;
    }
};

}  // namespace

NlfFit fit_nlf(const NoiseSampleSet& samples, const NlfPrior& prior,
               std::size_t max_iterations, double grad_tolerance) {
    if (samples.samples.empty()) throw InputError("fit_nlf needs a non-empty sample set");
    for (const auto& s : samples.samples)
        if (!s.smooth) throw InputError("fit_nlf expects smooth samples only");

    FitProblem prob{prior, {}, {}, {}, {}};
    for (const auto& s : samples.samples) {
        prob.grid_idx.push_back(Nlf::grid_index(s.mean));
        prob.s.push_back(std::max(s.std, kSigmaMin));
        prob.sqrt_k.push_back(std::sqrt(static_cast<double>(s.pixel_count - 1)));
    }
    prob.lambda_inv = prior.eigenvalues.cwiseMax(1e-12).cwiseInverse();

    const auto m = static_cast<Eigen::Index>(prior.component_count());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    double obj = prob.objective(x);

    NlfFit result;
    result.objective_trace.push_back(obj);

    const Eigen::LLT<Eigen::MatrixXd> precond(prob.curvature());

    double eta = 1.0;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd g = prob.gradient(x);
        if (g.lpNorm<Eigen::Infinity>() < grad_tolerance) {
            result.converged = true;
            break;
        }
        const Eigen::VectorXd dir = precond.solve(g);
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::VectorXd trial = prob.project(x - eta * dir);
            const double trial_obj = prob.objective(trial);
            if (trial_obj < obj) {
                x = trial;
                obj = trial_obj;
                result.objective_trace.push_back(obj);
                eta *= 1.5;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            result.converged = true;  // no descent direction at machine precision
            break;
        }
    }

    Eigen::VectorXd curve =
        Eigen::Map<const Eigen::VectorXd>(prior.mean.values().data(),
                                          static_cast<Eigen::Index>(Nlf::kGridSize)) +
        prior.basis * x;
    std::vector<double> vals(Nlf::kGridSize);
    for (std::size_t i = 0; i < Nlf::kGridSize; ++i)
        vals[i] = std::max(0.0, curve(static_cast<Eigen::Index>(i)));
    result.nlf = Nlf(std::move(vals));
    return result;
}

}  // namespace sdnloc
