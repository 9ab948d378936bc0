#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdnloc/block_noise.hpp"
#include "sdnloc/crf.hpp"
#include "sdnloc/nlf.hpp"
#include "sdnloc/sdn_synth.hpp"

namespace sdnloc {

/// Floor applied wherever an NLF value enters a denominator.
constexpr double kSigmaMin = 1e-4;

/// PCA prior over NLF curves: mean curve, orthonormal principal
/// component basis (256 x m) and positive, non-increasing eigenvalues.
struct NlfPrior {
    Nlf mean;
    Eigen::MatrixXd basis;       // 256 x m
    Eigen::VectorXd eigenvalues; // m

    struct Provenance {
        std::vector<std::string> crf_names;
        std::vector<double> sigma_s_grid;
        std::vector<double> sigma_c_grid;
        std::size_t mc_draws = 0;
        std::uint64_t seed = 0;
        std::string rng_algorithm;
    } provenance;

    std::size_t component_count() const { return static_cast<std::size_t>(basis.cols()); }

    void save(const std::string& path) const;
    static NlfPrior load(const std::string& path);
};

/// Chi-square conditional likelihood context: degrees of freedom
/// k = pixel_count - 1, with the log-normalization cached.
class LikelihoodContext {
public:
    explicit LikelihoodContext(std::size_t dof);
    std::size_t dof() const { return dof_; }
    double log_norm() const { return log_norm_; }

private:
    std::size_t dof_;
    double log_norm_;
};

/// Synthesizes one ground-truth NLF per (crf, sigma_s, sigma_c)
/// combination on the 256-point grid, mean-centers and runs PCA.
NlfPrior build_prior(const std::vector<Crf>& crfs, const std::vector<double>& sigma_s_grid,
                     const std::vector<double>& sigma_c_grid, std::size_t m,
                     std::size_t mc_draws, std::uint64_t seed);

struct NlfFit {
    Nlf nlf;
    bool converged = false;
    std::vector<double> objective_trace;
};

/// Bayesian MAP fit of an NLF to a noise sample set: minimizes the
/// posterior objective over basis coefficients subject to the fitted
/// curve staying non-negative. Projected descent with backtracking; the
/// objective trace is non-increasing.
NlfFit fit_nlf(const NoiseSampleSet& samples, const NlfPrior& prior,
               std::size_t max_iterations = 500, double grad_tolerance = 1e-8);

/// log of the chi-square pdf with ctx.dof() degrees of freedom evaluated
/// at the statistic k*s2/sigma2. Returns -inf for s2 = 0 (k > 2).
double chi2_log_likelihood(double s2, double sigma2, const LikelihoodContext& ctx);

/// chi2_log_likelihood with sigma^2 = nlf(m_n)^2 by nearest-grid lookup;
/// curve values below kSigmaMin are floored.
double nlf_likelihood(const NoiseSample& sample, const Nlf& nlf, const LikelihoodContext& ctx);

/// log Phi(t) for the standard normal CDF, with an asymptotic tail
/// expansion for very negative t so line searches never see -inf.
double log_norm_cdf(double t);

}  // namespace sdnloc
