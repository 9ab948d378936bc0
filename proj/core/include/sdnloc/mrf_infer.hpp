#pragma once

#include <cstddef>
#include <vector>

#include "sdnloc/block_noise.hpp"
#include "sdnloc/image.hpp"
#include "sdnloc/tamper_prob.hpp"

namespace sdnloc {

/// Probability floor applied before logs in the likelihood energy.
constexpr double kProbFloor = 1e-4;

/// Binary forgery map on a block lattice.
struct LabelField {
    BlockGrid grid;
    std::vector<int> labels;  // {0,1}, row-major over blocks
};

struct MrfParams {
    double alpha = 1.0;   // single-site penalty for label 1
    double beta0 = 0.1;   // base pairwise penalty
    double beta1 = 0.5;   // similarity pairwise gain
    double phi = 25.0;    // similarity attenuation, 8-bit RGB distance units
};

struct EnergyBreakdown {
    double likelihood_energy = 0.0;
    double unary_penalty = 0.0;
    double pairwise_penalty = 0.0;
    double total = 0.0;
};

/// 4-neighborhood edge weights over the block grid:
/// beta_{i,i'} = beta0 + beta1 * exp(-||d_i-d_i'||^2 / (2*phi^2)),
/// d_i = mean block RGB scaled to [0,255].
struct EdgeWeights {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> horizontal;  // rows x (cols-1)
    std::vector<double> vertical;    // (rows-1) x cols

    double h(std::size_t r, std::size_t c) const { return horizontal[r * (cols - 1) + c]; }
    double v(std::size_t r, std::size_t c) const { return vertical[r * cols + c]; }
};

EdgeWeights pairwise_weights(const ImageRgb& image, const BlockGrid& grid,
                             const MrfParams& params);

EnergyBreakdown energy(const LabelField& labels, const TamperMap& probs,
                       const EdgeWeights& weights, const MrfParams& params);

/// Exact global minimizer of the binary submodular energy via s/t
/// max-flow on the grid graph. Rejects negative parameters.
LabelField min_cut_labels(const TamperMap& probs, const EdgeWeights& weights,
                          const MrfParams& params);

struct LbpResult {
    std::vector<double> marginals;  // approximate P(f_i = 1)
    bool converged = false;
    std::size_t sweeps = 0;
};

/// Sum-product loopy belief propagation with damping 0.5; stops at
/// message residual < 1e-6 or max_sweeps.
LbpResult lbp_marginals(const TamperMap& probs, const EdgeWeights& weights,
                        const MrfParams& params, std::size_t max_sweeps);

struct EnergyTraceEntry {
    std::size_t iteration = 0;
    EnergyBreakdown before_cut;  // energy of incoming labels under current params
    EnergyBreakdown after_cut;   // energy of the cut labeling under current params
};

struct ParamEstimate {
    MrfParams params;
    LabelField labels;
    std::vector<EnergyTraceEntry> trace;
    bool converged = false;
};

/// Alternating estimation: a grid search maximizing the Gibbs
/// pseudo-likelihood of the current labeling selects {alpha,beta0,beta1},
/// then an exact cut updates the labeling; stops on a label fixed point
/// or iter_max.
ParamEstimate estimate_params(const TamperMap& probs, const ImageRgb& image,
                              const BlockGrid& grid, const LabelField& init_labels,
                              std::size_t iter_max = 5, double phi = 25.0);

}  // namespace sdnloc
