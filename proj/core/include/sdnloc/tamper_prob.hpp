#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdnloc/block_noise.hpp"
#include "sdnloc/nlf_model.hpp"

namespace sdnloc {

/// Two-way split of noise samples by variance: label 0 = original,
/// 1 = suspicious (the smaller cluster; tie broken to the higher
/// centroid).
struct ClusterSplit {
    std::vector<int> labels;
    double centroid0 = 0.0;  // variance units
    double centroid1 = 0.0;
    std::size_t suspicious_count() const;
};

enum class TamperMapKind { bayes, distance, combined };

/// Per-block tamper probability on a block grid.
struct TamperMap {
    BlockGrid grid;
    std::vector<double> p;  // in [0,1], row-major over blocks
    TamperMapKind kind = TamperMapKind::distance;
};

struct CombinationConfig {
    double zeta = 50.0;          // difference-expanding operator
    double lambda_steep = 100.0; // logistic steepness
    double delta_shift = 0.05;   // logistic shift, area fraction
};

/// Optimal 1-D two-cluster K-means on s_n^2 via sorted sweep (globally
/// optimal for k=2 in one dimension). Throws InputError when all
/// variances are identical.
ClusterSplit kmeans_split(const NoiseSampleSet& samples, std::uint64_t seed = 0);

struct ClassPrior {
    double p0 = 0.5;
    double p1 = 0.5;
    bool degenerate = false;  // all densities underflowed; uniform fallback
};

/// Empirical class prior: p1 = sum_i p(s_i^2|sigma1(m_i)) normalized over
/// both classes, computed with a shared max-log shift.
ClassPrior class_prior(const NoiseSampleSet& samples, const Nlf& nlf0, const Nlf& nlf1,
                       const LikelihoodContext& ctx);

/// Bayes posterior tamper probability per block.
TamperMap bayes_tamper_map(const NoiseSampleSet& samples, const Nlf& nlf0, const Nlf& nlf1,
                           const LikelihoodContext& ctx);

/// Distance to the benchmark curve: P_t = 1 - exp(-zeta*|s_i - sigma0(m_i)|).
TamperMap distance_tamper_map(const NoiseSampleSet& samples, const Nlf& nlf0,
                              const CombinationConfig& cfg);

/// Logistic combination: J_c = (1-beta_p)*J1 + beta_p*J2 with
/// beta_p = 1/(1+exp(-lambda*(area_fraction-delta))).
TamperMap combine_maps(const TamperMap& j1, const TamperMap& j2, double area_fraction,
                       const CombinationConfig& cfg);

/// Heatmap export: p*255, nearest, 8-bit grayscale at block resolution
/// replicated to pixels.
void save_tamper_map_png(const std::string& path, const TamperMap& map);

}  // namespace sdnloc
