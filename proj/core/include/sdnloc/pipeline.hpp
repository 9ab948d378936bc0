#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdnloc/mrf_infer.hpp"
#include "sdnloc/nlf_model.hpp"
#include "sdnloc/tamper_prob.hpp"

namespace sdnloc {

struct DetectConfig {
    std::size_t block_size = 32;
    std::size_t patch_size = 5;
    double zeta = 50.0;
    double phi = 25.0;
    double lambda_steep = 100.0;
    double delta_shift = 0.05;
    std::size_t iter_max = 5;
    std::uint64_t seed = 0;
};

struct DetectionResult {
    ImagePlane decision;       // pixel resolution, values {0,1}
    TamperMap combined_probs;  // B/2 lattice
    TamperMap distance_probs;
    TamperMap bayes_probs;
    Nlf nlf0;
    Nlf nlf1;
    MrfParams params;
    std::vector<EnergyTraceEntry> energy_trace;
    ClassPrior priors;
    double area_fraction = 0.0;
    double cluster_sep = 0.0;  // median z of the suspicious cluster vs nlf0
    bool degraded = false;  // single-cluster split: distance map only
    bool nlf0_converged = true;
    bool nlf1_converged = true;
    std::vector<std::string> warnings;
    NoiseSampleSet samples_coarse;  // B lattice
    NoiseSampleSet samples_fine;    // B/2 lattice
};

struct Metrics {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, accuracy = 0.0, f_score = 0.0;
};

struct AttackSpec {
    enum class Kind { jpeg, scale } kind = Kind::jpeg;
    double factor = 100.0;  // quality in [1,100] or scale in (0,1]
    std::string label() const;
};

/// Full blind localization: coarse decomposition, PCA noise estimation,
/// K-means split, MAP NLF fits, fine re-estimation, probability maps,
/// combination, alternating parameter estimation and the final cut.
DetectionResult detect(const ImageRgb& image, const NlfPrior& prior, const DetectConfig& config);

/// Pixel counts and ratios; degenerate masks use the 0-convention.
Metrics score(const ImagePlane& decision, const ImagePlane& truth);

/// Color-coded map: white=TP, cyan=FP, red=FN, black=TN.
ImageRgb render_decision_map(const ImagePlane& decision, const ImagePlane& truth);

struct SweepRow {
    AttackSpec attack;
    Metrics metrics;
    bool failed = false;
    std::string error;
};

std::vector<SweepRow> robustness_sweep(const ImageRgb& image, const ImagePlane& truth,
                                       const NlfPrior& prior,
                                       const std::vector<AttackSpec>& attacks,
                                       const DetectConfig& config);

struct SpliceSpec {
    NoiseParams host{0.02, 0.02};
    NoiseParams alien{0.08, 0.06};
    double crf_gamma = 2.2;
    std::size_t size = 256;
    std::size_t patch = 96;
    std::optional<std::size_t> offset;  // top-left corner; centered when unset
    std::uint64_t seed = 0;
};

struct SpliceSample {
    ImageRgb image;
    ImagePlane mask;  // nonzero = tampered
};

/// Smooth synthetic scene with host noise everywhere and alien noise in a
/// centered square patch; the mask marks the patch.
SpliceSample synth_splice(const SpliceSpec& spec);
/// Same scene and host noise, no alien patch.
SpliceSample synth_pristine(const SpliceSpec& spec);

}  // namespace sdnloc
