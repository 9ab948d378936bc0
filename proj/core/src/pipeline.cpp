#include "sdnloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdnloc/errors.hpp"
#include "sdnloc/rng.hpp"

namespace sdnloc {

namespace {

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - t) + v[hi] * t;
}

// Re-applies the flatness rule within one cluster's samples. A noisier
// alien region would otherwise fail a whole-image threshold purely
// because of its own noise, leaving no samples to build its NLF from.
// The Laplacian response is normalized by the block's own noise estimate
// before thresholding: pure noise has a response proportional to sigma,
// so the raw response would rank a cluster's blocks by noise level and
// keep the quietest, most contaminated ones. The ratio is roughly
// constant for noise-dominated blocks and large only where real scene
// texture rides on top.
NoiseSampleSet smooth_within(const std::vector<NoiseSample>& members,
                             const std::vector<double>& flatness, const BlockGrid& grid) {
    std::vector<double> tnr, stds;
    for (const auto& s : members) {
        tnr.push_back(flatness[s.row * grid.cols + s.col] / std::max(s.std, 1e-12));
        stds.push_back(s.std);
    }
    const double tnr_thresh = percentile(tnr, 0.60);
    const double med_std = percentile(stds, 0.50);

    NoiseSampleSet out;
    out.grid = grid;
    for (std::size_t i = 0; i < members.size(); ++i) {
        NoiseSample s = members[i];
        s.smooth = s.std == 0.0 ||
                   (tnr[i] <= tnr_thresh && s.std <= 3.0 * std::max(med_std, 1e-12));
        if (s.smooth) out.samples.push_back(s);
    }
    return out;
}

TamperMap uniform_map(const BlockGrid& grid, double p, TamperMapKind kind) {
    TamperMap m;
    m.grid = grid;
    m.kind = kind;
    m.p.assign(grid.block_count(), p);
    return m;
}

}  // namespace

DetectionResult detect(const ImageRgb& image, const NlfPrior& prior,
                       const DetectConfig& config) {
    const ImagePlane lum = image.to_luminance();
    const std::size_t B = config.block_size;
    if (lum.width < 2 * B || lum.height < 2 * B)
        throw InputError("image must cover at least 4 blocks at the coarse block size");

    DetectionResult res;

    // coarse pass
    const BlockGrid grid_b = decompose(lum, B);
    res.samples_coarse = estimate_block_noise(lum, grid_b, config.patch_size);
    const std::vector<double> flat_b = block_flatness(lum, grid_b);

    // fine pass at B/2 (the coarse cluster filter below needs the children)
    const BlockGrid grid_f = decompose(lum, B / 2);
    res.samples_fine = estimate_block_noise(lum, grid_f, config.patch_size);
    const LikelihoodContext ctx(grid_f.block_size * grid_f.block_size - 1);

    ClusterSplit split;
    bool have_split = true;
    try {
        split = kmeans_split(res.samples_coarse, config.seed);
    } catch (const InputError&) {
        have_split = false;
        res.degraded = true;
        res.warnings.push_back("K-means found a single variance cluster; distance map only");
    }

    // NLF construction from smooth blocks of each cluster
    if (have_split) {
        std::vector<NoiseSample> members0, members1;
        for (std::size_t i = 0; i < res.samples_coarse.samples.size(); ++i)
            (split.labels[i] ? members1 : members0).push_back(res.samples_coarse.samples[i]);
        const NoiseSampleSet smooth0 = smooth_within(members0, flat_b, grid_b);
        const NoiseSampleSet smooth1 = smooth_within(members1, flat_b, grid_b);
        if (smooth0.samples.empty())
            throw InsufficientDataError("no smooth blocks in the original region", 0);
        if (smooth1.samples.empty())
            throw InsufficientDataError("no smooth blocks in the suspicious region", 0);
        // Coarse blocks straddling the boundary of a noisier region carry a
        // blend of both processes, and the variance split routinely files
        // them under the suspicious cluster. Their intermediate variances
        // drag the suspicious fit well below the noisier process itself,
        // which pulls the likelihood-ratio crossing low enough that mildly
        // contaminated blocks at the region edge land on the tampered side.
        // Straddling blocks give themselves away on the half-resolution
        // lattice: a homogeneous block's four children agree to within a few
        // percent (relative standard error of a sample std is about
        // 1/sqrt(2(n-1))), while a boundary block's children split between
        // the two processes. The flatness rule is no help for this cluster:
        // a blend's Laplacian response mixes linearly in area while its std
        // mixes under a square root, so blends always look "flatter" than
        // pure blocks of the noisier process and a percentile cut keeps
        // exactly the wrong ones. Fit the suspicious curve on the cluster
        // members whose children agree, when enough of them survive.
        NoiseSampleSet fit1_set;
        fit1_set.grid = smooth1.grid;
        for (const auto& s : members1) {
            double lo_c = std::numeric_limits<double>::infinity(), hi_c = 0.0;
            for (std::size_t dr = 0; dr < 2; ++dr)
                for (std::size_t dc = 0; dc < 2; ++dc) {
                    const std::size_t fr = 2 * s.row + dr, fc = 2 * s.col + dc;
                    const double v =
                        res.samples_fine.samples[fr * grid_f.cols + fc].std;
                    lo_c = std::min(lo_c, v);
                    hi_c = std::max(hi_c, v);
                }
            if (hi_c <= 0.0 || (hi_c - lo_c) / hi_c <= 0.3) {
                NoiseSample kept = s;
                kept.smooth = true;  // vetted by the children-agreement screen
                fit1_set.samples.push_back(kept);
            }
        }
        if (fit1_set.samples.size() < 4) {
            // Too few interior blocks to screen (small images): fall back to
            // the whole cluster rather than the flatness subset, which the
            // blend bias above would skew low.
            fit1_set.samples.clear();
            for (const auto& s : members1) {
                NoiseSample kept = s;
                kept.smooth = true;
                fit1_set.samples.push_back(kept);
            }
        }

        NlfFit fit0 = fit_nlf(smooth0, prior);
        NlfFit fit1 = fit_nlf(fit1_set, prior);
        res.nlf0 = fit0.nlf;
        res.nlf1 = fit1.nlf;
        res.nlf0_converged = fit0.converged;
        res.nlf1_converged = fit1.converged;

        // The suspicious cluster holds the higher variances by construction,
        // but outside the intensity range the samples cover both curves are
        // prior extrapolations and can cross. Where the suspicious curve
        // dips below the benchmark, a quiet block scattered low would win
        // the likelihood ratio for the tampered class (the lower curve
        // explains small variances better), flipping whole dark or bright
        // bands. Keep the curves ordered instead.
        for (std::size_t i = 0; i < Nlf::kGridSize; ++i)
            res.nlf1[i] = std::max(res.nlf1[i], res.nlf0[i]);

        // K-means always produces two clusters on noisy estimates, so a pair
        // of fits exists even for a pristine image. Before trusting the
        // likelihood ratio, check that the suspicious cluster actually sits
        // outside the benchmark curve's sampling band. For a block of n
        // pixels the sample std has relative standard error about
        // 1/sqrt(2(n-1)), so z = sqrt(2(n-1)) (s - sigma0(x)) / sigma0(x)
        // is order-statistics-sized (a few units) when the "suspicious"
        // blocks are just the upper tail of one noise process, and in the
        // tens when a genuinely noisier region is present. The median over
        // the cluster keeps the statistic stable when the split absorbs a
        // few host blocks. Without real separation the ratio map would only
        // amplify fit noise: the two curves cross, and wherever the
        // suspicious curve dips below the benchmark every sample scattered
        // low flips tampered.
        std::vector<double> zs;
        zs.reserve(fit1_set.samples.size());
        for (const auto& s : fit1_set.samples) {
            const double pred =
                std::max(res.nlf0[Nlf::grid_index(s.mean)], kSigmaMin);
            const double k = static_cast<double>(s.pixel_count - 1);
            zs.push_back(std::sqrt(2.0 * k) * (s.std - pred) / pred);
        }
        std::nth_element(zs.begin(), zs.begin() + zs.size() / 2, zs.end());
        res.cluster_sep = zs[zs.size() / 2];
        if (res.cluster_sep < 10.0) {
            have_split = false;
            res.degraded = true;
            res.nlf1 = res.nlf0;
            res.warnings.push_back(
                "fitted noise level functions are indistinguishable; distance map only");
        }
    } else {
        std::vector<NoiseSample> all = res.samples_coarse.samples;
        const NoiseSampleSet smooth_all = smooth_within(all, flat_b, grid_b);
        if (smooth_all.samples.empty())
            throw InsufficientDataError("no smooth blocks in the image", 0);
        NlfFit fit0 = fit_nlf(smooth_all, prior);
        res.nlf0 = fit0.nlf;
        res.nlf1 = fit0.nlf;
        res.nlf0_converged = fit0.converged;
    }

    CombinationConfig cc{config.zeta, config.lambda_steep, config.delta_shift};
    res.distance_probs = distance_tamper_map(res.samples_fine, res.nlf0, cc);

    // suspicious area measured on the fine lattice: coarse blocks straddling
    // the splice boundary get absorbed into the host cluster and would
    // understate the area badly for patches not aligned to the B grid
    LabelField init;
    init.grid = grid_f;
    init.labels.assign(grid_f.block_count(), 0);
    try {
        const ClusterSplit fine_split = kmeans_split(res.samples_fine, config.seed);
        init.labels = fine_split.labels;
        res.area_fraction = static_cast<double>(fine_split.suspicious_count()) /
                            static_cast<double>(fine_split.labels.size());
    } catch (const InputError&) {
        // uniform fine variances: keep the all-zero initialization
    }

    if (have_split) {
        res.priors = class_prior(res.samples_fine, res.nlf0, res.nlf1, ctx);
        res.bayes_probs = bayes_tamper_map(res.samples_fine, res.nlf0, res.nlf1, ctx);
        res.combined_probs = combine_maps(res.distance_probs, res.bayes_probs,
                                          res.area_fraction, cc);
    } else {
        res.bayes_probs = uniform_map(grid_f, 0.5, TamperMapKind::bayes);
        res.combined_probs = res.distance_probs;
        res.combined_probs.kind = TamperMapKind::combined;
    }

    ParamEstimate est = estimate_params(res.combined_probs, image, grid_f, init,
                                        config.iter_max, config.phi);
    res.params = est.params;
    res.energy_trace = est.trace;
    if (!est.converged)
        res.warnings.push_back("parameter estimation hit the iteration cap");

    // block labels replicated to pixel resolution; trailing margins authentic
    res.decision = ImagePlane(lum.width, lum.height, 0.0);
    const std::size_t Bf = grid_f.block_size;
    for (std::size_t br = 0; br < grid_f.rows; ++br)
        for (std::size_t bc = 0; bc < grid_f.cols; ++bc)
            if (est.labels.labels[br * grid_f.cols + bc])
                for (std::size_t r = br * Bf; r < (br + 1) * Bf; ++r)
                    for (std::size_t c = bc * Bf; c < (bc + 1) * Bf; ++c)
                        res.decision.at(r, c) = 1.0;
    return res;
}

Metrics score(const ImagePlane& decision, const ImagePlane& truth) {
    if (decision.width != truth.width || decision.height != truth.height)
        throw InputError("score: dimension mismatch");
    Metrics m;
    for (std::size_t i = 0; i < decision.values.size(); ++i) {
        const bool d = decision.values[i] != 0.0;
        const bool t = truth.values[i] != 0.0;
        if (d && t)
            ++m.tp;
        else if (!d && !t)
            ++m.tn;
        else if (d)
            ++m.fp;
        else
            ++m.fn;
    }
    const auto total = static_cast<double>(m.tp + m.tn + m.fp + m.fn);
    m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                                : 0.0;
    m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                             : 0.0;
    m.accuracy = total > 0.0 ? static_cast<double>(m.tp + m.tn) / total : 0.0;
    m.f_score = (m.precision + m.recall) > 0.0
                    ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                    : 0.0;
    return m;
}

ImageRgb render_decision_map(const ImagePlane& decision, const ImagePlane& truth) {
    if (decision.width != truth.width || decision.height != truth.height)
        throw InputError("render_decision_map: dimension mismatch");
    ImageRgb out(decision.width, decision.height);
    for (std::size_t i = 0; i < decision.values.size(); ++i) {
        const bool d = decision.values[i] != 0.0;
        const bool t = truth.values[i] != 0.0;
        double* p = &out.values[3 * i];
        if (d && t) {
            p[0] = p[1] = p[2] = 1.0;  // white: TP
        } else if (d && !t) {
            p[0] = 0.0; p[1] = 1.0; p[2] = 1.0;  // cyan: FP
        } else if (!d && t) {
            p[0] = 1.0; p[1] = 0.0; p[2] = 0.0;  // red: FN
        }  // black: TN
    }
    return out;
}

std::string AttackSpec::label() const {
    std::ostringstream os;
    if (kind == Kind::jpeg)
        os << "jpeg_q" << static_cast<int>(factor);
    else
        os << "scale_" << factor;
    return os.str();
}

std::vector<SweepRow> robustness_sweep(const ImageRgb& image, const ImagePlane& truth,
                                       const NlfPrior& prior,
                                       const std::vector<AttackSpec>& attacks,
                                       const DetectConfig& config) {
    std::vector<SweepRow> rows;
    for (const auto& attack : attacks) {
        SweepRow row;
        row.attack = attack;
        try {
            ImageRgb attacked;
            ImagePlane mask = truth;
            if (attack.kind == AttackSpec::Kind::jpeg) {
                attacked = jpeg_cycle(image, static_cast<int>(attack.factor));
            } else {
                attacked = scale_bicubic(image, attack.factor);
                mask = scale_nearest(truth, attacked.width, attacked.height);
            }
            const DetectionResult det = detect(attacked, prior, config);
            row.metrics = score(det.decision, mask);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

namespace {

// Smooth low-frequency scene in mid-tones, phase varied by seed.
ImagePlane make_scene(std::size_t size, std::uint64_t seed) {
    Rng rng(seed ^ 0x5c33eULL);
    const double ph1 = 2.0 * M_PI * rng.next_uniform();
    const double ph2 = 2.0 * M_PI * rng.next_uniform();
    const double ph3 = 2.0 * M_PI * rng.next_uniform();
    ImagePlane img(size, size);
    const double inv = 1.0 / static_cast<double>(size);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
            const double u = static_cast<double>(c) * inv;
            const double v = static_cast<double>(r) * inv;
            const double w = std::sin(2.0 * M_PI * 1.3 * u + ph1) +
                             std::sin(2.0 * M_PI * 0.9 * v + ph2) +
                             0.6 * std::sin(2.0 * M_PI * (u + v) + ph3);
            img.at(r, c) = 0.55 + 0.10 * w;  // stays within [0.29, 0.81]
        }
    return img;
}

}  // namespace

SpliceSample synth_splice(const SpliceSpec& spec) {
    if (spec.patch >= spec.size) throw InputError("patch must be smaller than the image");
    const std::size_t off = spec.offset.value_or((spec.size - spec.patch) / 2);
    if (off + spec.patch > spec.size) throw InputError("patch offset puts the patch outside the image");
    const Crf crf = Crf::gamma(spec.crf_gamma);
    const ImagePlane clean = make_scene(spec.size, spec.seed);
    const ImagePlane host = synthesize_noisy(clean, crf, spec.host, spec.seed);
    const ImagePlane alien = synthesize_noisy(clean, crf, spec.alien, spec.seed + 0x100000ULL);

    ImagePlane composite = host;
    SpliceSample out;
    out.mask = ImagePlane(spec.size, spec.size, 0.0);
    for (std::size_t r = off; r < off + spec.patch; ++r)
        for (std::size_t c = off; c < off + spec.patch; ++c) {
            composite.at(r, c) = alien.at(r, c);
            out.mask.at(r, c) = 1.0;
        }
    out.image = ImageRgb::from_plane(composite);
    return out;
}

SpliceSample synth_pristine(const SpliceSpec& spec) {
    const Crf crf = Crf::gamma(spec.crf_gamma);
    const ImagePlane clean = make_scene(spec.size, spec.seed);
    SpliceSample out;
    out.image = ImageRgb::from_plane(synthesize_noisy(clean, crf, spec.host, spec.seed));
    out.mask = ImagePlane(spec.size, spec.size, 0.0);
    return out;
}

}  // namespace sdnloc
