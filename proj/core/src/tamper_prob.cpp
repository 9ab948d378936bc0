#include "sdnloc/tamper_prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdnloc/errors.hpp"
#include "sdnloc/image.hpp"

namespace sdnloc {

std::size_t ClusterSplit::suspicious_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

ClusterSplit kmeans_split(const NoiseSampleSet& samples, std::uint64_t /*seed*/) {
    const std::size_t n = samples.samples.size();
    if (n < 2) throw InputError("kmeans_split needs at least 2 samples");

    std::vector<double> var(n);
    for (std::size_t i = 0; i < n; ++i) var[i] = samples.samples[i].std * samples.samples[i].std;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return var[a] < var[b];
    });
    if (var[order.front()] == var[order.back()])
        throw InputError("all variances identical: no cluster split");

    // exhaustive sweep over split points of the sorted sequence; globally
    // optimal for 1-D two-cluster k-means
    std::vector<double> prefix(n + 1, 0.0), prefix2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + var[order[i]];
        prefix2[i + 1] = prefix2[i] + var[order[i]] * var[order[i]];
    }
    auto sse = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
        const auto cnt = static_cast<double>(hi - lo);
        const double s = prefix[hi] - prefix[lo];
        const double s2 = prefix2[hi] - prefix2[lo];
        return s2 - s * s / cnt;
    };

    std::size_t best_split = 1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t split = 1; split < n; ++split) {
        const double cost = sse(0, split) + sse(split, n);
        if (cost < best_cost) {
            best_cost = cost;
            best_split = split;
        }
    }

    ClusterSplit out;
    out.labels.assign(n, 0);
    const std::size_t low_count = best_split;
    const std::size_t high_count = n - best_split;
    out.centroid0 = (prefix[best_split] - prefix[0]) / static_cast<double>(low_count);
    out.centroid1 = (prefix[n] - prefix[best_split]) / static_cast<double>(high_count);

    // smaller cluster is suspicious; tie goes to the higher-centroid cluster
    const bool high_is_suspicious = high_count <= low_count;
    for (std::size_t i = 0; i < n; ++i) {
        const bool in_high = i >= best_split;
        out.labels[order[i]] = (in_high == high_is_suspicious) ? 1 : 0;
    }
    if (!high_is_suspicious) std::swap(out.centroid0, out.centroid1);
    return out;
}

ClassPrior class_prior(const NoiseSampleSet& samples, const Nlf& nlf0, const Nlf& nlf1,
                       const LikelihoodContext& ctx) {
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> l0, l1;
    l0.reserve(samples.samples.size());
    l1.reserve(samples.samples.size());
    for (const auto& s : samples.samples) {
        l0.push_back(nlf_likelihood(s, nlf0, ctx));
        l1.push_back(nlf_likelihood(s, nlf1, ctx));
        max_log = std::max({max_log, l0.back(), l1.back()});
    }
    ClassPrior out;
    if (!std::isfinite(max_log)) {
        out.degenerate = true;
        return out;
    }
    double sum0 = 0.0, sum1 = 0.0;
    for (std::size_t i = 0; i < l0.size(); ++i) {
        sum0 += std::exp(l0[i] - max_log);
        sum1 += std::exp(l1[i] - max_log);
    }
    if (sum0 + sum1 <= 0.0) {
        out.degenerate = true;
        return out;
    }
    out.p1 = sum1 / (sum0 + sum1);
    out.p0 = 1.0 - out.p1;
    return out;
}

TamperMap bayes_tamper_map(const NoiseSampleSet& samples, const Nlf& nlf0, const Nlf& nlf1,
                           const LikelihoodContext& ctx) {
    const ClassPrior prior = class_prior(samples, nlf0, nlf1, ctx);
    TamperMap out;
    out.grid = samples.grid;
    out.kind = TamperMapKind::bayes;
    out.p.reserve(samples.samples.size());
    const double log_p0 = std::log(std::max(prior.p0, 1e-300));
    const double log_p1 = std::log(std::max(prior.p1, 1e-300));
    for (const auto& s : samples.samples) {
        const double a = nlf_likelihood(s, nlf1, ctx) + log_p1;  // tampered route
        const double b = nlf_likelihood(s, nlf0, ctx) + log_p0;  // pristine route
        double p;
        if (!std::isfinite(a) && !std::isfinite(b)) {
            p = 0.5;  // both class densities underflowed
        } else if (!std::isfinite(a)) {
            p = 0.0;
        } else if (!std::isfinite(b)) {
            p = 1.0;
        } else {
            const double shift = std::max(a, b);
            const double ea = std::exp(a - shift), eb = std::exp(b - shift);
            p = ea / (ea + eb);
        }
        out.p.push_back(p);
    }
    return out;
}

TamperMap distance_tamper_map(const NoiseSampleSet& samples, const Nlf& nlf0,
                              const CombinationConfig& cfg) {
    if (cfg.zeta <= 0.0) throw InputError("zeta must be positive");
    TamperMap out;
    out.grid = samples.grid;
    out.kind = TamperMapKind::distance;
    out.p.reserve(samples.samples.size());
    for (const auto& s : samples.samples) {
        const double dist = std::abs(s.std - nlf0.at_intensity(s.mean));
        out.p.push_back(1.0 - std::exp(-cfg.zeta * dist));
    }
    return out;
}

TamperMap combine_maps(const TamperMap& j1, const TamperMap& j2, double area_fraction,
                       const CombinationConfig& cfg) {
    if (j1.kind != TamperMapKind::distance || j2.kind != TamperMapKind::bayes)
        throw InputError("combine_maps expects (distance, bayes) inputs");
    if (j1.grid.rows != j2.grid.rows || j1.grid.cols != j2.grid.cols ||
        j1.p.size() != j2.p.size())
        throw InputError("combine_maps grid mismatch");
    if (area_fraction < 0.0 || area_fraction > 1.0)
        throw InputError("area fraction must be in [0,1]");

    const double beta_p = 1.0 / (1.0 + std::exp(-cfg.lambda_steep * (area_fraction -
                                                                     cfg.delta_shift)));
    TamperMap out;
    out.grid = j1.grid;
    out.kind = TamperMapKind::combined;
    out.p.reserve(j1.p.size());
    for (std::size_t i = 0; i < j1.p.size(); ++i)
        out.p.push_back((1.0 - beta_p) * j1.p[i] + beta_p * j2.p[i]);
    return out;
}

void save_tamper_map_png(const std::string& path, const TamperMap& map) {
    const std::size_t B = map.grid.block_size;
    ImagePlane img(map.grid.cols * B, map.grid.rows * B);
    for (std::size_t r = 0; r < map.grid.rows; ++r)
        for (std::size_t c = 0; c < map.grid.cols; ++c) {
            const double p = map.p[r * map.grid.cols + c];
            for (std::size_t rr = 0; rr < B; ++rr)
                for (std::size_t cc = 0; cc < B; ++cc) img.at(r * B + rr, c * B + cc) = p;
        }
    save_png_gray(path, img);
}

}  // namespace sdnloc
