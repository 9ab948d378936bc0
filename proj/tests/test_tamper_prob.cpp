#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sdnloc/errors.hpp"
#include "sdnloc/rng.hpp"
#include "sdnloc/tamper_prob.hpp"

using namespace sdnloc;

namespace {

NoiseSampleSet set_from_stds(const std::vector<double>& stds, double mean = 0.5,
                             std::size_t pixel_count = 1024) {
    NoiseSampleSet set;
    set.grid.block_size = 32;
    set.grid.rows = 1;
    set.grid.cols = stds.size();
    for (std::size_t i = 0; i < stds.size(); ++i)
        set.samples.push_back({mean, stds[i], 0, i, pixel_count, true});
    return set;
}

Nlf constant_nlf(double sigma) {
    std::vector<double> v(Nlf::kGridSize, sigma);
    return Nlf(v);
}

// exhaustive optimal two-cluster partition of sorted variances, for
// cross-checking the sweep
double best_two_cluster_sse(std::vector<double> var) {
    std::sort(var.begin(), var.end());
    const std::size_t n = var.size();
    double best = std::numeric_limits<double>::infinity();
    auto sse = [&](std::size_t lo, std::size_t hi) {
        double mean = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mean += var[i];
        mean /= static_cast<double>(hi - lo);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += (var[i] - mean) * (var[i] - mean);
        return acc;
    };
    for (std::size_t split = 1; split < n; ++split)
        best = std::min(best, sse(0, split) + sse(split, n));
    return best;
}

double split_sse(const NoiseSampleSet& set, const ClusterSplit& split) {
    double acc = 0.0;
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        const double var = set.samples[i].std * set.samples[i].std;
        const double centroid = split.labels[i] ? split.centroid1 : split.centroid0;
        acc += (var - centroid) * (var - centroid);
    }
    return acc;
}

}  // namespace

TEST_CASE("kmeans split separates a 90/10 mixture") {
    std::vector<double> stds(90, 0.01);
    stds.insert(stds.end(), 10, 0.05);
    const auto set = set_from_stds(stds);
    const ClusterSplit split = kmeans_split(set);
    CHECK(split.suspicious_count() == 10);
    for (std::size_t i = 0; i < 90; ++i) CHECK(split.labels[i] == 0);
    for (std::size_t i = 90; i < 100; ++i) CHECK(split.labels[i] == 1);
    CHECK(split.centroid0 == doctest::Approx(0.0001));
    CHECK(split.centroid1 == doctest::Approx(0.0025));
}

TEST_CASE("two samples: the larger variance is suspicious") {
    const auto set = set_from_stds({0.01, 0.04});
    const ClusterSplit split = kmeans_split(set);
    CHECK(split.labels[0] == 0);
    CHECK(split.labels[1] == 1);
    CHECK(split.centroid1 > split.centroid0);
}

TEST_CASE("identical variances raise an error") {
    const auto set = set_from_stds({0.02, 0.02, 0.02});
    CHECK_THROWS_AS(kmeans_split(set), InputError);
}

TEST_CASE("sweep split matches the exhaustive two-cluster optimum") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> stds;
        const std::size_t n = 5 + static_cast<std::size_t>(rng.next_uniform() * 60);
        for (std::size_t i = 0; i < n; ++i) stds.push_back(0.005 + 0.08 * rng.next_uniform());
        const auto set = set_from_stds(stds);
        const ClusterSplit split = kmeans_split(set);
        std::vector<double> var;
        for (double s : stds) var.push_back(s * s);
        CHECK(split_sse(set, split) == doctest::Approx(best_two_cluster_sse(var)).epsilon(1e-9));
        CHECK(split.suspicious_count() * 2 <= n);  // never the strict majority
    }
}

TEST_CASE("class prior is symmetric for identical curves") {
    const auto set = set_from_stds({0.02, 0.025, 0.03});
    const Nlf nlf = constant_nlf(0.025);
    const LikelihoodContext ctx(1023);
    const ClassPrior prior = class_prior(set, nlf, nlf, ctx);
    CHECK(prior.p0 == doctest::Approx(0.5));
    CHECK(prior.p1 == doctest::Approx(0.5));
    CHECK_FALSE(prior.degenerate);
}

TEST_CASE("samples on nlf0 give a dominant p0") {
    std::vector<double> stds(30, 0.02);
    const auto set = set_from_stds(stds);
    const LikelihoodContext ctx(1023);
    const ClassPrior prior = class_prior(set, constant_nlf(0.02), constant_nlf(0.08), ctx);
    CHECK(prior.p0 > 0.9);
    CHECK(prior.p0 + prior.p1 == doctest::Approx(1.0));
}

TEST_CASE("all-underflow densities fall back to the uniform prior") {
    // samples of exactly zero noise: chi-square log density -inf for both
    const auto set = set_from_stds({0.0, 0.0});
    const LikelihoodContext ctx(1023);
    const ClassPrior prior = class_prior(set, constant_nlf(0.02), constant_nlf(0.08), ctx);
    CHECK(prior.degenerate);
    CHECK(prior.p0 == doctest::Approx(0.5));
}

TEST_CASE("bayes map pushes probabilities to the matching curve") {
    // mixed population so the empirical priors stay balanced
    std::vector<double> stds(20, 0.02);
    stds.insert(stds.end(), 20, 0.08);
    const auto set = set_from_stds(stds);
    const LikelihoodContext ctx(1023);
    const TamperMap map = bayes_tamper_map(set, constant_nlf(0.02), constant_nlf(0.08), ctx);
    REQUIRE(map.p.size() == 40);
    CHECK(map.kind == TamperMapKind::bayes);
    for (std::size_t i = 0; i < 20; ++i) CHECK(map.p[i] < 0.01);
    for (std::size_t i = 20; i < 40; ++i) CHECK(map.p[i] > 0.99);
}

TEST_CASE("bayes map: sample below both curves stays pristine") {
    // one-sided rule with the pristine-majority prior
    std::vector<double> stds(10, 0.02);       // on nlf0
    stds.push_back(0.015);                    // below both curves
    const auto set = set_from_stds(stds);
    const LikelihoodContext ctx(1023);
    const TamperMap map = bayes_tamper_map(set, constant_nlf(0.02), constant_nlf(0.05), ctx);
    CHECK(map.p.back() < 0.5);
}

TEST_CASE("bayes map handles per-block underflow with 0.5") {
    std::vector<double> stds(5, 0.02);
    stds.push_back(0.0);  // -inf under both classes
    const auto set = set_from_stds(stds);
    const LikelihoodContext ctx(1023);
    const TamperMap map = bayes_tamper_map(set, constant_nlf(0.02), constant_nlf(0.08), ctx);
    CHECK(map.p.back() == 0.5);
}

TEST_CASE("distance map closed form") {
    CombinationConfig cfg;  // zeta 50
    const Nlf nlf = constant_nlf(0.03);
    const auto set = set_from_stds({0.03, 0.04, 0.5});
    const TamperMap map = distance_tamper_map(set, nlf, cfg);
    CHECK(map.kind == TamperMapKind::distance);
    CHECK(map.p[0] == doctest::Approx(0.0));
    CHECK(map.p[1] == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-9));
    CHECK(map.p[2] > 0.999);

    cfg.zeta = -1.0;
    CHECK_THROWS_AS(distance_tamper_map(set, nlf, cfg), InputError);
}

TEST_CASE("map combination") {
    const auto set = set_from_stds({0.02, 0.03, 0.05, 0.08});
    const LikelihoodContext ctx(1023);
    CombinationConfig cfg;  // lambda 100, delta 0.05
    const TamperMap j1 = distance_tamper_map(set, constant_nlf(0.02), cfg);
    const TamperMap j2 = bayes_tamper_map(set, constant_nlf(0.02), constant_nlf(0.08), ctx);

    SUBCASE("midpoint at area_fraction = delta") {
        const TamperMap jc = combine_maps(j1, j2, cfg.delta_shift, cfg);
        CHECK(jc.kind == TamperMapKind::combined);
        for (std::size_t i = 0; i < jc.p.size(); ++i)
            CHECK(jc.p[i] == doctest::Approx(0.5 * (j1.p[i] + j2.p[i])).epsilon(1e-12));
    }
    SUBCASE("saturates to j2 for a large suspicious area") {
        const TamperMap jc = combine_maps(j1, j2, 0.5, cfg);
        for (std::size_t i = 0; i < jc.p.size(); ++i)
            CHECK(jc.p[i] == doctest::Approx(j2.p[i]).epsilon(1e-9));
    }
    SUBCASE("saturates to j1 for a tiny suspicious area") {
        const TamperMap jc = combine_maps(j1, j2, 0.0, cfg);
        for (std::size_t i = 0; i < jc.p.size(); ++i)
            CHECK(jc.p[i] == doctest::Approx(j1.p[i]).epsilon(1e-2));
    }
    SUBCASE("stays a convex combination") {
        const TamperMap jc = combine_maps(j1, j2, 0.07, cfg);
        for (std::size_t i = 0; i < jc.p.size(); ++i) {
            CHECK(jc.p[i] >= std::min(j1.p[i], j2.p[i]) - 1e-15);
            CHECK(jc.p[i] <= std::max(j1.p[i], j2.p[i]) + 1e-15);
        }
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(combine_maps(j2, j1, 0.1, cfg), InputError);  // kinds swapped
        CHECK_THROWS_AS(combine_maps(j1, j2, 1.5, cfg), InputError);
        TamperMap small = j2;
        small.p.pop_back();
        small.grid.cols -= 1;
        CHECK_THROWS_AS(combine_maps(j1, small, 0.1, cfg), InputError);
    }
}

TEST_CASE("bayes posterior is deterministic and stays in [0,1]") {
    std::vector<double> stds{0.02, 0.04, 0.06};
    const auto set = set_from_stds(stds);
    const LikelihoodContext ctx(255);
    const TamperMap a = bayes_tamper_map(set, constant_nlf(0.02), constant_nlf(0.06), ctx);
    const TamperMap b = bayes_tamper_map(set, constant_nlf(0.02), constant_nlf(0.06), ctx);
    for (std::size_t i = 0; i < a.p.size(); ++i)
        CHECK(a.p[i] == doctest::Approx(b.p[i]).epsilon(1e-12));
    for (double p : a.p) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}
