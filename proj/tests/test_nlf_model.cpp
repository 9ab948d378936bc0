#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <vector>

#include "prior_fixture.hpp"
#include "sdnloc/errors.hpp"
#include "sdnloc/nlf_model.hpp"
#include "sdnloc/rng.hpp"

using namespace sdnloc;
using sdnloc::testing::shared_prior;

namespace {

NoiseSampleSet samples_on_curve(const Nlf& curve, std::size_t count, std::size_t pixel_count) {
    NoiseSampleSet set;
    set.grid.block_size = 32;
    set.grid.rows = 1;
    set.grid.cols = count;
    for (std::size_t i = 0; i < count; ++i) {
        NoiseSample s;
        s.mean = 0.1 + 0.8 * static_cast<double>(i) / static_cast<double>(count - 1);
        s.std = curve.at_intensity(s.mean);
        s.pixel_count = pixel_count;
        s.smooth = true;
        s.row = 0;
        s.col = i;
        set.samples.push_back(s);
    }
    return set;
}

}  // namespace

TEST_CASE("chi-square log pdf against a high-precision reference") {
    // frozen from a 40-digit evaluation of the chi-square density at u = k*t
    struct Row {
        int k;
        double t;
        double ref;
    };
    const std::vector<Row> rows{
        {3, 0.5, -1.46620597915059055},   {3, 0.75, -1.63847342509650836},
        {3, 1.0, -1.8696323888706179},    {3, 1.25, -2.13306061321351302},
        {3, 1.5, -2.41689983481653571},   {3, 2.0, -3.02305879859064524},
        {255, 0.5, -27.9699158303280137}, {255, 0.75, -8.55357965464521941},
        {255, 1.0, -4.03679748949493209}, {255, 1.25, -7.68413824824739798},
        {255, 1.5, -16.4954613138121378}, {255, 2.0, -43.8536791486618504},
        {1023, 0.5, -102.832558101809541},{1023, 0.75, -23.7176204125916235},
        {1023, 1.0, -4.73092242595746008},{1023, 1.25, -18.6911394800533798},
        {1023, 1.5, -53.4909847367395431},{1023, 2.0, -162.37928675010538},
    };
    for (const auto& row : rows) {
        const LikelihoodContext ctx(static_cast<std::size_t>(row.k));
        // sigma2 = 1 so the statistic is k*t directly
        CHECK(chi2_log_likelihood(row.t, 1.0, ctx) == doctest::Approx(row.ref).epsilon(1e-8));
    }
}

TEST_CASE("chi-square edge cases") {
    const LikelihoodContext k1023(1023);
    CHECK(chi2_log_likelihood(0.0, 1.0, k1023) == -std::numeric_limits<double>::infinity());
    CHECK(chi2_log_likelihood(0.0, 1.0, LikelihoodContext(2)) ==
          doctest::Approx(std::log(0.5)));
    CHECK_THROWS_AS(chi2_log_likelihood(1.0, 0.0, k1023), InputError);
    CHECK_THROWS_AS(chi2_log_likelihood(-1.0, 1.0, k1023), InputError);
    CHECK_THROWS_AS(LikelihoodContext(0), InputError);
}

TEST_CASE("density ratio near 1/10 at t = 1122/1021 for k=1023") {
    const LikelihoodContext ctx(1023);
    const double at_one = chi2_log_likelihood(1.0, 1.0, ctx);
    const double at_t = chi2_log_likelihood(1122.0 / 1021.0, 1.0, ctx);
    CHECK(at_one - at_t == doctest::Approx(std::log(10.0)).epsilon(0.10));
}

TEST_CASE("log normal cdf reference values") {
    struct Row {
        double t;
        double ref;
    };
    const std::vector<Row> rows{
        {0.0, -0.693147180559945309},  {1.5, -0.069143455612233983},
        {-1.0, -1.84102164500926351},  {-3.0, -6.60772622151034954},
        {-5.0, -15.0649983939887257},  {-8.5, -39.1973964282176693},
        {-12.0, -75.4106730015687959}, {-20.0, -203.917155371097264},
        {-40.0, -804.608442013753788},
    };
    for (const auto& row : rows)
        CHECK(log_norm_cdf(row.t) == doctest::Approx(row.ref).epsilon(1e-4));
    // finite deep in the tail so line searches never see -inf
    CHECK(std::isfinite(log_norm_cdf(-200.0)));
}

TEST_CASE("likelihood of a sample sitting on the curve is near the mode") {
    Nlf curve;
    for (std::size_t i = 0; i < Nlf::kGridSize; ++i) curve[i] = 0.05;
    const LikelihoodContext ctx(1023);
    NoiseSample s{0.5, 0.05, 0, 0, 1024, true};
    const double on_curve = nlf_likelihood(s, curve, ctx);
    // mode of the k-dof density sits at u = k-2
    const double mode = chi2_log_likelihood((1023.0 - 2.0) / 1023.0, 1.0, ctx);
    CHECK(on_curve == doctest::Approx(mode).epsilon(0.01));

    s.std = 0.15;  // 3x above the curve
    CHECK(nlf_likelihood(s, curve, ctx) < mode - 50.0);

    s.std = 0.0;
    CHECK(nlf_likelihood(s, curve, ctx) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("zero curve values are floored, not singular") {
    Nlf zero;
    const LikelihoodContext ctx(1023);
    NoiseSample s{0.5, 0.05, 0, 0, 1024, true};
    CHECK_NOTHROW(nlf_likelihood(s, zero, ctx));  // floored sigma, no domain error
    s.std = 1e-4;  // sample right at the floor: near the mode, finite
    CHECK(std::isfinite(nlf_likelihood(s, zero, ctx)));
}

namespace {

// bisection for the smallest eps where the tampered route overtakes the
// pristine one under a 10:1 prior, k = 1023
double bisect_flip(const std::function<bool(double)>& tampered_wins, double lo, double hi) {
    REQUIRE(!tampered_wins(lo));
    REQUIRE(tampered_wins(hi));
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tampered_wins(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("decision flip thresholds, k=1023, priors 10:1") {
    const LikelihoodContext ctx(1023);
    const double lpr = std::log(10.0);  // pristine : tampered prior ratio

    SUBCASE("sample sits on the second curve, curves separated by eps") {
        auto tampered_wins = [&](double eps) {
            const double s2 = (1.0 + eps) * (1.0 + eps);  // sample variance, sigma1 units
            const double l1 = chi2_log_likelihood(s2, 1.0, ctx);
            const double l2 = chi2_log_likelihood(s2, s2, ctx);  // sigma2 = sample
            return l2 > l1 + lpr;
        };
        CHECK(bisect_flip(tampered_wins, 0.0, 0.5) == doctest::Approx(0.0483).epsilon(0.05));
    }

    SUBCASE("second curve at twice the first, sample eps above the first") {
        auto tampered_wins = [&](double eps) {
            const double s2 = (1.0 + eps) * (1.0 + eps);
            const double l1 = chi2_log_likelihood(s2, 1.0, ctx);
            const double l2 = chi2_log_likelihood(s2, 4.0, ctx);
            return l2 > l1 + lpr;
        };
        CHECK(bisect_flip(tampered_wins, 0.0, 1.5) == doctest::Approx(0.36).epsilon(0.05));
    }
}

TEST_CASE("one-sided rule: samples below both curves stay pristine") {
    const LikelihoodContext ctx(1023);
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double sigma1 = 0.01 + 0.05 * rng.next_uniform();
        const double sigma2 = sigma1 * (1.05 + rng.next_uniform());
        const double s = sigma1 * (0.3 + 0.69 * rng.next_uniform());  // below both
        const double l1 = chi2_log_likelihood(s * s, sigma1 * sigma1, ctx);
        const double l2 = chi2_log_likelihood(s * s, sigma2 * sigma2, ctx);
        // with p(sigma1) >= p(sigma2) the pristine route always wins here
        CHECK(l1 >= l2);
    }
}

TEST_CASE("prior structure and reconstruction") {
    const NlfPrior& prior = shared_prior();
    REQUIRE(prior.component_count() == 6);

    SUBCASE("basis columns orthonormal, eigenvalues positive non-increasing") {
        const Eigen::MatrixXd gram = prior.basis.transpose() * prior.basis;
        CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
        for (Eigen::Index i = 0; i < 6; ++i) {
            CHECK(prior.eigenvalues(i) > 0.0);
            if (i > 0) CHECK(prior.eigenvalues(i) <= prior.eigenvalues(i - 1));
        }
    }

    SUBCASE("training curve reconstructs through the 6-component basis") {
        std::vector<double> grid(Nlf::kGridSize);
        for (std::size_t i = 0; i < Nlf::kGridSize; ++i)
            grid[i] = static_cast<double>(i) / 255.0;
        // training column 20: gamma 1.8, sigma_s 0.02, sigma_c 0.06; the
        // per-column seed offset reproduces the exact curve
        const Nlf curve = nlf_ground_truth(Crf::gamma(1.8), {0.02, 0.06}, grid, 10000, 77 + 20);
        Eigen::VectorXd v(Nlf::kGridSize);
        double peak = 0.0;
        for (std::size_t i = 0; i < Nlf::kGridSize; ++i) {
            v(static_cast<Eigen::Index>(i)) = curve[i] - prior.mean[i];
            peak = std::max(peak, curve[i]);
        }
        const Eigen::VectorXd recon = prior.basis * (prior.basis.transpose() * v);
        const double rmse = std::sqrt((recon - v).squaredNorm() /
                                      static_cast<double>(Nlf::kGridSize));
        CHECK(rmse <= 0.05 * peak);
    }

    SUBCASE("file round trip") {
        const std::string path = "/tmp/sdnloc_test_prior.json";
        prior.save(path);
        const NlfPrior loaded = NlfPrior::load(path);
        CHECK(loaded.component_count() == prior.component_count());
        CHECK((loaded.basis - prior.basis).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((loaded.eigenvalues - prior.eigenvalues).cwiseAbs().maxCoeff() < 1e-15);
        for (std::size_t i = 0; i < Nlf::kGridSize; ++i)
            CHECK(loaded.mean[i] == doctest::Approx(prior.mean[i]).epsilon(1e-12));
        CHECK(loaded.provenance.seed == 77);
        CHECK(loaded.provenance.rng_algorithm == Rng::kAlgorithm);
        std::remove(path.c_str());
    }
}

TEST_CASE("flat-curve training set is essentially one component") {
    std::vector<double> sigma_c;
    for (int i = 0; i < 20; ++i) sigma_c.push_back(0.01 + 0.07 * i / 19.0);
    const NlfPrior prior = build_prior({Crf::identity()}, {0.0}, sigma_c, 3, 10000, 5);
    double total = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) total += prior.eigenvalues(i);
    CHECK(prior.eigenvalues(0) / total >= 0.99);
    // leading component is close to a constant direction
    const double mean_entry = prior.basis.col(0).mean();
    CHECK((prior.basis.col(0).array() - mean_entry).abs().maxCoeff() < 0.25);
}

TEST_CASE("degenerate training set raises a rank error") {
    std::vector<double> zeros(20, 0.0);
    CHECK_THROWS_AS(build_prior({Crf::identity()}, {0.0}, zeros, 3, 10000, 1), InputError);
}

TEST_CASE("prior validation rejects too few combinations") {
    CHECK_THROWS_AS(build_prior({Crf::identity()}, {0.02}, {0.02, 0.04}, 2, 10000, 1),
                    InputError);
}

TEST_CASE("map fit round trip on a training curve") {
    const NlfPrior& prior = shared_prior();
    std::vector<double> grid(Nlf::kGridSize);
    for (std::size_t i = 0; i < Nlf::kGridSize; ++i) grid[i] = static_cast<double>(i) / 255.0;
    const Nlf target = nlf_ground_truth(Crf::gamma(2.2), {0.05, 0.04}, grid, 40000, 900);

    const NoiseSampleSet set = samples_on_curve(target, 200, 1025);
    const NlfFit fit = fit_nlf(set, prior);

    for (const auto& s : set.samples) {
        const double want = target.at_intensity(s.mean);
        CHECK(fit.nlf.at_intensity(s.mean) == doctest::Approx(want).epsilon(0.10));
    }

    SUBCASE("objective trace is non-increasing") {
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
            CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1]);
    }
    SUBCASE("fitted curve is non-negative everywhere") {
        for (std::size_t i = 0; i < Nlf::kGridSize; ++i) CHECK(fit.nlf[i] >= 0.0);
    }
}

TEST_CASE("near-zero samples keep the constraint active") {
    const NlfPrior& prior = shared_prior();
    NoiseSampleSet set;
    set.grid.block_size = 32;
    set.grid.rows = 1;
    set.grid.cols = 50;
    for (std::size_t i = 0; i < 50; ++i) {
        NoiseSample s;
        s.mean = 0.1 + 0.8 * static_cast<double>(i) / 49.0;
        s.std = 1e-6;
        s.pixel_count = 1024;
        s.smooth = true;
        set.samples.push_back(s);
    }
    const NlfFit fit = fit_nlf(set, prior);
    for (std::size_t i = 0; i < Nlf::kGridSize; ++i) CHECK(fit.nlf[i] >= 0.0);
}

TEST_CASE("fit input validation") {
    const NlfPrior& prior = shared_prior();
    NoiseSampleSet empty;
    CHECK_THROWS_AS(fit_nlf(empty, prior), InputError);

    NoiseSampleSet rough;
    rough.samples.push_back({0.5, 0.02, 0, 0, 1024, false});
    CHECK_THROWS_AS(fit_nlf(rough, prior), InputError);
}
