#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "prior_fixture.hpp"
#include "sdnloc/errors.hpp"
#include "sdnloc/pipeline.hpp"

using namespace sdnloc;
using sdnloc::testing::shared_prior;

TEST_CASE("score on hand-built maps") {
    SUBCASE("perfect prediction") {
        ImagePlane truth(40, 25, 0.0);
        for (std::size_t r = 5; r < 15; ++r)
            for (std::size_t c = 5; c < 15; ++c) truth.at(r, c) = 1.0;
        const Metrics m = score(truth, truth);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.accuracy == 1.0);
        CHECK(m.f_score == 1.0);
        CHECK(m.tp == 100);
        CHECK(m.tn == 900);
    }

    SUBCASE("all-negative prediction against a positive mask") {
        ImagePlane truth(10, 10, 0.0);
        truth.at(0, 0) = 1.0;
        const ImagePlane decision(10, 10, 0.0);
        const Metrics m = score(decision, truth);
        CHECK(m.precision == 0.0);
        CHECK(m.recall == 0.0);
        CHECK(m.f_score == 0.0);
        CHECK(m.accuracy == doctest::Approx(0.99));
    }

    SUBCASE("mixed counts: 50 tp, 50 fp, 50 fn, 850 tn") {
        ImagePlane decision(1000, 1, 0.0), truth(1000, 1, 0.0);
        for (std::size_t i = 0; i < 100; ++i) decision.at(0, i) = 1.0;   // 0..99
        for (std::size_t i = 50; i < 150; ++i) truth.at(0, i) = 1.0;     // 50..149
        const Metrics m = score(decision, truth);
        CHECK(m.tp == 50);
        CHECK(m.fp == 50);
        CHECK(m.fn == 50);
        CHECK(m.tn == 850);
        CHECK(m.precision == doctest::Approx(0.5));
        CHECK(m.recall == doctest::Approx(0.5));
        CHECK(m.accuracy == doctest::Approx(0.9));
        CHECK(m.f_score == doctest::Approx(0.5));
    }

    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(score(ImagePlane(4, 4), ImagePlane(5, 4)), InputError);
    }
}

namespace {

std::map<std::string, std::size_t> color_histogram(const ImageRgb& img) {
    std::map<std::string, std::size_t> hist;
    for (std::size_t i = 0; i < img.width * img.height; ++i) {
        const double r = img.values[3 * i], g = img.values[3 * i + 1], b = img.values[3 * i + 2];
        if (r == 1.0 && g == 1.0 && b == 1.0)
            ++hist["white"];
        else if (r == 0.0 && g == 1.0 && b == 1.0)
            ++hist["cyan"];
        else if (r == 1.0 && g == 0.0 && b == 0.0)
            ++hist["red"];
        else if (r == 0.0 && g == 0.0 && b == 0.0)
            ++hist["black"];
        else
            ++hist["other"];
    }
    return hist;
}

}  // namespace

TEST_CASE("decision map rendering") {
    ImagePlane truth(20, 20, 0.0), decision(20, 20, 0.0);
    for (std::size_t r = 0; r < 10; ++r)
        for (std::size_t c = 0; c < 20; ++c) truth.at(r, c) = 1.0;  // top half tampered
    for (std::size_t r = 5; r < 15; ++r)
        for (std::size_t c = 0; c < 20; ++c) decision.at(r, c) = 1.0;  // shifted detection

    SUBCASE("histogram matches the metric counts") {
        const Metrics m = score(decision, truth);
        auto hist = color_histogram(render_decision_map(decision, truth));
        CHECK(hist["white"] == m.tp);
        CHECK(hist["cyan"] == m.fp);
        CHECK(hist["red"] == m.fn);
        CHECK(hist["black"] == m.tn);
        CHECK(hist["other"] == 0);
    }
    SUBCASE("perfect prediction renders white and black only") {
        auto hist = color_histogram(render_decision_map(truth, truth));
        CHECK(hist["white"] == 200);
        CHECK(hist["black"] == 200);
        CHECK(hist["cyan"] == 0);
        CHECK(hist["red"] == 0);
    }
    SUBCASE("all-ones on empty truth is all cyan") {
        const ImagePlane ones(8, 8, 1.0), zeros(8, 8, 0.0);
        auto hist = color_histogram(render_decision_map(ones, zeros));
        CHECK(hist["cyan"] == 64);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(render_decision_map(ImagePlane(4, 4), ImagePlane(5, 4)), InputError);
    }
}

TEST_CASE("splice synthesis") {
    SpliceSpec spec;
    spec.seed = 3;
    const SpliceSample a = synth_splice(spec);
    CHECK(a.image.width == 256);
    CHECK(a.image.height == 256);

    SUBCASE("mask marks the centered 96x96 patch") {
        std::size_t marked = 0;
        for (double v : a.mask.values) marked += v != 0.0;
        CHECK(marked == 96 * 96);
        CHECK(a.mask.at(128, 128) == 1.0);
        CHECK(a.mask.at(10, 10) == 0.0);
        CHECK(a.mask.at(79, 79) == 0.0);
        CHECK(a.mask.at(80, 80) == 1.0);
    }
    SUBCASE("deterministic per seed") {
        const SpliceSample b = synth_splice(spec);
        CHECK(a.image.values == b.image.values);
        SpliceSpec other = spec;
        other.seed = 4;
        CHECK(synth_splice(other).image.values != a.image.values);
    }
    SUBCASE("pristine variant shares the scene but has an empty mask") {
        const SpliceSample p = synth_pristine(spec);
        for (double v : p.mask.values) CHECK(v == 0.0);
        // outside the patch the pixels coincide with the spliced image
        CHECK(p.image.values[0] == a.image.values[0]);
    }
    SUBCASE("patch must fit") {
        SpliceSpec bad = spec;
        bad.patch = 256;
        CHECK_THROWS_AS(synth_splice(bad), InputError);
    }
    SUBCASE("values are valid image data") {
        a.image.to_luminance().validate();
    }
}

TEST_CASE("attack labels") {
    CHECK(AttackSpec{AttackSpec::Kind::jpeg, 90.0}.label() == "jpeg_q90");
    CHECK(AttackSpec{AttackSpec::Kind::scale, 0.75}.label() == "scale_0.75");
}

TEST_CASE("detect localizes a synthetic splice") {
    SpliceSpec spec;
    spec.seed = 11;
    const SpliceSample sample = synth_splice(spec);
    DetectConfig config;
    config.seed = 11;
    const DetectionResult res = detect(sample.image, shared_prior(), config);

    CHECK(res.decision.width == 256);
    CHECK(res.decision.height == 256);
    CHECK_FALSE(res.degraded);
    CHECK(res.area_fraction > 0.0);
    CHECK(res.combined_probs.grid.block_size == 16);
    CHECK(res.samples_coarse.grid.block_size == 32);
    CHECK(res.samples_fine.samples.size() == 256);

    const Metrics m = score(res.decision, sample.mask);
    CHECK(m.f_score >= 0.5);

    SUBCASE("energy trace is monotone within each f-step") {
        CHECK(res.energy_trace.size() <= config.iter_max);
        for (const auto& e : res.energy_trace)
            CHECK(e.after_cut.total <= e.before_cut.total + 1e-9);
    }
    SUBCASE("alien curve sits above the host curve at mid intensity") {
        CHECK(res.nlf1.at_intensity(0.55) > res.nlf0.at_intensity(0.55));
    }
    SUBCASE("deterministic") {
        const DetectionResult again = detect(sample.image, shared_prior(), config);
        CHECK(again.decision.values == res.decision.values);
        CHECK(again.combined_probs.p == res.combined_probs.p);
    }
}

TEST_CASE("detect on a constant image takes the degraded path") {
    ImageRgb img(128, 128);
    for (auto& v : img.values) v = 0.4;
    DetectConfig config;
    const DetectionResult res = detect(img, shared_prior(), config);
    CHECK(res.degraded);
    CHECK_FALSE(res.warnings.empty());
    CHECK(res.combined_probs.kind == TamperMapKind::combined);
    // nothing should be flagged
    double marked = 0.0;
    for (double v : res.decision.values) marked += v;
    CHECK(marked / static_cast<double>(res.decision.values.size()) < 0.5);
}

TEST_CASE("detect rejects undersized images") {
    ImageRgb img(48, 48);
    for (auto& v : img.values) v = 0.5;
    CHECK_THROWS_AS(detect(img, shared_prior(), DetectConfig{}), InputError);
}

TEST_CASE("robustness sweep near-identity attacks") {
    SpliceSpec spec;
    spec.seed = 21;
    const SpliceSample sample = synth_splice(spec);
    DetectConfig config;
    config.seed = 21;

    const std::vector<AttackSpec> attacks{{AttackSpec::Kind::jpeg, 100.0},
                                          {AttackSpec::Kind::scale, 0.95}};
    const auto rows =
        robustness_sweep(sample.image, sample.mask, shared_prior(), attacks, config);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].attack.label() == "jpeg_q100");
    CHECK_FALSE(rows[0].failed);
    CHECK(rows[0].metrics.f_score >= 0.4);
    CHECK(rows[1].attack.label() == "scale_0.95");
    CHECK_FALSE(rows[1].failed);
}
