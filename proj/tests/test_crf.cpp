#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "sdnloc/crf.hpp"
#include "sdnloc/errors.hpp"
#include "sdnloc/rng.hpp"

using namespace sdnloc;

TEST_CASE("identity CRF maps a plane to itself") {
    const Crf crf = Crf::identity();
    ImagePlane plane(8, 8);
    Rng rng(1);
    for (auto& v : plane.values) v = rng.next_uniform();
    const ImagePlane out = apply_crf(crf, plane);
    for (std::size_t i = 0; i < plane.values.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(plane.values[i]).epsilon(1e-9));
}

TEST_CASE("gamma CRF closed form") {
    const Crf crf = Crf::gamma(2.2);
    CHECK(crf.apply(0.25) == doctest::Approx(std::pow(0.25, 1.0 / 2.2)).epsilon(1e-3));
    CHECK(crf.apply(0.25) == doctest::Approx(0.5325).epsilon(1e-3));
    CHECK(crf.apply(1.0) == doctest::Approx(1.0));
    CHECK(crf.apply(0.0) == doctest::Approx(0.0));
}

TEST_CASE("inversion round trip") {
    const Crf id = Crf::identity();
    CHECK(id.invert(0.7) == doctest::Approx(0.7).epsilon(1e-9));
    const Crf g = Crf::gamma(2.2);
    CHECK(g.invert(0.5325) == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(g.invert(0.0) == doctest::Approx(0.0));

    // apply o invert = identity over the range
    for (double x = 0.0; x <= 1.0; x += 0.01)
        CHECK(g.apply(g.invert(x)) == doctest::Approx(x).epsilon(1e-6));
}

TEST_CASE("invert rejects out-of-range intensity") {
    const Crf g = Crf::gamma(2.2);
    CHECK_THROWS_AS(g.invert(1.5), InputError);
    CHECK_THROWS_AS(g.invert(-0.1), InputError);
}

TEST_CASE("construction rejects non-monotone curves") {
    std::vector<Crf::Sample> bad{{0.0, 0.0}, {0.5, 0.8}, {0.6, 0.5}, {1.0, 1.0}};
    CHECK_THROWS_AS(Crf(bad, "bad"), InputError);
    std::vector<Crf::Sample> unsat{{0.0, 0.1}, {1.0, 1.0}};
    CHECK_THROWS_AS(Crf(unsat, "unsat"), InputError);
}

TEST_CASE("file round trip") {
    const Crf g = Crf::gamma(1.8);
    const std::string path = "/tmp/sdnloc_test_crf.txt";
    g.save(path);
    const Crf loaded = Crf::load(path);
    CHECK(loaded.name() == g.name());
    CHECK(loaded.samples().size() == 1024);
    for (double x : {0.1, 0.33, 0.77})
        CHECK(loaded.apply(x) == doctest::Approx(g.apply(x)).epsilon(1e-9));
    std::remove(path.c_str());
}
