#include <catch2/catch_amalgamated.hpp>

#include "headsynth/angles.hpp"
#include "headsynth/rng.hpp"

using namespace headsynth;

TEST_CASE("unwrap shifts subsequent values across rollovers") {
    std::vector<double> in{179.0, -179.0, -178.0};
    auto out = unwrap_angles(in);
    REQUIRE(out == std::vector<double>{179.0, 181.0, 182.0});
}

TEST_CASE("unwrap is identity without discontinuities") {
    std::vector<double> in{10.0, 20.0, 30.0};
    REQUIRE(unwrap_angles(in) == in);
}

TEST_CASE("unwrap handles alternating rollovers") {
    std::vector<double> in{-170.0, 170.0, -170.0};
    REQUIRE(unwrap_angles(in) == std::vector<double>{-170.0, -190.0, -170.0});
}

TEST_CASE("wrap maps into [-180, 180)") {
    REQUIRE(wrap_degree(190.0) == Catch::Approx(-170.0));
    REQUIRE(wrap_degree(-180.0) == Catch::Approx(-180.0));
    REQUIRE(wrap_degree(540.0) == Catch::Approx(-180.0));
    REQUIRE(wrap_degree(179.999) == Catch::Approx(179.999));
}

TEST_CASE("unwrap output never steps more than 180 and wrap(unwrap) is identity") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> wrapped(200);
        // random walk, wrapped into representation range
        double v = rng.uniform(-180.0, 180.0);
        for (auto& x : wrapped) {
            v += rng.uniform(-60.0, 60.0);
            x = wrap_degree(v);
        }
        auto un = unwrap_angles(wrapped);
        REQUIRE(un[0] == wrapped[0]);
        for (std::size_t i = 1; i < un.size(); ++i)
            REQUIRE(std::abs(un[i] - un[i - 1]) <= 180.0 + 1e-12);
        auto re = wrap_angles(un);
        for (std::size_t i = 0; i < re.size(); ++i)
            REQUIRE(re[i] == Catch::Approx(wrapped[i]).margin(1e-9));
    }
}
