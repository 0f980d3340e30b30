#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "headsynth/normal.hpp"

using namespace headsynth;

namespace {

// High-precision standard normal CDF, independent of the implementation
// under test: Taylor series around 0 for small |x|, continued fraction for
// the tails (long double throughout).
long double oracle_normal_cdf(long double x) {
    const long double inv_sqrt_2pi = 0.398942280401432677939946L;
    long double ax = std::abs(x);
    if (ax < 6.0L) {
        // phi(x) * series for the integral: P(x) = 0.5 + phi(x) * sum_k x^(2k+1) / (1*3*...*(2k+1))
        long double term = ax;
        long double sum = ax;
        long double k = 1.0L;
        while (std::abs(term) > 1e-22L * std::abs(sum)) {
            term *= ax * ax / (2.0L * k + 1.0L);
            sum += term;
            k += 1.0L;
        }
        long double p = 0.5L + inv_sqrt_2pi * std::exp(-0.5L * ax * ax) * sum;
        return x >= 0 ? p : 1.0L - p;
    }
    // Tail via Lentz continued fraction for Mills ratio: Q(x) = phi(x) / (x + 1/(x + 2/(x + ...)))
    long double cf = 0.0L;
    for (int k = 60; k >= 1; --k) cf = static_cast<long double>(k) / (ax + cf);
    long double q = inv_sqrt_2pi * std::exp(-0.5L * ax * ax) / (ax + cf);
    return x >= 0 ? 1.0L - q : q;
}

// Oracle inverse by bisection on the oracle CDF.
long double oracle_inverse_normal(long double p) {
    long double lo = -40.0L, hi = 40.0L;
    for (int i = 0; i < 200; ++i) {
        long double mid = 0.5L * (lo + hi);
        if (oracle_normal_cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5L * (lo + hi);
}

} // namespace

TEST_CASE("inverse normal CDF at the median") {
    REQUIRE(inverse_normal_cdf(0.5) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("inverse normal CDF is antisymmetric") {
    for (double p : {0.01, 0.1, 0.25, 0.4, 0.49, 0.001, 1e-6}) {
        REQUIRE(inverse_normal_cdf(1.0 - p) ==
                Catch::Approx(-inverse_normal_cdf(p)).margin(1e-9));
    }
}

TEST_CASE("inverse normal CDF matches the 0.975 quantile") {
    // Frozen from the high-precision oracle below.
    REQUIRE(inverse_normal_cdf(0.975) == Catch::Approx(1.959964).margin(1e-6));
}

TEST_CASE("inverse normal CDF absolute error below 1e-8 against oracle") {
    for (double p :
         {1e-7, 1e-5, 1e-3, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97725, 0.999, 0.99999, 1.0 - 1e-7}) {
        const double got = inverse_normal_cdf(p);
        const double want = static_cast<double>(oracle_inverse_normal(static_cast<long double>(p)));
        REQUIRE(got == Catch::Approx(want).margin(1e-8));
    }
}

TEST_CASE("inverse normal CDF rejects out-of-domain probabilities") {
    REQUIRE_THROWS_AS(inverse_normal_cdf(0.0), ArgumentError);
    REQUIRE_THROWS_AS(inverse_normal_cdf(1.0), ArgumentError);
    REQUIRE_THROWS_AS(inverse_normal_cdf(-0.5), ArgumentError);
}

TEST_CASE("normal_cdf agrees with the oracle") {
    for (double x : {-8.0, -3.0, -1.0, 0.0, 0.5, 2.0, 5.0}) {
        REQUIRE(normal_cdf(x) ==
                Catch::Approx(static_cast<double>(oracle_normal_cdf(static_cast<long double>(x))))
                    .margin(1e-14));
    }
}
