#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fedgcc/numerics.hpp"
#include "fedgcc/rng.hpp"
#include "test_util.hpp"

using namespace fedgcc;
using Catch::Matchers::WithinAbs;

TEST_CASE("pearson on exact linear relations", "[numerics]") {
    REQUIRE(pearson({1, 2, 3}, {2, 4, 6}) == 1.0);
    REQUIRE(pearson({1, 2, 3}, {3, 2, 1}) == -1.0);
}

TEST_CASE("pearson matches the two-pass textbook formula", "[numerics]") {
    // frozen from an independent two-pass covariance/sigma computation
    const double expected = 0.9884996005879051;
    REQUIRE_THAT(pearson({1.0, -2.0, 0.5, 3.0}, {0.9, -1.5, 0.0, 2.0}),
                 WithinAbs(expected, 1e-12));
}

TEST_CASE("pearson degenerate and error cases", "[numerics]") {
    const Vec constant = {4.0, 4.0, 4.0};
    REQUIRE(pearson(constant, {1.0, 2.0, 3.0}) == 0.0);
    REQUIRE(pearson({1.0, 2.0, 3.0}, constant) == 0.0);
    REQUIRE(pearson(constant, constant) == 1.0);  // same object
    REQUIRE_THROWS_AS(pearson({1.0, 2.0}, {1.0, 2.0, 3.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(pearson({1.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("pearson is symmetric bit for bit", "[numerics]") {
    RngStream rng(5, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec a = testutil::random_vec(rng, 17, -3.0, 3.0);
        const Vec b = testutil::random_vec(rng, 17, -3.0, 3.0);
        REQUIRE(pearson(a, b) == pearson(b, a));
    }
}

TEST_CASE("pearson of affine images is 1", "[numerics]") {
    RngStream rng(6, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec a = testutil::random_vec(rng, 11, -2.0, 2.0);
        const double alpha = 0.1 + 5.0 * rng.next_uniform();
        const double beta = -3.0 + 6.0 * rng.next_uniform();
        Vec b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) b[i] = alpha * a[i] + beta;
        REQUIRE_THAT(pearson(a, b), WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("softmax symmetry cases", "[numerics]") {
    const Vec u3 = softmax({0.0, 0.0, 0.0});
    for (double x : u3) REQUIRE_THAT(x, WithinAbs(1.0 / 3.0, 1e-15));
    const Vec u2 = softmax({1.0, 1.0});
    REQUIRE(u2[0] == 0.5);
    REQUIRE(u2[1] == 0.5);
}

TEST_CASE("softmax matches the closed form on [1, -1]", "[numerics]") {
    const Vec s = softmax({1.0, -1.0});
    REQUIRE_THAT(s[0], WithinAbs(0.8807970779778824, 1e-15));
    REQUIRE_THAT(s[1], WithinAbs(0.11920292202211755, 1e-15));
}

TEST_CASE("softmax is positive and sums to 1 on correlation-range inputs",
          "[numerics]") {
    RngStream rng(7, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.next_index(12);
        const Vec r = testutil::random_vec(rng, n, -1.0, 1.0);
        const Vec s = softmax(r);
        double sum = 0.0;
        for (double x : s) {
            REQUIRE(x > 0.0);
            sum += x;
        }
        REQUIRE_THAT(sum, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("mean_std population statistics", "[numerics]") {
    const Vec c = {5.0, 5.0, 5.0};
    auto [m1, s1] = mean_std(c);
    REQUIRE(m1 == 5.0);
    REQUIRE(s1 == 0.0);

    auto [m2, s2] = mean_std(Vec{0.0, 2.0});
    REQUIRE(m2 == 1.0);
    REQUIRE(s2 == 1.0);

    auto [m3, s3] = mean_std(Vec{1.0, 2.0, 3.0, 4.0});
    REQUIRE_THAT(m3, WithinAbs(2.5, 1e-15));
    REQUIRE_THAT(s3, WithinAbs(1.118033988749895, 1e-15));  // sqrt(1.25)
}

TEST_CASE("format_double round-trips", "[numerics]") {
    for (double v : {0.1, -3.25, 1e-17, 12345.6789, 0.0}) {
        const std::string s = format_double(v);
        REQUIRE(std::stod(s) == v);
    }
}
