#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "fedgcc/rng.hpp"

using fedgcc::RngStream;

TEST_CASE("rng matches the golden first-16-draws file", "[rng]") {
    std::ifstream golden(std::string(FEDGCC_GOLDEN_DIR) + "/rng_first16.txt");
    REQUIRE(golden.good());

    RngStream words(42, 0);
    RngStream uniforms(42, 0);
    std::string line;
    std::size_t checked = 0;
    while (std::getline(golden, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::uint64_t word = 0;
        double uniform = 0.0;
        is >> word >> uniform;
        REQUIRE(words.next_u64() == word);
        REQUIRE(uniforms.next_uniform() == uniform);  // bit-exact
        ++checked;
    }
    REQUIRE(checked == 16);
}

TEST_CASE("identical (seed, stream) replays identically", "[rng]") {
    RngStream a(123456789, 7);
    RngStream b(123456789, 7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids diverge immediately", "[rng]") {
    RngStream a(42, 0);
    RngStream b(42, 1);
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= a.next_uniform() != b.next_uniform();
    REQUIRE(any_diff);
    // frozen from the reference implementation of the stream spec
    RngStream c(42, 1);
    REQUIRE(c.next_u64() == 18201609923829866926ull);
}

TEST_CASE("uniforms stay in [0, 1)", "[rng]") {
    RngStream rng(3, 14);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("normal draws match the documented Box-Muller transform", "[rng]") {
    // frozen from the independent reference implementation (seed 42 stream 0)
    const double expected[4] = {0.8818545873573221, 1.052462856238756,
                                1.370003636900023, -0.06320005984318515};
    RngStream rng(42, 0);
    for (double e : expected)
        REQUIRE_THAT(rng.next_normal(),
                     Catch::Matchers::WithinAbs(e, 1e-12));
}

TEST_CASE("normal draws have roughly standard moments", "[rng]") {
    RngStream rng(7, 3);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.next_normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.02);
    REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("next_index covers the range and never escapes it", "[rng]") {
    RngStream rng(11, 2);
    bool seen[5] = {};
    for (int i = 0; i < 1000; ++i) {
        const std::size_t idx = rng.next_index(5);
        REQUIRE(idx < 5);
        seen[idx] = true;
    }
    for (bool s : seen) REQUIRE(s);
}
