#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "arw/chain.hpp"
#include "arw/harmonic.hpp"
#include "arw/rng.hpp"

using namespace arw;

TEST_CASE("green function on the 1d ball of radius 2") {
    auto chain = build_ball(1, 2);  // V = {-1, 0, 1}
    auto table = harmonic_table(chain);
    const int center = 1;

    // Escape probability from 0 without return is 1/2, so G(0,0) = 2.
    CHECK(table.green(center, center) == Catch::Approx(2.0).margin(1e-10));

    // Hitting probabilities of the center: 1 from the center, 1/2 from +-1.
    double hit_sum = 0;
    for (int y = 0; y < 3; ++y) hit_sum += table.hit(y, center);
    CHECK(hit_sum == Catch::Approx(2.0).margin(1e-10));
    CHECK(table.hit(center, center) == 1.0);
}

TEST_CASE("harmonic identities on the 2d ball of radius 10") {
    auto chain = build_ball(2, 10);
    auto table = harmonic_table(chain);
    const int n = static_cast<int>(table.n);
    REQUIRE(table.residual <= 1e-9);

    double sym = 0, identity = 0, exitsum = 0;
    for (int y = 0; y < n; ++y) {
        double colsum = 0;
        for (int z = 0; z < n; ++z) {
            sym = std::max(sym, std::abs(table.green(y, z) - table.green(z, y)));
            identity = std::max(identity, std::abs(table.green(z, z) * table.hit(y, z) -
                                                   table.green(y, z)));
            CHECK(table.green(y, z) >= 0.0);
            colsum += table.green(z, y);
        }
        exitsum = std::max(exitsum, std::abs(colsum - table.exit_time(y)));
    }
    CHECK(sym <= 1e-10);
    CHECK(identity <= 1e-10);
    CHECK(exitsum <= 1e-10);
}

TEST_CASE("1d exit time from the center is exactly r squared") {
    for (long r : {2, 5, 9}) {
        auto chain = build_interval(r);
        auto table = harmonic_table(chain);
        CHECK(table.exit_time(chain.origin) ==
              Catch::Approx(static_cast<double>(r) * r).margin(1e-9));
    }
}

TEST_CASE("monte carlo walks agree with the solved hitting probabilities") {
    auto chain = build_ball(2, 6);
    auto table = harmonic_table(chain);
    SplitMix rng(2718);
    const std::uint64_t walks = 40000;
    for (int pair = 0; pair < 5; ++pair) {
        auto y = static_cast<VertexId>(rng.next_below(table.n));
        auto z = static_cast<VertexId>(rng.next_below(table.n));
        double p = table.hit(y, z);
        double p_hat = mc_hit_probability(chain, y, z, walks, derive_seed(3141, pair));
        double se = std::sqrt(std::max(p * (1 - p), 1e-12) / walks);
        CAPTURE(y, z, p, p_hat);
        CHECK(std::abs(p_hat - p) <= std::max(4 * se, 1e-3));
    }
}

TEST_CASE("exit_sum_row matches the dense table") {
    auto chain = build_ball(2, 6);
    auto table = harmonic_table(chain);
    auto row = exit_sum_row(chain, 6.0);
    const int n = static_cast<int>(table.n);
    double min_ratio = std::numeric_limits<double>::infinity(), max_g = 0;
    for (int z = 0; z < n; ++z) {
        double hits = 0;
        for (int y = 0; y < n; ++y) hits += table.hit(y, z);
        min_ratio = std::min(min_ratio, hits * std::log(6.0) / 6.0);
        max_g = std::max(max_g, table.green(z, z) / std::log(6.0));
    }
    CHECK(row.min_ratio == Catch::Approx(min_ratio).margin(1e-8));
    CHECK(row.max_green_over_logr == Catch::Approx(max_g).margin(1e-8));
}

TEST_CASE("exit-sum ladder stays bounded") {
    auto r1 = exit_sum_row(build_ball(2, 6), 6.0);
    auto r2 = exit_sum_row(build_ball(2, 12), 12.0);
    CHECK(r2.min_ratio >= 0.5 * r1.min_ratio);
    CHECK(r2.max_green_over_logr <= 1.5 * r1.max_green_over_logr);
}
