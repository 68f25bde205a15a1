#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "arw/chain.hpp"

using namespace arw;

namespace {

// Independent lattice-ball enumeration (no shared code with build_ball).
std::uint64_t brute_force_ball_count(int d, double r) {
    const int c = static_cast<int>(std::ceil(r));
    std::uint64_t count = 0;
    std::vector<int> pt(d, -c);
    while (true) {
        double n2 = 0;
        for (int x : pt) n2 += static_cast<double>(x) * x;
        if (n2 < r * r) ++count;
        int i = d - 1;
        while (i >= 0 && pt[i] == c) pt[i--] = -c;
        if (i < 0) break;
        ++pt[i];
    }
    return count;
}

void check_weights_sum_to_one(const BaseChain& chain) {
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        std::uint64_t sum = 0;
        for (const auto& t : chain.transitions[v]) sum += t.num;
        REQUIRE(sum == chain.den[v]);
    }
}

}  // namespace

TEST_CASE("ball vertex counts") {
    CHECK(build_ball(1, 3).num_vertices == 5);   // points -2..2
    CHECK(build_ball(2, 3).num_vertices == 25);  // enumerated below as well
    CHECK(build_ball(1, 1).num_vertices == 1);

    SECTION("matches brute-force enumeration") {
        for (int d = 1; d <= 3; ++d)
            for (double r : {1.0, 2.0, 3.5, 5.0, 8.0, 12.5, 20.0}) {
                if (d == 3 && r > 12.5) continue;
                CAPTURE(d, r);
                CHECK(build_ball(d, r).num_vertices == brute_force_ball_count(d, r));
            }
    }
}

TEST_CASE("ball r=1 has both exits to the sink") {
    auto chain = build_ball(1, 1);
    REQUIRE(chain.transitions[0].size() == 1);
    CHECK(chain.transitions[0][0].target == kSink);
    CHECK(chain.transitions[0][0].num == 2);
    CHECK(chain.den[0] == 2);
}

TEST_CASE("ball rejects bad parameters") {
    CHECK_THROWS_AS(build_ball(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_ball(2, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_ball(2, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_ball(2, std::nan("")), std::invalid_argument);
}

TEST_CASE("ball accepts non-integer radii with strict inequality") {
    // |x| = r excluded: r=2 excludes the points at distance exactly 2.
    CHECK(build_ball(1, 2.0).num_vertices == 3);
    CHECK(build_ball(1, 2.5).num_vertices == 5);
    // d=2: r^2=4 excludes (0,2) etc., includes (1,1).
    CHECK(build_ball(2, 2.0).num_vertices == 9);
}

TEST_CASE("ball is invariant under coordinate negation") {
    auto chain = build_ball(2, 4.5);
    // Map each vertex to the index of its negated coordinates.
    std::map<std::pair<int, int>, VertexId> index;
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        auto p = chain.coord(v);
        index[{p[0], p[1]}] = v;
    }
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        auto p = chain.coord(v);
        VertexId nv = index.at({-p[0], -p[1]});
        // Outgoing edge multiset must map onto the negated vertex's edges.
        std::multiset<std::pair<VertexId, std::uint32_t>> a, b;
        for (const auto& t : chain.transitions[v])
            a.insert({t.target == kSink ? kSink : index.at({-chain.coord(t.target)[0],
                                                            -chain.coord(t.target)[1]}),
                      t.num});
        for (const auto& t : chain.transitions[nv]) b.insert({t.target, t.num});
        CHECK(a == b);
    }
}

TEST_CASE("torus construction") {
    auto c1 = build_torus(1, 4);
    CHECK(c1.num_vertices == 3);
    check_weights_sum_to_one(c1);

    auto c2 = build_torus(2, 3);
    CHECK(c2.num_vertices == 8);
    for (VertexId v = 0; v < c2.num_vertices; ++v) {
        CHECK(c2.den[v] == 4);
        std::uint32_t total = 0;
        for (const auto& t : c2.transitions[v]) total += t.num;
        CHECK(total == 4);
    }
    CHECK_THROWS_AS(build_torus(2, 1), std::invalid_argument);

    SECTION("n=2 merges antipodal directions") {
        auto tiny = build_torus(1, 2);
        REQUIRE(tiny.num_vertices == 1);
        REQUIRE(tiny.transitions[0].size() == 1);
        CHECK(tiny.transitions[0][0].num == 2);
    }
}

TEST_CASE("interval construction") {
    CHECK(build_interval(1).num_vertices == 1);
    CHECK(build_interval(3).num_vertices == 5);
    auto chain = build_interval(2);
    // From lattice coordinate 1 (index 2), the right step is absorbed.
    bool right_to_sink = false;
    for (const auto& t : chain.transitions[2])
        if (t.target == kSink) right_to_sink = true;
    CHECK(right_to_sink);
    CHECK(chain.origin == 1);
    CHECK(chain.coord(chain.origin)[0] == 0);
    CHECK_THROWS_AS(build_interval(0), std::invalid_argument);
}

TEST_CASE("wired tree construction") {
    auto t1 = build_wired_tree(1);
    CHECK(t1.num_vertices == 3);
    CHECK(t1.boundary_set.size() == 2);
    // Child vertex: 1/3 to the root, 2/3 to the sink (two merged leaf edges).
    REQUIRE(t1.transitions[1].size() == 2);
    CHECK(t1.transitions[1][0].target == 0);
    CHECK(t1.transitions[1][0].num == 1);
    CHECK(t1.transitions[1][1].target == kSink);
    CHECK(t1.transitions[1][1].num == 2);
    CHECK(t1.den[1] == 3);

    auto t2 = build_wired_tree(2);
    CHECK(t2.num_vertices == 7);
    CHECK(t2.boundary_set.size() == 4);
    check_weights_sum_to_one(t2);
    CHECK_THROWS_AS(build_wired_tree(0), std::invalid_argument);
    CHECK_THROWS_AS(build_wired_tree(40), std::invalid_argument);
}

TEST_CASE("path construction") {
    auto chain = build_path(4);  // path {0..4}, sink at 4
    CHECK(chain.num_vertices == 4);
    REQUIRE(chain.transitions[0].size() == 1);
    CHECK(chain.transitions[0][0].target == 1);
    CHECK(chain.den[0] == 1);
    check_weights_sum_to_one(chain);
}

TEST_CASE("every builder output keeps the sink accessible") {
    for (const BaseChain& chain :
         {build_ball(2, 4.0), build_torus(2, 4), build_interval(5), build_wired_tree(3),
          build_path(9)}) {
        CHECK(chain.sink_accessible());
        check_weights_sum_to_one(chain);
        CHECK_NOTHROW(chain.validate());
    }
}

TEST_CASE("validate rejects broken chains") {
    BaseChain chain;
    chain.label = "broken";
    chain.num_vertices = 2;
    chain.den = {2, 1};
    chain.transitions = {{{1, 1}, {kSink, 1}}, {{0, 1}}};
    CHECK_NOTHROW(chain.validate());

    SECTION("weights that do not sum to one") {
        chain.den[0] = 3;
        CHECK_THROWS_AS(chain.validate(), std::invalid_argument);
    }
    SECTION("sink inaccessible") {
        chain.transitions = {{{1, 1}, {0, 1}}, {{0, 1}}};
        CHECK_THROWS_AS(chain.validate(), std::invalid_argument);
    }
}

TEST_CASE("check_thorough") {
    auto ball = build_ball(2, 3);
    CHECK(check_thorough(ball, {ball.origin}));

    // Two disconnected intervals sharing one sink.
    BaseChain two;
    two.label = "two-components";
    two.num_vertices = 4;
    two.den = {2, 2, 2, 2};
    two.transitions = {{{kSink, 1}, {1, 1}},
                       {{0, 1}, {kSink, 1}},
                       {{kSink, 1}, {3, 1}},
                       {{2, 1}, {kSink, 1}}};
    two.validate();
    CHECK_FALSE(check_thorough(two, {0}));
    CHECK(check_thorough(two, {0, 2}));

    std::vector<VertexId> everything(two.num_vertices);
    std::iota(everything.begin(), everything.end(), 0u);
    CHECK(check_thorough(two, everything));

    CHECK_FALSE(check_thorough(two, {}));
    CHECK_THROWS_AS(check_thorough(two, {9}), std::invalid_argument);
}

TEST_CASE("chain json golden files") {
    const std::map<std::string, BaseChain> cases = {
        {"interval_r2", build_interval(2)},
        {"tree_n1", build_wired_tree(1)},
        {"torus_d1_n4", build_torus(1, 4)},
        {"ball_d2_r1p5", build_ball(2, 1.5)},
    };
    for (const auto& [name, chain] : cases) {
        CAPTURE(name);
        std::ifstream in(std::string(ARW_TEST_DATA_DIR) + "/" + name + ".json");
        REQUIRE(in.good());
        nlohmann::json golden;
        in >> golden;
        CHECK(chain_to_json(chain) == golden);

        auto parsed = chain_from_json(golden);
        CHECK(parsed.num_vertices == chain.num_vertices);
        CHECK(chain_to_json(parsed) == golden);
    }
}

TEST_CASE("chain json rejects inconsistent descriptors") {
    auto j = chain_to_json(build_interval(2));
    j["edges"][0][2] = 7;  // weight no longer sums to the denominator
    CHECK_THROWS_AS(chain_from_json(j), std::invalid_argument);
}
