#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arw/rng.hpp"

namespace arw {

// Vertices of V are dense indices [0, num_vertices). The sink is a sentinel,
// never an array index.
using VertexId = std::uint32_t;
inline constexpr VertexId kSink = std::numeric_limits<VertexId>::max();

/// One outgoing edge; the probability is num / den(v) with den shared per
/// vertex, so sum-to-one is an exact integer identity.
struct Transition {
    VertexId target = kSink;
    std::uint32_t num = 0;

    bool operator==(const Transition&) const = default;
};

/// Finite base chain with an absorbing sink. Immutable after construction
/// and safe to share across simulation workers.
struct BaseChain {
    std::string label;
    std::uint32_t num_vertices = 0;
    int dim = 0;  // 0 when vertices carry no lattice coordinates
    std::vector<std::uint32_t> den;
    std::vector<std::vector<Transition>> transitions;
    std::vector<std::int32_t> coords;     // row-major, dim entries per vertex
    std::vector<VertexId> boundary_set;   // wired tree: the 2^n neighbors of the sink
    VertexId origin = 0;                  // canonical vertex for central driving

    std::span<const std::int32_t> coord(VertexId v) const {
        return {coords.data() + static_cast<std::size_t>(v) * dim,
                static_cast<std::size_t>(dim)};
    }

    /// Draw an outgoing edge of v from one uniform word, exactly in
    /// proportion num/den.
    VertexId sample_target(VertexId v, std::uint64_t word) const {
        const auto& ts = transitions[v];
        std::uint64_t k = bounded(word, den[v]);
        std::uint64_t acc = 0;
        for (const auto& t : ts) {
            acc += t.num;
            if (k < acc) return t.target;
        }
        return ts.back().target;  // unreachable for validated chains
    }

    /// Exact weight checks plus sink accessibility from every vertex.
    void validate() const {
        if (num_vertices == 0) throw std::invalid_argument("chain: empty vertex set");
        if (den.size() != num_vertices || transitions.size() != num_vertices)
            throw std::invalid_argument("chain: per-vertex arrays do not match num_vertices");
        if (dim > 0 && coords.size() != static_cast<std::size_t>(dim) * num_vertices)
            throw std::invalid_argument("chain: coordinate array has wrong length");
        for (VertexId v = 0; v < num_vertices; ++v) {
            if (den[v] == 0) throw std::invalid_argument("chain: zero denominator");
            std::uint64_t sum = 0;
            for (const auto& t : transitions[v]) {
                if (t.target != kSink && t.target >= num_vertices)
                    throw std::invalid_argument("chain: edge target out of range");
                if (t.num == 0) throw std::invalid_argument("chain: zero-weight edge");
                sum += t.num;
            }
            if (sum != den[v])
                throw std::invalid_argument("chain: outgoing weights do not sum to 1 at vertex " +
                                            std::to_string(v));
        }
        if (!sink_accessible())
            throw std::invalid_argument("chain: some vertex cannot access the sink");
    }

    /// True iff every vertex reaches the sink along positive-probability
    /// edges (breadth-first along reversed edges from the sink).
    bool sink_accessible() const {
        std::vector<std::vector<VertexId>> rev(num_vertices);
        std::vector<char> seen(num_vertices, 0);
        std::queue<VertexId> frontier;
        for (VertexId v = 0; v < num_vertices; ++v)
            for (const auto& t : transitions[v]) {
                if (t.target == kSink) {
                    if (!seen[v]) { seen[v] = 1; frontier.push(v); }
                } else {
                    rev[t.target].push_back(v);
                }
            }
        std::size_t reached = frontier.size();
        while (!frontier.empty()) {
            VertexId v = frontier.front();
            frontier.pop();
            for (VertexId u : rev[v])
                if (!seen[u]) { seen[u] = 1; ++reached; frontier.push(u); }
        }
        return reached == num_vertices;
    }
};

namespace detail {

inline VertexId find_coord(const BaseChain& c, const std::int32_t* pt) {
    // Vertices are stored in lexicographic coordinate order; binary search.
    std::uint32_t lo = 0, hi = c.num_vertices;
    while (lo < hi) {
        std::uint32_t mid = lo + (hi - lo) / 2;
        const std::int32_t* q = c.coords.data() + static_cast<std::size_t>(mid) * c.dim;
        int cmp = 0;
        for (int i = 0; i < c.dim; ++i) {
            if (q[i] != pt[i]) { cmp = q[i] < pt[i] ? -1 : 1; break; }
        }
        if (cmp == 0) return mid;
        if (cmp < 0) lo = mid + 1; else hi = mid;
    }
    return kSink;
}

inline void push_merged(std::vector<Transition>& ts, VertexId target, std::uint32_t num) {
    for (auto& t : ts)
        if (t.target == target) { t.num += num; return; }
    ts.push_back({target, num});
}

inline std::string trim_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

}  // namespace detail

/// Lattice ball {x in Z^d : |x| < r} with simple-random-walk transitions;
/// steps leaving the ball go to the sink. Vertices are indexed in
/// lexicographic coordinate order.
inline BaseChain build_ball(int d, double r) {
    if (d < 1 || d > 4) throw std::invalid_argument("build_ball: dimension must be in [1,4]");
    if (!std::isfinite(r) || r < 1.0) throw std::invalid_argument("build_ball: need finite r >= 1");

    const double r2 = r * r;
    const int c = static_cast<int>(std::ceil(r)) - 1;
    BaseChain chain;
    chain.dim = d;
    chain.label = "ball:d=" + std::to_string(d) + ",r=" + detail::trim_number(r);

    std::vector<std::int32_t> pt(d, -c);
    // Odometer-style loop over the box [-c, c]^d in lexicographic order.
    while (true) {
        double n2 = 0;
        for (int i = 0; i < d; ++i) n2 += static_cast<double>(pt[i]) * pt[i];
        if (n2 < r2) chain.coords.insert(chain.coords.end(), pt.begin(), pt.end());
        int i = d - 1;
        while (i >= 0 && pt[i] == c) pt[i--] = -c;
        if (i < 0) break;
        ++pt[i];
    }
    chain.num_vertices = static_cast<std::uint32_t>(chain.coords.size() / d);

    chain.den.assign(chain.num_vertices, 2u * d);
    chain.transitions.resize(chain.num_vertices);
    std::vector<std::int32_t> nb(d);
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        auto p = chain.coord(v);
        for (int i = 0; i < d; ++i) {
            for (int s : {-1, +1}) {
                std::copy(p.begin(), p.end(), nb.begin());
                nb[i] += s;
                VertexId w = detail::find_coord(chain, nb.data());
                detail::push_merged(chain.transitions[v], w, 1);
            }
        }
        bool zero = true;
        for (int i = 0; i < d; ++i) zero = zero && p[i] == 0;
        if (zero) chain.origin = v;
    }
    chain.validate();
    return chain;
}

/// Discrete torus Z_n^d with the origin vertex acting as the sink;
/// #V = n^d - 1.
inline BaseChain build_torus(int d, long n) {
    if (d < 1 || d > 4) throw std::invalid_argument("build_torus: dimension must be in [1,4]");
    if (n < 2) throw std::invalid_argument("build_torus: need n >= 2");
    double total = std::pow(static_cast<double>(n), d);
    if (total > 1e8) throw std::invalid_argument("build_torus: n^d too large");

    BaseChain chain;
    chain.dim = d;
    chain.label = "torus:d=" + std::to_string(d) + ",n=" + std::to_string(n);
    const auto rank = [&](const std::int32_t* pt) {
        long r = 0;
        for (int i = 0; i < d; ++i) r = r * n + pt[i];
        return r;
    };

    std::vector<std::int32_t> pt(d, 0);
    while (true) {  // lexicographic sweep: rank order equals lex order
        if (rank(pt.data()) != 0) chain.coords.insert(chain.coords.end(), pt.begin(), pt.end());
        int i = d - 1;
        while (i >= 0 && pt[i] == n - 1) pt[i--] = 0;
        if (i < 0) break;
        ++pt[i];
    }
    chain.num_vertices = static_cast<std::uint32_t>(total) - 1;
    chain.den.assign(chain.num_vertices, 2u * d);
    chain.transitions.resize(chain.num_vertices);
    std::vector<std::int32_t> nb(d);
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        auto p = chain.coord(v);
        for (int i = 0; i < d; ++i) {
            for (int s : {-1, +1}) {
                std::copy(p.begin(), p.end(), nb.begin());
                nb[i] = static_cast<std::int32_t>((nb[i] + s + n) % n);
                long rk = rank(nb.data());
                VertexId w = rk == 0 ? kSink : static_cast<VertexId>(rk - 1);
                detail::push_merged(chain.transitions[v], w, 1);
            }
        }
    }
    chain.origin = 0;
    chain.validate();
    return chain;
}

/// Integer points of (-r, r) with nearest-neighbor steps; +-r absorb.
inline BaseChain build_interval(long r) {
    if (r < 1) throw std::invalid_argument("build_interval: need r >= 1");
    if (r > 100'000'000L) throw std::invalid_argument("build_interval: r too large");
    BaseChain chain;
    chain.dim = 1;
    chain.label = "interval:r=" + std::to_string(r);
    chain.num_vertices = static_cast<std::uint32_t>(2 * r - 1);
    chain.den.assign(chain.num_vertices, 2);
    chain.transitions.resize(chain.num_vertices);
    chain.coords.resize(chain.num_vertices);
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        chain.coords[v] = static_cast<std::int32_t>(v) - static_cast<std::int32_t>(r - 1);
        auto& ts = chain.transitions[v];
        if (v == 0) detail::push_merged(ts, kSink, 1);
        else detail::push_merged(ts, v - 1, 1);
        if (v + 1 == chain.num_vertices) detail::push_merged(ts, kSink, 1);
        else detail::push_merged(ts, v + 1, 1);
    }
    chain.origin = static_cast<VertexId>(r - 1);  // lattice coordinate 0
    chain.validate();
    return chain;
}

/// Complete binary tree of depth n+1 with all 2^(n+1) leaves collapsed to
/// the sink. Heap indexing: children of i are 2i+1 and 2i+2. boundary_set
/// holds the 2^n vertices adjacent to the sink.
inline BaseChain build_wired_tree(int n) {
    if (n < 1) throw std::invalid_argument("build_wired_tree: need n >= 1");
    if (n > 24) throw std::invalid_argument("build_wired_tree: depth overflows index space");
    BaseChain chain;
    chain.label = "tree:n=" + std::to_string(n);
    const std::uint32_t count = (1u << (n + 1)) - 1;
    chain.num_vertices = count;
    chain.den.resize(count);
    chain.transitions.resize(count);
    for (VertexId v = 0; v < count; ++v) {
        auto& ts = chain.transitions[v];
        std::uint32_t degree = v == 0 ? 2 : 3;
        chain.den[v] = degree;
        if (v != 0) detail::push_merged(ts, (v - 1) / 2, 1);
        for (VertexId child : {2 * v + 1, 2 * v + 2}) {
            if (child < count) detail::push_merged(ts, child, 1);
            else detail::push_merged(ts, kSink, 1);
        }
    }
    chain.boundary_set.resize(1u << n);
    for (std::uint32_t i = 0; i < (1u << n); ++i)
        chain.boundary_set[i] = (1u << n) - 1 + i;
    chain.origin = 0;  // root
    chain.validate();
    return chain;
}

/// Simple random walk on the path {0,...,L} with sink at L; vertex 0 is the
/// reflecting end (its only neighbor is 1).
inline BaseChain build_path(long length) {
    if (length < 1) throw std::invalid_argument("build_path: need L >= 1");
    if (length > 100'000'000L) throw std::invalid_argument("build_path: L too large");
    BaseChain chain;
    chain.dim = 1;
    chain.label = "path:L=" + std::to_string(length);
    chain.num_vertices = static_cast<std::uint32_t>(length);
    chain.den.resize(chain.num_vertices);
    chain.transitions.resize(chain.num_vertices);
    chain.coords.resize(chain.num_vertices);
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        chain.coords[v] = static_cast<std::int32_t>(v);
        auto& ts = chain.transitions[v];
        if (v == 0 && chain.num_vertices == 1) {
            chain.den[v] = 1;
            detail::push_merged(ts, kSink, 1);
        } else if (v == 0) {
            chain.den[v] = 1;
            detail::push_merged(ts, 1, 1);
        } else {
            chain.den[v] = 2;
            detail::push_merged(ts, v - 1, 1);
            if (v + 1 == chain.num_vertices) detail::push_merged(ts, kSink, 1);
            else detail::push_merged(ts, v + 1, 1);
        }
    }
    chain.origin = 0;
    chain.validate();
    return chain;
}

/// True iff every vertex of V is reachable from the support along
/// positive-probability transitions that avoid the sink. The empty support
/// reaches nothing; a vertex reaches itself in zero steps.
inline bool check_thorough(const BaseChain& chain, const std::vector<VertexId>& support) {
    if (support.empty()) return false;
    std::vector<char> seen(chain.num_vertices, 0);
    std::queue<VertexId> frontier;
    for (VertexId a : support) {
        if (a >= chain.num_vertices)
            throw std::invalid_argument("check_thorough: support vertex out of range");
        if (!seen[a]) { seen[a] = 1; frontier.push(a); }
    }
    std::size_t reached = frontier.size();
    while (!frontier.empty()) {
        VertexId v = frontier.front();
        frontier.pop();
        for (const auto& t : chain.transitions[v])
            if (t.target != kSink && !seen[t.target]) {
                seen[t.target] = 1;
                ++reached;
                frontier.push(t.target);
            }
    }
    return reached == chain.num_vertices;
}

/// JSON descriptor {label, num_vertices, edges: [[from, to|"sink", num, den]], coords}.
inline nlohmann::json chain_to_json(const BaseChain& chain) {
    nlohmann::json edges = nlohmann::json::array();
    for (VertexId v = 0; v < chain.num_vertices; ++v)
        for (const auto& t : chain.transitions[v]) {
            nlohmann::json edge = nlohmann::json::array();
            edge.push_back(v);
            if (t.target == kSink) edge.push_back("sink");
            else edge.push_back(t.target);
            edge.push_back(t.num);
            edge.push_back(chain.den[v]);
            edges.push_back(edge);
        }
    nlohmann::json j;
    j["label"] = chain.label;
    j["num_vertices"] = chain.num_vertices;
    j["edges"] = edges;
    if (chain.dim > 0) {
        nlohmann::json cs = nlohmann::json::array();
        for (VertexId v = 0; v < chain.num_vertices; ++v) {
            auto p = chain.coord(v);
            cs.push_back(std::vector<std::int32_t>(p.begin(), p.end()));
        }
        j["coords"] = cs;
    } else {
        j["coords"] = nullptr;
    }
    if (!chain.boundary_set.empty()) j["boundary_set"] = chain.boundary_set;
    j["origin"] = chain.origin;
    return j;
}

inline BaseChain chain_from_json(const nlohmann::json& j) {
    BaseChain chain;
    chain.label = j.at("label").get<std::string>();
    chain.num_vertices = j.at("num_vertices").get<std::uint32_t>();
    chain.den.assign(chain.num_vertices, 0);
    chain.transitions.resize(chain.num_vertices);
    for (const auto& edge : j.at("edges")) {
        VertexId from = edge.at(0).get<VertexId>();
        if (from >= chain.num_vertices) throw std::invalid_argument("chain json: bad edge source");
        VertexId to = edge.at(1).is_string() ? kSink : edge.at(1).get<VertexId>();
        std::uint32_t num = edge.at(2).get<std::uint32_t>();
        std::uint32_t den = edge.at(3).get<std::uint32_t>();
        if (chain.den[from] == 0) chain.den[from] = den;
        else if (chain.den[from] != den)
            throw std::invalid_argument("chain json: inconsistent denominator");
        chain.transitions[from].push_back({to, num});
    }
    if (!j.at("coords").is_null()) {
        const auto& cs = j.at("coords");
        if (!cs.empty()) {
            chain.dim = static_cast<int>(cs.at(0).size());
            for (const auto& row : cs)
                for (const auto& x : row) chain.coords.push_back(x.get<std::int32_t>());
        }
    }
    if (j.contains("boundary_set")) chain.boundary_set = j["boundary_set"].get<std::vector<VertexId>>();
    if (j.contains("origin")) chain.origin = j["origin"].get<VertexId>();
    chain.validate();
    return chain;
}

}  // namespace arw
