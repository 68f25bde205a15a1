#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/chain.hpp"
#include "arw/configuration.hpp"
#include "arw/odometer.hpp"
#include "arw/sleep_rates.hpp"
#include "arw/tape.hpp"

namespace arw {

/// Firing-order policies. The abelian property makes the choice
/// semantically free; several are shipped so the property itself can be
/// tested rather than assumed.
enum class FiringPolicy {
    FifoQueue,      // queue of unstable sites, fire once per dequeue
    LowestIndex,    // always fire the smallest-index unstable site
    HighestIndex,   // always fire the largest-index unstable site
    TrackParticle,  // follow one active particle until it sleeps or exits
};

inline const char* to_string(FiringPolicy p) {
    switch (p) {
        case FiringPolicy::FifoQueue: return "fifo";
        case FiringPolicy::LowestIndex: return "lowest";
        case FiringPolicy::HighestIndex: return "highest";
        case FiringPolicy::TrackParticle: return "track";
    }
    return "?";
}

struct StabilizeOptions {
    FiringPolicy policy = FiringPolicy::FifoQueue;
    // Runaway-loop guard; never expected to trigger on valid inputs.
    std::uint64_t safety_cap = 10'000'000'000ull;
    // Optional budget for deliberately truncated (partial) executions.
    std::uint64_t budget = UINT64_MAX;
};

struct StabilizeResult {
    Configuration config;
    Odometer odometer;            // instructions consumed by this call
    std::uint64_t firings = 0;    // == odometer.total()
    std::uint64_t absorbed = 0;   // particles that fell into the sink
    bool completed = true;        // false iff the budget ran out first
};

class StabilizationCapExceeded : public std::runtime_error {
  public:
    explicit StabilizationCapExceeded(std::uint64_t cap)
        : std::runtime_error("stabilization aborted: safety cap of " + std::to_string(cap) +
                             " firings exceeded") {}
};

namespace detail {

enum class StabMode { Arw, Idla };

// Instruction-consuming firings. ARW fires any active site with q_v < 1 and
// multiply-occupied sites with q_v = 1; IDLA fires only multiply-occupied
// sites (a lone particle has settled). A lone active particle at a q_v = 1
// site is handled by normalize_site below, not by a firing: at infinite
// sleep rate the fall-asleep event is deterministic, so it consumes no
// instruction. Consuming one there would make the step-instruction offsets
// depend on the firing order and break the abelian property.
template <StabMode Mode>
inline bool unstable(const Configuration& cfg, VertexId v, const SleepRates& rates) {
    if constexpr (Mode == StabMode::Arw)
        return cfg.state(v) >= 2 || (cfg.state(v) == 1 && rates.q(v) < 1.0);
    else
        return cfg.state(v) >= 2;
}

// ARW only: a lone active particle at an infinite-rate site falls asleep in
// place. Returns true when the site changed.
inline bool normalize_site(Configuration& cfg, VertexId v, const SleepRates& rates) {
    if (cfg.state(v) == 1 && rates.q(v) >= 1.0) {
        cfg.sleep_transition(v);
        return true;
    }
    return false;
}

// One firing at v. Consumes exactly one instruction. For q_v < 1 a sleep
// instruction acts through extended addition (a no-op at k >= 2); at
// q_v = 1 the site is multiply occupied and fires a pure step. IDLA mode
// never lets a particle fall asleep: sleep instructions are consumed as
// no-ops so the IDLA odometer indexes the same tape as an ARW completion.
template <StabMode Mode>
inline VertexId fire_once(Configuration& cfg, VertexId v, InstructionTape& tape,
                          const BaseChain& chain, const SleepRates& rates, Odometer& odo,
                          std::uint64_t& absorbed) {
    std::uint64_t idx = tape.consume(v);
    ++odo[v];
    double q = rates.q(v);
    bool sleep_instr;
    if (q <= 0.0 || q >= 1.0) {
        sleep_instr = false;
    } else {
        sleep_instr = tape.sleep_uniform(v, idx) < q;
    }
    if (sleep_instr) {
        if constexpr (Mode == StabMode::Arw) cfg.sleep_transition(v);
        return v;  // particle (if any) still at v
    }
    VertexId w = chain.sample_target(v, tape.step_word(v, idx));
    cfg.remove_active(v);
    if constexpr (Mode == StabMode::Arw) normalize_site(cfg, v, rates);
    if (w == kSink) {
        ++absorbed;
        return kSink;
    }
    cfg.add_active(w);
    if constexpr (Mode == StabMode::Arw) normalize_site(cfg, w, rates);
    return w;
}

template <StabMode Mode>
StabilizeResult stabilize_impl(Configuration cfg, InstructionTape& tape, const BaseChain& chain,
                               const SleepRates& rates, const StabilizeOptions& opt) {
    const std::uint32_t n = chain.num_vertices;
    if (cfg.num_sites() != n) throw std::invalid_argument("stabilize: configuration size mismatch");
    if (rates.size() != n) throw std::invalid_argument("stabilize: sleep-rate size mismatch");
    if (tape.num_vertices() != n) throw std::invalid_argument("stabilize: tape size mismatch");

    StabilizeResult result;
    result.odometer = Odometer(n);

    if constexpr (Mode == StabMode::Arw)
        for (VertexId v = 0; v < n; ++v) normalize_site(cfg, v, rates);

    auto hot = [&](VertexId v) { return unstable<Mode>(cfg, v, rates); };
    auto fire = [&](VertexId v) {
        return fire_once<Mode>(cfg, v, tape, chain, rates, result.odometer, result.absorbed);
    };
    auto out_of_budget = [&] {
        if (result.firings >= opt.safety_cap) throw StabilizationCapExceeded(opt.safety_cap);
        return result.firings >= opt.budget;
    };

    if (opt.policy == FiringPolicy::FifoQueue) {
        std::vector<VertexId> queue;
        std::vector<char> queued(n, 0);
        queue.reserve(64);
        for (VertexId v = 0; v < n; ++v)
            if (hot(v)) { queue.push_back(v); queued[v] = 1; }
        std::size_t head = 0;
        auto push = [&](VertexId v) {
            if (v != kSink && !queued[v] && hot(v)) {
                queued[v] = 1;
                queue.push_back(v);
            }
        };
        while (head < queue.size()) {
            if (out_of_budget()) { result.completed = false; break; }
            VertexId v = queue[head++];
            queued[v] = 0;
            if (!hot(v)) continue;
            VertexId w = fire(v);
            ++result.firings;
            push(v);
            push(w);
            if (head > 4096 && head * 2 > queue.size() + 4096) {
                queue.erase(queue.begin(), queue.begin() + head);
                head = 0;
            }
        }
    } else if (opt.policy == FiringPolicy::LowestIndex ||
               opt.policy == FiringPolicy::HighestIndex) {
        std::set<VertexId> pending;
        for (VertexId v = 0; v < n; ++v)
            if (hot(v)) pending.insert(v);
        auto refresh = [&](VertexId v) {
            if (v == kSink) return;
            if (hot(v)) pending.insert(v);
            else pending.erase(v);
        };
        while (!pending.empty()) {
            if (out_of_budget()) { result.completed = false; break; }
            VertexId v = opt.policy == FiringPolicy::LowestIndex ? *pending.begin()
                                                                 : *pending.rbegin();
            VertexId w = fire(v);
            ++result.firings;
            refresh(v);
            refresh(w);
        }
    } else {  // TrackParticle
        std::set<VertexId> pending;
        for (VertexId v = 0; v < n; ++v)
            if (hot(v)) pending.insert(v);
        VertexId cur = kSink;
        while (true) {
            if (cur == kSink || !hot(cur)) {
                if (cur != kSink) pending.erase(cur);
                while (!pending.empty() && !hot(*pending.begin()))
                    pending.erase(pending.begin());
                if (pending.empty()) break;
                cur = *pending.begin();
            }
            if (out_of_budget()) { result.completed = false; break; }
            VertexId prev = cur;
            VertexId w = fire(cur);
            ++result.firings;
            if (hot(prev)) pending.insert(prev);
            else pending.erase(prev);
            if (w != kSink && hot(w)) pending.insert(w);
            // Follow the moved particle; fall back to the pending set when it
            // slept or exited.
            cur = (w != kSink && w != prev && hot(w)) ? w : hot(prev) ? prev : kSink;
        }
    }

    result.config = std::move(cfg);
    return result;
}

}  // namespace detail

/// Fire vertex v once (legality: v must hold an active particle). Consumes
/// exactly one instruction, except for the deterministic fall-asleep of a
/// lone particle at an infinite-rate site, which consumes none.
inline Configuration fire(Configuration config, VertexId v, InstructionTape& tape,
                          const BaseChain& chain, const SleepRates& rates) {
    if (v >= config.num_sites()) throw std::invalid_argument("fire: vertex out of range");
    if (config.state(v) < 1)
        throw std::logic_error("fire: illegal execution, vertex holds no active particle");
    if (detail::normalize_site(config, v, rates)) return config;
    Odometer odo(config.num_sites());
    std::uint64_t absorbed = 0;
    detail::fire_once<detail::StabMode::Arw>(config, v, tape, chain, rates, odo, absorbed);
    return config;
}

/// ARW stabilization operator S (or S^F when the tape has prior
/// consumption). Fires active sites until the configuration sleeps; the
/// result is independent of the firing policy.
inline StabilizeResult stabilize(Configuration config, InstructionTape& tape,
                                 const BaseChain& chain, const SleepRates& rates,
                                 const StabilizeOptions& opt = {}) {
    return detail::stabilize_impl<detail::StabMode::Arw>(std::move(config), tape, chain, rates,
                                                         opt);
}

/// IDLA stabilization operator: no particle is allowed to fall asleep, and
/// a particle at a singly-occupied site never moves. Sleep instructions are
/// consumed as no-ops so the returned odometer indexes the same tape as a
/// subsequent ARW completion.
inline StabilizeResult stabilize_idla(Configuration config, InstructionTape& tape,
                                      const BaseChain& chain, const SleepRates& rates,
                                      const StabilizeOptions& opt = {}) {
    return detail::stabilize_impl<detail::StabMode::Idla>(std::move(config), tape, chain, rates,
                                                          opt);
}

/// Replay the identical tape under two policies; true iff both the final
/// configuration and the odometer agree exactly.
inline bool verify_abelian(const BaseChain& chain, const SleepRates& rates,
                           const Configuration& config, std::uint64_t seed, FiringPolicy a,
                           FiringPolicy b) {
    InstructionTape tape_a(seed, chain.num_vertices);
    InstructionTape tape_b(seed, chain.num_vertices);
    StabilizeOptions opt_a{.policy = a};
    StabilizeOptions opt_b{.policy = b};
    auto ra = stabilize(config, tape_a, chain, rates, opt_a);
    auto rb = stabilize(config, tape_b, chain, rates, opt_b);
    return ra.config == rb.config && ra.odometer == rb.odometer;
}

}  // namespace arw
