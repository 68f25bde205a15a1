#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "arw/chain.hpp"
#include "arw/odometer.hpp"
#include "arw/rng.hpp"
#include "arw/sleep_rates.hpp"

namespace arw {

/// One quenched instruction: either "try to sleep" or "step to target".
struct Instruction {
    bool sleep = false;
    VertexId target = kSink;  // meaningful only when !sleep

    bool operator==(const Instruction&) const = default;
};

/// Quenched per-vertex i.i.d. instruction streams. Instruction (v, n) is a
/// pure function of (master seed, v, n), so tapes are never stored or
/// serialized: regenerating from the seed reproduces every instruction.
///
/// Each instruction owns two lanes: lane 0 is the sleep-vs-step uniform,
/// lane 1 the step-target uniform. Consumers read lanes lazily; which lanes
/// are evaluated never affects the stream layout.
class InstructionTape {
  public:
    InstructionTape(std::uint64_t master_seed, std::uint32_t num_vertices)
        : master_(master_seed), base_(num_vertices, 0), used_(num_vertices, 0) {
        streams_.reserve(num_vertices);
        std::uint64_t root = mix64(master_seed ^ 0x6c62272e07bb0142ull);
        for (std::uint32_t v = 0; v < num_vertices; ++v)
            streams_.push_back(mix64(root + (std::uint64_t{v} + 1) * kGolden));
    }

    std::uint64_t master_seed() const { return master_; }
    std::uint32_t num_vertices() const { return static_cast<std::uint32_t>(base_.size()); }

    std::uint64_t consumed(VertexId v) const { return used_[v]; }
    const std::vector<std::uint64_t>& consumed_counts() const { return used_; }
    std::uint64_t base_offset(VertexId v) const { return base_[v]; }

    /// Claim the next instruction at v; returns its absolute index.
    std::uint64_t consume(VertexId v) { return base_[v] + used_[v]++; }

    double sleep_uniform(VertexId v, std::uint64_t index) const {
        return u01(word(v, index, 0));
    }
    std::uint64_t step_word(VertexId v, std::uint64_t index) const {
        return word(v, index, 1);
    }

    /// Decode and consume one instruction under the law: sleep with
    /// probability q_v, else step to w with probability P(v,w)(1-q_v).
    Instruction draw(VertexId v, const BaseChain& chain, const SleepRates& rates) {
        std::uint64_t idx = consume(v);
        double q = rates.q(v);
        bool sleep = q > 0.0 && (q >= 1.0 || sleep_uniform(v, idx) < q);
        if (sleep) return {true, kSink};
        return {false, chain.sample_target(v, step_word(v, idx))};
    }

    /// Tape reading instruction (v, n) as this tape's (v, n + offset(v)).
    /// Realizes the "future" stream after an execution with that odometer.
    InstructionTape fork(const Odometer& offset) const {
        if (offset.counts.size() != base_.size())
            throw std::invalid_argument("InstructionTape::fork: odometer size mismatch");
        InstructionTape out = *this;
        for (std::size_t v = 0; v < base_.size(); ++v) {
            out.base_[v] += offset.counts[v];
            out.used_[v] = 0;
        }
        return out;
    }

    /// Fork at the current consumed position (offset = what this tape used).
    InstructionTape fork_at_consumed() const {
        InstructionTape out = *this;
        for (std::size_t v = 0; v < base_.size(); ++v) {
            out.base_[v] += used_[v];
            out.used_[v] = 0;
        }
        return out;
    }

    void reset() { std::fill(used_.begin(), used_.end(), 0); }

  private:
    std::uint64_t word(VertexId v, std::uint64_t index, int lane) const {
        return mix64(streams_[v] ^ (2 * index + lane + 1) * kGolden);
    }

    std::uint64_t master_;
    std::vector<std::uint64_t> streams_;
    std::vector<std::uint64_t> base_;
    std::vector<std::uint64_t> used_;
};

}  // namespace arw
