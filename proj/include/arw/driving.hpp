#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/chain.hpp"
#include "arw/rng.hpp"

namespace arw {

enum class DrivingKind { Central, UniformIid, Permutation, Custom };

/// Where the driving particle of step t is added. Driving randomness is a
/// counter-based stream of its own seed, independent of the instruction
/// tape. Permutation and custom sequences cycle past their first period.
/// Adaptive sequences (depending on past configurations) are not
/// representable; every DrivingSequence here is fixed before the run.
class DrivingSequence {
  public:
    static DrivingSequence central(VertexId v) {
        DrivingSequence d;
        d.kind_ = DrivingKind::Central;
        d.center_ = v;
        return d;
    }

    /// Uniform over V (the sink is not a member of V).
    static DrivingSequence uniform(std::uint64_t seed) {
        DrivingSequence d;
        d.kind_ = DrivingKind::UniformIid;
        d.seed_ = seed;
        d.stream_ = derive_seed(seed, kTagDriving);
        return d;
    }

    /// Seeded shuffle of V, visiting each vertex exactly once per period.
    static DrivingSequence permutation(std::uint64_t seed, const BaseChain& chain) {
        DrivingSequence d;
        d.kind_ = DrivingKind::Permutation;
        d.seed_ = seed;
        d.order_.resize(chain.num_vertices);
        std::iota(d.order_.begin(), d.order_.end(), 0u);
        SplitMix rng(derive_seed(seed, kTagDriving));
        for (std::uint32_t i = chain.num_vertices; i > 1; --i)
            std::swap(d.order_[i - 1], d.order_[rng.next_below(i)]);
        return d;
    }

    static DrivingSequence permutation(std::vector<VertexId> order) {
        if (order.empty()) throw std::invalid_argument("driving: empty permutation");
        DrivingSequence d;
        d.kind_ = DrivingKind::Permutation;
        d.order_explicit_ = true;
        d.order_ = std::move(order);
        std::vector<VertexId> sorted = d.order_;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (sorted[i] != i) throw std::invalid_argument("driving: not a permutation of V");
        return d;
    }

    static DrivingSequence custom(std::vector<VertexId> list) {
        if (list.empty()) throw std::invalid_argument("driving: empty custom sequence");
        DrivingSequence d;
        d.kind_ = DrivingKind::Custom;
        d.order_ = std::move(list);
        return d;
    }

    DrivingKind kind() const { return kind_; }

    /// Vertex for step t (t >= 1).
    VertexId at(std::uint64_t t, const BaseChain& chain) const {
        switch (kind_) {
            case DrivingKind::Central:
                return center_;
            case DrivingKind::UniformIid:
                return static_cast<VertexId>(
                    bounded(counter_word(stream_, t), chain.num_vertices));
            case DrivingKind::Permutation:
            case DrivingKind::Custom:
                return order_[(t - 1) % order_.size()];
        }
        throw std::logic_error("driving: bad kind");
    }

    /// Same variant, fresh randomness; deterministic variants are returned
    /// unchanged. Used to hand each trial an independent driving stream.
    DrivingSequence reseeded(std::uint64_t seed, const BaseChain& chain) const {
        switch (kind_) {
            case DrivingKind::Central:
            case DrivingKind::Custom:
                return *this;
            case DrivingKind::UniformIid:
                return uniform(seed);
            case DrivingKind::Permutation:
                return order_explicit_ ? *this : permutation(seed, chain);
        }
        throw std::logic_error("driving: bad kind");
    }

    /// The recurring support: every vertex that appears infinitely often.
    std::vector<VertexId> support(const BaseChain& chain) const {
        switch (kind_) {
            case DrivingKind::Central:
                return {center_};
            case DrivingKind::UniformIid: {
                std::vector<VertexId> all(chain.num_vertices);
                std::iota(all.begin(), all.end(), 0u);
                return all;
            }
            case DrivingKind::Permutation:
            case DrivingKind::Custom: {
                std::vector<VertexId> s = order_;
                std::sort(s.begin(), s.end());
                s.erase(std::unique(s.begin(), s.end()), s.end());
                return s;
            }
        }
        throw std::logic_error("driving: bad kind");
    }

    bool thorough(const BaseChain& chain) const { return check_thorough(chain, support(chain)); }

    std::string label() const {
        switch (kind_) {
            case DrivingKind::Central: return "central:" + std::to_string(center_);
            case DrivingKind::UniformIid: return "uniform";
            case DrivingKind::Permutation: return "permutation";
            case DrivingKind::Custom: return "custom[" + std::to_string(order_.size()) + "]";
        }
        return "?";
    }

    const std::vector<VertexId>& order() const { return order_; }

  private:
    DrivingKind kind_ = DrivingKind::Central;
    VertexId center_ = 0;
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    bool order_explicit_ = false;
    std::vector<VertexId> order_;
};

}  // namespace arw
