#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace arw {

/// Per-vertex count of instructions consumed by an execution. Additive under
/// concatenation of executions.
struct Odometer {
    std::vector<std::uint64_t> counts;

    Odometer() = default;
    explicit Odometer(std::uint32_t n) : counts(n, 0) {}

    std::uint64_t operator[](std::uint32_t v) const { return counts[v]; }
    std::uint64_t& operator[](std::uint32_t v) { return counts[v]; }

    std::uint64_t total() const {
        return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    }

    Odometer& operator+=(const Odometer& other) {
        if (other.counts.size() != counts.size())
            throw std::invalid_argument("Odometer: size mismatch");
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
        return *this;
    }

    /// Pointwise comparison (legal executions never exceed complete ones).
    bool pointwise_leq(const Odometer& other) const {
        if (other.counts.size() != counts.size())
            throw std::invalid_argument("Odometer: size mismatch");
        for (std::size_t i = 0; i < counts.size(); ++i)
            if (counts[i] > other.counts[i]) return false;
        return true;
    }

    bool operator==(const Odometer&) const = default;
};

}  // namespace arw
