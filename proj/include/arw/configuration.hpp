#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/rng.hpp"
#include "arw/site_state.hpp"

namespace arw {

/// Per-vertex site states with incrementally maintained particle counts.
/// The counts are an invariant (tests recount from scratch); a configuration
/// is sleeping iff it has no active particles.
class Configuration {
  public:
    Configuration() = default;
    explicit Configuration(std::uint32_t n) : states_(n, kEmpty) {}

    /// 1_V: one active particle everywhere.
    static Configuration all_active(std::uint32_t n) {
        Configuration c(n);
        for (std::uint32_t v = 0; v < n; ++v) c.set_state(v, 1);
        return c;
    }

    static Configuration all_sleeping(std::uint32_t n) {
        Configuration c(n);
        for (std::uint32_t v = 0; v < n; ++v) c.set_state(v, kSleeping);
        return c;
    }

    /// Sleeping configuration from a bitmask (bit v set => sleeping at v).
    static Configuration from_mask(std::uint32_t n, std::uint64_t mask) {
        if (n > 63) throw std::invalid_argument("Configuration::from_mask: too many vertices");
        Configuration c(n);
        for (std::uint32_t v = 0; v < n; ++v)
            if (mask >> v & 1) c.set_state(v, kSleeping);
        return c;
    }

    std::uint32_t num_sites() const { return static_cast<std::uint32_t>(states_.size()); }
    site_state_t state(std::uint32_t v) const { return states_[v]; }
    site_state_t operator[](std::uint32_t v) const { return states_[v]; }

    std::int64_t total_particles() const { return total_; }
    std::int64_t active_particles() const { return active_; }
    std::int64_t sleeping_particles() const { return total_ - active_; }
    bool is_sleeping() const { return active_ == 0; }

    /// Overwrite one site, keeping counts consistent.
    void set_state(std::uint32_t v, site_state_t s) {
        if (s < kSleeping) throw std::invalid_argument("Configuration: invalid site state");
        site_state_t old = states_[v];
        total_ += particle_count(s) - particle_count(old);
        active_ += (is_active(s) ? s : 0) - (is_active(old) ? old : 0);
        states_[v] = s;
    }

    /// Extended addition of an arbitrary site value at v.
    void add(std::uint32_t v, site_state_t s) { set_state(v, extended_add(states_[v], s)); }

    /// Extended addition of one active particle (delta_v).
    void add_active(std::uint32_t v) { add(v, 1); }

    /// Firing outcome "step": one active particle leaves v.
    void remove_active(std::uint32_t v) {
        site_state_t s = states_[v];
        if (!is_active(s)) throw std::logic_error("Configuration: no active particle to remove");
        states_[v] = s - 1;
        --total_;
        --active_;
    }

    /// Firing outcome "sleep": sigma - delta_v + s*delta_v under extended
    /// addition. A lone particle falls asleep; at k >= 2 this is a no-op.
    void sleep_transition(std::uint32_t v) {
        site_state_t s = states_[v];
        if (!is_active(s)) throw std::logic_error("Configuration: no active particle to sleep");
        if (s == 1) {
            states_[v] = kSleeping;
            --active_;
        }
    }

    /// Pointwise extended sum of two configurations.
    Configuration plus(const Configuration& other) const {
        if (other.num_sites() != num_sites())
            throw std::invalid_argument("Configuration::plus: size mismatch");
        Configuration out = *this;
        for (std::uint32_t v = 0; v < num_sites(); ++v)
            if (other.states_[v] != kEmpty) out.add(v, other.states_[v]);
        return out;
    }

    /// Bitmask of sleeping sites; requires a sleeping configuration.
    std::uint64_t sleeping_mask() const {
        if (!is_sleeping()) throw std::logic_error("Configuration: not sleeping");
        if (num_sites() > 63) throw std::logic_error("Configuration: too large for a mask");
        std::uint64_t m = 0;
        for (std::uint32_t v = 0; v < num_sites(); ++v)
            if (states_[v] == kSleeping) m |= std::uint64_t{1} << v;
        return m;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0x243f6a8885a308d3ull;
        for (site_state_t s : states_)
            h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)));
        return h;
    }

    bool operator==(const Configuration& other) const { return states_ == other.states_; }

    /// Compact codec: '.' empty, 's' sleeping, single digits for 1..9,
    /// "(k)" for k >= 10.
    std::string to_string() const {
        std::string out;
        out.reserve(states_.size());
        for (site_state_t s : states_) {
            if (s == kEmpty) out += '.';
            else if (s == kSleeping) out += 's';
            else if (s <= 9) out += static_cast<char>('0' + s);
            else out += "(" + std::to_string(s) + ")";
        }
        return out;
    }

    static Configuration from_string(const std::string& text) {
        Configuration c;
        std::size_t i = 0;
        while (i < text.size()) {
            char ch = text[i];
            if (ch == '.') { c.states_.push_back(kEmpty); ++i; }
            else if (ch == 's') { c.states_.push_back(kSleeping); ++i; }
            else if (ch >= '1' && ch <= '9') { c.states_.push_back(ch - '0'); ++i; }
            else if (ch == '(') {
                std::size_t close = text.find(')', i);
                if (close == std::string::npos)
                    throw std::invalid_argument("Configuration: unterminated escape");
                c.states_.push_back(std::stoi(text.substr(i + 1, close - i - 1)));
                if (c.states_.back() < 1)
                    throw std::invalid_argument("Configuration: bad escaped count");
                i = close + 1;
            } else {
                throw std::invalid_argument("Configuration: bad character in state string");
            }
        }
        for (site_state_t s : c.states_) {
            c.total_ += particle_count(s);
            if (is_active(s)) c.active_ += s;
        }
        return c;
    }

    // Recount from scratch; tests check it against the cached values.
    std::int64_t recount_total() const {
        std::int64_t t = 0;
        for (site_state_t s : states_) t += particle_count(s);
        return t;
    }
    std::int64_t recount_active() const {
        std::int64_t a = 0;
        for (site_state_t s : states_)
            if (is_active(s)) a += s;
        return a;
    }

    const std::vector<site_state_t>& states() const { return states_; }

  private:
    std::vector<site_state_t> states_;
    std::int64_t total_ = 0;
    std::int64_t active_ = 0;
};

}  // namespace arw
