#pragma once

#include <cstdint>
#include <stdexcept>

namespace arw {

// A site holds either nothing, one sleeping particle, or k >= 1 active
// particles. Encoding: 0 = empty, -1 = sleeping, k >= 1 = k active.
// Total order: empty < sleeping < active(1) < active(2) < ...
using site_state_t = std::int32_t;

inline constexpr site_state_t kEmpty = 0;
inline constexpr site_state_t kSleeping = -1;

inline constexpr bool is_active(site_state_t s) { return s >= 1; }
inline constexpr bool is_sleeping(site_state_t s) { return s == kSleeping; }

/// Number of particles at a site (a sleeping particle counts as one).
inline constexpr std::int64_t particle_count(site_state_t s) {
    return s == kSleeping ? 1 : s;
}

/// Rank in the total order empty < sleeping < 1 < 2 < ...
inline constexpr int order_rank(site_state_t s) {
    return s == kEmpty ? 0 : (s == kSleeping ? 1 : s + 1);
}

/// Commutative extended addition: 0 + s = s, n + s = n + 1 (n >= 1),
/// s + s = 2, m + n = m + n.
inline constexpr site_state_t extended_add(site_state_t a, site_state_t b) {
    if (a == kEmpty) return b;
    if (b == kEmpty) return a;
    if (a == kSleeping && b == kSleeping) return 2;
    if (a == kSleeping) return b + 1;
    if (b == kSleeping) return a + 1;
    return a + b;
}

}  // namespace arw
