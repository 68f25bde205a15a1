#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "arw/chain.hpp"
#include "arw/configuration.hpp"
#include "arw/driving.hpp"
#include "arw/site_state.hpp"
#include "arw/sleep_rates.hpp"

namespace arw {

// Brute-force absorbing-chain enumeration of stabilization laws on tiny
// chains. Fires the lowest-index unstable site and branches over the
// instruction law with exact edge probabilities; the distribution over
// final states is the solve of (I - Q) X = R. Independent of the tape-based
// engine, so it doubles as an oracle for distributional tests.

/// Which presentation of the firing rule to enumerate. Quenched: every
/// firing is sleep w.p. q (a no-op self-loop at k >= 2) or a scaled step.
/// TwoCase: a multiply-occupied site fires a pure step. Both give the same
/// law on final configurations.
enum class FiringLaw { Quenched, TwoCase };

namespace detail {

inline std::uint64_t pack_config(const Configuration& cfg) {
    if (cfg.num_sites() > 10) throw std::invalid_argument("exact law: chain too large to pack");
    std::uint64_t key = 0;
    for (std::uint32_t v = 0; v < cfg.num_sites(); ++v) {
        auto s = cfg.state(v);
        if (s + 1 < 0 || s + 1 > 63) throw std::invalid_argument("exact law: state out of range");
        key = key << 6 | static_cast<std::uint64_t>(s + 1);
    }
    return key;
}

struct EnumeratedLaw {
    std::vector<Configuration> absorbing;             // distinct final states
    Eigen::VectorXd probability;                      // same order
};

template <typename Unstable, typename Branches>
EnumeratedLaw enumerate_absorption(const BaseChain& chain, const Configuration& initial,
                                   Unstable&& unstable_site, Branches&& branches,
                                   std::size_t state_cap = 2'000'000) {
    std::unordered_map<std::uint64_t, int> transient_index;
    std::unordered_map<std::uint64_t, int> absorbing_index;
    std::vector<Configuration> transient, absorbing;
    std::vector<std::vector<std::pair<int, double>>> q_rows;   // transient -> transient
    std::vector<std::vector<std::pair<int, double>>> r_rows;   // transient -> absorbing

    auto classify = [&](const Configuration& cfg) -> std::pair<bool, int> {
        for (std::uint32_t v = 0; v < cfg.num_sites(); ++v)
            if (unstable_site(cfg, v)) return {false, -1};
        std::uint64_t key = pack_config(cfg);
        auto it = absorbing_index.find(key);
        if (it != absorbing_index.end()) return {true, it->second};
        int id = static_cast<int>(absorbing.size());
        absorbing_index.emplace(key, id);
        absorbing.push_back(cfg);
        return {true, id};
    };

    std::vector<int> stack;
    auto intern_transient = [&](const Configuration& cfg) {
        std::uint64_t key = pack_config(cfg);
        auto it = transient_index.find(key);
        if (it != transient_index.end()) return it->second;
        int id = static_cast<int>(transient.size());
        if (transient.size() >= state_cap)
            throw std::runtime_error("exact law: state space exceeds cap");
        transient_index.emplace(key, id);
        transient.push_back(cfg);
        q_rows.emplace_back();
        r_rows.emplace_back();
        stack.push_back(id);
        return id;
    };

    auto [absorbed0, aid0] = classify(initial);
    if (absorbed0) {
        EnumeratedLaw law;
        law.absorbing = {initial};
        law.probability = Eigen::VectorXd::Ones(1);
        return law;
    }
    intern_transient(initial);

    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        Configuration cfg = transient[id];
        VertexId site = kSink;
        for (std::uint32_t v = 0; v < cfg.num_sites(); ++v)
            if (unstable_site(cfg, v)) { site = v; break; }
        for (auto& [next, prob] : branches(cfg, site)) {
            auto [absorbed, aid] = classify(next);
            if (absorbed) {
                r_rows[id].emplace_back(aid, prob);
            } else {
                int target = intern_transient(next);  // may grow q_rows
                q_rows[id].emplace_back(target, prob);
            }
        }
    }

    const int nt = static_cast<int>(transient.size());
    const int na = static_cast<int>(absorbing.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(nt, nt);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(nt, na);
    for (int i = 0; i < nt; ++i) {
        for (auto [j, p] : q_rows[i]) m(i, j) -= p;
        for (auto [j, p] : r_rows[i]) r(i, j) += p;
    }
    Eigen::MatrixXd x = m.partialPivLu().solve(r);

    EnumeratedLaw law;
    law.absorbing = std::move(absorbing);
    law.probability = x.row(0).transpose();
    return law;
}

}  // namespace detail

/// Exact law of S[initial] over sleeping configurations, as (mask, prob)
/// pairs sorted by mask. Requires num_vertices <= 10. Matches the engine's
/// rule set: a lone active particle at an infinite-rate site falls asleep
/// deterministically, and crowded infinite-rate sites fire pure steps.
inline std::map<std::uint64_t, double> stabilize_law(const BaseChain& chain,
                                                     const SleepRates& rates,
                                                     const Configuration& initial,
                                                     FiringLaw law = FiringLaw::Quenched) {
    auto normalize = [&](Configuration& cfg) {
        for (std::uint32_t v = 0; v < cfg.num_sites(); ++v)
            if (cfg.state(v) == 1 && rates.q(v) >= 1.0) cfg.sleep_transition(v);
    };
    auto unstable = [&](const Configuration& cfg, VertexId v) {
        return cfg.state(v) >= 2 || (cfg.state(v) == 1 && rates.q(v) < 1.0);
    };
    auto branches = [&](const Configuration& cfg, VertexId v) {
        std::vector<std::pair<Configuration, double>> out;
        double q = rates.q(v);
        bool crowded = cfg.state(v) >= 2;
        bool pure_step = (law == FiringLaw::TwoCase && crowded) || q >= 1.0;
        double step_scale = pure_step ? 1.0 : 1.0 - q;
        if (!pure_step && q > 0.0) {
            Configuration slept = cfg;
            slept.sleep_transition(v);
            out.emplace_back(std::move(slept), q);
        }
        if (step_scale > 0.0) {
            for (const auto& t : chain.transitions[v]) {
                Configuration next = cfg;
                next.remove_active(v);
                if (t.target != kSink) next.add_active(t.target);
                normalize(next);
                out.emplace_back(std::move(next),
                                 step_scale * t.num / static_cast<double>(chain.den[v]));
            }
        }
        return out;
    };
    Configuration start = initial;
    normalize(start);
    auto enumerated = detail::enumerate_absorption(chain, start, unstable, branches);
    std::map<std::uint64_t, double> result;
    for (std::size_t i = 0; i < enumerated.absorbing.size(); ++i)
        result[enumerated.absorbing[i].sleeping_mask()] += enumerated.probability(i);
    return result;
}

/// Exact stationary law pi = law of S[1_V].
inline std::map<std::uint64_t, double> stationary_law(const BaseChain& chain,
                                                      const SleepRates& rates) {
    return stabilize_law(chain, rates, Configuration::all_active(chain.num_vertices));
}

/// The operator A_v: add one particle at v, stabilize. Row sigma (a sleeping
/// mask) holds the law of S[sigma + delta_v]; a 2^#V stochastic matrix.
inline Eigen::MatrixXd add_operator(const BaseChain& chain, const SleepRates& rates, VertexId v,
                                    FiringLaw law = FiringLaw::Quenched) {
    if (chain.num_vertices > 16) throw std::invalid_argument("add_operator: chain too large");
    const std::uint64_t states = std::uint64_t{1} << chain.num_vertices;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<int>(states), static_cast<int>(states));
    for (std::uint64_t mask = 0; mask < states; ++mask) {
        Configuration cfg = Configuration::from_mask(chain.num_vertices, mask);
        cfg.add_active(v);
        for (auto [m, p] : stabilize_law(chain, rates, cfg, law))
            a(static_cast<int>(mask), static_cast<int>(m)) += p;
    }
    return a;
}

/// Probability that IDLA from `initial` (all-active) occupies every vertex.
inline double idla_fill_probability(const BaseChain& chain, const Configuration& initial) {
    auto unstable = [](const Configuration& cfg, VertexId v) { return cfg.state(v) >= 2; };
    auto branches = [&](const Configuration& cfg, VertexId v) {
        std::vector<std::pair<Configuration, double>> out;
        for (const auto& t : chain.transitions[v]) {
            Configuration next = cfg;
            next.remove_active(v);
            if (t.target != kSink) next.add_active(t.target);
            out.emplace_back(std::move(next), t.num / static_cast<double>(chain.den[v]));
        }
        return out;
    };
    auto law = detail::enumerate_absorption(chain, initial, unstable, branches);
    double p = 0.0;
    for (std::size_t i = 0; i < law.absorbing.size(); ++i) {
        bool full = true;
        for (std::uint32_t v = 0; v < chain.num_vertices; ++v)
            full = full && law.absorbing[i].state(v) != kEmpty;
        if (full) p += law.probability(i);
    }
    return p;
}

/// Exact T_full law for IDLA under a fixed driving sequence, by layering the
/// enumeration step by step. Returns P(T_full = t) for t = 1..t_max plus the
/// leftover tail mass at index 0.
inline std::vector<double> idla_fill_time_law(const BaseChain& chain,
                                              const DrivingSequence& driving,
                                              std::uint64_t t_max) {
    auto unstable = [](const Configuration& cfg, VertexId v) { return cfg.state(v) >= 2; };
    auto branches = [&](const Configuration& cfg, VertexId v) {
        std::vector<std::pair<Configuration, double>> out;
        for (const auto& t : chain.transitions[v]) {
            Configuration next = cfg;
            next.remove_active(v);
            if (t.target != kSink) next.add_active(t.target);
            out.emplace_back(std::move(next), t.num / static_cast<double>(chain.den[v]));
        }
        return out;
    };

    std::map<std::uint64_t, std::pair<Configuration, double>> current;
    Configuration empty(chain.num_vertices);
    current[detail::pack_config(empty)] = {empty, 1.0};
    std::vector<double> law(t_max + 1, 0.0);
    double undecided = 1.0;

    for (std::uint64_t t = 1; t <= t_max; ++t) {
        VertexId u = driving.at(t, chain);
        std::map<std::uint64_t, std::pair<Configuration, double>> next_states;
        for (auto& [key, entry] : current) {
            Configuration cfg = entry.first;
            cfg.add_active(u);
            auto step_law = detail::enumerate_absorption(chain, cfg, unstable, branches);
            for (std::size_t i = 0; i < step_law.absorbing.size(); ++i) {
                double p = entry.second * step_law.probability(i);
                if (p == 0.0) continue;
                const Configuration& fin = step_law.absorbing[i];
                bool full = fin.active_particles() == chain.num_vertices;
                if (full) {
                    law[t] += p;
                    undecided -= p;
                } else {
                    auto k = detail::pack_config(fin);
                    auto it = next_states.find(k);
                    if (it == next_states.end()) next_states[k] = {fin, p};
                    else it->second.second += p;
                }
            }
        }
        current = std::move(next_states);
    }
    law[0] = undecided;  // P(T_full > t_max)
    return law;
}

}  // namespace arw
