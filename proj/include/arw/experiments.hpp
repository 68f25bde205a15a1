#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/chain.hpp"
#include "arw/harmonic.hpp"
#include "arw/parallel.hpp"
#include "arw/process.hpp"
#include "arw/sandpile.hpp"
#include "arw/stats.hpp"

namespace arw {

// ---------------------------------------------------------------------------
// Fill-time tails

struct TailEstimate {
    std::string chain_label;
    std::string driving_label;
    std::uint32_t n_vertices = 0;
    double exponent = 0.0;      // alpha (or beta for the lower-bound probe)
    double coefficient = 1.0;   // multiplies N^exponent
    double threshold = 0.0;     // N + coefficient * N^exponent
    std::uint64_t trials = 0;
    std::uint64_t exceed = 0;   // trials with T_full > threshold
    double p_hat = 0.0;
    BinomialCi ci99;
    std::uint64_t seed = 0;
    std::uint64_t min_t_full = 0;  // over trials that filled
    std::vector<std::uint64_t> fill_times;  // T_full per trial, 0 = not filled
};

/// Estimate P(T_full > N + coefficient * N^alpha) for IDLA on `chain`.
inline TailEstimate fill_tail(const BaseChain& chain, const DrivingSequence& driving,
                              double alpha, double coefficient, std::uint64_t trials,
                              std::uint64_t seed, unsigned workers = 1) {
    if (trials == 0) throw std::invalid_argument("fill_tail: zero trials");
    const double n = chain.num_vertices;
    TailEstimate est;
    est.chain_label = chain.label;
    est.driving_label = driving.label();
    est.n_vertices = chain.num_vertices;
    est.exponent = alpha;
    est.coefficient = coefficient;
    est.threshold = n + coefficient * std::pow(n, alpha);
    est.trials = trials;
    est.seed = seed;
    const std::uint64_t t_limit = static_cast<std::uint64_t>(std::floor(est.threshold));

    est.fill_times.assign(trials, 0);
    parallel_for_index(trials, workers, [&](std::uint64_t i) {
        std::uint64_t trial_seed = derive_seed(seed, kTagTrial + 977 * i);
        auto drv = driving.reseeded(derive_seed(trial_seed, kTagDriving), chain);
        IdlaOptions opt{.t_max = t_limit, .stop_at_full = true};
        auto run = run_idla(chain, drv, trial_seed, opt);
        if (run.t_full) {
            if (*run.t_full < chain.num_vertices)
                throw std::logic_error("fill_tail: T_full below #V");
            est.fill_times[i] = *run.t_full;
        }
    });

    est.min_t_full = UINT64_MAX;
    for (std::uint64_t t : est.fill_times) {
        if (t == 0) ++est.exceed;
        else est.min_t_full = std::min(est.min_t_full, t);
    }
    if (est.min_t_full == UINT64_MAX) est.min_t_full = 0;
    est.p_hat = static_cast<double>(est.exceed) / trials;
    est.ci99 = clopper_pearson(est.exceed, trials, 0.99);
    return est;
}

/// Same tail at the lower-bound exponent beta (coefficient b).
inline TailEstimate fill_lower_bound_probe(const BaseChain& chain, const DrivingSequence& driving,
                                           double beta, double b, std::uint64_t trials,
                                           std::uint64_t seed, unsigned workers = 1) {
    return fill_tail(chain, driving, beta, b, trials, seed, workers);
}

// ---------------------------------------------------------------------------
// Wired-tree boundary fill

struct TreeFillResult {
    int n = 0;
    std::uint32_t n_vertices = 0;
    std::uint64_t trials = 0;
    std::uint64_t timeouts = 0;
    double normalizer = 0.0;  // #V ln #V
    std::vector<std::uint64_t> t_watch;      // T'_full per completed trial, sorted
    std::vector<double> ratio_quantiles;     // 5/25/50/75/95th of T'_full / normalizer
};

/// Distribution of T'_full, the first time IDLA covers the sink-adjacent
/// set of the wired tree.
inline TreeFillResult wired_tree_fill(int n, const DrivingSequence& driving,
                                      std::uint64_t trials, std::uint64_t seed,
                                      unsigned workers = 1) {
    BaseChain chain = build_wired_tree(n);
    TreeFillResult result;
    result.n = n;
    result.n_vertices = chain.num_vertices;
    result.trials = trials;
    result.normalizer = chain.num_vertices * std::log(static_cast<double>(chain.num_vertices));
    const std::uint64_t t_cap =
        std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(50.0 * result.normalizer));

    std::vector<std::uint64_t> per_trial(trials, 0);
    parallel_for_index(trials, workers, [&](std::uint64_t i) {
        std::uint64_t trial_seed = derive_seed(seed, kTagTrial + 977 * i);
        auto drv = driving.reseeded(derive_seed(trial_seed, kTagDriving), chain);
        IdlaOptions opt{.t_max = t_cap, .stop_at_full = true, .watch_set = chain.boundary_set};
        auto run = run_idla(chain, drv, trial_seed, opt);
        per_trial[i] = run.t_watch_full.value_or(0);
    });

    for (std::uint64_t t : per_trial) {
        if (t == 0) ++result.timeouts;
        else result.t_watch.push_back(t);
    }
    std::sort(result.t_watch.begin(), result.t_watch.end());
    for (double p : {0.05, 0.25, 0.5, 0.75, 0.95})
        result.ratio_quantiles.push_back(
            result.t_watch.empty() ? 0.0
                                   : quantile_sorted(result.t_watch, p) / result.normalizer);
    return result;
}

// ---------------------------------------------------------------------------
// Mixing profile

enum class Sigma0Sweep { All, Extremes, Auto };

struct MixingRow {
    std::string sigma0;
    std::uint64_t t = 0;
    double tv = 0.0;
    double radius = 0.0;
    double p_tfull_gt = 0.0;  // empirical P(T_full > t) for this sigma0
    std::uint64_t samples = 0;
    bool projected = false;   // statistic is the particle count, not the state
};

/// TV(law of sigma_t, pi) with Monte Carlo radii along a t-grid, plus the
/// empirical tail P(T_full > t), for each swept initial state. For chains
/// beyond `projection_threshold` vertices the state is projected to its
/// sleeping-particle count; callers must acknowledge that with
/// `allow_projection`.
inline std::vector<MixingRow> mixing_profile(
    const BaseChain& chain, const SleepRates& rates, const DrivingSequence& driving,
    const std::vector<std::uint64_t>& t_grid, std::uint64_t samples, std::uint64_t seed,
    Sigma0Sweep sweep = Sigma0Sweep::Auto, bool allow_projection = false, unsigned workers = 1,
    std::uint32_t projection_threshold = 12) {
    if (t_grid.empty() || samples == 0)
        throw std::invalid_argument("mixing_profile: empty grid or zero samples");
    const std::uint32_t n = chain.num_vertices;
    const bool projected = n > projection_threshold;
    if (projected && !allow_projection)
        throw std::invalid_argument(
            "mixing_profile: chain too large for exact state laws; pass allow_projection");

    std::vector<Configuration> initials;
    std::vector<std::string> initial_names;
    bool sweep_all = sweep == Sigma0Sweep::All || (sweep == Sigma0Sweep::Auto && n <= 12);
    if (sweep_all && n > 20) throw std::invalid_argument("mixing_profile: sweep too large");
    if (sweep_all) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            initials.push_back(Configuration::from_mask(n, mask));
            initial_names.push_back(initials.back().to_string());
        }
    } else {
        initials.push_back(Configuration(n));
        initial_names.push_back("empty");
        initials.push_back(Configuration::all_sleeping(n));
        initial_names.push_back("all-sleeping");
        SplitMix rng(derive_seed(seed, kTagMisc));
        for (int k = 0; k < 3; ++k) {
            Configuration c(n);
            for (std::uint32_t v = 0; v < n; ++v)
                if (rng.next_u01() < 0.5) c.set_state(v, kSleeping);
            initials.push_back(c);
            initial_names.push_back("random" + std::to_string(k));
        }
    }

    const std::uint64_t t_max = *std::max_element(t_grid.begin(), t_grid.end());
    auto key_of = [&](const Configuration& cfg) -> std::uint64_t {
        return projected ? static_cast<std::uint64_t>(cfg.total_particles())
                         : cfg.sleeping_mask();
    };

    // Stationary reference sample.
    std::map<std::uint64_t, std::uint64_t> pi_counts;
    {
        std::vector<std::uint64_t> keys(samples);
        parallel_for_index(samples, workers, [&](std::uint64_t i) {
            keys[i] = key_of(exact_sample(chain, rates,
                                          derive_seed(seed, kTagStationary + 7919 * i)));
        });
        for (auto k : keys) ++pi_counts[k];
    }

    std::vector<MixingRow> rows;
    const std::uint64_t states = projected ? n + 1 : (std::uint64_t{1} << n);
    for (std::size_t s0 = 0; s0 < initials.size(); ++s0) {
        std::vector<std::map<std::uint64_t, std::uint64_t>> counts(t_grid.size());
        std::vector<std::uint64_t> not_full(t_grid.size(), 0);
        struct PerSample {
            std::vector<std::uint64_t> keys;
            std::vector<char> full;
        };
        std::vector<PerSample> per(samples);
        parallel_for_index(samples, workers, [&](std::uint64_t i) {
            std::uint64_t trial_seed = derive_seed(seed, kTagTrial + 7919 * (i + 1) + s0);
            auto drv = driving.reseeded(derive_seed(trial_seed, kTagDriving), chain);
            InstructionTape arw_tape(derive_seed(trial_seed, kTagInstructions), n);
            InstructionTape idla_tape(derive_seed(trial_seed, kTagInstructions), n);
            Configuration sigma = initials[s0];
            Configuration eta = initials[s0];
            std::optional<std::uint64_t> t_full;
            PerSample& slot = per[i];
            slot.keys.resize(t_grid.size());
            slot.full.resize(t_grid.size());
            std::size_t gi = 0;
            for (std::uint64_t t = 0; t <= t_max; ++t) {
                if (t > 0) {
                    VertexId u = drv.at(t, chain);
                    sigma.add_active(u);
                    auto res = stabilize(std::move(sigma), arw_tape, chain, rates);
                    sigma = std::move(res.config);
                    eta.add_active(u);
                    auto idla = stabilize_idla(std::move(eta), idla_tape, chain, rates);
                    eta = std::move(idla.config);
                    if (!t_full && eta.active_particles() == n) t_full = t;
                }
                while (gi < t_grid.size() && t_grid[gi] == t) {
                    slot.keys[gi] = key_of(sigma);
                    slot.full[gi] = t_full.has_value() && *t_full <= t;
                    ++gi;
                }
            }
        });
        for (const auto& slot : per)
            for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
                ++counts[gi][slot.keys[gi]];
                if (!slot.full[gi]) ++not_full[gi];
            }
        for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
            MixingRow row;
            row.sigma0 = initial_names[s0];
            row.t = t_grid[gi];
            row.samples = samples;
            row.projected = projected;
            row.tv = tv_from_counts(counts[gi], samples, pi_counts, samples);
            row.radius = tv_radius(counts[gi], samples, pi_counts, samples, states);
            row.p_tfull_gt = static_cast<double>(not_full[gi]) / samples;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Closed-form budgets

/// Coupon-collector driving budget ceil(N ln N + N ln(1/eps)), natural log.
inline std::uint64_t coupon_bound(std::uint64_t n_vertices, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("coupon_bound: epsilon must lie in (0,1)");
    if (n_vertices == 0) throw std::invalid_argument("coupon_bound: empty vertex set");
    double n = static_cast<double>(n_vertices);
    return static_cast<std::uint64_t>(std::ceil(n * std::log(n) + n * std::log(1.0 / epsilon)));
}

/// Torus mixing budget ceil(N + sqrt(d) N^{1 - 1/(3d)}) with N = n^d.
inline std::uint64_t torus_mixing_budget(int d, long n) {
    if (d < 1) throw std::invalid_argument("torus_mixing_budget: dimension must be positive");
    if (n < 2) throw std::invalid_argument("torus_mixing_budget: need n >= 2");
    double big_n = std::pow(static_cast<double>(n), d);
    double alpha = 1.0 - 1.0 / (3.0 * d);
    return static_cast<std::uint64_t>(
        std::ceil(big_n + std::sqrt(static_cast<double>(d)) * std::pow(big_n, alpha)));
}

// ---------------------------------------------------------------------------
// Divisible sandpile vs Green-function inequality

struct DivsandReport {
    SandpileReport sandpile;
    std::uint32_t n_vertices = 0;
    double alpha = 0.0;
    double threshold = 0.0;      // N + 0.5 N^alpha
    double max_kappa = 0.0;      // max_z sum_y G(y,z) / G(0,z)
    bool inequality_holds = false;
    double kappa0 = 0.0;         // sum_y G(y,0) / G(0,0) == E_0 tau_r / G(0,0)
    double kappa0_identity_err = 0.0;
};

inline DivsandReport divisible_sandpile_check(int d, double r, double mass, double alpha,
                                              double tol = 1e-12,
                                              std::uint64_t max_sweeps = 1'000'000) {
    BaseChain ball = build_ball(d, r);
    const double n = ball.num_vertices;
    if (mass <= 0.0) mass = n + std::pow(n, 1.0 - 1.0 / d);

    DivsandReport report;
    report.sandpile = relax_divisible_sandpile(d, r, mass, tol, max_sweeps);
    report.n_vertices = ball.num_vertices;
    report.alpha = alpha;
    report.threshold = n + 0.5 * std::pow(n, alpha);

    AbsorptionSystem sys(ball);
    Eigen::VectorXd exit_time = sys.solve(Eigen::VectorXd::Ones(sys.size()));
    Eigen::VectorXd g0 = sys.solve_unit(static_cast<int>(ball.origin));
    // By symmetry of G, G(0,z) = G(z,0) = g0(z); sum_y G(y,z) = E_z tau_r.
    double max_kappa = 0.0;
    for (int z = 0; z < sys.size(); ++z) max_kappa = std::max(max_kappa, exit_time(z) / g0(z));
    report.max_kappa = max_kappa;
    report.inequality_holds = max_kappa <= report.threshold;
    report.kappa0 = g0.sum() / g0(ball.origin);  // column-sum route
    report.kappa0_identity_err =
        std::abs(report.kappa0 - exit_time(ball.origin) / g0(ball.origin));
    return report;
}

// ---------------------------------------------------------------------------
// Exploratory probes (no pass/fail)

struct DensityRow {
    double r = 0.0;
    std::uint32_t n_vertices = 0;
    std::uint64_t trials = 0;
    double mean_density = 0.0;
    double stderr_ = 0.0;
};

/// Stationary density |S[1_{B_r}]| / #B_r over a radius ladder.
inline std::vector<DensityRow> density_probe(int d, const std::vector<double>& radii,
                                             double lambda, std::uint64_t trials,
                                             std::uint64_t seed, unsigned workers = 1) {
    std::vector<DensityRow> rows;
    for (double r : radii) {
        BaseChain ball = build_ball(d, r);
        SleepRates rates(ball.num_vertices, lambda);
        std::vector<double> densities(trials);
        parallel_for_index(trials, workers, [&](std::uint64_t i) {
            auto cfg = exact_sample(ball, rates, derive_seed(seed, kTagTrial + 977 * i));
            densities[i] =
                static_cast<double>(cfg.total_particles()) / ball.num_vertices;
        });
        auto ms = mean_stderr(densities);
        rows.push_back({r, ball.num_vertices, trials, ms.mean, ms.stderr_});
    }
    return rows;
}

struct HyperuniformityRow {
    long length = 0;
    std::uint64_t trials = 0;
    double variance = 0.0;
    BootstrapCi ci;
};

struct HyperuniformityResult {
    std::vector<HyperuniformityRow> rows;
    LineFit loglog_fit;  // slope of ln var against ln L
};

/// Variance of the stationary particle count on the path {0..L} over an L
/// ladder, with a fitted log-log slope.
inline HyperuniformityResult hyperuniformity_probe(const std::vector<long>& lengths,
                                                   double lambda, std::uint64_t trials,
                                                   std::uint64_t seed, unsigned workers = 1) {
    HyperuniformityResult result;
    std::vector<double> lx, ly;
    for (long length : lengths) {
        BaseChain path = build_path(length);
        SleepRates rates(path.num_vertices, lambda);
        std::vector<double> counts(trials);
        parallel_for_index(trials, workers, [&](std::uint64_t i) {
            auto cfg = exact_sample(path, rates, derive_seed(seed, kTagTrial + 977 * i));
            counts[i] = static_cast<double>(cfg.total_particles());
        });
        HyperuniformityRow row;
        row.length = length;
        row.trials = trials;
        row.variance = sample_variance(counts);
        row.ci = bootstrap_variance_ci(counts, derive_seed(seed, kTagMisc + length));
        result.rows.push_back(row);
        if (row.variance > 0.0) {
            lx.push_back(std::log(static_cast<double>(length)));
            ly.push_back(std::log(row.variance));
        }
    }
    result.loglog_fit = fit_line(lx, ly);
    return result;
}

// ---------------------------------------------------------------------------
// Random instances and the abelian trial harness

struct RandomInstance {
    BaseChain chain;
    SleepRates rates{0, 0.0};
    Configuration config;
};

struct RandomInstanceOptions {
    std::uint32_t max_vertices = 8;
    bool sleeping_only = false;      // configuration drawn from {0, s}^V
    bool force_mixed_rates = false;  // guarantee some lambda = 0 and some = inf
    bool recurrent_start = false;    // configuration drawn inside the class R
};

/// Small random chain + rates + configuration for property tests. The chain
/// is a path backbone with random extra edges and random extra sink links,
/// so the sink is always accessible; lambda is drawn per vertex from
/// {0, 0.3, 1, 3, inf}; the configuration carries at most 2 #V particles.
inline RandomInstance random_instance(std::uint64_t seed,
                                      const RandomInstanceOptions& opts = {}) {
    SplitMix rng(seed);
    std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.next_below(opts.max_vertices));
    if (opts.force_mixed_rates) n = std::max(n, 2u);

    BaseChain chain;
    chain.label = "random:n=" + std::to_string(n);
    chain.num_vertices = n;
    chain.transitions.resize(n);
    chain.den.resize(n);
    std::vector<std::vector<VertexId>> edges(n);
    for (VertexId v = 0; v < n; ++v) {
        if (v + 1 < n) { edges[v].push_back(v + 1); edges[v + 1].push_back(v); }
    }
    edges[n - 1].push_back(kSink);
    for (VertexId v = 0; v < n; ++v) {
        if (rng.next_u01() < 0.3) edges[v].push_back(static_cast<VertexId>(rng.next_below(n)));
        if (rng.next_u01() < 0.25) edges[v].push_back(kSink);
    }
    for (VertexId v = 0; v < n; ++v) {
        chain.den[v] = static_cast<std::uint32_t>(edges[v].size());
        for (VertexId w : edges[v]) detail::push_merged(chain.transitions[v], w, 1);
    }
    chain.validate();

    static constexpr double kRates[] = {0.0, 0.3, 1.0, 3.0,
                                        std::numeric_limits<double>::infinity()};
    std::vector<double> lambdas(n);
    for (auto& l : lambdas) l = kRates[rng.next_below(5)];
    if (opts.force_mixed_rates) {
        std::uint32_t zero_at = static_cast<std::uint32_t>(rng.next_below(n));
        std::uint32_t inf_at =
            (zero_at + 1 + static_cast<std::uint32_t>(rng.next_below(n - 1))) % n;
        lambdas[zero_at] = 0.0;
        lambdas[inf_at] = std::numeric_limits<double>::infinity();
    }
    SleepRates rates(lambdas);

    Configuration config(n);
    if (opts.recurrent_start) {
        for (VertexId v = 0; v < n; ++v) {
            if (rates.zero_at(v)) continue;
            if (rates.infinite_at(v) || rng.next_u01() < 0.5) config.set_state(v, kSleeping);
        }
    } else if (opts.sleeping_only) {
        for (VertexId v = 0; v < n; ++v)
            if (rng.next_u01() < 0.5) config.set_state(v, kSleeping);
    } else {
        std::int64_t budget = 2 * static_cast<std::int64_t>(n);
        for (VertexId v = 0; v < n && budget > 0; ++v) {
            site_state_t pick = kEmpty;
            switch (rng.next_below(5)) {
                case 0: break;
                case 1: pick = kSleeping; break;
                case 2: pick = 1; break;
                case 3: pick = 2; break;
                case 4: pick = 3; break;
            }
            std::int64_t cost = particle_count(pick);
            if (pick != kEmpty && cost <= budget) {
                config.set_state(v, pick);
                budget -= cost;
            }
        }
    }
    return {std::move(chain), std::move(rates), std::move(config)};
}

struct AbelianCheckResult {
    std::uint64_t trials = 0;
    std::uint64_t matches = 0;
    std::optional<std::uint64_t> first_failure_seed;
};

/// Random instances, two firing policies on the identical tape; counts
/// exact (configuration, odometer) matches.
inline AbelianCheckResult abelian_trials(std::uint64_t trials, std::uint64_t seed,
                                         std::uint32_t max_vertices = 8, unsigned workers = 1) {
    AbelianCheckResult result;
    result.trials = trials;
    std::vector<char> ok(trials, 0);
    static constexpr FiringPolicy kPolicies[] = {
        FiringPolicy::FifoQueue, FiringPolicy::LowestIndex, FiringPolicy::HighestIndex,
        FiringPolicy::TrackParticle};
    parallel_for_index(trials, workers, [&](std::uint64_t i) {
        std::uint64_t trial_seed = derive_seed(seed, kTagTrial + 31 * i);
        auto inst = random_instance(trial_seed, {.max_vertices = max_vertices});
        SplitMix rng(derive_seed(trial_seed, kTagMisc));
        FiringPolicy a = kPolicies[rng.next_below(4)];
        FiringPolicy b = kPolicies[(rng.next_below(3) + 1 + static_cast<int>(a)) % 4];
        ok[i] = verify_abelian(inst.chain, inst.rates, inst.config,
                               derive_seed(trial_seed, kTagInstructions), a, b);
    });
    for (std::uint64_t i = 0; i < trials; ++i) {
        if (ok[i]) ++result.matches;
        else if (!result.first_failure_seed)
            result.first_failure_seed = derive_seed(seed, kTagTrial + 31 * i);
    }
    return result;
}

}  // namespace arw
