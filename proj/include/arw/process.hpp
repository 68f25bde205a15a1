#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/chain.hpp"
#include "arw/configuration.hpp"
#include "arw/driving.hpp"
#include "arw/engine.hpp"
#include "arw/linalg.hpp"
#include "arw/parallel.hpp"
#include "arw/sleep_rates.hpp"
#include "arw/stats.hpp"
#include "arw/tape.hpp"

namespace arw {

/// One stationary sample: stabilize 1_V on a fresh tape.
inline Configuration exact_sample(const BaseChain& chain, const SleepRates& rates,
                                  std::uint64_t seed,
                                  FiringPolicy policy = FiringPolicy::FifoQueue) {
    InstructionTape tape(derive_seed(seed, kTagInstructions), chain.num_vertices);
    StabilizeOptions opt{.policy = policy};
    return stabilize(Configuration::all_active(chain.num_vertices), tape, chain, rates, opt)
        .config;
}

/// Planning estimate for the sampler: the sum over v of the expected time
/// for a P-walker from v to hit the sink.
inline double sampling_cost(const BaseChain& chain) {
    double sum = 0.0;
    for (double h : expected_absorption_times(chain)) sum += h;
    return sum;
}

/// True iff config lies in the recurrent class: empty wherever lambda = 0,
/// sleeping wherever lambda = inf. Input must be a sleeping configuration.
inline bool is_recurrent(const Configuration& config, const SleepRates& rates) {
    if (!config.is_sleeping())
        throw std::invalid_argument("is_recurrent: configuration has active particles");
    for (std::uint32_t v = 0; v < config.num_sites(); ++v) {
        if (rates.zero_at(v) && config.state(v) == kSleeping) return false;
        if (rates.infinite_at(v) && config.state(v) != kSleeping) return false;
    }
    return true;
}

enum class ResampleMode {
    SingleTape,  // one instruction collection for the whole run (primary)
    FreshTapes,  // new independent instructions at every step
};

struct RunOptions {
    std::uint64_t t_max = 0;
    bool record_steps = false;
    bool record_snapshots = false;  // store sigma_t strings per step
    bool check_coupling = false;    // verify sigma_t == S^{G_t}[eta_t] each step
    bool couple_idla = true;        // advance the coupled IDLA state
    bool stop_at_full = false;
    FiringPolicy policy = FiringPolicy::FifoQueue;
    ResampleMode resample = ResampleMode::SingleTape;
    std::uint64_t safety_cap = 10'000'000'000ull;
};

struct StepRecord {
    std::uint64_t t = 0;
    VertexId u = kSink;
    std::uint64_t arw_instructions = 0;   // odometer increment, summed over V
    std::uint64_t idla_instructions = 0;  // coupled IDLA increment
    std::uint64_t sigma_hash = 0;
    std::string snapshot;                 // sigma_t string when recorded
    std::int64_t eta_occupied = 0;        // active particles of the IDLA state
};

struct ProcessTrace {
    Configuration sigma;           // final ARW state
    Configuration eta;             // final coupled IDLA state
    Odometer arw_odometer;         // F_t, cumulative
    Odometer idla_odometer;        // G_t, cumulative
    std::optional<std::uint64_t> t_full;
    std::uint64_t steps_run = 0;
    std::uint64_t absorbed_arw = 0;
    std::uint64_t absorbed_idla = 0;
    std::vector<StepRecord> steps;
    std::uint64_t coupling_checks_passed = 0;
};

/// Advance the ARW process sigma_t = S[sigma_{t-1} + delta_{u_t}] on a
/// single tape, together with the coupled IDLA state eta_t on an identically
/// seeded tape, and detect T_full = first t with eta_t = 1_V.
inline ProcessTrace run_arw(const BaseChain& chain, const SleepRates& rates,
                            const DrivingSequence& driving, Configuration sigma0,
                            std::uint64_t seed, const RunOptions& opt) {
    const std::uint32_t n = chain.num_vertices;
    if (sigma0.num_sites() != n) throw std::invalid_argument("run_arw: sigma0 size mismatch");
    const std::uint64_t tape_seed = derive_seed(seed, kTagInstructions);

    ProcessTrace trace;
    trace.sigma = std::move(sigma0);
    trace.eta = trace.sigma;
    trace.arw_odometer = Odometer(n);
    trace.idla_odometer = Odometer(n);

    InstructionTape arw_tape(tape_seed, n);
    InstructionTape idla_tape(tape_seed, n);
    const bool couple = opt.couple_idla && opt.resample == ResampleMode::SingleTape;
    StabilizeOptions stab{.policy = opt.policy, .safety_cap = opt.safety_cap};

    for (std::uint64_t t = 1; t <= opt.t_max; ++t) {
        VertexId u = driving.at(t, chain);
        if (u >= n) throw std::invalid_argument("run_arw: driving vertex out of range");

        if (opt.resample == ResampleMode::FreshTapes)
            arw_tape = InstructionTape(derive_seed(tape_seed, t), n);

        trace.sigma.add_active(u);
        auto res = stabilize(std::move(trace.sigma), arw_tape, chain, rates, stab);
        trace.sigma = std::move(res.config);
        trace.arw_odometer += res.odometer;
        trace.absorbed_arw += res.absorbed;

        std::uint64_t idla_instr = 0;
        if (couple) {
            trace.eta.add_active(u);
            auto idla = stabilize_idla(std::move(trace.eta), idla_tape, chain, rates, stab);
            trace.eta = std::move(idla.config);
            trace.idla_odometer += idla.odometer;
            trace.absorbed_idla += idla.absorbed;
            idla_instr = idla.odometer.total();
            if (!trace.t_full && trace.eta.active_particles() == n) trace.t_full = t;

            if (opt.check_coupling) {
                // sigma_t must equal the resumed stabilization S^{G_t}[eta_t],
                // and the completion odometer must close the gap F_t - G_t.
                InstructionTape future = idla_tape.fork_at_consumed();
                auto resumed = stabilize(trace.eta, future, chain, rates, stab);
                Odometer total = trace.idla_odometer;
                total += resumed.odometer;
                if (!(resumed.config == trace.sigma) || !(total == trace.arw_odometer))
                    throw std::logic_error("run_arw: coupling identity violated at step " +
                                           std::to_string(t));
                ++trace.coupling_checks_passed;
            }
        }

        trace.steps_run = t;
        if (opt.record_steps) {
            StepRecord rec;
            rec.t = t;
            rec.u = u;
            rec.arw_instructions = res.odometer.total();
            rec.idla_instructions = idla_instr;
            rec.sigma_hash = trace.sigma.hash();
            if (opt.record_snapshots) rec.snapshot = trace.sigma.to_string();
            rec.eta_occupied = trace.eta.active_particles();
            trace.steps.push_back(std::move(rec));
        }
        if (opt.stop_at_full && trace.t_full) break;
    }
    return trace;
}

struct IdlaOptions {
    std::uint64_t t_max = 0;
    bool stop_at_full = true;
    bool record_steps = false;
    std::vector<VertexId> watch_set;  // optional subset whose fill time is tracked
    std::uint64_t safety_cap = 10'000'000'000ull;
};

struct IdlaRun {
    std::optional<std::uint64_t> t_full;        // first t with every site occupied
    std::optional<std::uint64_t> t_watch_full;  // first t with watch_set covered
    std::uint64_t steps_run = 0;
    std::uint64_t total_instructions = 0;
    std::uint64_t absorbed = 0;
    std::vector<char> occupied;
    std::vector<StepRecord> steps;
};

/// Pure IDLA process from the empty configuration: each driving particle
/// walks by P until it finds an unoccupied site or the sink. Instructions
/// are decoded with zero sleep rate, so every instruction is a step; this
/// matches IDLA stabilization, which never lets a particle rest at an
/// occupied site.
inline IdlaRun run_idla(const BaseChain& chain, const DrivingSequence& driving,
                        std::uint64_t seed, const IdlaOptions& opt) {
    const std::uint32_t n = chain.num_vertices;
    InstructionTape tape(derive_seed(seed, kTagInstructions), n);

    IdlaRun run;
    run.occupied.assign(n, 0);
    std::uint32_t occupied_count = 0;

    std::vector<char> in_watch(n, 0);
    for (VertexId v : opt.watch_set) {
        if (v >= n) throw std::invalid_argument("run_idla: watch vertex out of range");
        in_watch[v] = 1;
    }
    std::uint32_t watch_left = static_cast<std::uint32_t>(opt.watch_set.size());

    for (std::uint64_t t = 1; t <= opt.t_max; ++t) {
        VertexId cur = driving.at(t, chain);
        if (cur >= n) throw std::invalid_argument("run_idla: driving vertex out of range");
        std::uint64_t walked = 0;
        bool settled = false;
        while (true) {
            if (!run.occupied[cur]) {
                run.occupied[cur] = 1;
                ++occupied_count;
                if (in_watch[cur]) --watch_left;
                settled = true;
                break;
            }
            std::uint64_t idx = tape.consume(cur);
            ++run.total_instructions;
            ++walked;
            if (run.total_instructions > opt.safety_cap)
                throw StabilizationCapExceeded(opt.safety_cap);
            VertexId next = chain.sample_target(cur, tape.step_word(cur, idx));
            if (next == kSink) {
                ++run.absorbed;
                break;
            }
            cur = next;
        }
        run.steps_run = t;
        if (opt.record_steps) {
            StepRecord rec;
            rec.t = t;
            rec.u = driving.at(t, chain);
            rec.idla_instructions = walked;
            rec.eta_occupied = occupied_count;
            rec.snapshot = settled ? "settled" : "exited";
            run.steps.push_back(std::move(rec));
        }
        if (!run.t_watch_full && !opt.watch_set.empty() && watch_left == 0) run.t_watch_full = t;
        if (!run.t_full && occupied_count == n) run.t_full = t;
        if (opt.stop_at_full) {
            bool done = opt.watch_set.empty() ? run.t_full.has_value()
                                              : run.t_watch_full.has_value();
            if (done) break;
        }
    }
    return run;
}

struct SstReport {
    std::uint64_t t = 0;
    std::uint64_t samples = 0;
    std::uint64_t conditioned = 0;  // traces with T_full <= t (kept by rejection)
    double tv = 0.0;
    double radius = 0.0;
    bool inconclusive = false;
    std::map<std::uint64_t, std::uint64_t> conditional_counts;
    std::map<std::uint64_t, std::uint64_t> stationary_counts;
};

/// Rejection estimate of || law(sigma_t | T_full <= t) - pi ||_TV on a small
/// chain: the conditional side from coupled traces, pi from exact_sample.
/// An empty sigma0 optional draws an independent stationary start for every
/// trace (so at t = 0 both sides are pi).
inline SstReport strong_stationarity_check(const BaseChain& chain, const SleepRates& rates,
                                           const DrivingSequence& driving, std::uint64_t t,
                                           std::uint64_t samples, std::uint64_t seed,
                                           const std::optional<Configuration>& sigma0,
                                           unsigned workers = 1,
                                           std::uint64_t min_conditioned = 100) {
    if (chain.num_vertices > 20)
        throw std::invalid_argument("strong_stationarity_check: chain too large for state laws");

    struct Slot {
        bool kept = false;
        std::uint64_t mask = 0;
        std::uint64_t pi_mask = 0;
    };
    std::vector<Slot> slots(samples);
    parallel_for_index(samples, workers, [&](std::uint64_t i) {
        std::uint64_t trial_seed = derive_seed(seed, kTagTrial + 31 * i);
        Configuration start =
            sigma0 ? *sigma0
                   : exact_sample(chain, rates, derive_seed(trial_seed, kTagMisc));
        RunOptions opt{.t_max = t};
        auto trace = run_arw(chain, rates, driving.reseeded(derive_seed(trial_seed, kTagDriving), chain),
                             start, trial_seed, opt);
        if (t == 0) {
            slots[i].kept = true;
            slots[i].mask = start.sleeping_mask();
        } else if (trace.t_full && *trace.t_full <= t) {
            slots[i].kept = true;
            slots[i].mask = trace.sigma.sleeping_mask();
        }
        slots[i].pi_mask =
            exact_sample(chain, rates, derive_seed(trial_seed, kTagStationary)).sleeping_mask();
    });

    SstReport report;
    report.t = t;
    report.samples = samples;
    for (const auto& s : slots) {
        if (s.kept) {
            ++report.conditioned;
            ++report.conditional_counts[s.mask];
        }
        ++report.stationary_counts[s.pi_mask];
    }
    if (report.conditioned < min_conditioned) {
        report.inconclusive = true;
        return report;
    }
    std::uint64_t states = std::uint64_t{1} << chain.num_vertices;
    report.tv = tv_from_counts(report.conditional_counts, report.conditioned,
                               report.stationary_counts, samples);
    report.radius =
        tv_radius(report.conditional_counts, report.conditioned, report.stationary_counts,
                  samples, states);
    return report;
}

}  // namespace arw
