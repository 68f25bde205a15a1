// Acceptance suite: every release-gating property as one pass/fail line.
// Run with no arguments for the full ladder, or pass criterion numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "arw/chain.hpp"
#include "arw/driving.hpp"
#include "arw/engine.hpp"
#include "arw/exact_law.hpp"
#include "arw/experiments.hpp"
#include "arw/harmonic.hpp"
#include "arw/process.hpp"
#include "arw/stats.hpp"

using namespace arw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using CriterionFn = std::function<Outcome()>;

std::map<std::uint64_t, std::uint64_t> sigma_t_law(const BaseChain& chain,
                                                   const SleepRates& rates,
                                                   const DrivingSequence& driving,
                                                   std::uint64_t mask, std::uint64_t t,
                                                   std::uint64_t samples, std::uint64_t seed) {
    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::uint64_t i = 0; i < samples; ++i) {
        RunOptions opt{.t_max = t, .couple_idla = false};
        auto trace = run_arw(chain, rates, driving,
                             Configuration::from_mask(chain.num_vertices, mask),
                             derive_seed(seed, i), opt);
        ++counts[trace.sigma.sleeping_mask()];
    }
    return counts;
}

std::map<std::uint64_t, std::uint64_t> pi_law(const BaseChain& chain, const SleepRates& rates,
                                              std::uint64_t samples, std::uint64_t seed) {
    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::uint64_t i = 0; i < samples; ++i)
        ++counts[exact_sample(chain, rates, derive_seed(seed, i)).sleeping_mask()];
    return counts;
}

// --------------------------------------------------------------------------

Outcome c01_abelian() {
    auto res = abelian_trials(1000, 20240101, 8);
    std::ostringstream d;
    d << res.matches << "/" << res.trials << " exact (config, odometer) matches";
    return {res.matches == res.trials, d.str()};
}

Outcome c02_odometer_monotonicity() {
    std::uint64_t ok = 0;
    const std::uint64_t trials = 500;
    for (std::uint64_t i = 0; i < trials; ++i) {
        auto inst = random_instance(derive_seed(202, i));
        std::uint64_t seed = derive_seed(203, i);
        InstructionTape full_tape(seed, inst.chain.num_vertices);
        auto full = stabilize(inst.config, full_tape, inst.chain, inst.rates);
        SplitMix rng(derive_seed(204, i));
        StabilizeOptions opt;
        opt.budget = full.firings == 0 ? 0 : rng.next_below(full.firings + 1);
        InstructionTape part_tape(seed, inst.chain.num_vertices);
        auto part = stabilize(inst.config, part_tape, inst.chain, inst.rates, opt);
        ok += part.odometer.pointwise_leq(full.odometer);
    }
    std::ostringstream d;
    d << ok << "/" << trials << " truncated odometers pointwise below the complete one";
    return {ok == trials, d.str()};
}

Outcome c03_coupling() {
    std::uint64_t ok = 0;
    const std::uint64_t trials = 200;
    for (std::uint64_t i = 0; i < trials; ++i) {
        auto inst = random_instance(derive_seed(301, i), {.sleeping_only = true});
        auto driving = DrivingSequence::uniform(derive_seed(302, i));
        RunOptions opt{.t_max = 30, .check_coupling = true};
        try {
            auto trace = run_arw(inst.chain, inst.rates, driving, inst.config,
                                 derive_seed(303, i), opt);
            ok += trace.coupling_checks_passed == 30;
        } catch (const std::logic_error&) {
        }
    }
    std::ostringstream d;
    d << ok << "/" << trials << " traces with sigma_t == S^{G_t}[eta_t] at every step";
    return {ok == trials, d.str()};
}

Outcome c04_exact_sampler_stationarity() {
    auto chain = build_interval(2);
    SleepRates rates(chain.num_vertices, 1.0);
    auto driving = DrivingSequence::central(chain.origin);
    const std::uint64_t samples = 100000;
    auto pi = pi_law(chain, rates, samples, 404404);
    double worst = 0;
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        auto law = sigma_t_law(chain, rates, driving, mask, 5, samples, 404 + mask);
        worst = std::max(worst, tv_from_counts(law, samples, pi, samples));
    }
    std::ostringstream d;
    d << "max TV over 8 initial states " << worst << " (tolerance 0.02)";
    return {worst <= 0.02, d.str()};
}

Outcome c05_permutation_stationarity() {
    auto chain = build_interval(2);
    SleepRates rates(chain.num_vertices, 1.0);
    auto driving = DrivingSequence::permutation(std::vector<VertexId>{1, 0, 2});
    const std::uint64_t samples = 100000;
    auto pi = pi_law(chain, rates, samples, 505505);
    double worst = 0;
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        auto law = sigma_t_law(chain, rates, driving, mask, chain.num_vertices, samples,
                               505 + mask);
        worst = std::max(worst, tv_from_counts(law, samples, pi, samples));
    }
    std::ostringstream d;
    d << "max TV at t = #V over 8 initial states " << worst << " (tolerance 0.02)";
    return {worst <= 0.02, d.str()};
}

Outcome c06_strong_stationary_time() {
    auto chain = build_interval(2);
    SleepRates rates(chain.num_vertices, 1.0);
    auto rep = strong_stationarity_check(chain, rates, DrivingSequence::central(chain.origin),
                                         8, 100000, 606606, Configuration(3));
    std::ostringstream d;
    d << "TV(sigma_8 | T_full <= 8, pi) = " << rep.tv << " with "
      << rep.conditioned << "/" << rep.samples << " conditioned traces (tolerance 0.02)";
    return {!rep.inconclusive && rep.tv <= 0.02, d.str()};
}

Outcome c07_mixing_bound() {
    auto chain = build_interval(2);
    SleepRates rates(chain.num_vertices, 1.0);
    std::vector<std::uint64_t> grid(21);
    for (std::uint64_t t = 0; t <= 20; ++t) grid[t] = t;
    auto rows = mixing_profile(chain, rates, DrivingSequence::central(chain.origin), grid,
                               100000, 707707, Sigma0Sweep::All);
    double worst_gap = -1;
    bool ok = true;
    for (const auto& row : rows) {
        double gap = row.tv - row.p_tfull_gt;
        worst_gap = std::max(worst_gap, gap);
        ok = ok && gap <= 0.03;
    }
    std::ostringstream d;
    d << "max (TV - P(T_full > t)) over 8 states x 21 times = " << worst_gap
      << " (tolerance 0.03)";
    return {ok, d.str()};
}

Outcome c08_fill_tail_d1() {
    auto chain = build_interval(200);
    auto est = fill_tail(chain, DrivingSequence::central(chain.origin), 0.75, 1.0, 2000,
                         808808);
    double bound = std::exp(-std::pow(200.0, 0.25) / 41.0) + 0.01;
    std::ostringstream d;
    d << "exceed " << est.exceed << "/" << est.trials << ", upper CI " << est.ci99.hi
      << " <= " << bound << ", point " << est.p_hat << " <= 0.10";
    return {est.ci99.hi <= bound && est.p_hat <= 0.10, d.str()};
}

Outcome c09_fill_tail_d2() {
    auto chain = build_ball(2, 30);
    auto est = fill_tail(chain, DrivingSequence::uniform(909), 5.0 / 6.0, 1.0, 500, 909909);
    double bound = std::exp(-std::pow(30.0, 0.25) / 5.0) + 0.05;
    std::ostringstream d;
    d << "exceed " << est.exceed << "/" << est.trials << ", point " << est.p_hat
      << " <= 0.10, upper CI " << est.ci99.hi << " <= " << bound;
    return {est.p_hat <= 0.10 && est.ci99.hi <= bound, d.str()};
}

Outcome c10_median_fill_ratio() {
    bool ok = true;
    std::ostringstream d;
    for (double r : {15.0, 30.0}) {
        auto chain = build_ball(2, r);
        const double n = chain.num_vertices;
        // Generous threshold so that every trial records its fill time.
        auto est = fill_tail(chain, DrivingSequence::uniform(1010), 5.0 / 6.0, 4.0, 201,
                             static_cast<std::uint64_t>(1010 + r));
        std::vector<std::uint64_t> times;
        for (auto t : est.fill_times)
            if (t > 0) times.push_back(t);
        std::sort(times.begin(), times.end());
        if (times.size() < est.trials) ok = false;
        double median = static_cast<double>(quantile_sorted(times, 0.5)) / n;
        double hi = 1.0 + 2.0 * std::pow(n, -1.0 / 6.0);
        d << "r=" << r << ": median T_full/N = " << median << " in [1, " << hi << "]  ";
        ok = ok && median >= 1.0 && median <= hi;
    }
    return {ok, d.str()};
}

Outcome c11_harmonic_identities() {
    auto chain = build_ball(2, 20);
    auto table = harmonic_table(chain);
    const int n = static_cast<int>(table.n);
    double sym = 0, identity = 0, exitsum = 0;
    for (int y = 0; y < n; ++y) {
        double colsum = 0;
        for (int z = 0; z < n; ++z) {
            sym = std::max(sym, std::abs(table.green(y, z) - table.green(z, y)));
            identity = std::max(identity, std::abs(table.green(z, z) * table.hit(y, z) -
                                                   table.green(y, z)));
            colsum += table.green(z, y);
        }
        exitsum = std::max(exitsum, std::abs(colsum - table.exit_time(y)));
    }
    bool ok = sym <= 1e-9 && identity <= 1e-9 && exitsum <= 1e-9;

    // Monte Carlo spot checks at five pairs.
    SplitMix rng(111111);
    double worst_sigma = 0;
    const std::uint64_t walks = 100000;
    for (int pair = 0; pair < 5; ++pair) {
        auto y = static_cast<VertexId>(rng.next_below(table.n));
        auto z = static_cast<VertexId>(rng.next_below(table.n));
        double p = table.hit(y, z);
        double p_hat = mc_hit_probability(chain, y, z, walks, derive_seed(1111, pair));
        double se = std::sqrt(std::max(p * (1 - p), 1e-12 / 1.0) / walks);
        worst_sigma = std::max(worst_sigma, std::abs(p_hat - p) / se);
    }
    ok = ok && worst_sigma <= 4.0;
    std::ostringstream d;
    d << "max errs: sym " << sym << ", identity " << identity << ", exit-sum " << exitsum
      << " (<= 1e-9); MC worst deviation " << worst_sigma << " sigma (<= 4)";
    return {ok, d.str()};
}

Outcome c12_exit_sum() {
    auto r10 = exit_sum_row(build_ball(2, 10), 10.0);
    auto r20 = exit_sum_row(build_ball(2, 20), 20.0);
    auto r40 = exit_sum_row(build_ball(2, 40), 40.0);
    bool ok = r40.min_ratio >= 0.5 * r10.min_ratio &&
              r40.max_green_over_logr <= 1.5 * r10.max_green_over_logr;
    std::ostringstream d;
    d << "min-ratio ladder " << r10.min_ratio << " / " << r20.min_ratio << " / "
      << r40.min_ratio << "; max G(z,z)/ln r ladder " << r10.max_green_over_logr << " / "
      << r20.max_green_over_logr << " / " << r40.max_green_over_logr;
    return {ok, d.str()};
}

Outcome c13_wired_tree() {
    auto res = wired_tree_fill(10, DrivingSequence::central(0), 200, 1313);
    double q05 = res.ratio_quantiles[0];
    std::ostringstream d;
    d << "5th percentile of T'_full / (#V ln #V) = " << q05 << " (>= 0.15), timeouts "
      << res.timeouts;
    return {res.timeouts == 0 && q05 >= 0.15, d.str()};
}

Outcome c14_recurrent_closure() {
    std::uint64_t ok = 0;
    const std::uint64_t trials = 200;
    for (std::uint64_t i = 0; i < trials; ++i) {
        auto inst = random_instance(derive_seed(1414, i),
                                    {.force_mixed_rates = true, .recurrent_start = true});
        auto driving = DrivingSequence::uniform(derive_seed(1415, i));
        RunOptions opt{.t_max = 50, .record_steps = true, .record_snapshots = true,
                       .couple_idla = false};
        auto trace = run_arw(inst.chain, inst.rates, driving, inst.config,
                             derive_seed(1416, i), opt);
        bool closed = is_recurrent(inst.config, inst.rates);
        for (const auto& rec : trace.steps)
            closed = closed && is_recurrent(Configuration::from_string(rec.snapshot),
                                            inst.rates);
        ok += closed;
    }
    std::ostringstream d;
    d << ok << "/" << trials << " trajectories stayed inside the recurrent class";
    return {ok == trials, d.str()};
}

Outcome c15_commuting_operators() {
    auto chain = build_interval(2);
    SleepRates rates(chain.num_vertices, 1.0);
    std::vector<Eigen::MatrixXd> ops;
    for (VertexId v = 0; v < chain.num_vertices; ++v)
        ops.push_back(add_operator(chain, rates, v));
    double worst = 0;
    for (std::size_t i = 0; i < ops.size(); ++i)
        for (std::size_t j = i + 1; j < ops.size(); ++j)
            worst = std::max(worst,
                             ((ops[i] * ops[j]) - (ops[j] * ops[i])).cwiseAbs().maxCoeff());
    std::ostringstream d;
    d << "max commutator entry over all pairs = " << worst << " (<= 1e-12)";
    return {worst <= 1e-12, d.str()};
}

#ifndef ARW_CLI_PATH
#define ARW_CLI_PATH "arw"
#endif

std::string only_csv(const fs::path& dir) {
    std::string found;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".csv") {
            if (!found.empty()) throw std::runtime_error("multiple CSVs in " + dir.string());
            found = entry.path().string();
        }
    if (found.empty()) throw std::runtime_error("no CSV in " + dir.string());
    return found;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome c16_reproducibility() {
    fs::path base = fs::temp_directory_path() / "arw_acceptance_repro";
    fs::remove_all(base);
    fs::create_directories(base);
    auto run = [&](const std::string& args, const std::string& dir) {
        std::string cmd = std::string(ARW_CLI_PATH) + " " + args + " --out " +
                          (base / dir).string() + " > /dev/null";
        if (std::system(cmd.c_str()) != 0)
            throw std::runtime_error("CLI run failed: " + cmd);
        return slurp(only_csv(base / dir));
    };
    bool ok = true;
    std::ostringstream d;

    std::string s1 = run("sample --chain interval:r=3 --lambda 1 --samples 5000 --seed 99 "
                         "--workers 1", "s1");
    std::string s2 = run("sample --chain interval:r=3 --lambda 1 --samples 5000 --seed 99 "
                         "--workers 1", "s2");
    std::string s3 = run("sample --chain interval:r=3 --lambda 1 --samples 5000 --seed 99 "
                         "--workers 8", "s3");
    ok = ok && s1 == s2 && s1 == s3 && !s1.empty();
    d << "sample rerun identical: " << (s1 == s2) << ", workers 1 vs 8 identical: "
      << (s1 == s3);

    std::string f1 = run("fill-tail --chain ball:d=2,r=8 --driving uniform --alpha 0.8 "
                         "--trials 200 --seed 5 --workers 1", "f1");
    std::string f2 = run("fill-tail --chain ball:d=2,r=8 --driving uniform --alpha 0.8 "
                         "--trials 200 --seed 5 --workers 8", "f2");
    ok = ok && f1 == f2 && !f1.empty();
    d << "; fill-tail workers 1 vs 8 identical: " << (f1 == f2);

    // Every output file must sit next to its manifest.
    for (const auto& dir : {"s1", "f1"}) {
        for (const auto& entry : fs::directory_iterator(base / dir)) {
            auto name = entry.path().filename().string();
            if (name.ends_with(".manifest.json") || name.ends_with(".meta.json")) continue;
            auto stem = name.substr(0, name.find_last_of('.'));
            ok = ok && fs::exists(base / dir / (stem + ".manifest.json"));
        }
    }
    fs::remove_all(base);
    return {ok, d.str()};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0 = no stated budget
    CriterionFn fn;
};

const Criterion kCriteria[] = {
    {1, "abelian property (exact)", 10, c01_abelian},
    {2, "odometer monotonicity", 0, c02_odometer_monotonicity},
    {3, "coupling identity", 30, c03_coupling},
    {4, "exact-sampler stationarity", 120, c04_exact_sampler_stationarity},
    {5, "permutation-driving stationarity", 0, c05_permutation_stationarity},
    {6, "strong stationary time", 0, c06_strong_stationary_time},
    {7, "mixing bound tv <= fill tail", 0, c07_mixing_bound},
    {8, "fill-time tail d=1", 300, c08_fill_tail_d1},
    {9, "fill-time tail d=2", 600, c09_fill_tail_d2},
    {10, "median fill ratio", 0, c10_median_fill_ratio},
    {11, "harmonic oracle identities", 60, c11_harmonic_identities},
    {12, "exit-sum boundedness", 0, c12_exit_sum},
    {13, "wired-tree lower bound", 300, c13_wired_tree},
    {14, "recurrent-class closure", 0, c14_recurrent_closure},
    {15, "commuting operators", 0, c15_commuting_operators},
    {16, "reproducibility", 0, c16_reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& criterion : kCriteria) {
        if (!wanted.empty() &&
            std::find(wanted.begin(), wanted.end(), criterion.id) == wanted.end())
            continue;
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_budget = criterion.budget_seconds == 0 || elapsed <= criterion.budget_seconds;
        bool pass = outcome.pass && in_budget;
        std::printf("[%s] C%02d %s: %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", criterion.id,
                    criterion.name, outcome.detail.c_str(), elapsed,
                    in_budget ? "" : ", over budget");
        std::fflush(stdout);
        failures += !pass;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
