// Batch front-end: every sampler and experiment as a seeded subcommand with
// machine-readable output (CSV + JSON sidecar + run manifest).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "arw/chain.hpp"
#include "arw/driving.hpp"
#include "arw/engine.hpp"
#include "arw/exact_law.hpp"
#include "arw/experiments.hpp"
#include "arw/harmonic.hpp"
#include "arw/io.hpp"
#include "arw/process.hpp"
#include "arw/sandpile.hpp"
#include "arw/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

arw::BaseChain parse_chain_spec(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::map<std::string, std::string> kv;
    if (colon != std::string::npos) {
        std::stringstream rest(spec.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) kv[""] = item;
            else kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end())
            throw std::invalid_argument("chain spec '" + spec + "' is missing " + key);
        return it->second;
    };
    if (kind == "ball") return arw::build_ball(std::stoi(need("d")), std::stod(need("r")));
    if (kind == "torus") return arw::build_torus(std::stoi(need("d")), std::stol(need("n")));
    if (kind == "interval") return arw::build_interval(std::stol(need("r")));
    if (kind == "tree") return arw::build_wired_tree(std::stoi(need("n")));
    if (kind == "path") return arw::build_path(std::stol(need("L")));
    if (kind == "file") {
        std::ifstream in(spec.substr(colon + 1));
        if (!in) throw std::invalid_argument("cannot open chain file " + spec.substr(colon + 1));
        json j;
        in >> j;
        return arw::chain_from_json(j);
    }
    throw std::invalid_argument("unknown chain kind '" + kind + "'");
}

arw::SleepRates parse_lambda(const std::string& spec, const arw::BaseChain& chain) {
    if (spec.rfind("file:", 0) == 0) {
        std::ifstream in(spec.substr(5));
        if (!in) throw std::invalid_argument("cannot open lambda file " + spec.substr(5));
        std::vector<double> lambdas;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            lambdas.push_back(line == "inf" ? std::numeric_limits<double>::infinity()
                                            : std::stod(line));
        }
        if (lambdas.size() != chain.num_vertices)
            throw std::invalid_argument("lambda file has wrong number of entries");
        return arw::SleepRates(std::move(lambdas));
    }
    double l = spec == "inf" ? std::numeric_limits<double>::infinity() : std::stod(spec);
    return arw::SleepRates(chain.num_vertices, l);
}

arw::DrivingSequence parse_driving(const std::string& spec, const arw::BaseChain& chain,
                                   std::uint64_t seed) {
    if (spec == "central") return arw::DrivingSequence::central(chain.origin);
    if (spec.rfind("central:", 0) == 0) {
        auto v = static_cast<arw::VertexId>(std::stoul(spec.substr(8)));
        if (v >= chain.num_vertices) throw std::invalid_argument("central vertex out of range");
        return arw::DrivingSequence::central(v);
    }
    if (spec == "uniform") return arw::DrivingSequence::uniform(seed);
    if (spec == "permutation") return arw::DrivingSequence::permutation(seed, chain);
    if (spec.rfind("file:", 0) == 0) {
        std::ifstream in(spec.substr(5));
        if (!in) throw std::invalid_argument("cannot open driving file " + spec.substr(5));
        std::vector<arw::VertexId> list;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) list.push_back(static_cast<arw::VertexId>(std::stoul(line)));
        for (auto v : list)
            if (v >= chain.num_vertices)
                throw std::invalid_argument("driving file vertex out of range");
        return arw::DrivingSequence::custom(std::move(list));
    }
    throw std::invalid_argument("unknown driving spec '" + spec + "'");
}

arw::Configuration parse_sigma0(const std::string& spec, const arw::BaseChain& chain,
                                const arw::SleepRates& rates, std::uint64_t seed) {
    if (spec == "empty") return arw::Configuration(chain.num_vertices);
    if (spec == "all-sleeping") return arw::Configuration::all_sleeping(chain.num_vertices);
    if (spec == "sample") return arw::exact_sample(chain, rates, seed);
    auto cfg = arw::Configuration::from_string(spec);
    if (cfg.num_sites() != chain.num_vertices)
        throw std::invalid_argument("sigma0 string has wrong length");
    return cfg;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::invalid_argument("empty numeric list");
    return out;
}

std::vector<long> parse_long_list(const std::string& csv) {
    std::vector<long> out;
    for (double v : parse_double_list(csv)) out.push_back(static_cast<long>(v));
    return out;
}

// Output bundle: CSV + deterministic sidecar + manifest with timestamps.
// The config is stored nested under the subcommand name, in the exact shape
// `--config` accepts, so any sidecar replays its run.
class RunOutput {
  public:
    RunOutput(std::string subcommand, fs::path dir, json flat_config, std::uint64_t seed)
        : subcommand_(std::move(subcommand)),
          dir_(std::move(dir)),
          seed_(seed),
          started_(std::chrono::system_clock::now()) {
        config_[subcommand_] = std::move(flat_config);
        fs::create_directories(dir_);
        base_ = subcommand_ + "_" + arw::config_hash(config_);
    }

    fs::path path(const std::string& suffix) const { return dir_ / (base_ + suffix); }

    arw::CsvWriter csv(const std::string& suffix = ".csv") {
        outputs_.push_back((base_ + suffix));
        return arw::CsvWriter(path(suffix));
    }

    std::ofstream jsonl(const std::string& suffix = ".jsonl") {
        outputs_.push_back((base_ + suffix));
        std::ofstream out(path(suffix), std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path(suffix).string());
        return out;
    }

    void finish(json extra_meta = json::object()) {
        json meta;
        meta["subcommand"] = subcommand_;
        meta["config"] = config_;
        meta["seed"] = seed_;
        meta["version"] = arw::kVersion;
        meta["results"] = std::move(extra_meta);
        arw::write_json_file(path(".meta.json"), meta);
        outputs_.push_back(base_ + ".meta.json");

        json manifest;
        manifest["subcommand"] = subcommand_;
        manifest["config"] = config_;
        manifest["master_seed"] = seed_;
        manifest["code_version"] = arw::kVersion;
        manifest["started_at"] = arw::iso8601_utc(started_);
        manifest["finished_at"] = arw::iso8601_utc(std::chrono::system_clock::now());
        manifest["outputs"] = outputs_;
        arw::write_json_file(path(".manifest.json"), manifest);
        std::cout << "wrote " << path(".csv").string() << "\n";
    }

  private:
    std::string subcommand_;
    fs::path dir_;
    std::string base_;
    json config_;
    std::uint64_t seed_;
    std::chrono::system_clock::time_point started_;
    std::vector<std::string> outputs_;
};

struct CommonOpts {
    std::string out_dir = "arw-out";
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

// Declarative JSON run configs: {"<subcommand>": {"flag-name": value, ...}}.
// Every sidecar's "config" object is directly reusable via --config.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j = json::parse(input);
        std::vector<CLI::ConfigItem> items;
        walk(j, {}, items);
        return items;
    }

  private:
    static void walk(const json& node, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : node.items()) {
            if (value.is_object()) {
                auto deeper = parents;
                deeper.push_back(key);
                walk(value, deeper, items);
            } else {
                CLI::ConfigItem item;
                item.parents = parents;
                item.name = key;
                if (value.is_string()) item.inputs = {value.get<std::string>()};
                else item.inputs = {value.dump()};
                items.push_back(std::move(item));
            }
        }
    }
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--seed", opts.seed, "master seed (mandatory; no wall-clock default)")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--workers", opts.workers, "worker threads (affects wall time only)")
        ->capture_default_str();
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Activated random walk / IDLA simulation toolkit"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "declarative JSON run config");
    int exit_code = 0;

    // ---------------------------------------------------------------- sample
    struct SampleOpts : CommonOpts {
        std::string chain, lambda = "1", policy = "fifo";
        std::uint64_t samples = 1000;
    };
    auto sample_opts = std::make_shared<SampleOpts>();
    {
        auto* sub = app.add_subcommand("sample",
                                       "Stationary samples S[1_V]; tabulates state frequencies");
        sub->add_option("--chain", sample_opts->chain, "chain spec kind:key=val,...")->required();
        sub->add_option("--lambda", sample_opts->lambda, "sleep rate (number, 'inf', file:PATH)")
            ->capture_default_str();
        sub->add_option("--samples", sample_opts->samples, "number of samples")
            ->capture_default_str();
        add_common(sub, *sample_opts);
        sub->callback([&, sample_opts] {
            auto& o = *sample_opts;
            auto chain = parse_chain_spec(o.chain);
            auto rates = parse_lambda(o.lambda, chain);
            json config = {{"chain", o.chain}, {"lambda", o.lambda}, {"samples", o.samples},
                           {"seed", o.seed}};
            RunOutput out("sample", o.out_dir, config, o.seed);

            std::vector<std::string> states(o.samples);
            arw::parallel_for_index(o.samples, o.workers, [&](std::uint64_t i) {
                states[i] =
                    arw::exact_sample(chain, rates, arw::derive_seed(o.seed, arw::kTagTrial + i))
                        .to_string();
            });
            std::map<std::string, std::uint64_t> counts;
            for (auto& s : states) ++counts[s];

            auto csv = out.csv();
            csv.row({"state", "count", "frequency"});
            for (const auto& [state, count] : counts)
                csv.row({state, arw::format_u64(count),
                         arw::format_double(static_cast<double>(count) / o.samples)});
            out.finish({{"distinct_states", counts.size()}});
        });
    }

    // ---------------------------------------------------------------- run-arw
    struct RunArwOpts : CommonOpts {
        std::string chain, lambda = "1", driving = "central", sigma0 = "empty";
        std::uint64_t t = 10;
        bool snapshots = false;
        bool check_coupling = false;
        bool fresh_tapes = false;
    };
    auto runarw_opts = std::make_shared<RunArwOpts>();
    {
        auto* sub = app.add_subcommand("run-arw", "Drive the ARW process and export its trace");
        sub->add_option("--chain", runarw_opts->chain)->required();
        sub->add_option("--lambda", runarw_opts->lambda)->capture_default_str();
        sub->add_option("--driving", runarw_opts->driving,
                        "central[:v] | uniform | permutation | file:PATH")
            ->capture_default_str();
        sub->add_option("--sigma0", runarw_opts->sigma0,
                        "empty | all-sleeping | sample | state string")
            ->capture_default_str();
        sub->add_option("--t", runarw_opts->t, "number of driving steps")->capture_default_str();
        sub->add_flag("--snapshots", runarw_opts->snapshots, "record sigma_t strings");
        sub->add_flag("--check-coupling", runarw_opts->check_coupling,
                      "verify sigma_t == S^{G_t}[eta_t] at every step");
        sub->add_flag("--fresh-tapes", runarw_opts->fresh_tapes,
                      "resample instructions at every step (disables the coupling)");
        add_common(sub, *runarw_opts);
        sub->callback([&, runarw_opts] {
            auto& o = *runarw_opts;
            auto chain = parse_chain_spec(o.chain);
            auto rates = parse_lambda(o.lambda, chain);
            auto driving =
                parse_driving(o.driving, chain, arw::derive_seed(o.seed, arw::kTagDriving));
            auto sigma0 = parse_sigma0(o.sigma0, chain, rates,
                                       arw::derive_seed(o.seed, arw::kTagStationary));
            json config = {{"chain", o.chain},   {"lambda", o.lambda},
                           {"driving", o.driving}, {"sigma0", o.sigma0},
                           {"t", o.t},           {"seed", o.seed},
                           {"snapshots", o.snapshots},
                           {"check-coupling", o.check_coupling},
                           {"fresh-tapes", o.fresh_tapes}};
            RunOutput out("run-arw", o.out_dir, config, o.seed);

            arw::RunOptions ro;
            ro.t_max = o.t;
            ro.record_steps = true;
            ro.record_snapshots = o.snapshots;
            ro.check_coupling = o.check_coupling;
            ro.resample = o.fresh_tapes ? arw::ResampleMode::FreshTapes
                                        : arw::ResampleMode::SingleTape;
            auto trace = arw::run_arw(chain, rates, driving, sigma0, o.seed, ro);

            auto jl = out.jsonl();
            json header = {{"chain", chain.label},
                           {"lambda", o.lambda},
                           {"driving", driving.label()},
                           {"seed", o.seed},
                           {"version", arw::kVersion}};
            jl << header.dump() << "\n";
            for (const auto& rec : trace.steps) {
                json line = {{"t", rec.t},
                             {"u", rec.u},
                             {"arw_instructions", rec.arw_instructions},
                             {"idla_instructions", rec.idla_instructions},
                             {"sigma_hash", rec.sigma_hash},
                             {"eta_occupied", rec.eta_occupied}};
                if (o.snapshots) line["sigma"] = rec.snapshot;
                jl << line.dump() << "\n";
            }

            auto csv = out.csv();
            csv.row({"t", "u", "arw_instructions", "idla_instructions", "sigma_hash",
                     "eta_occupied", "t_full_reached"});
            for (const auto& rec : trace.steps)
                csv.row({arw::format_u64(rec.t), arw::format_u64(rec.u),
                         arw::format_u64(rec.arw_instructions),
                         arw::format_u64(rec.idla_instructions),
                         arw::format_u64(rec.sigma_hash),
                         arw::format_u64(static_cast<std::uint64_t>(rec.eta_occupied)),
                         fmt_bool(trace.t_full && rec.t >= *trace.t_full)});
            json meta = {{"final_sigma", trace.sigma.to_string()},
                         {"coupling_checks_passed", trace.coupling_checks_passed}};
            if (trace.t_full) meta["t_full"] = *trace.t_full;
            out.finish(meta);
        });
    }

    // ---------------------------------------------------------------- run-idla
    struct RunIdlaOpts : CommonOpts {
        std::string chain, driving = "central";
        std::uint64_t t = 1000;
        bool run_to_t = false;
    };
    auto runidla_opts = std::make_shared<RunIdlaOpts>();
    {
        auto* sub = app.add_subcommand("run-idla", "Pure IDLA growth; reports the fill time");
        sub->add_option("--chain", runidla_opts->chain)->required();
        sub->add_option("--driving", runidla_opts->driving)->capture_default_str();
        sub->add_option("--t", runidla_opts->t, "driving budget")->capture_default_str();
        sub->add_flag("--run-to-t", runidla_opts->run_to_t, "do not stop at T_full");
        add_common(sub, *runidla_opts);
        sub->callback([&, runidla_opts] {
            auto& o = *runidla_opts;
            auto chain = parse_chain_spec(o.chain);
            auto driving =
                parse_driving(o.driving, chain, arw::derive_seed(o.seed, arw::kTagDriving));
            json config = {{"chain", o.chain}, {"driving", o.driving}, {"t", o.t},
                           {"run-to-t", o.run_to_t}, {"seed", o.seed}};
            RunOutput out("run-idla", o.out_dir, config, o.seed);

            arw::IdlaOptions io;
            io.t_max = o.t;
            io.stop_at_full = !o.run_to_t;
            auto run = arw::run_idla(chain, driving, o.seed, io);

            auto csv = out.csv();
            csv.row({"t_full", "filled", "steps_run", "total_instructions", "absorbed"});
            csv.row({arw::format_u64(run.t_full.value_or(0)), fmt_bool(run.t_full.has_value()),
                     arw::format_u64(run.steps_run), arw::format_u64(run.total_instructions),
                     arw::format_u64(run.absorbed)});
            json meta = {{"timeout", !run.t_full.has_value()}};
            out.finish(meta);
        });
    }

    // ---------------------------------------------------------------- fill-tail
    struct FillOpts : CommonOpts {
        std::string chain, driving = "central";
        double alpha = 0.75, coefficient = 1.0;
        std::uint64_t trials = 100;
    };
    auto fill_opts = std::make_shared<FillOpts>();
    auto fill_lower_opts = std::make_shared<FillOpts>();
    auto register_fill = [&](const char* name, const char* help,
                             std::shared_ptr<FillOpts> opts, const char* exp_name) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--chain", opts->chain)->required();
        sub->add_option("--driving", opts->driving)->capture_default_str();
        sub->add_option(exp_name, opts->alpha, "tail exponent")->capture_default_str();
        sub->add_option("--coeff", opts->coefficient, "coefficient of N^exponent")
            ->capture_default_str();
        sub->add_option("--trials", opts->trials)->capture_default_str();
        add_common(sub, *opts);
        sub->callback([&, opts, name = std::string(name), exp_name = std::string(exp_name)] {
            auto& o = *opts;
            auto chain = parse_chain_spec(o.chain);
            auto driving =
                parse_driving(o.driving, chain, arw::derive_seed(o.seed, arw::kTagDriving));
            json config = {{"chain", o.chain},           {"driving", o.driving},
                           {exp_name.substr(2), o.alpha}, {"coeff", o.coefficient},
                           {"trials", o.trials},         {"seed", o.seed}};
            RunOutput out(name, o.out_dir, config, o.seed);
            auto est = arw::fill_tail(chain, driving, o.alpha, o.coefficient, o.trials, o.seed,
                                      o.workers);
            auto csv = out.csv();
            csv.row({"chain", "driving", "n_vertices", "exponent", "coefficient", "threshold",
                     "trials", "exceed", "p_hat", "ci99_lo", "ci99_hi", "min_t_full", "seed"});
            csv.row({est.chain_label, est.driving_label, arw::format_u64(est.n_vertices),
                     arw::format_double(est.exponent), arw::format_double(est.coefficient),
                     arw::format_double(est.threshold), arw::format_u64(est.trials),
                     arw::format_u64(est.exceed), arw::format_double(est.p_hat),
                     arw::format_double(est.ci99.lo), arw::format_double(est.ci99.hi),
                     arw::format_u64(est.min_t_full), arw::format_u64(est.seed)});
            out.finish({{"p_hat", est.p_hat}});
        });
    };
    register_fill("fill-tail", "Tail of the IDLA fill time P(T_full > N + c N^alpha)",
                  fill_opts, "--alpha");
    register_fill("fill-lower", "Lower-bound probe P(T_full > N + b N^beta)", fill_lower_opts,
                  "--beta");

    // ---------------------------------------------------------------- tree-fill
    struct TreeOpts : CommonOpts {
        int n = 8;
        std::string driving = "central";
        std::uint64_t trials = 100;
    };
    auto tree_opts = std::make_shared<TreeOpts>();
    {
        auto* sub = app.add_subcommand("tree-fill",
                                       "Fill time of the wired tree's sink-adjacent set");
        sub->add_option("--n", tree_opts->n, "tree depth parameter")->capture_default_str();
        sub->add_option("--driving", tree_opts->driving, "central | uniform")
            ->capture_default_str();
        sub->add_option("--trials", tree_opts->trials)->capture_default_str();
        add_common(sub, *tree_opts);
        sub->callback([&, tree_opts] {
            auto& o = *tree_opts;
            auto chain = arw::build_wired_tree(o.n);
            auto driving =
                parse_driving(o.driving, chain, arw::derive_seed(o.seed, arw::kTagDriving));
            json config = {{"n", o.n}, {"driving", o.driving}, {"trials", o.trials},
                           {"seed", o.seed}};
            RunOutput out("tree-fill", o.out_dir, config, o.seed);
            auto res = arw::wired_tree_fill(o.n, driving, o.trials, o.seed, o.workers);
            auto csv = out.csv();
            csv.row({"n", "n_vertices", "trials", "timeouts", "normalizer", "ratio_q05",
                     "ratio_q25", "ratio_q50", "ratio_q75", "ratio_q95"});
            csv.row({std::to_string(res.n), arw::format_u64(res.n_vertices),
                     arw::format_u64(res.trials), arw::format_u64(res.timeouts),
                     arw::format_double(res.normalizer),
                     arw::format_double(res.ratio_quantiles[0]),
                     arw::format_double(res.ratio_quantiles[1]),
                     arw::format_double(res.ratio_quantiles[2]),
                     arw::format_double(res.ratio_quantiles[3]),
                     arw::format_double(res.ratio_quantiles[4])});
            out.finish({{"median_ratio", res.ratio_quantiles[2]}});
        });
    }

    // ---------------------------------------------------------------- mix
    struct MixOpts : CommonOpts {
        std::string chain, lambda = "1", driving = "central", sweep = "auto";
        std::uint64_t t_max = 20, samples = 10000;
        bool projected = false;
    };
    auto mix_opts = std::make_shared<MixOpts>();
    {
        auto* sub = app.add_subcommand("mix", "TV-to-stationarity profile along a time grid");
        sub->add_option("--chain", mix_opts->chain)->required();
        sub->add_option("--lambda", mix_opts->lambda)->capture_default_str();
        sub->add_option("--driving", mix_opts->driving)->capture_default_str();
        sub->add_option("--t-max", mix_opts->t_max, "grid is 0..t-max")->capture_default_str();
        sub->add_option("--samples", mix_opts->samples)->capture_default_str();
        sub->add_option("--sweep", mix_opts->sweep, "auto | all | extremes")
            ->capture_default_str();
        sub->add_flag("--projected", mix_opts->projected,
                      "acknowledge the particle-count projection on large chains");
        add_common(sub, *mix_opts);
        sub->callback([&, mix_opts] {
            auto& o = *mix_opts;
            auto chain = parse_chain_spec(o.chain);
            auto rates = parse_lambda(o.lambda, chain);
            auto driving =
                parse_driving(o.driving, chain, arw::derive_seed(o.seed, arw::kTagDriving));
            arw::Sigma0Sweep sweep = o.sweep == "all"        ? arw::Sigma0Sweep::All
                                     : o.sweep == "extremes" ? arw::Sigma0Sweep::Extremes
                                                             : arw::Sigma0Sweep::Auto;
            json config = {{"chain", o.chain},     {"lambda", o.lambda},
                           {"driving", o.driving}, {"t-max", o.t_max},
                           {"samples", o.samples}, {"sweep", o.sweep},
                           {"projected", o.projected}, {"seed", o.seed}};
            RunOutput out("mix", o.out_dir, config, o.seed);
            std::vector<std::uint64_t> grid(o.t_max + 1);
            for (std::uint64_t t = 0; t <= o.t_max; ++t) grid[t] = t;
            auto rows = arw::mixing_profile(chain, rates, driving, grid, o.samples, o.seed,
                                            sweep, o.projected, o.workers);
            auto csv = out.csv();
            csv.row({"sigma0", "t", "tv", "radius", "p_tfull_gt", "bound_gap", "samples",
                     "projected"});
            for (const auto& r : rows)
                csv.row({r.sigma0, arw::format_u64(r.t), arw::format_double(r.tv),
                         arw::format_double(r.radius), arw::format_double(r.p_tfull_gt),
                         arw::format_double(r.tv - r.p_tfull_gt), arw::format_u64(r.samples),
                         fmt_bool(r.projected)});
            out.finish({{"rows", rows.size()}});
        });
    }

    // ---------------------------------------------------------------- harmonic
    struct HarmonicOpts : CommonOpts {
        std::string chain;
        bool exit_sum = false;
        int d = 2;
        std::string radii = "10,20,40";
        std::uint64_t mc_pairs = 0, mc_walks = 100000;
    };
    auto harm_opts = std::make_shared<HarmonicOpts>();
    {
        auto* sub = app.add_subcommand("harmonic",
                                       "Green-function oracle: identities or exit-sum ladder");
        sub->add_option("--chain", harm_opts->chain, "ball chain (table mode)");
        sub->add_flag("--exit-sum", harm_opts->exit_sum, "run the radius-ladder report");
        sub->add_option("--d", harm_opts->d, "dimension for --exit-sum")->capture_default_str();
        sub->add_option("--radii", harm_opts->radii, "comma list for --exit-sum")
            ->capture_default_str();
        sub->add_option("--mc-pairs", harm_opts->mc_pairs,
                        "spot-check this many (y,z) pairs by Monte Carlo walks");
        sub->add_option("--mc-walks", harm_opts->mc_walks)->capture_default_str();
        add_common(sub, *harm_opts);
        sub->callback([&, harm_opts] {
            auto& o = *harm_opts;
            json config = {{"chain", o.chain},   {"exit-sum", o.exit_sum}, {"d", o.d},
                           {"radii", o.radii},   {"mc-pairs", o.mc_pairs},
                           {"mc-walks", o.mc_walks}, {"seed", o.seed}};
            RunOutput out("harmonic", o.out_dir, config, o.seed);
            if (o.exit_sum) {
                auto csv = out.csv();
                csv.row({"r", "n_vertices", "min_ratio", "max_green_over_logr", "residual"});
                for (double r : parse_double_list(o.radii)) {
                    auto row = arw::exit_sum_row(arw::build_ball(o.d, r), r);
                    csv.row({arw::format_double(r), arw::format_u64(row.n),
                             arw::format_double(row.min_ratio),
                             arw::format_double(row.max_green_over_logr),
                             arw::format_double(row.residual)});
                }
                out.finish();
                return;
            }
            if (o.chain.empty())
                throw std::invalid_argument("harmonic: need --chain or --exit-sum");
            auto chain = parse_chain_spec(o.chain);
            auto table = arw::harmonic_table(chain);
            const int n = static_cast<int>(table.n);
            double sym = 0, hit_identity = 0, exitsum = 0;
            for (int y = 0; y < n; ++y) {
                double colsum = 0;
                for (int z = 0; z < n; ++z) {
                    sym = std::max(sym, std::abs(table.green(y, z) - table.green(z, y)));
                    hit_identity = std::max(
                        hit_identity, std::abs(table.green(z, z) * table.hit(y, z) -
                                               table.green(y, z)));
                    colsum += table.green(z, y);
                }
                exitsum = std::max(exitsum, std::abs(colsum - table.exit_time(y)));
            }
            double mc_max_sigma = 0;
            if (o.mc_pairs > 0) {
                arw::SplitMix rng(arw::derive_seed(o.seed, arw::kTagMisc));
                for (std::uint64_t k = 0; k < o.mc_pairs; ++k) {
                    auto y = static_cast<arw::VertexId>(rng.next_below(table.n));
                    auto z = static_cast<arw::VertexId>(rng.next_below(table.n));
                    double p_hat = arw::mc_hit_probability(
                        chain, y, z, o.mc_walks, arw::derive_seed(o.seed, 100 + k));
                    double p = table.hit(y, z);
                    double se = std::sqrt(std::max(p * (1 - p), 1e-12) / o.mc_walks);
                    mc_max_sigma = std::max(mc_max_sigma, std::abs(p_hat - p) / se);
                }
            }
            auto csv = out.csv();
            csv.row({"n_vertices", "residual", "max_sym_err", "max_hit_identity_err",
                     "max_exitsum_err", "mc_pairs", "mc_max_sigma"});
            csv.row({arw::format_u64(table.n), arw::format_double(table.residual),
                     arw::format_double(sym), arw::format_double(hit_identity),
                     arw::format_double(exitsum), arw::format_u64(o.mc_pairs),
                     arw::format_double(mc_max_sigma)});
            out.finish();
        });
    }

    // ---------------------------------------------------------------- sandpile
    struct SandpileOpts : CommonOpts {
        int d = 2;
        double r = 10, mass = -1, alpha = 5.0 / 6.0;
    };
    auto sand_opts = std::make_shared<SandpileOpts>();
    {
        auto* sub = app.add_subcommand(
            "sandpile", "Divisible-sandpile relaxation and the Green-function inequality");
        sub->add_option("--d", sand_opts->d)->capture_default_str();
        sub->add_option("--r", sand_opts->r)->capture_default_str();
        sub->add_option("--mass", sand_opts->mass, "initial mass at 0 (default N + N^(1-1/d))");
        sub->add_option("--alpha", sand_opts->alpha)->capture_default_str();
        add_common(sub, *sand_opts);
        sub->callback([&, sand_opts] {
            auto& o = *sand_opts;
            json config = {{"d", o.d}, {"r", o.r}, {"mass", o.mass}, {"alpha", o.alpha},
                           {"seed", o.seed}};
            RunOutput out("sandpile", o.out_dir, config, o.seed);
            auto rep = arw::divisible_sandpile_check(o.d, o.r, o.mass, o.alpha);
            auto csv = out.csv();
            csv.row({"d", "r", "n_vertices", "mass", "converged", "sweeps", "min_mass_in_ball",
                     "filled", "mass_error", "min_odometer", "alpha", "kappa_threshold",
                     "max_kappa", "inequality_holds", "kappa0", "kappa0_identity_err"});
            csv.row({std::to_string(rep.sandpile.dim), arw::format_double(rep.sandpile.r),
                     arw::format_u64(rep.n_vertices),
                     arw::format_double(rep.sandpile.initial_mass),
                     fmt_bool(rep.sandpile.converged), arw::format_u64(rep.sandpile.sweeps),
                     arw::format_double(rep.sandpile.min_mass_in_ball),
                     fmt_bool(rep.sandpile.filled), arw::format_double(rep.sandpile.mass_error),
                     arw::format_double(rep.sandpile.min_odometer),
                     arw::format_double(rep.alpha), arw::format_double(rep.threshold),
                     arw::format_double(rep.max_kappa), fmt_bool(rep.inequality_holds),
                     arw::format_double(rep.kappa0),
                     arw::format_double(rep.kappa0_identity_err)});
            out.finish({{"filled", rep.sandpile.filled},
                        {"inequality_holds", rep.inequality_holds}});
        });
    }

    // ---------------------------------------------------------------- density
    struct DensityOpts : CommonOpts {
        int d = 1;
        std::string radii = "8,16,32";
        std::string lambda = "1";
        std::uint64_t trials = 100;
    };
    auto dens_opts = std::make_shared<DensityOpts>();
    {
        auto* sub = app.add_subcommand("density",
                                       "Stationary density over a radius ladder (exploratory)");
        sub->add_option("--d", dens_opts->d)->capture_default_str();
        sub->add_option("--radii", dens_opts->radii)->capture_default_str();
        sub->add_option("--lambda", dens_opts->lambda)->capture_default_str();
        sub->add_option("--trials", dens_opts->trials)->capture_default_str();
        add_common(sub, *dens_opts);
        sub->callback([&, dens_opts] {
            auto& o = *dens_opts;
            double lambda = o.lambda == "inf" ? std::numeric_limits<double>::infinity()
                                              : std::stod(o.lambda);
            json config = {{"d", o.d}, {"radii", o.radii}, {"lambda", o.lambda},
                           {"trials", o.trials}, {"seed", o.seed}};
            RunOutput out("density", o.out_dir, config, o.seed);
            auto rows = arw::density_probe(o.d, parse_double_list(o.radii), lambda, o.trials,
                                           o.seed, o.workers);
            auto csv = out.csv();
            csv.row({"r", "n_vertices", "trials", "mean_density", "stderr"});
            for (const auto& r : rows)
                csv.row({arw::format_double(r.r), arw::format_u64(r.n_vertices),
                         arw::format_u64(r.trials), arw::format_double(r.mean_density),
                         arw::format_double(r.stderr_)});
            out.finish();
        });
    }

    // ---------------------------------------------------------------- hyperuniform
    struct HyperOpts : CommonOpts {
        std::string lengths = "64,128,256";
        std::string lambda = "1";
        std::uint64_t trials = 200;
    };
    auto hyper_opts = std::make_shared<HyperOpts>();
    {
        auto* sub = app.add_subcommand(
            "hyperuniform", "Variance of the stationary count on a path ladder (exploratory)");
        sub->add_option("--lengths", hyper_opts->lengths)->capture_default_str();
        sub->add_option("--lambda", hyper_opts->lambda)->capture_default_str();
        sub->add_option("--trials", hyper_opts->trials)->capture_default_str();
        add_common(sub, *hyper_opts);
        sub->callback([&, hyper_opts] {
            auto& o = *hyper_opts;
            double lambda = o.lambda == "inf" ? std::numeric_limits<double>::infinity()
                                              : std::stod(o.lambda);
            json config = {{"lengths", o.lengths}, {"lambda", o.lambda},
                           {"trials", o.trials}, {"seed", o.seed}};
            RunOutput out("hyperuniform", o.out_dir, config, o.seed);
            auto res = arw::hyperuniformity_probe(parse_long_list(o.lengths), lambda, o.trials,
                                                  o.seed, o.workers);
            auto csv = out.csv();
            csv.row({"L", "trials", "variance", "boot_lo", "boot_hi"});
            for (const auto& r : res.rows)
                csv.row({std::to_string(r.length), arw::format_u64(r.trials),
                         arw::format_double(r.variance), arw::format_double(r.ci.lo),
                         arw::format_double(r.ci.hi)});
            json meta;
            meta["slope_valid"] = res.loglog_fit.valid;
            if (res.loglog_fit.valid) meta["loglog_slope"] = res.loglog_fit.slope;
            out.finish(meta);
            if (res.loglog_fit.valid)
                std::cout << "log-log slope " << arw::format_double(res.loglog_fit.slope) << "\n";
        });
    }

    // ---------------------------------------------------------------- check-abelian
    struct AbelianOpts : CommonOpts {
        std::uint64_t trials = 1000;
        std::uint32_t max_vertices = 8;
    };
    auto abel_opts = std::make_shared<AbelianOpts>();
    {
        auto* sub = app.add_subcommand("check-abelian",
                                       "Policy-independence of stabilization on random instances");
        sub->add_option("--trials", abel_opts->trials)->capture_default_str();
        sub->add_option("--max-vertices", abel_opts->max_vertices)->capture_default_str();
        add_common(sub, *abel_opts);
        sub->callback([&, abel_opts] {
            auto& o = *abel_opts;
            json config = {{"trials", o.trials}, {"max-vertices", o.max_vertices},
                           {"seed", o.seed}};
            RunOutput out("check-abelian", o.out_dir, config, o.seed);
            auto res = arw::abelian_trials(o.trials, o.seed, o.max_vertices, o.workers);
            auto csv = out.csv();
            csv.row({"trials", "matches", "max_vertices", "seed"});
            csv.row({arw::format_u64(res.trials), arw::format_u64(res.matches),
                     arw::format_u64(o.max_vertices), arw::format_u64(o.seed)});
            out.finish({{"matches", res.matches}});
            std::cout << res.matches << "/" << res.trials << " exact matches\n";
            if (res.matches != res.trials) exit_code = 2;
        });
    }

    // ---------------------------------------------------------------- sst-check
    struct SstOpts : CommonOpts {
        std::string chain, lambda = "1", driving = "central", sigma0 = "empty";
        std::uint64_t t = 8, samples = 10000;
        double tol = 0.02;
    };
    auto sst_opts = std::make_shared<SstOpts>();
    {
        auto* sub = app.add_subcommand(
            "sst-check", "Conditional law at the strong stationary time vs exact samples");
        sub->add_option("--chain", sst_opts->chain)->required();
        sub->add_option("--lambda", sst_opts->lambda)->capture_default_str();
        sub->add_option("--driving", sst_opts->driving)->capture_default_str();
        sub->add_option("--sigma0", sst_opts->sigma0,
                        "initial state; 'pi' draws a stationary start per trace")
            ->capture_default_str();
        sub->add_option("--t", sst_opts->t)->capture_default_str();
        sub->add_option("--samples", sst_opts->samples)->capture_default_str();
        sub->add_option("--tol", sst_opts->tol, "TV threshold for exit code 2")
            ->capture_default_str();
        add_common(sub, *sst_opts);
        sub->callback([&, sst_opts] {
            auto& o = *sst_opts;
            auto chain = parse_chain_spec(o.chain);
            auto rates = parse_lambda(o.lambda, chain);
            auto driving =
                parse_driving(o.driving, chain, arw::derive_seed(o.seed, arw::kTagDriving));
            std::optional<arw::Configuration> sigma0;
            if (o.sigma0 != "pi")
                sigma0 = parse_sigma0(o.sigma0, chain, rates,
                                      arw::derive_seed(o.seed, arw::kTagStationary));
            json config = {{"chain", o.chain},   {"lambda", o.lambda},
                           {"driving", o.driving}, {"sigma0", o.sigma0},
                           {"t", o.t},           {"samples", o.samples},
                           {"tol", o.tol},       {"seed", o.seed}};
            RunOutput out("sst-check", o.out_dir, config, o.seed);
            auto rep = arw::strong_stationarity_check(chain, rates, driving, o.t, o.samples,
                                                      o.seed, sigma0, o.workers);
            bool pass = !rep.inconclusive && rep.tv <= o.tol;
            auto csv = out.csv();
            csv.row({"t", "samples", "conditioned", "tv", "radius", "inconclusive", "tol",
                     "pass"});
            csv.row({arw::format_u64(rep.t), arw::format_u64(rep.samples),
                     arw::format_u64(rep.conditioned), arw::format_double(rep.tv),
                     arw::format_double(rep.radius), fmt_bool(rep.inconclusive),
                     arw::format_double(o.tol), fmt_bool(pass)});
            out.finish({{"tv", rep.tv}, {"inconclusive", rep.inconclusive}});
            std::cout << (rep.inconclusive
                              ? std::string("inconclusive: too few conditioning events")
                              : "tv " + arw::format_double(rep.tv))
                      << "\n";
            if (!rep.inconclusive && !pass) exit_code = 2;
        });
    }

    // ---------------------------------------------------------------- budget
    struct BudgetOpts : CommonOpts {
        std::uint64_t coupon_n = 0;
        double epsilon = 0.01;
        int torus_d = 0;
        long torus_n = 0;
    };
    auto budget_opts = std::make_shared<BudgetOpts>();
    {
        auto* sub = app.add_subcommand("budget",
                                       "Closed-form driving budgets (coupon / torus mixing)");
        sub->add_option("--coupon-n", budget_opts->coupon_n, "coupon-collector vertex count");
        sub->add_option("--epsilon", budget_opts->epsilon)->capture_default_str();
        sub->add_option("--torus-d", budget_opts->torus_d, "torus dimension");
        sub->add_option("--torus-n", budget_opts->torus_n, "torus side length");
        add_common(sub, *budget_opts);
        sub->callback([&, budget_opts] {
            auto& o = *budget_opts;
            if (o.coupon_n == 0 && (o.torus_d == 0 || o.torus_n == 0))
                throw std::invalid_argument("budget: need --coupon-n or --torus-d/--torus-n");
            json config = {{"coupon-n", o.coupon_n}, {"epsilon", o.epsilon},
                           {"torus-d", o.torus_d}, {"torus-n", o.torus_n}, {"seed", o.seed}};
            RunOutput out("budget", o.out_dir, config, o.seed);
            auto csv = out.csv();
            csv.row({"kind", "d", "n", "epsilon", "budget"});
            if (o.coupon_n > 0) {
                auto b = arw::coupon_bound(o.coupon_n, o.epsilon);
                csv.row({"coupon", "", arw::format_u64(o.coupon_n),
                         arw::format_double(o.epsilon), arw::format_u64(b)});
                std::cout << "coupon budget " << b << "\n";
            }
            if (o.torus_d > 0 && o.torus_n > 0) {
                auto b = arw::torus_mixing_budget(o.torus_d, o.torus_n);
                csv.row({"torus", std::to_string(o.torus_d), std::to_string(o.torus_n),
                         arw::format_double(o.epsilon), arw::format_u64(b)});
                std::cout << "torus budget " << b << "\n";
            }
            out.finish();
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
