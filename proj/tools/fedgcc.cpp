// fedgcc command line: synthetic data generation, single training runs, and
// multi-algorithm comparisons over one shared dataset and seed.
//
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedgcc/fedgcc.hpp"

namespace {

using namespace fedgcc;

struct RunOutput {
    TrainResult result;
    MetricsSnapshot metrics;
    std::string algorithm;
    std::string strategy;  // effective strategy label
    double gamma;          // effective compression ratio
};

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

// Runs one algorithm over a freshly built federation so repeated runs see
// identical client states and RNG streams.
RunOutput run_experiment(const ExperimentConfig& cfg, const SeriesMap& series,
                         Algorithm alg, StrategyKind strategy_kind) {
    ExperimentConfig eff = cfg;
    eff.algorithm = algorithm_name(alg);
    eff.strategy = strategy_name(strategy_kind);
    validate_config(eff);

    std::optional<std::size_t> train_slots;
    if (eff.train_slots > 0) train_slots = eff.train_slots;
    Federation fed = build_federation(series, eff.window, train_slots, eff.seed);

    RoundConfig rc = to_round_config(eff, resolve_threads());
    validate_round_config(rc, fed.clients.size());

    RoundHooks hooks;
    if (!eff.dump_correlations.empty() && alg == Algorithm::kFedGcc) {
        std::filesystem::create_directories(eff.dump_correlations);
        const std::string dir = eff.dump_correlations;
        hooks.on_correlation = [dir](std::size_t round,
                                     const CorrelationMatrix& rho) {
            char name[32];
            std::snprintf(name, sizeof(name), "corr_round_%04zu.csv", round);
            std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
            for (std::size_t m = 0; m < rho.size; ++m) {
                for (std::size_t s = 0; s < rho.size; ++s) {
                    if (s) f << ',';
                    f << fedgcc::format_double(rho.at(m, s));
                }
                f << '\n';
            }
        };
    }
    hooks.on_round = [&](std::size_t round, const std::vector<std::size_t>&,
                         const std::vector<LocalRoundResult>&,
                         const ParamVector& g_t) {
        if ((round + 1) % 25 == 0 || round + 1 == rc.total_rounds) {
            // aggregate magnitude surfaced so unnormalized-sum growth is visible
            std::fprintf(stderr, "[%s] round %zu/%zu |g_t|=%.4g\n",
                         algorithm_name(alg), round + 1, rc.total_rounds,
                         l2_norm(g_t));
        }
    };

    std::function<double(const MlpModel&)> eval_hook;
    if (rc.eval_every > 0)
        eval_hook = [&fed](const MlpModel& m) {
            return evaluate(m, fed.test_sets).rmse;
        };

    RunOutput out;
    out.result = run_training(rc, fed.clients, alg, eff.seed, eval_hook, hooks);
    out.metrics = evaluate(out.result.model, fed.test_sets);
    out.algorithm = eff.algorithm;
    out.strategy = alg == Algorithm::kFedGcc ? eff.strategy : "mean";
    out.gamma = alg == Algorithm::kFedGcc ? eff.gamma : 1.0;
    return out;
}

RunSummary make_summary(const ExperimentConfig& cfg, const RunOutput& run) {
    RunSummary s;
    s.algorithm = run.algorithm;
    s.strategy = run.strategy;
    s.gamma = run.gamma;
    s.k = cfg.k;
    s.delta = cfg.delta;
    s.seed = cfg.seed;
    s.rounds = cfg.rounds;
    s.metrics = run.metrics;
    s.uplink_bytes = run.result.uplink_bytes;
    s.downlink_bytes = run.result.downlink_bytes;
    return s;
}

struct CompareItem {
    Algorithm alg;
    StrategyKind strategy;
    std::string label;
};

CompareItem parse_compare_item(const std::string& item) {
    const auto colon = item.find(':');
    const std::string alg_s = item.substr(0, colon);
    const Algorithm alg = parse_algorithm(alg_s);
    StrategyKind strat = StrategyKind::kMean;
    if (colon != std::string::npos) {
        if (alg != Algorithm::kFedGcc)
            throw ConfigError("invalid-argument: only fedgcc takes a strategy: '" +
                              item + "'");
        strat = parse_strategy(item.substr(colon + 1));
    } else if (alg == Algorithm::kFedGcc) {
        strat = StrategyKind::kKRelevant;  // paper default
    }
    return {alg, strat, item};
}

int cmd_gen_data(std::size_t clients, std::size_t slots, std::uint64_t seed,
                 double heterogeneity, const std::string& out_path) {
    const SeriesMap series = generate_synthetic(clients, slots, seed, heterogeneity);
    write_csv(series, out_path);
    std::printf("gen-data: wrote %zu clients x %zu slots to %s\n", clients,
                slots, out_path.c_str());
    return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.data.empty())
        throw ConfigError("invalid-argument: --data is required for train");
    const SeriesMap series = load_csv(cfg.data);

    const Algorithm alg = parse_algorithm(cfg.algorithm);
    const StrategyKind strat = parse_strategy(cfg.strategy);
    const RunOutput run = run_experiment(cfg, series, alg, strat);

    write_results(run.result.history, make_summary(cfg, run), cfg.out);
    std::printf(
        "train: algorithm=%s strategy=%s rmse=%.6f mae=%.6f r2=%.6f "
        "uplink_bytes=%llu downlink_bytes=%llu out=%s\n",
        run.algorithm.c_str(), run.strategy.c_str(), run.metrics.rmse,
        run.metrics.mae, run.metrics.r2,
        static_cast<unsigned long long>(run.result.uplink_bytes),
        static_cast<unsigned long long>(run.result.downlink_bytes),
        cfg.out.c_str());
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const std::string& algorithms) {
    validate_config(cfg);
    if (cfg.data.empty())
        throw ConfigError("invalid-argument: --data is required for compare");

    std::vector<CompareItem> items;
    std::stringstream ss(algorithms);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) items.push_back(parse_compare_item(item));
    if (items.empty())
        throw ConfigError("invalid-argument: --algorithms list is empty");

    const SeriesMap series = load_csv(cfg.data);
    const std::string data_hash = hash_hex(series_hash(series));

    std::string csv =
        "algorithm,strategy,seed,data_hash,rmse,mae,r2,uplink_bytes\n";
    for (const CompareItem& it : items) {
        const RunOutput run = run_experiment(cfg, series, it.alg, it.strategy);
        csv += run.algorithm;
        csv += ',';
        csv += run.strategy;
        csv += ',';
        csv += std::to_string(cfg.seed);
        csv += ',';
        csv += data_hash;
        csv += ',';
        csv += fedgcc::format_double(run.metrics.rmse);
        csv += ',';
        csv += fedgcc::format_double(run.metrics.mae);
        csv += ',';
        csv += fedgcc::format_double(run.metrics.r2);
        csv += ',';
        csv += std::to_string(run.result.uplink_bytes);
        csv += '\n';
        std::printf("compare: %s strategy=%s rmse=%.6f mae=%.6f r2=%.6f "
                    "uplink_bytes=%llu\n",
                    run.algorithm.c_str(), run.strategy.c_str(),
                    run.metrics.rmse, run.metrics.mae, run.metrics.r2,
                    static_cast<unsigned long long>(run.result.uplink_bytes));
    }

    std::filesystem::create_directories(cfg.out);
    const std::filesystem::path path =
        std::filesystem::path(cfg.out) / "comparison.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("io-error: cannot write " + path.string());
    f << csv;
    std::printf("compare: wrote %s\n", path.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FedGCC: communication-efficient federated traffic prediction"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic traffic CSV");
    std::size_t gd_clients = 8, gd_slots = 2016;
    std::uint64_t gd_seed = 1;
    double gd_het = 0.5;
    std::string gd_out;
    gen->add_option("--clients", gd_clients, "Number of clients (>= 2)");
    gen->add_option("--slots", gd_slots, "Slots per client (>= 288)");
    gen->add_option("--seed", gd_seed, "RNG seed");
    gen->add_option("--heterogeneity", gd_het, "Client diversity in [0, 1]");
    gen->add_option("--out", gd_out, "Output CSV path")->required();

    // Shared experiment flags for train/compare. Values live in `flags`; a
    // config file (if any) is loaded first and only explicitly passed flags
    // override it.
    ExperimentConfig flags;
    std::string config_path;
    std::string algorithms = "fedavg,fedgcc:k-relevant";

    const auto add_experiment_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--algorithm", flags.algorithm,
                        "fedgcc | fedavg | fedprox");
        sub->add_option("--strategy", flags.strategy,
                        "mean | k-relevant | delta-threshold | all-correlated");
        sub->add_option("--gamma", flags.gamma, "Compression ratio in (0, 1]");
        sub->add_option("--k", flags.k, "k-relevant client count");
        sub->add_option("--delta", flags.delta, "Correlation threshold");
        sub->add_option("--tau", flags.tau, "Local SGD steps per round");
        sub->add_option("--batch-size", flags.batch_size, "Local batch size");
        sub->add_option("--epsilon", flags.epsilon, "Local learning rate");
        sub->add_option("--eta", flags.eta, "Server learning rate");
        sub->add_option("--rounds", flags.rounds, "Communication rounds");
        sub->add_option("--participation", flags.participation,
                        "Participating fraction per round");
        sub->add_option("--mu", flags.mu, "FedProx proximal weight");
        sub->add_option("--seed", flags.seed, "Experiment seed");
        sub->add_option("--data", flags.data, "Input CSV path");
        sub->add_option("--out", flags.out, "Output directory");
        sub->add_option("--window", flags.window, "Sliding window size p");
        sub->add_option("--train-slots", flags.train_slots,
                        "Training slots (0 = default split rule)");
        sub->add_flag("--normalize", flags.normalize,
                      "Normalize selection sums (extension, off by default)");
        sub->add_option("--eval-every", flags.eval_every,
                        "Record test RMSE every N rounds (0 = final only)");
        sub->add_option("--dump-correlations", flags.dump_correlations,
                        "Directory for per-round correlation CSV dumps");
    };

    auto* train = app.add_subcommand("train", "Run one training experiment");
    add_experiment_flags(train);

    auto* compare =
        app.add_subcommand("compare", "Run several algorithms on one dataset");
    add_experiment_flags(compare);
    compare->add_option("--algorithms", algorithms,
                        "Comma list, e.g. fedavg,fedgcc:k-relevant");

    try {
        app.parse(argc, argv);

        // Merge precedence: defaults < config file < explicit flags.
        const auto merged = [&](CLI::App* sub) {
            ExperimentConfig cfg;
            if (!config_path.empty()) cfg = fedgcc::load_config_file(config_path);
            const auto apply = [&](const char* flag, auto member) {
                if (sub->count(flag) > 0) cfg.*member = flags.*member;
            };
            apply("--algorithm", &ExperimentConfig::algorithm);
            apply("--strategy", &ExperimentConfig::strategy);
            apply("--gamma", &ExperimentConfig::gamma);
            apply("--k", &ExperimentConfig::k);
            apply("--delta", &ExperimentConfig::delta);
            apply("--tau", &ExperimentConfig::tau);
            apply("--batch-size", &ExperimentConfig::batch_size);
            apply("--epsilon", &ExperimentConfig::epsilon);
            apply("--eta", &ExperimentConfig::eta);
            apply("--rounds", &ExperimentConfig::rounds);
            apply("--participation", &ExperimentConfig::participation);
            apply("--mu", &ExperimentConfig::mu);
            apply("--seed", &ExperimentConfig::seed);
            apply("--data", &ExperimentConfig::data);
            apply("--out", &ExperimentConfig::out);
            apply("--window", &ExperimentConfig::window);
            apply("--train-slots", &ExperimentConfig::train_slots);
            apply("--normalize", &ExperimentConfig::normalize);
            apply("--eval-every", &ExperimentConfig::eval_every);
            apply("--dump-correlations", &ExperimentConfig::dump_correlations);
            return cfg;
        };

        if (gen->parsed())
            return cmd_gen_data(gd_clients, gd_slots, gd_seed, gd_het, gd_out);
        if (train->parsed()) return cmd_train(merged(train));
        if (compare->parsed()) return cmd_compare(merged(compare), algorithms);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: validation: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: validation: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: runtime: %s\n", e.what());
        return 3;
    }
}
