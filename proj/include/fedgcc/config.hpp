#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fedgcc/fedcore.hpp"

namespace fedgcc {

/// Configuration problem the user must fix; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// One experiment = RoundConfig + data source + seed + output directory.
// Defaults mirror the published protocol: window 6, tau 5, batch 20,
// epsilon 0.1 decaying x0.1 at rounds 100/150, eta 1.0, gamma 0.01, k 4,
// delta 0.5, 200 rounds, full participation.
struct ExperimentConfig {
    std::string algorithm = "fedgcc";
    std::string strategy = "k-relevant";
    double gamma = 0.01;
    std::size_t k = 4;
    double delta = 0.5;
    std::size_t tau = 5;
    std::size_t batch_size = 20;
    double epsilon = 0.1;
    double eta = 1.0;
    std::size_t rounds = 200;
    double participation = 1.0;
    double mu = 0.0;
    std::uint64_t seed = 1;
    std::string data;                // CSV path, required for train/compare
    std::string out = "results";
    std::size_t window = 6;
    std::size_t train_slots = 0;     // 0: default split rule
    bool normalize = false;          // extension switch, see aggregation
    std::size_t eval_every = 0;
    std::string dump_correlations;   // directory, empty = off
};

namespace detail {

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "algorithm",  "strategy", "gamma",       "k",
        "delta",      "tau",      "batch_size",  "epsilon",
        "eta",        "rounds",   "participation", "mu",
        "seed",       "data",     "out",         "window",
        "train_slots", "normalize", "eval_every", "dump_correlations"};
    return keys;
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("invalid-config: key '") + key +
                              "' has the wrong type");
        }
    }
}

}  // namespace detail

/// Loads a JSON config file; unknown keys are rejected, known keys override
/// the defaults. Flag overrides are applied afterwards by the CLI.
inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("invalid-config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid-config: " + path + ": " + e.what());
    }
    if (!j.is_object())
        throw ConfigError("invalid-config: top level must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!detail::config_keys().count(key))
            throw ConfigError("invalid-config: unknown key '" + key + "'");
    }

    ExperimentConfig c;
    detail::read_key(j, "algorithm", c.algorithm);
    detail::read_key(j, "strategy", c.strategy);
    detail::read_key(j, "gamma", c.gamma);
    detail::read_key(j, "k", c.k);
    detail::read_key(j, "delta", c.delta);
    detail::read_key(j, "tau", c.tau);
    detail::read_key(j, "batch_size", c.batch_size);
    detail::read_key(j, "epsilon", c.epsilon);
    detail::read_key(j, "eta", c.eta);
    detail::read_key(j, "rounds", c.rounds);
    detail::read_key(j, "participation", c.participation);
    detail::read_key(j, "mu", c.mu);
    detail::read_key(j, "seed", c.seed);
    detail::read_key(j, "data", c.data);
    detail::read_key(j, "out", c.out);
    detail::read_key(j, "window", c.window);
    detail::read_key(j, "train_slots", c.train_slots);
    detail::read_key(j, "normalize", c.normalize);
    detail::read_key(j, "eval_every", c.eval_every);
    detail::read_key(j, "dump_correlations", c.dump_correlations);
    return c;
}

/// Full validation before any computation starts.
inline void validate_config(const ExperimentConfig& c) {
    try {
        parse_algorithm(c.algorithm);
        parse_strategy(c.strategy);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(c.gamma > 0.0 && c.gamma <= 1.0))
        throw ConfigError("invalid-argument: gamma must be in (0, 1]");
    if (c.k < 1) throw ConfigError("invalid-argument: k must be >= 1");
    if (!(c.delta >= -1.0 && c.delta <= 1.0))
        throw ConfigError("invalid-argument: delta must be in [-1, 1]");
    if (c.tau < 1) throw ConfigError("invalid-argument: tau must be >= 1");
    if (c.batch_size < 1)
        throw ConfigError("invalid-argument: batch_size must be >= 1");
    if (!(c.epsilon > 0.0))
        throw ConfigError("invalid-argument: epsilon must be > 0");
    if (!(c.eta > 0.0)) throw ConfigError("invalid-argument: eta must be > 0");
    if (!(c.participation > 0.0 && c.participation <= 1.0))
        throw ConfigError("invalid-argument: participation must be in (0, 1]");
    if (!(c.mu >= 0.0)) throw ConfigError("invalid-argument: mu must be >= 0");
    if (c.window < 1) throw ConfigError("invalid-argument: window must be >= 1");
}

inline RoundConfig to_round_config(const ExperimentConfig& c, unsigned threads) {
    RoundConfig rc;
    rc.tau = c.tau;
    rc.batch_size = c.batch_size;
    rc.epsilon = c.epsilon;
    rc.eta = c.eta;
    rc.gamma = c.gamma;
    rc.strategy.kind = parse_strategy(c.strategy);
    rc.strategy.k = c.k;
    rc.strategy.delta = c.delta;
    rc.strategy.normalize = c.normalize;
    rc.participation = c.participation;
    rc.total_rounds = c.rounds;
    rc.mu = c.mu;
    rc.eval_every = c.eval_every;
    rc.threads = threads;
    return rc;
}

}  // namespace fedgcc
