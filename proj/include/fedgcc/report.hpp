#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgcc/fedcore.hpp"
#include "fedgcc/model.hpp"

namespace fedgcc {

inline double rmse(const Vec& pred, const Vec& truth) {
    return std::sqrt(mse_loss(pred, truth));
}

inline double mae(const Vec& pred, const Vec& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("mae: length mismatch");
    if (pred.empty()) throw std::invalid_argument("mae: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

/// 1 - SS_res / SS_tot with the total variance pooled over everything
/// passed in. Undefined (throws) for constant truth.
inline double r2_score(const Vec& pred, const Vec& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("r2_score: length mismatch");
    if (pred.size() < 2)
        throw std::invalid_argument("r2_score: need at least 2 samples");
    double mean = 0.0;
    for (double y : truth) mean += y;
    mean /= static_cast<double>(truth.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double r = truth[i] - pred[i];
        const double d = truth[i] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0)
        throw std::runtime_error("constant-truth: r2 denominator is zero");
    return 1.0 - ss_res / ss_tot;
}

struct MetricsSnapshot {
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    std::size_t n_samples = 0;
};

// Forward pass per client, metrics pooled over the concatenation of all
// clients' standardized test samples (client order, then sample order; both
// are irrelevant to the pooled result).
inline MetricsSnapshot evaluate(const MlpModel& model,
                                const std::vector<WindowedDataset>& test_sets) {
    Vec pred, truth;
    for (const WindowedDataset& ds : test_sets) {
        if (ds.size() == 0) continue;
        const Vec p = forward(model, ds.inputs);
        pred.insert(pred.end(), p.begin(), p.end());
        truth.insert(truth.end(), ds.targets.begin(), ds.targets.end());
    }
    if (pred.empty()) throw std::runtime_error("empty-test-set");

    MetricsSnapshot snap;
    snap.rmse = rmse(pred, truth);
    snap.mae = mae(pred, truth);
    snap.r2 = r2_score(pred, truth);
    snap.n_samples = pred.size();
    // power-mean inequality; a violation means a metric implementation bug
    if (snap.mae > snap.rmse * (1.0 + 1e-12))
        throw std::logic_error("metrics: mae > rmse");
    return snap;
}

struct RunSummary {
    std::string algorithm;
    std::string strategy;
    double gamma = 0.01;
    std::size_t k = 4;
    double delta = 0.5;
    std::uint64_t seed = 0;
    std::size_t rounds = 0;
    MetricsSnapshot metrics;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t downlink_bytes = 0;
};

inline std::string summary_to_json(const RunSummary& s) {
    nlohmann::json j;
    j["algorithm"] = s.algorithm;
    j["strategy"] = s.strategy;
    j["gamma"] = s.gamma;
    j["k"] = s.k;
    j["delta"] = s.delta;
    j["seed"] = s.seed;
    j["rounds"] = s.rounds;
    j["rmse"] = s.metrics.rmse;
    j["mae"] = s.metrics.mae;
    j["r2"] = s.metrics.r2;
    j["uplink_bytes"] = s.uplink_bytes;
    j["downlink_bytes"] = s.downlink_bytes;
    return j.dump(2) + "\n";
}

inline std::string history_to_csv(const std::vector<RoundRecord>& history) {
    std::string out = "round,loss,uplink_bytes,downlink_bytes,rmse\n";
    for (const RoundRecord& r : history) {
        out += std::to_string(r.round);
        out += ',';
        out += format_double(r.loss);
        out += ',';
        out += std::to_string(r.uplink_bytes);
        out += ',';
        out += std::to_string(r.downlink_bytes);
        out += ',';
        if (r.rmse) out += format_double(*r.rmse);
        out += '\n';
    }
    return out;
}

// Writes summary.json and history.csv under out_dir (created if missing).
// Output is byte-stable: identical runs produce identical files.
inline void write_results(const std::vector<RoundRecord>& history,
                          const RunSummary& summary,
                          const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto dump = [&](const std::string& name, const std::string& content) {
        const std::filesystem::path p = std::filesystem::path(out_dir) / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("io-error: cannot write " + p.string());
        f << content;
        if (!f) throw std::runtime_error("io-error: write failed for " + p.string());
    };
    dump("summary.json", summary_to_json(summary));
    dump("history.csv", history_to_csv(history));
}

}  // namespace fedgcc
