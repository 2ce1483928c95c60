#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgcc/compression.hpp"
#include "fedgcc/numerics.hpp"

namespace fedgcc {

// Pairwise Pearson matrix over the participants of one round. Symmetric
// within storage (lower triangle mirrors upper), diagonal pinned to 1.
struct CorrelationMatrix {
    std::size_t size = 0;
    std::vector<double> rho;  // row-major size x size

    double at(std::size_t m, std::size_t s) const { return rho[m * size + s]; }
    double& at(std::size_t m, std::size_t s) { return rho[m * size + s]; }
};

enum class StrategyKind { kMean, kKRelevant, kDeltaThreshold, kAllCorrelated };

struct StrategyConfig {
    StrategyKind kind = StrategyKind::kKRelevant;
    std::size_t k = 4;
    double delta = 0.5;
    // Extension, off by default: divide k-relevant / delta-threshold sums by
    // the selected-client count. The published strategies are unnormalized
    // sums; this switch exists for analysis only.
    bool normalize = false;
};

inline const char* strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::kMean: return "mean";
        case StrategyKind::kKRelevant: return "k-relevant";
        case StrategyKind::kDeltaThreshold: return "delta-threshold";
        case StrategyKind::kAllCorrelated: return "all-correlated";
    }
    return "?";
}

inline StrategyKind parse_strategy(const std::string& s) {
    if (s == "mean") return StrategyKind::kMean;
    if (s == "k-relevant") return StrategyKind::kKRelevant;
    if (s == "delta-threshold") return StrategyKind::kDeltaThreshold;
    if (s == "all-correlated") return StrategyKind::kAllCorrelated;
    throw std::invalid_argument("invalid-argument: unknown strategy '" + s + "'");
}

// The server only sees compressed gradients, so correlation is computed
// over the fully densified vectors (zeros at untransmitted coordinates).
inline CorrelationMatrix correlation_matrix_dense(const std::vector<Vec>& dense) {
    if (dense.size() < 2)
        throw std::invalid_argument("correlation_matrix: need >= 2 gradients");
    const std::size_t d = dense[0].size();
    for (const Vec& g : dense)
        if (g.size() != d)
            throw std::invalid_argument("correlation_matrix: dim mismatch");

    CorrelationMatrix cm;
    cm.size = dense.size();
    cm.rho.assign(cm.size * cm.size, 0.0);
    for (std::size_t m = 0; m < cm.size; ++m) {
        cm.at(m, m) = 1.0;
        for (std::size_t s = m + 1; s < cm.size; ++s) {
            const double r = pearson(dense[m], dense[s]);
            cm.at(m, s) = r;
            cm.at(s, m) = r;
        }
    }
    return cm;
}

inline CorrelationMatrix correlation_matrix(
    const std::vector<SparseGradient>& grads) {
    std::vector<Vec> dense;
    dense.reserve(grads.size());
    for (const SparseGradient& g : grads) dense.push_back(densify(g));
    return correlation_matrix_dense(dense);
}

namespace detail {

// Rank order for k-relevant selection: larger rho first, self wins ties,
// then smaller index. Strict total order, so the selected set is unique.
inline std::vector<std::size_t> k_relevant_selection(const CorrelationMatrix& rho,
                                                     std::size_t m,
                                                     std::size_t k) {
    if (k < 1 || k > rho.size)
        throw std::invalid_argument("invalid-k: k must be in [1, size]");
    std::vector<std::size_t> order(rho.size);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = rho.at(m, a);
        const double rb = rho.at(m, b);
        if (ra != rb) return ra > rb;
        if (a == m) return b != m;
        if (b == m) return false;
        return a < b;
    });
    order.resize(k);
    return order;
}

inline ParamVector sum_selected(const std::vector<Vec>& dense,
                                const std::vector<std::size_t>& sel,
                                bool normalize) {
    ParamVector out(dense[0].size(), 0.0);
    for (std::size_t s : sel) axpy_inplace(out, 1.0, dense[s]);
    if (normalize && sel.size() > 1) {
        const double inv = 1.0 / static_cast<double>(sel.size());
        for (double& x : out) x *= inv;
    }
    return out;
}

}  // namespace detail

/// Sum of the k clients most correlated with m (self always eligible at
/// rho 1). Unnormalized, exactly as published, unless `normalize` is set.
inline ParamVector aggregate_k_relevant(const CorrelationMatrix& rho,
                                        const std::vector<Vec>& dense,
                                        std::size_t m, std::size_t k,
                                        bool normalize = false) {
    return detail::sum_selected(dense,
                                detail::k_relevant_selection(rho, m, k),
                                normalize);
}

/// Sum over clients with rho[m][s] >= delta; self passes whenever delta <= 1.
inline ParamVector aggregate_threshold(const CorrelationMatrix& rho,
                                       const std::vector<Vec>& dense,
                                       std::size_t m, double delta,
                                       bool normalize = false) {
    if (!(delta >= -1.0 && delta <= 1.0))
        throw std::invalid_argument("invalid-argument: delta must be in [-1, 1]");
    std::vector<std::size_t> sel;
    for (std::size_t s = 0; s < rho.size; ++s)
        if (rho.at(m, s) >= delta) sel.push_back(s);
    return detail::sum_selected(dense, sel, normalize);
}

/// Softmax-of-correlations weighted average over all participants.
inline ParamVector aggregate_all_correlated(const CorrelationMatrix& rho,
                                            const std::vector<Vec>& dense,
                                            std::size_t m) {
    Vec row(rho.size);
    for (std::size_t s = 0; s < rho.size; ++s) row[s] = rho.at(m, s);
    const Vec w = softmax(row);
    ParamVector out(dense[0].size(), 0.0);
    for (std::size_t s = 0; s < rho.size; ++s)
        axpy_inplace(out, w[s], dense[s]);
    return out;
}

// Sparse-argument overloads matching the wire types; they densify and
// delegate. The hot path in fedcore densifies once per round instead.
inline ParamVector aggregate_k_relevant(const CorrelationMatrix& rho,
                                        const std::vector<SparseGradient>& grads,
                                        std::size_t m, std::size_t k,
                                        bool normalize = false) {
    std::vector<Vec> dense;
    dense.reserve(grads.size());
    for (const SparseGradient& g : grads) dense.push_back(densify(g));
    return aggregate_k_relevant(rho, dense, m, k, normalize);
}

inline ParamVector aggregate_threshold(const CorrelationMatrix& rho,
                                       const std::vector<SparseGradient>& grads,
                                       std::size_t m, double delta,
                                       bool normalize = false) {
    std::vector<Vec> dense;
    dense.reserve(grads.size());
    for (const SparseGradient& g : grads) dense.push_back(densify(g));
    return aggregate_threshold(rho, dense, m, delta, normalize);
}

inline ParamVector aggregate_all_correlated(
    const CorrelationMatrix& rho, const std::vector<SparseGradient>& grads,
    std::size_t m) {
    std::vector<Vec> dense;
    dense.reserve(grads.size());
    for (const SparseGradient& g : grads) dense.push_back(densify(g));
    return aggregate_all_correlated(rho, dense, m);
}

/// Per-client personalized gradient for one participant row.
inline ParamVector apply_strategy(const StrategyConfig& cfg,
                                  const CorrelationMatrix& rho,
                                  const std::vector<Vec>& dense,
                                  std::size_t m) {
    switch (cfg.kind) {
        case StrategyKind::kMean: return dense[m];
        case StrategyKind::kKRelevant:
            return aggregate_k_relevant(rho, dense, m, cfg.k, cfg.normalize);
        case StrategyKind::kDeltaThreshold:
            return aggregate_threshold(rho, dense, m, cfg.delta, cfg.normalize);
        case StrategyKind::kAllCorrelated:
            return aggregate_all_correlated(rho, dense, m);
    }
    throw std::logic_error("apply_strategy: unreachable");
}

/// g_t = (1/|M_t|) * sum of personalized gradients, summed in list order.
inline ParamVector server_average(const std::vector<ParamVector>& personalized) {
    if (personalized.empty())
        throw std::invalid_argument("server_average: empty input");
    ParamVector out(personalized[0].size(), 0.0);
    for (const ParamVector& g : personalized) {
        if (g.size() != out.size())
            throw std::invalid_argument("server_average: dim mismatch");
        axpy_inplace(out, 1.0, g);
    }
    const double inv = 1.0 / static_cast<double>(personalized.size());
    for (double& x : out) x *= inv;
    return out;
}

}  // namespace fedgcc
