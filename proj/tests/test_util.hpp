#pragma once

// Test-only helpers: random instance generation and the independent oracles
// the implementation is checked against. Nothing here may call back into
// the code path it verifies.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fedgcc/aggregation.hpp"
#include "fedgcc/model.hpp"
#include "fedgcc/numerics.hpp"
#include "fedgcc/rng.hpp"

namespace testutil {

inline fedgcc::Vec random_vec(fedgcc::RngStream& rng, std::size_t n,
                              double lo = -1.0, double hi = 1.0) {
    fedgcc::Vec v(n);
    for (double& x : v) x = lo + (hi - lo) * rng.next_uniform();
    return v;
}

// Central finite differences over the flattened parameters; independent of
// backward()'s chain rule.
inline fedgcc::Vec finite_diff_grad(const fedgcc::MlpModel& model,
                                    const fedgcc::Batch& batch,
                                    double step = 1e-6) {
    using namespace fedgcc;
    const ParamVector theta = flatten(model);
    Vec grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        ParamVector up = theta, dn = theta;
        up[i] += step;
        dn[i] -= step;
        const MlpModel mu = unflatten(model.dims, up);
        const MlpModel md = unflatten(model.dims, dn);
        const double lu = mse_loss(forward(mu, batch.inputs), batch.targets);
        const double ld = mse_loss(forward(md, batch.inputs), batch.targets);
        grad[i] = (lu - ld) / (2.0 * step);
    }
    return grad;
}

inline double max_relative_error(const fedgcc::Vec& got,
                                 const fedgcc::Vec& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max(1.0, std::abs(want[i]));
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

// Literal transcriptions of the three aggregation rules: explicit loops
// over the indicator / softmax definitions, no shared code with the
// implementation.
inline fedgcc::Vec oracle_k_relevant(const fedgcc::CorrelationMatrix& rho,
                                     const std::vector<fedgcc::Vec>& dense,
                                     std::size_t m, std::size_t k) {
    // threshold = k-th largest value of row m (self included)
    std::vector<double> row(rho.size);
    for (std::size_t s = 0; s < rho.size; ++s) row[s] = rho.at(m, s);
    std::vector<double> sorted = row;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double kth = sorted[k - 1];

    // indicator(rho >= kth) can pass more than k clients on ties; break
    // toward self first, then the smaller index, exactly like the contract.
    std::vector<std::size_t> passing;
    for (std::size_t s = 0; s < rho.size; ++s)
        if (row[s] >= kth) passing.push_back(s);
    std::sort(passing.begin(), passing.end(),
              [&](std::size_t a, std::size_t b) {
                  if (row[a] != row[b]) return row[a] > row[b];
                  if (a == m) return b != m;
                  if (b == m) return false;
                  return a < b;
              });
    passing.resize(k);

    fedgcc::Vec out(dense[0].size(), 0.0);
    for (std::size_t s : passing)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += dense[s][i];
    return out;
}

inline fedgcc::Vec oracle_threshold(const fedgcc::CorrelationMatrix& rho,
                                    const std::vector<fedgcc::Vec>& dense,
                                    std::size_t m, double delta) {
    fedgcc::Vec out(dense[0].size(), 0.0);
    for (std::size_t s = 0; s < rho.size; ++s)
        if (rho.at(m, s) >= delta)
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += dense[s][i];
    return out;
}

inline fedgcc::Vec oracle_all_correlated(const fedgcc::CorrelationMatrix& rho,
                                         const std::vector<fedgcc::Vec>& dense,
                                         std::size_t m) {
    // softmax weights computed the direct way (no max subtraction; the
    // entries are correlations in [-1, 1], so overflow is impossible)
    std::vector<double> w(rho.size);
    double z = 0.0;
    for (std::size_t s = 0; s < rho.size; ++s) {
        w[s] = std::exp(rho.at(m, s));
        z += w[s];
    }
    fedgcc::Vec out(dense[0].size(), 0.0);
    for (std::size_t s = 0; s < rho.size; ++s)
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += (w[s] / z) * dense[s][i];
    return out;
}

inline double max_abs_diff(const fedgcc::Vec& a, const fedgcc::Vec& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace testutil
