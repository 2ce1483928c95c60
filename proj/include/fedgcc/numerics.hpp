#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedgcc {

using Vec = std::vector<double>;

/// Shortest decimal form that round-trips the exact double; keeps every
/// emitted file byte-stable across runs and platforms.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

struct MeanStd {
    double mean;
    double std;
};

/// Population statistics (divide by n, not n-1).
inline MeanStd mean_std(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean_std: empty input");
    const auto n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) {
        const double d = x - mean;
        var += d * d;
    }
    return {mean, std::sqrt(var / n)};
}

// Pearson correlation with population covariance and deviations (the 1/n
// factors cancel in the ratio). Evaluation is symmetric in a and b, so
// pearson(a, b) == pearson(b, a) bit for bit. A zero-variance operand is
// defined as uncorrelated (returns 0) unless a and b are the same object,
// which is pinned to 1; this keeps correlation matrices NaN-free.
inline double pearson(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("length-mismatch: pearson operands differ");
    if (a.size() < 2)
        throw std::invalid_argument("length-mismatch: pearson needs length >= 2");
    if (&a == &b) return 1.0;
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    const double r = cov / (std::sqrt(va) * std::sqrt(vb));
    return std::clamp(r, -1.0, 1.0);
}

/// Max-subtracted softmax; output is strictly positive and sums to 1.
inline Vec softmax(const Vec& r) {
    if (r.empty()) throw std::invalid_argument("softmax: empty input");
    const double mx = *std::max_element(r.begin(), r.end());
    Vec out(r.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        out[i] = std::exp(r[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

/// out_i = x_i + alpha * g_i
inline Vec axpy(const Vec& x, double alpha, const Vec& g) {
    if (x.size() != g.size()) throw std::invalid_argument("axpy: dim mismatch");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + alpha * g[i];
    return out;
}

inline void axpy_inplace(Vec& x, double alpha, const Vec& g) {
    if (x.size() != g.size()) throw std::invalid_argument("axpy: dim mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * g[i];
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace fedgcc
