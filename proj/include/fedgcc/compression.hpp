#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fedgcc/numerics.hpp"

namespace fedgcc {

using ParamVector = Vec;

// Top-gamma sparsified gradient as it travels on the wire: strictly
// increasing indices, one value per index, dense dimension attached.
struct SparseGradient {
    std::uint32_t dim = 0;
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }
};

// Keeps the k = max(1, ceil(gamma*d)) entries of largest modulus; ties on
// |g| break toward the smaller index so the selection is the same on every
// platform. gamma == 1 is the identity compressor. The small shift before
// ceil() guards against gamma*d landing an ulp above an exact integer.
inline SparseGradient sparsify_topk(const ParamVector& g, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("invalid-gamma: gamma must be in (0, 1]");
    if (g.empty())
        throw std::invalid_argument("invalid-gamma: empty gradient");
    const std::size_t d = g.size();

    SparseGradient sg;
    sg.dim = static_cast<std::uint32_t>(d);

    std::size_t k = d;
    if (gamma < 1.0) {
        const double t = gamma * static_cast<double>(d);
        k = static_cast<std::size_t>(std::ceil(t - 1e-9));
        k = std::clamp<std::size_t>(k, 1, d);
    }

    if (k == d) {
        sg.indices.resize(d);
        std::iota(sg.indices.begin(), sg.indices.end(), 0u);
        sg.values = g;
        return sg;
    }

    std::vector<std::uint32_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0u);
    const auto better = [&g](std::uint32_t a, std::uint32_t b) {
        const double ma = std::abs(g[a]);
        const double mb = std::abs(g[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                     idx.end(), better);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());

    sg.indices = std::move(idx);
    sg.values.resize(k);
    for (std::size_t j = 0; j < k; ++j) sg.values[j] = g[sg.indices[j]];
    return sg;
}

inline ParamVector densify(const SparseGradient& sg) {
    ParamVector out(sg.dim, 0.0);
    for (std::size_t j = 0; j < sg.indices.size(); ++j) {
        if (sg.indices[j] >= sg.dim)
            throw std::invalid_argument("densify: index out of range");
        out[sg.indices[j]] = sg.values[j];
    }
    return out;
}

/// e += g - densify(phi_g), elementwise (Eq. 6 bookkeeping).
inline void update_error_feedback(Vec& e, const ParamVector& g,
                                  const SparseGradient& phi_g) {
    if (e.size() != g.size() || g.size() != phi_g.dim)
        throw std::invalid_argument("update_error_feedback: dim mismatch");
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += g[i];
    for (std::size_t j = 0; j < phi_g.indices.size(); ++j)
        e[phi_g.indices[j]] -= phi_g.values[j];
}

// Byte-accounting model used for all algorithms: each transmitted element
// costs a 32-bit value plus a 32-bit index; a fully dense vector ships
// values only (4 bytes each, no index list). Training math stays in 64-bit;
// this models the wire, not the arithmetic.
inline std::uint64_t wire_bytes(const SparseGradient& sg) {
    if (sg.nnz() == sg.dim) return 4ull * sg.dim;
    return 8ull * sg.nnz();
}

inline std::uint64_t dense_wire_bytes(std::size_t dim) { return 4ull * dim; }

// Golden-file framing, little-endian:
//   [dim:u32][nnz:u32][indices:u32 x nnz][values:f32 x nnz]
namespace detail {
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}
inline std::uint32_t get_u32(const std::vector<std::uint8_t>& in,
                             std::size_t off) {
    return static_cast<std::uint32_t>(in[off]) |
           (static_cast<std::uint32_t>(in[off + 1]) << 8) |
           (static_cast<std::uint32_t>(in[off + 2]) << 16) |
           (static_cast<std::uint32_t>(in[off + 3]) << 24);
}
}  // namespace detail

inline std::vector<std::uint8_t> serialize(const SparseGradient& sg) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + 8 * sg.nnz());
    detail::put_u32(out, sg.dim);
    detail::put_u32(out, static_cast<std::uint32_t>(sg.nnz()));
    for (std::uint32_t i : sg.indices) detail::put_u32(out, i);
    for (double v : sg.values)
        detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

inline SparseGradient deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8)
        throw std::invalid_argument("deserialize: truncated header");
    SparseGradient sg;
    sg.dim = detail::get_u32(bytes, 0);
    const std::uint32_t nnz = detail::get_u32(bytes, 4);
    if (bytes.size() != 8 + 8ull * nnz)
        throw std::invalid_argument("deserialize: length mismatch");
    sg.indices.resize(nnz);
    sg.values.resize(nnz);
    for (std::uint32_t j = 0; j < nnz; ++j)
        sg.indices[j] = detail::get_u32(bytes, 8 + 4ull * j);
    for (std::uint32_t j = 0; j < nnz; ++j)
        sg.values[j] = std::bit_cast<float>(
            detail::get_u32(bytes, 8 + 4ull * nnz + 4ull * j));
    return sg;
}

}  // namespace fedgcc
