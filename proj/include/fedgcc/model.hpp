#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fedgcc/numerics.hpp"
#include "fedgcc/rng.hpp"

namespace fedgcc {

// Row-major dense matrix, just enough for MLP forward/backward.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

struct Batch {
    Matrix inputs;  // n x p
    Vec targets;    // length n
};

// Fully connected layer, y = x W + b with W laid out fan_in x fan_out.
struct Layer {
    Matrix w;
    Vec b;
};

// Feed-forward net with ReLU hidden layers and a linear scalar output.
// dims = [p, h1, ..., hk, 1]. The default predictor is [p, 128, 128, 1].
struct MlpModel {
    std::vector<std::size_t> dims;
    std::vector<Layer> layers;

    std::size_t param_count() const {
        std::size_t d = 0;
        for (const Layer& l : layers) d += l.w.data.size() + l.b.size();
        return d;
    }
};

inline MlpModel make_mlp(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2)
        throw std::invalid_argument("make_mlp: need at least input and output dims");
    MlpModel m;
    m.dims = dims;
    m.layers.resize(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        m.layers[l].w = Matrix(dims[l], dims[l + 1]);
        m.layers[l].b.assign(dims[l + 1], 0.0);
    }
    return m;
}

// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), drawn row-major
// layer by layer; biases stay zero and consume no draws.
inline MlpModel glorot_init(const std::vector<std::size_t>& dims, RngStream& rng) {
    MlpModel m = make_mlp(dims);
    for (Layer& l : m.layers) {
        const double limit =
            std::sqrt(6.0 / static_cast<double>(l.w.rows + l.w.cols));
        for (double& w : l.w.data) w = (2.0 * rng.next_uniform() - 1.0) * limit;
    }
    return m;
}

/// The paper's predictor: window p in, hidden 128/128, scalar out.
inline MlpModel init_params(std::size_t window, RngStream& rng) {
    if (window < 1) throw std::invalid_argument("init_params: window must be >= 1");
    return glorot_init({window, 128, 128, 1}, rng);
}

/// Predictions for an n x p input matrix. Hidden layers are affine + ReLU,
/// the output layer affine only.
inline Vec forward(const MlpModel& m, const Matrix& inputs) {
    if (inputs.cols != m.dims.front())
        throw std::invalid_argument("forward: input width mismatch");
    const std::size_t n = inputs.rows;
    Matrix cur = inputs;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const Layer& layer = m.layers[l];
        Matrix next(n, layer.w.cols);
        for (std::size_t r = 0; r < n; ++r) {
            double* out = next.row(r);
            const double* in = cur.row(r);
            for (std::size_t c = 0; c < layer.w.cols; ++c) out[c] = layer.b[c];
            for (std::size_t i = 0; i < layer.w.rows; ++i) {
                const double a = in[i];
                const double* wrow = layer.w.row(i);
                for (std::size_t c = 0; c < layer.w.cols; ++c) out[c] += a * wrow[c];
            }
        }
        if (l + 1 < m.layers.size()) {
            for (double& x : next.data) x = x > 0.0 ? x : 0.0;
        }
        cur = std::move(next);
    }
    Vec pred(n);
    for (std::size_t r = 0; r < n; ++r) pred[r] = cur.at(r, 0);
    return pred;
}

/// (1/n) * sum (pred_i - target_i)^2, no 1/2 factor.
inline double mse_loss(const Vec& pred, const Vec& target) {
    if (pred.size() != target.size())
        throw std::invalid_argument("mse_loss: length mismatch");
    if (pred.empty()) throw std::invalid_argument("mse_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - target[i];
        s += r * r;
    }
    return s / static_cast<double>(pred.size());
}

// Flattening order: for each layer, W row-major then b. Flat index 0 is
// W1[0][0]. flatten/unflatten round-trip bit exactly.
inline ParamVector flatten(const MlpModel& m) {
    ParamVector v;
    v.reserve(m.param_count());
    for (const Layer& l : m.layers) {
        v.insert(v.end(), l.w.data.begin(), l.w.data.end());
        v.insert(v.end(), l.b.begin(), l.b.end());
    }
    return v;
}

inline MlpModel unflatten(const std::vector<std::size_t>& dims,
                          const ParamVector& v) {
    MlpModel m = make_mlp(dims);
    if (v.size() != m.param_count())
        throw std::invalid_argument("unflatten: dimension mismatch");
    std::size_t off = 0;
    for (Layer& l : m.layers) {
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(off),
                  v.begin() + static_cast<std::ptrdiff_t>(off + l.w.data.size()),
                  l.w.data.begin());
        off += l.w.data.size();
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(off),
                  v.begin() + static_cast<std::ptrdiff_t>(off + l.b.size()),
                  l.b.begin());
        off += l.b.size();
    }
    return m;
}

/// params - lr * grad, elementwise.
inline ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                            double lr) {
    if (params.size() != grad.size())
        throw std::invalid_argument("sgd_step: dim mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be > 0");
    return axpy(params, -lr, grad);
}

/// In-place model update walking the canonical flatten order.
inline void sgd_step_inplace(MlpModel& m, const ParamVector& grad, double lr) {
    if (grad.size() != m.param_count())
        throw std::invalid_argument("sgd_step_inplace: dim mismatch");
    std::size_t off = 0;
    for (Layer& l : m.layers) {
        for (double& w : l.w.data) w -= lr * grad[off++];
        for (double& b : l.b) b -= lr * grad[off++];
    }
}

struct LossGrad {
    double loss;
    ParamVector grad;
};

// Exact gradient of mse_loss via hand-derived reverse mode. ReLU
// subgradient at exactly 0 is 0. Returns the batch loss as well since the
// forward pass is computed anyway.
inline LossGrad backward(const MlpModel& m, const Batch& batch) {
    const std::size_t n = batch.inputs.rows;
    if (n == 0 || batch.targets.size() != n)
        throw std::invalid_argument("backward: invalid batch");
    if (batch.inputs.cols != m.dims.front())
        throw std::invalid_argument("backward: input width mismatch");
    if (m.dims.back() != 1)
        throw std::invalid_argument("backward: output layer must be scalar");

    const std::size_t L = m.layers.size();

    // Forward, keeping pre-activations per layer. acts[l] is the input to
    // layer l (post-ReLU for l > 0).
    std::vector<Matrix> acts(L + 1);
    std::vector<Matrix> zs(L);
    acts[0] = batch.inputs;
    for (std::size_t l = 0; l < L; ++l) {
        const Layer& layer = m.layers[l];
        Matrix z(n, layer.w.cols);
        for (std::size_t r = 0; r < n; ++r) {
            double* out = z.row(r);
            const double* in = acts[l].row(r);
            for (std::size_t c = 0; c < layer.w.cols; ++c) out[c] = layer.b[c];
            for (std::size_t i = 0; i < layer.w.rows; ++i) {
                const double a = in[i];
                const double* wrow = layer.w.row(i);
                for (std::size_t c = 0; c < layer.w.cols; ++c) out[c] += a * wrow[c];
            }
        }
        zs[l] = z;
        if (l + 1 < L) {
            for (double& x : z.data) x = x > 0.0 ? x : 0.0;
        }
        acts[l + 1] = std::move(z);
    }

    double loss = 0.0;
    Matrix delta(n, 1);  // dL/dz for the current layer, starts at the output
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double res = acts[L].at(r, 0) - batch.targets[r];
        loss += res * res;
        delta.at(r, 0) = 2.0 * inv_n * res;
    }
    loss /= static_cast<double>(n);  // same rounding as mse_loss

    // Per-layer gradient blocks, assembled into the flat vector at the end.
    std::vector<Matrix> grad_w(L);
    std::vector<Vec> grad_b(L);
    for (std::size_t li = L; li-- > 0;) {
        const Layer& layer = m.layers[li];
        grad_w[li] = Matrix(layer.w.rows, layer.w.cols);
        grad_b[li].assign(layer.w.cols, 0.0);

        // dW = acts[li]^T delta, db = column sums of delta
        for (std::size_t r = 0; r < n; ++r) {
            const double* in = acts[li].row(r);
            const double* dz = delta.row(r);
            for (std::size_t c = 0; c < layer.w.cols; ++c) grad_b[li][c] += dz[c];
            for (std::size_t i = 0; i < layer.w.rows; ++i) {
                const double a = in[i];
                if (a == 0.0) continue;
                double* gw = grad_w[li].row(i);
                for (std::size_t c = 0; c < layer.w.cols; ++c) gw[c] += a * dz[c];
            }
        }

        if (li == 0) break;

        // delta_prev = (delta W^T) masked by ReLU'(z_{li-1})
        Matrix prev(n, layer.w.rows);
        for (std::size_t r = 0; r < n; ++r) {
            const double* dz = delta.row(r);
            const double* zrow = zs[li - 1].row(r);
            double* dp = prev.row(r);
            for (std::size_t i = 0; i < layer.w.rows; ++i) {
                if (zrow[i] > 0.0) {
                    const double* wrow = layer.w.row(i);
                    double s = 0.0;
                    for (std::size_t c = 0; c < layer.w.cols; ++c)
                        s += dz[c] * wrow[c];
                    dp[i] = s;
                } else {
                    dp[i] = 0.0;
                }
            }
        }
        delta = std::move(prev);
    }

    LossGrad out;
    out.loss = loss;
    out.grad.reserve(m.param_count());
    for (std::size_t l = 0; l < L; ++l) {
        out.grad.insert(out.grad.end(), grad_w[l].data.begin(),
                        grad_w[l].data.end());
        out.grad.insert(out.grad.end(), grad_b[l].begin(), grad_b[l].end());
    }
    return out;
}

}  // namespace fedgcc
