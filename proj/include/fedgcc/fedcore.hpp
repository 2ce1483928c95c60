#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fedgcc/aggregation.hpp"
#include "fedgcc/compression.hpp"
#include "fedgcc/data.hpp"
#include "fedgcc/model.hpp"
#include "fedgcc/numerics.hpp"
#include "fedgcc/rng.hpp"

namespace fedgcc {

enum class Algorithm { kFedGcc, kFedAvg, kFedProx };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::kFedGcc: return "fedgcc";
        case Algorithm::kFedAvg: return "fedavg";
        case Algorithm::kFedProx: return "fedprox";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "fedgcc") return Algorithm::kFedGcc;
    if (s == "fedavg") return Algorithm::kFedAvg;
    if (s == "fedprox") return Algorithm::kFedProx;
    throw std::invalid_argument("invalid-argument: unknown algorithm '" + s + "'");
}

struct RoundConfig {
    std::size_t tau = 5;           // local SGD steps per round
    std::size_t batch_size = 20;
    double epsilon = 0.1;          // local learning rate (decays at milestones)
    double eta = 1.0;              // server learning rate (fixed)
    double gamma = 0.01;           // compression ratio, 1 = dense
    StrategyConfig strategy;
    double participation = 1.0;
    std::size_t total_rounds = 200;
    double mu = 0.0;               // FedProx proximal weight
    std::vector<std::size_t> lr_milestones = {100, 150};
    double lr_decay = 0.1;
    std::vector<std::size_t> hidden = {128, 128};
    std::size_t eval_every = 0;    // 0: never record per-round test rmse
    unsigned threads = 1;
};

/// Local epsilon for round t under the multi-step schedule.
inline double epsilon_at_round(const RoundConfig& cfg, std::size_t t) {
    double eps = cfg.epsilon;
    for (std::size_t m : cfg.lr_milestones)
        if (t >= m) eps *= cfg.lr_decay;
    return eps;
}

struct ClientState {
    std::string client_id;
    ParamVector w_local;   // client's copy of the global model
    Vec e;                 // error feedback, zeros until first round
    Vec h;                 // gradient tracking, zeros until first round
    WindowedDataset train;
    RngStream rng;
};

struct RoundRecord {
    std::size_t round = 0;
    double loss = 0.0;                   // mean training loss this round
    std::uint64_t uplink_bytes = 0;      // cumulative
    std::uint64_t downlink_bytes = 0;    // cumulative
    std::optional<double> rmse;          // test metric snapshot, if taken
};

struct LocalRoundResult {
    SparseGradient phi_g;
    ParamVector g_raw;
    double mean_loss = 0.0;
};

// Observation hooks for instrumentation (conservation checks, correlation
// dumps). Everything is passed by const reference and only valid during the
// call.
struct RoundHooks {
    std::function<void(std::size_t round,
                       const std::vector<std::size_t>& participants,
                       const std::vector<LocalRoundResult>& results,
                       const ParamVector& g_t)>
        on_round;
    std::function<void(std::size_t round, const CorrelationMatrix& rho)>
        on_correlation;
};

namespace detail {

/// Static-partition parallel loop; slots are disjoint so results do not
/// depend on the thread count.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

/// grad += mu * (current - anchor), walking the canonical flatten order.
inline void add_proximal(ParamVector& grad, const MlpModel& current,
                         const MlpModel& anchor, double mu) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < current.layers.size(); ++l) {
        const Layer& cur = current.layers[l];
        const Layer& anc = anchor.layers[l];
        for (std::size_t i = 0; i < cur.w.data.size(); ++i, ++off)
            grad[off] += mu * (cur.w.data[i] - anc.w.data[i]);
        for (std::size_t i = 0; i < cur.b.size(); ++i, ++off)
            grad[off] += mu * (cur.b[i] - anc.b[i]);
    }
}

inline Batch sample_batch(const WindowedDataset& train, std::size_t batch_size,
                          RngStream& rng) {
    const std::size_t n = train.size();
    Batch b;
    b.inputs = Matrix(batch_size, train.window);
    b.targets.resize(batch_size);
    for (std::size_t j = 0; j < batch_size; ++j) {
        const std::size_t idx = rng.next_index(n);
        const double* src = train.inputs.row(idx);
        double* dst = b.inputs.row(j);
        for (std::size_t c = 0; c < train.window; ++c) dst[c] = src[c];
        b.targets[j] = train.targets[idx];
    }
    return b;
}

}  // namespace detail

/// ceil(participation * M) distinct clients per round. Full participation
/// returns everyone in id order without consuming RNG draws; otherwise a
/// partial Fisher-Yates draw, result sorted ascending.
inline std::vector<std::size_t> sample_clients(std::size_t num_clients,
                                               double participation,
                                               RngStream& rng) {
    if (!(participation > 0.0 && participation <= 1.0))
        throw std::invalid_argument(
            "invalid-argument: participation must be in (0, 1]");
    if (num_clients == 0)
        throw std::invalid_argument("invalid-argument: no clients");

    std::vector<std::size_t> all(num_clients);
    std::iota(all.begin(), all.end(), 0);
    if (participation >= 1.0) return all;

    const auto k = static_cast<std::size_t>(std::ceil(
        participation * static_cast<double>(num_clients) - 1e-9));
    const std::size_t take = std::clamp<std::size_t>(k, 1, num_clients);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.next_index(num_clients - i);
        std::swap(all[i], all[j]);
    }
    all.resize(take);
    std::sort(all.begin(), all.end());
    return all;
}

// One client's local epoch (Algorithm 1, client side, minus the
// e/h/broadcast updates which happen in finish_round_client):
//   for c in [0, tau):  g_c = e + grad(w_c; B_c) - h;  w_{c+1} = w_c - eps g_c
//   g_raw = (w_t - w_tau) / eps;  phi_g = topk(g_raw, gamma)
// e and h stay frozen here. FedAvg/FedProx run the same loop with e = h = 0
// (never updated); FedProx additionally adds mu (w_c - w_t) to each batch
// gradient. Mutates only the client's RNG.
inline LocalRoundResult local_round(ClientState& client, const MlpModel& global,
                                    const ParamVector& w_t_flat,
                                    const RoundConfig& cfg, double epsilon_t,
                                    Algorithm alg) {
    if (client.train.size() == 0)
        throw std::runtime_error("empty-dataset: client " + client.client_id);

    const bool corrected = alg == Algorithm::kFedGcc;
    const double gamma = corrected ? cfg.gamma : 1.0;

    MlpModel model = global;
    double loss_sum = 0.0;
    for (std::size_t c = 0; c < cfg.tau; ++c) {
        const Batch batch =
            detail::sample_batch(client.train, cfg.batch_size, client.rng);
        LossGrad lg = backward(model, batch);
        loss_sum += lg.loss;
        if (alg == Algorithm::kFedProx)
            detail::add_proximal(lg.grad, model, global, cfg.mu);
        if (corrected) {
            for (std::size_t i = 0; i < lg.grad.size(); ++i)
                lg.grad[i] += client.e[i] - client.h[i];
        }
        sgd_step_inplace(model, lg.grad, epsilon_t);
    }

    LocalRoundResult out;
    const ParamVector w_tau = flatten(model);
    out.g_raw.resize(w_t_flat.size());
    for (std::size_t i = 0; i < w_t_flat.size(); ++i)
        out.g_raw[i] = (w_t_flat[i] - w_tau[i]) / epsilon_t;
    out.phi_g = sparsify_topk(out.g_raw, gamma);
    out.mean_loss = loss_sum / static_cast<double>(cfg.tau);
    return out;
}

/// Post-aggregation client bookkeeping: Eq. (6)/(7) plus the local copy of
/// the global update. `dense_phi` is densify(result.phi_g), computed once by
/// the caller.
inline void finish_round_client(ClientState& client,
                                const LocalRoundResult& result,
                                const Vec& dense_phi, const ParamVector& g_t,
                                const ParamVector& w_t_flat,
                                const RoundConfig& cfg, Algorithm alg) {
    if (alg == Algorithm::kFedGcc) {
        update_error_feedback(client.e, result.g_raw, result.phi_g);
        const double inv_tau = 1.0 / static_cast<double>(cfg.tau);
        for (std::size_t i = 0; i < client.h.size(); ++i)
            client.h[i] += inv_tau * (dense_phi[i] - g_t[i]);
    }
    client.w_local = axpy(w_t_flat, -cfg.eta, g_t);
}

struct RoundOutcome {
    RoundRecord record;
    ParamVector w_next;
};

// One communication round. Pipeline: sample M_t, local rounds (parallel),
// correlation + personalization on the server, broadcast g_t, then client
// bookkeeping (parallel). The server and every participant apply the same
// w_t - eta g_t expression to identical inputs, so their models stay
// bit-identical.
inline RoundOutcome run_round(MlpModel& server_model,
                              std::vector<ClientState>& clients,
                              const std::vector<std::size_t>& participants,
                              const RoundConfig& cfg, Algorithm alg,
                              std::size_t round_index,
                              std::uint64_t& uplink_total,
                              std::uint64_t& downlink_total,
                              const RoundHooks& hooks = {}) {
    if (participants.empty())
        throw std::invalid_argument("run_round: no participants");

    const double epsilon_t = epsilon_at_round(cfg, round_index);
    const ParamVector w_t_flat = flatten(server_model);
    const std::size_t P = participants.size();

    std::vector<LocalRoundResult> results(P);
    detail::parallel_for(P, cfg.threads, [&](std::size_t i) {
        results[i] = local_round(clients[participants[i]], server_model,
                                 w_t_flat, cfg, epsilon_t, alg);
    });

    double loss_sum = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
        uplink_total += wire_bytes(results[i].phi_g);
        loss_sum += results[i].mean_loss;
    }
    const double mean_loss = loss_sum / static_cast<double>(P);
    if (!std::isfinite(mean_loss))
        throw std::runtime_error("non-finite-loss: round " +
                                 std::to_string(round_index) + " diverged");

    std::vector<Vec> dense(P);
    detail::parallel_for(P, cfg.threads, [&](std::size_t i) {
        dense[i] = densify(results[i].phi_g);
    });

    const StrategyConfig& strat =
        alg == Algorithm::kFedGcc ? cfg.strategy : StrategyConfig{StrategyKind::kMean};
    std::vector<ParamVector> personalized(P);
    if (strat.kind == StrategyKind::kMean || P == 1) {
        // A lone participant is its own aggregate under every strategy.
        for (std::size_t i = 0; i < P; ++i) personalized[i] = dense[i];
    } else {
        const CorrelationMatrix rho = correlation_matrix_dense(dense);
        if (hooks.on_correlation) hooks.on_correlation(round_index, rho);
        detail::parallel_for(P, cfg.threads, [&](std::size_t i) {
            personalized[i] = apply_strategy(strat, rho, dense, i);
        });
    }

    const ParamVector g_t = server_average(personalized);
    downlink_total += dense_wire_bytes(g_t.size()) * P;

    if (hooks.on_round) hooks.on_round(round_index, participants, results, g_t);

    detail::parallel_for(P, cfg.threads, [&](std::size_t i) {
        finish_round_client(clients[participants[i]], results[i], dense[i], g_t,
                            w_t_flat, cfg, alg);
    });

    RoundOutcome out;
    out.w_next = axpy(w_t_flat, -cfg.eta, g_t);
    server_model = unflatten(server_model.dims, out.w_next);
    out.record.round = round_index;
    out.record.loss = mean_loss;
    out.record.uplink_bytes = uplink_total;
    out.record.downlink_bytes = downlink_total;
    return out;
}

// Assembles per-client states from raw series: standardize on the training
// slots, window, and attach the client's batch RNG stream. Clients are
// ordered by id; stream ids follow that order.
struct Federation {
    std::vector<ClientState> clients;
    std::vector<WindowedDataset> test_sets;  // same order as clients
};

inline Federation build_federation(const SeriesMap& series, std::size_t window,
                                   std::optional<std::size_t> train_slots,
                                   std::uint64_t seed) {
    if (series.empty())
        throw std::invalid_argument("invalid-argument: no client series");
    Federation fed;
    std::size_t index = 0;
    for (const auto& [id, ts] : series) {
        const std::size_t split_at =
            train_slots ? *train_slots : default_train_slots(ts.slot_count());
        const SplitSpec split{split_at};
        const StandardizedSeries std_series = standardize(ts, split);
        TrainTest tt = make_windows(std_series, window, split);

        ClientState cs{id,
                       {},
                       {},
                       {},
                       std::move(tt.train),
                       RngStream(seed, streams::kClientBatchBase + index)};
        fed.clients.push_back(std::move(cs));
        fed.test_sets.push_back(std::move(tt.test));
        ++index;
    }
    return fed;
}

struct TrainResult {
    MlpModel model;
    std::vector<RoundRecord> history;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t downlink_bytes = 0;
};

inline void validate_round_config(const RoundConfig& cfg,
                                  std::size_t num_clients) {
    if (cfg.tau < 1) throw std::invalid_argument("invalid-argument: tau >= 1");
    if (cfg.batch_size < 1)
        throw std::invalid_argument("invalid-argument: batch_size >= 1");
    if (!(cfg.epsilon > 0.0))
        throw std::invalid_argument("invalid-argument: epsilon > 0");
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("invalid-argument: eta > 0");
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
        throw std::invalid_argument("invalid-argument: gamma must be in (0, 1]");
    if (!(cfg.participation > 0.0 && cfg.participation <= 1.0))
        throw std::invalid_argument(
            "invalid-argument: participation must be in (0, 1]");
    if (!(cfg.mu >= 0.0)) throw std::invalid_argument("invalid-argument: mu >= 0");
    if (!(cfg.strategy.delta >= -1.0 && cfg.strategy.delta <= 1.0))
        throw std::invalid_argument("invalid-argument: delta must be in [-1, 1]");
    if (cfg.strategy.kind == StrategyKind::kKRelevant) {
        const auto participants = static_cast<std::size_t>(std::ceil(
            cfg.participation * static_cast<double>(num_clients) - 1e-9));
        if (cfg.strategy.k < 1 || cfg.strategy.k > std::max<std::size_t>(1, participants))
            throw std::invalid_argument(
                "invalid-argument: k must be in [1, participating clients]");
    }
}

// Runs T communication rounds of the chosen algorithm. `eval_rmse`, when
// set along with cfg.eval_every, records a test metric snapshot into the
// history. Client streams and the sampling stream all derive from `seed`.
inline TrainResult run_training(
    const RoundConfig& cfg, std::vector<ClientState>& clients, Algorithm alg,
    std::uint64_t seed,
    const std::function<double(const MlpModel&)>& eval_rmse = nullptr,
    const RoundHooks& hooks = {}) {
    validate_round_config(cfg, clients.size());
    for (const ClientState& c : clients)
        if (c.train.size() == 0)
            throw std::invalid_argument("empty-dataset: client " + c.client_id +
                                        " has no training samples");

    const std::size_t window = clients.front().train.window;
    for (const ClientState& c : clients)
        if (c.train.window != window)
            throw std::invalid_argument("invalid-argument: window mismatch");

    std::vector<std::size_t> dims;
    dims.push_back(window);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);

    RngStream init_rng(seed, streams::kModelInit);
    TrainResult result;
    result.model = glorot_init(dims, init_rng);
    const std::size_t d = result.model.param_count();

    const ParamVector w0 = flatten(result.model);
    for (ClientState& c : clients) {
        c.w_local = w0;
        c.e.assign(d, 0.0);
        c.h.assign(d, 0.0);
    }

    RngStream sampling_rng(seed, streams::kClientSampling);
    result.history.reserve(cfg.total_rounds);
    for (std::size_t t = 0; t < cfg.total_rounds; ++t) {
        const std::vector<std::size_t> participants =
            sample_clients(clients.size(), cfg.participation, sampling_rng);
        RoundOutcome outcome =
            run_round(result.model, clients, participants, cfg, alg, t,
                      result.uplink_bytes, result.downlink_bytes, hooks);
        if (eval_rmse && cfg.eval_every > 0 &&
            ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.total_rounds))
            outcome.record.rmse = eval_rmse(result.model);
        result.history.push_back(std::move(outcome.record));
    }
    return result;
}

/// FEDGCC_THREADS caps worker threads; unset or 0 means one per core.
inline unsigned resolve_threads() {
    if (const char* env = std::getenv("FEDGCC_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

}  // namespace fedgcc
