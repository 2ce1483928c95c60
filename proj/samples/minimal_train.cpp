// Smallest end-to-end library usage: synthetic data, a short FedGCC run,
// pooled test metrics.

#include <cstdio>

#include "fedgcc/fedgcc.hpp"

int main() {
    using namespace fedgcc;

    const SeriesMap series = generate_synthetic(4, 576, /*seed=*/7, /*het=*/0.5);
    Federation fed = build_federation(series, /*window=*/6, std::nullopt, 7);

    RoundConfig cfg;
    cfg.total_rounds = 20;
    cfg.gamma = 0.1;
    cfg.hidden = {32, 32};
    cfg.strategy.kind = StrategyKind::kKRelevant;
    cfg.strategy.k = 2;

    const TrainResult run =
        run_training(cfg, fed.clients, Algorithm::kFedGcc, /*seed=*/7);
    const MetricsSnapshot m = evaluate(run.model, fed.test_sets);

    std::printf("rounds=%zu final_loss=%.4f rmse=%.4f mae=%.4f r2=%.4f\n",
                run.history.size(), run.history.back().loss, m.rmse, m.mae,
                m.r2);
    std::printf("uplink=%llu bytes, downlink=%llu bytes\n",
                static_cast<unsigned long long>(run.uplink_bytes),
                static_cast<unsigned long long>(run.downlink_bytes));
    return 0;
}
