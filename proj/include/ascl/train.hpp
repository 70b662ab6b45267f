#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ascl/checkpoint.hpp"
#include "ascl/config.hpp"
#include "ascl/datapipe.hpp"
#include "ascl/membank.hpp"
#include "ascl/optim.hpp"

namespace ascl {

/// One line of the metrics log.
struct MetricsRecord {
    std::uint64_t step = 0;   // optimizer steps taken so far (1-based)
    std::uint64_t epoch = 0;  // 1-based epoch the step belongs to
    double loss = 0.0;
    double mean_confidence = 0.0;
    double mean_label_entropy = 0.0;
    double lr = 0.0;
    std::optional<double> knn_accuracy;  // last step of a probed epoch
    std::optional<double> wall_seconds;  // only when the config asks for it

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

nlohmann::json to_json(const MetricsRecord& r);
std::string to_log_line(const MetricsRecord& r);
MetricsRecord metrics_from_json(const nlohmann::json& j);

struct TrainResult {
    std::vector<MetricsRecord> metrics;
    Checkpoint checkpoint;
};

/// Single-writer training loop covering the memory-bank methods (one-hot,
/// Hard, AHCL, ASCL) and the negative-free ones (BYOL, BYOL+ASCL).
/// Self-supervised steps read only `train.samples`; labels of `train` and
/// `test` feed the KNN probe.
class Trainer {
public:
    Trainer(RunConfig config, Dataset train, Dataset test);
    static Trainer resume(const Checkpoint& ckpt, Dataset train, Dataset test);

    /// Runs until `stop_after_epochs` (or the configured total) have been
    /// completed. Returns the records produced by this call only.
    std::vector<MetricsRecord> run(std::optional<std::size_t> stop_after_epochs = std::nullopt);

    std::vector<MetricsRecord> run_epoch();
    bool done() const noexcept { return epochs_done_ >= config_.epochs; }

    Checkpoint checkpoint() const;
    const RunConfig& config() const noexcept { return config_; }
    const ModelParams& params() const noexcept { return params_; }
    const MemoryBank& bank() const noexcept { return bank_; }
    std::uint64_t epochs_done() const noexcept { return epochs_done_; }
    std::uint64_t step() const noexcept { return step_; }

    std::uint64_t epoch_seed(std::uint64_t epoch) const;

private:
    struct StepStats {
        double loss;
        double mean_confidence;
        double mean_label_entropy;
    };

    StepStats contrastive_step(const Batch& batch, double lr);
    StepStats byol_step(const Batch& batch, double lr);

    RunConfig config_;
    Dataset train_;
    Dataset test_;
    ModelParams params_;
    OptimizerState optimizer_;
    MemoryBank bank_;
    Rng rng_;
    std::uint64_t step_ = 0;
    std::uint64_t epochs_done_ = 0;
    std::chrono::steady_clock::time_point started_;
};

/// Fills in derived model widths (input width from the data, predictor for
/// BYOL methods) and validates.
RunConfig prepare_config(RunConfig config, std::size_t input_dim);

/// Aggregates of one metrics log, used by `compare` and the trend checks.
struct RunSummary {
    double final_loss = 0.0;
    double final_knn_accuracy = 0.0;
    double best_knn_accuracy = 0.0;
    double confidence_first10 = 0.0;  // mean over the first 10% of steps
    double confidence_last10 = 0.0;   // mean over the last 10% of steps
    std::size_t steps = 0;
};

RunSummary summarize(const std::vector<MetricsRecord>& log);

/// KNN accuracy recorded at the end of `epoch` (1-based), if probed.
std::optional<double> knn_at_epoch(const std::vector<MetricsRecord>& log, std::uint64_t epoch);

std::string compare_header();
std::string compare_row(const RunConfig& config, const RunSummary& summary);

TrainResult train_contrastive(const RunConfig& config, const Dataset& train, const Dataset& test);
TrainResult train_byol(const RunConfig& config, const Dataset& train, const Dataset& test);

}  // namespace ascl
