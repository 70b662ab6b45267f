#include "ascl/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "ascl/kernels.hpp"
#include "ascl/objective.hpp"
#include "ascl/probe.hpp"

namespace ascl {

using nlohmann::json;

json to_json(const MetricsRecord& r) {
    json j{{"step", r.step},
           {"epoch", r.epoch},
           {"loss", r.loss},
           {"mean_confidence", r.mean_confidence},
           {"mean_label_entropy", r.mean_label_entropy},
           {"lr", r.lr}};
    if (r.knn_accuracy) {
        j["knn_accuracy"] = *r.knn_accuracy;
    }
    if (r.wall_seconds) {
        j["wall_seconds"] = *r.wall_seconds;
    }
    return j;
}

std::string to_log_line(const MetricsRecord& r) {
    return to_json(r).dump();
}

MetricsRecord metrics_from_json(const json& j) {
    MetricsRecord r;
    r.step = j.at("step").get<std::uint64_t>();
    r.epoch = j.at("epoch").get<std::uint64_t>();
    r.loss = j.at("loss").get<double>();
    r.mean_confidence = j.at("mean_confidence").get<double>();
    r.mean_label_entropy = j.at("mean_label_entropy").get<double>();
    r.lr = j.at("lr").get<double>();
    if (j.contains("knn_accuracy")) {
        r.knn_accuracy = j["knn_accuracy"].get<double>();
    }
    if (j.contains("wall_seconds")) {
        r.wall_seconds = j["wall_seconds"].get<double>();
    }
    return r;
}

RunConfig prepare_config(RunConfig config, std::size_t input_dim) {
    require(input_dim >= 1, ErrorCode::InvalidArgument, "dataset has zero width");
    require(!config.model.encoder.widths.empty() && !config.model.projector.widths.empty(),
            ErrorCode::InvalidArgument, "config: model widths missing");
    config.model.encoder.widths.front() = input_dim;
    if (is_byol(config.method)) {
        config.model.use_predictor = true;
        if (config.model.predictor.widths.size() >= 2) {
            config.model.predictor.widths.front() = config.model.projector.output_width();
            config.model.predictor.widths.back() = config.model.projector.output_width();
        }
    }
    config.validate();
    return config;
}

namespace {

double mean(const Vec& v) {
    // Fixed left-to-right order keeps the value independent of threading.
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

Trainer::Trainer(RunConfig config, Dataset train, Dataset test)
    : config_(prepare_config(std::move(config), train.dim())),
      train_(std::move(train)),
      test_(std::move(test)),
      bank_(config_.bank_capacity, config_.model.projector.output_width()),
      rng_(config_.seed),
      started_(std::chrono::steady_clock::now()) {
    require(train_.size() > 0, ErrorCode::InvalidArgument, "training set is empty");
    require(test_.size() == 0 || test_.dim() == train_.dim(), ErrorCode::InvalidArgument,
            "train/test width mismatch");
    params_ = init_params(config_.model, rng_);
    optimizer_ = make_optimizer_state(params_);
}

Trainer Trainer::resume(const Checkpoint& ckpt, Dataset train, Dataset test) {
    Trainer t(ckpt.config, std::move(train), std::move(test));
    require(t.config_ == ckpt.config, ErrorCode::InvalidState,
            "resume: checkpoint config does not match the dataset");
    require(ckpt.params.spec == t.config_.model, ErrorCode::InvalidState,
            "resume: checkpoint model does not match its config");
    t.params_ = ckpt.params;
    t.optimizer_ = ckpt.optimizer;
    require(t.optimizer_.velocity.size() == make_optimizer_state(t.params_).velocity.size(),
            ErrorCode::InvalidState, "resume: optimizer state does not match the model");
    t.rng_ = Rng::from_state(ckpt.rng);
    t.step_ = ckpt.step;
    t.epochs_done_ = ckpt.epochs_done;
    t.bank_ = MemoryBank::restore(ckpt.bank_capacity, t.config_.model.projector.output_width(),
                                  ckpt.bank_entries);
    return t;
}

Checkpoint Trainer::checkpoint() const {
    return {config_,       params_, optimizer_,          rng_.state(), step_, epochs_done_,
            bank_.capacity(), bank_.snapshot()};
}

std::uint64_t Trainer::epoch_seed(std::uint64_t epoch) const {
    return Rng(config_.seed).split(1).split(epoch).next_u64();
}

std::vector<MetricsRecord> Trainer::run(std::optional<std::size_t> stop_after_epochs) {
    const std::size_t stop = std::min<std::size_t>(stop_after_epochs.value_or(config_.epochs),
                                                   config_.epochs);
    std::vector<MetricsRecord> log;
    while (epochs_done_ < stop) {
        auto records = run_epoch();
        log.insert(log.end(), records.begin(), records.end());
    }
    return log;
}

std::vector<MetricsRecord> Trainer::run_epoch() {
    require(!done(), ErrorCode::InvalidState, "run_epoch: training already finished");
    const std::uint64_t epoch = epochs_done_;
    const std::vector<Batch> batches = make_batches(
        train_, config_.batch_size, epoch_seed(epoch), config_.query_augment, config_.target_augment);

    std::vector<MetricsRecord> records;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const double progress =
            (static_cast<double>(epoch) +
             static_cast<double>(b) / static_cast<double>(batches.size())) /
            static_cast<double>(config_.epochs);
        const double lr = cosine_lr(progress, config_.base_lr());
        const StepStats s = is_byol(config_.method) ? byol_step(batches[b], lr)
                                                    : contrastive_step(batches[b], lr);
        ++step_;
        MetricsRecord r;
        r.step = step_;
        r.epoch = epoch + 1;
        r.loss = s.loss;
        r.mean_confidence = s.mean_confidence;
        r.mean_label_entropy = s.mean_label_entropy;
        r.lr = lr;
        records.push_back(r);
    }
    ++epochs_done_;

    const bool probe = epochs_done_ % config_.knn_every == 0 || done();
    if (probe && test_.size() > 0 && !records.empty()) {
        records.back().knn_accuracy = knn_probe(params_, train_, test_, config_.knn);
    }
    if (config_.record_wall_time && !records.empty()) {
        records.back().wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    }
    return records;
}

Trainer::StepStats Trainer::contrastive_step(const Batch& batch, double lr) {
    const std::size_t b = batch.queries.rows;
    const std::size_t dim = config_.model.projector.output_width();
    std::vector<ForwardCache> caches(b);
    Mat queries(b, dim);
    Mat targets(b, dim);
    parallel_for(Exec::Parallel, b, [&](std::size_t i) {
        OnlineForward f = forward_online(params_, batch.queries.row(i));
        std::copy(f.projection.begin(), f.projection.end(), queries.row(i).begin());
        caches[i] = std::move(f.cache);
        const Vec z_t = forward_momentum(params_, batch.targets.row(i));
        std::copy(z_t.begin(), z_t.end(), targets.row(i).begin());
    });

    const Mat bank = bank_.snapshot();
    kernels::ContrastiveBatch out = kernels::contrastive_batch(
        queries, targets, bank, config_.label_config(), config_.temperature, Exec::Parallel);

    const double inv_b = 1.0 / static_cast<double>(b);
    for (double& g : out.grad_queries.values) {
        g *= inv_b;
    }
    const OnlineNets grads =
        kernels::backward_batch(params_, caches, out.grad_queries, Mat{}, Exec::Parallel);
    sgd_step(params_, grads, optimizer_,
             {lr, config_.sgd_momentum, config_.weight_decay});
    ema_update(params_, config_.ema_momentum);
    bank_.enqueue_batch(targets);
    return {mean(out.loss), mean(out.confidence), mean(out.label_entropy)};
}

Trainer::StepStats Trainer::byol_step(const Batch& batch, double lr) {
    const std::size_t b = batch.queries.rows;
    const std::size_t dim = config_.model.projector.output_width();
    std::vector<ForwardCache> caches(b);
    Mat predictions(b, dim);
    Mat targets(b, dim);
    parallel_for(Exec::Parallel, b, [&](std::size_t i) {
        OnlineForward f = forward_online(params_, batch.queries.row(i), true);
        std::copy(f.prediction.begin(), f.prediction.end(), predictions.row(i).begin());
        caches[i] = std::move(f.cache);
        const Vec z_t = forward_momentum(params_, batch.targets.row(i));
        std::copy(z_t.begin(), z_t.end(), targets.row(i).begin());
    });

    // In-batch neighbours need at least two other samples; smaller (final,
    // partial) batches fall back to one-hot labels.
    const bool soft = config_.method == Method::ByolAscl && b >= 3;
    std::vector<PseudoLabel> labels;
    if (soft) {
        labels = byol_inbatch_labels(targets, config_.num_neighbors,
                                     config_.sharpening_temperature);
    } else {
        for (std::size_t i = 0; i < b; ++i) {
            PseudoLabel y{Vec(b, 0.0), LabelStrategy::OneHot};
            y.weights[i] = 1.0;
            labels.push_back(std::move(y));
        }
    }
    const Vec conf = b >= 3 ? byol_inbatch_confidences(targets, config_.sharpening_temperature)
                            : Vec(b, 0.0);
    Vec entropy(b);
    for (std::size_t i = 0; i < b; ++i) {
        entropy[i] = shannon_entropy(labels[i].weights);
    }

    const ByolBatchLoss loss = byol_soft_loss(predictions, targets, labels);
    const OnlineNets grads = kernels::backward_batch(params_, caches, Mat{},
                                                     loss.grad_wrt_predictions, Exec::Parallel);
    sgd_step(params_, grads, optimizer_,
             {lr, config_.sgd_momentum, config_.weight_decay});
    ema_update(params_, config_.ema_momentum);
    return {loss.value, mean(conf), mean(entropy)};
}

RunSummary summarize(const std::vector<MetricsRecord>& log) {
    RunSummary s;
    s.steps = log.size();
    if (log.empty()) {
        return s;
    }
    s.final_loss = log.back().loss;
    for (const MetricsRecord& r : log) {
        if (r.knn_accuracy) {
            s.final_knn_accuracy = *r.knn_accuracy;
            s.best_knn_accuracy = std::max(s.best_knn_accuracy, *r.knn_accuracy);
        }
    }
    const std::size_t tenth = std::max<std::size_t>(1, log.size() / 10);
    for (std::size_t i = 0; i < tenth; ++i) {
        s.confidence_first10 += log[i].mean_confidence;
        s.confidence_last10 += log[log.size() - tenth + i].mean_confidence;
    }
    s.confidence_first10 /= static_cast<double>(tenth);
    s.confidence_last10 /= static_cast<double>(tenth);
    return s;
}

std::optional<double> knn_at_epoch(const std::vector<MetricsRecord>& log, std::uint64_t epoch) {
    for (const MetricsRecord& r : log) {
        if (r.epoch == epoch && r.knn_accuracy) {
            return r.knn_accuracy;
        }
    }
    return std::nullopt;
}

std::string compare_header() {
    return "strategy,k,tau,tau_prime,epochs,steps,final_loss,final_knn_accuracy,"
           "best_knn_accuracy,confidence_first10,confidence_last10";
}

std::string compare_row(const RunConfig& config, const RunSummary& summary) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.6g,%.6g,%zu,%zu,%.6f,%.4f,%.4f,%.6f,%.6f",
                  std::string(to_string(config.method)).c_str(), config.num_neighbors,
                  config.temperature, config.sharpening_temperature, config.epochs, summary.steps,
                  summary.final_loss, summary.final_knn_accuracy, summary.best_knn_accuracy,
                  summary.confidence_first10, summary.confidence_last10);
    return buf;
}

TrainResult train_contrastive(const RunConfig& config, const Dataset& train, const Dataset& test) {
    require(!is_byol(config.method), ErrorCode::InvalidArgument,
            "train_contrastive: strategy must be onehot, hard, ahcl or ascl");
    Trainer t(config, train, test);
    auto metrics = t.run();
    return {std::move(metrics), t.checkpoint()};
}

TrainResult train_byol(const RunConfig& config, const Dataset& train, const Dataset& test) {
    require(is_byol(config.method), ErrorCode::InvalidArgument,
            "train_byol: strategy must be byol or byol-ascl");
    Trainer t(config, train, test);
    auto metrics = t.run();
    return {std::move(metrics), t.checkpoint()};
}

}  // namespace ascl
