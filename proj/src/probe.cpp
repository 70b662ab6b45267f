#include "ascl/probe.hpp"

#include <algorithm>
#include <cmath>

#include "ascl/kernels.hpp"
#include "ascl/optim.hpp"

namespace ascl {

namespace {

Mat unit_rows(const Mat& m) {
    Mat out = m;
    for (std::size_t i = 0; i < out.rows; ++i) {
        auto r = out.row(i);
        const double n = l2_norm(r);
        for (double& v : r) {
            v = n > 0.0 ? v / n : 0.0;
        }
    }
    return out;
}

}  // namespace

double knn_accuracy(const Mat& train_features, std::span<const std::int32_t> train_labels,
                    const Mat& test_features, std::span<const std::int32_t> test_labels,
                    std::uint32_t num_classes, const KnnConfig& config, Exec exec) {
    require(config.k >= 1, ErrorCode::InvalidArgument, "knn: k must be >= 1");
    require(config.temperature > 0.0, ErrorCode::InvalidArgument, "knn: temperature must be > 0");
    require(train_features.rows == train_labels.size() &&
                test_features.rows == test_labels.size(),
            ErrorCode::InvalidArgument, "knn: label count mismatch");
    require(train_features.rows > 0, ErrorCode::InvalidArgument, "knn: empty reference set");
    if (test_features.rows == 0) {
        return 0.0;
    }
    const std::size_t k = std::min(config.k, train_features.rows);
    const Mat sims = kernels::matmul_nt(unit_rows(test_features), unit_rows(train_features), exec);

    std::vector<char> correct(test_features.rows, 0);
    parallel_for(exec, test_features.rows, [&](std::size_t i) {
        auto row = sims.row(i);
        Vec votes(num_classes, 0.0);
        for (std::size_t j : topk_indices(row, k)) {
            votes[static_cast<std::size_t>(train_labels[j])] +=
                std::exp(std::clamp(row[j], -1.0, 1.0) / config.temperature);
        }
        const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
        correct[i] = best == test_labels[i] ? 1 : 0;
    });
    const auto hits = std::count(correct.begin(), correct.end(), 1);
    return static_cast<double>(hits) / static_cast<double>(test_features.rows);
}

Mat encode_all(const ModelParams& params, const Mat& samples, Exec exec) {
    Mat out(samples.rows, params.online.encoder.output_width());
    parallel_for(exec, samples.rows, [&](std::size_t i) {
        const Vec r = encode(params, samples.row(i));
        std::copy(r.begin(), r.end(), out.row(i).begin());
    });
    return out;
}

Mat project_all(const ModelParams& params, const Mat& samples, Exec exec) {
    Mat out(samples.rows, params.online.projector.output_width());
    parallel_for(exec, samples.rows, [&](std::size_t i) {
        const Vec z = forward_online(params, samples.row(i)).projection;
        std::copy(z.begin(), z.end(), out.row(i).begin());
    });
    return out;
}

double knn_probe(const ModelParams& params, const Dataset& train, const Dataset& test,
                 const KnnConfig& config, Exec exec) {
    return knn_accuracy(encode_all(params, train.samples, exec), train.labels,
                        encode_all(params, test.samples, exec), test.labels,
                        std::max(train.num_classes, test.num_classes), config, exec);
}

double linear_probe_features(const Mat& train_features, std::span<const std::int32_t> train_labels,
                             const Mat& test_features, std::span<const std::int32_t> test_labels,
                             std::uint32_t num_classes, const LinearProbeConfig& config) {
    require(num_classes >= 1, ErrorCode::InvalidArgument, "linear_probe: no classes");
    require(train_features.rows == train_labels.size() && train_features.rows > 0,
            ErrorCode::InvalidArgument, "linear_probe: bad training set");
    require(config.batch_size >= 1, ErrorCode::InvalidArgument, "linear_probe: batch_size >= 1");
    const std::size_t dim = train_features.cols;
    const std::size_t nc = num_classes;

    // One linear layer; weight rows per class, then the bias.
    Vec weight(nc * dim, 0.0);
    Vec bias(nc, 0.0);
    Vec v_weight(weight.size(), 0.0);
    Vec v_bias(nc, 0.0);

    auto logits_of = [&](std::span<const double> x) {
        Vec z(bias);
        for (std::size_t c = 0; c < nc; ++c) {
            z[c] += dot(std::span<const double>(weight).subspan(c * dim, dim), x);
        }
        return z;
    };

    const Rng base(config.seed);
    std::vector<std::size_t> order(train_features.rows);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = step_lr(static_cast<double>(epoch) / static_cast<double>(config.epochs),
                                  config.lr);
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        Rng rng = base.split(epoch);
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double inv = 1.0 / static_cast<double>(end - start);
            Vec g_weight(weight.size(), 0.0);
            Vec g_bias(nc, 0.0);
            for (std::size_t s = start; s < end; ++s) {
                auto x = train_features.row(order[s]);
                const Vec p = tempered_softmax(logits_of(x), 1.0);
                for (std::size_t c = 0; c < nc; ++c) {
                    const double err =
                        (p[c] - (static_cast<std::size_t>(train_labels[order[s]]) == c ? 1.0 : 0.0)) *
                        inv;
                    g_bias[c] += err;
                    for (std::size_t k = 0; k < dim; ++k) {
                        g_weight[c * dim + k] += err * x[k];
                    }
                }
            }
            sgd_update(weight, g_weight, v_weight, lr, config.momentum, 0.0);
            sgd_update(bias, g_bias, v_bias, lr, config.momentum, 0.0);
        }
    }

    if (test_features.rows == 0) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_features.rows; ++i) {
        const Vec z = logits_of(test_features.row(i));
        const auto best = std::max_element(z.begin(), z.end()) - z.begin();
        hits += best == test_labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(test_features.rows);
}

double linear_probe(const ModelParams& params, const Dataset& train, const Dataset& test,
                    const LinearProbeConfig& config) {
    return linear_probe_features(encode_all(params, train.samples), train.labels,
                                 encode_all(params, test.samples), test.labels,
                                 std::max(train.num_classes, test.num_classes), config);
}

}  // namespace ascl
