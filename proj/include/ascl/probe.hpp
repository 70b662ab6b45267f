#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ascl/datapipe.hpp"
#include "ascl/model.hpp"
#include "ascl/parallel.hpp"

namespace ascl {

struct KnnConfig {
    std::size_t k = 20;
    double temperature = 0.1;  // vote weight exp(cos / temperature)
    friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

/// Weighted k-nearest-neighbour vote on cosine similarity. k is clamped to
/// the number of reference rows. Zero feature vectors have similarity 0 to
/// everything. Ties in the vote go to the lower class index.
double knn_accuracy(const Mat& train_features, std::span<const std::int32_t> train_labels,
                    const Mat& test_features, std::span<const std::int32_t> test_labels,
                    std::uint32_t num_classes, const KnnConfig& config, Exec exec = Exec::Parallel);

/// Online-encoder representations f(x) for every sample.
Mat encode_all(const ModelParams& params, const Mat& samples, Exec exec = Exec::Parallel);

/// Projections g(f(x)) for every sample (online copy).
Mat project_all(const ModelParams& params, const Mat& samples, Exec exec = Exec::Parallel);

double knn_probe(const ModelParams& params, const Dataset& train, const Dataset& test,
                 const KnnConfig& config, Exec exec = Exec::Parallel);

struct LinearProbeConfig {
    std::size_t epochs = 100;
    double lr = 0.1;
    double momentum = 0.9;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
};

/// Softmax regression on frozen features, trained by momentum SGD with the
/// lr dropped x0.1 at 60% and again at 80% of the epochs. Returns test
/// accuracy.
double linear_probe_features(const Mat& train_features, std::span<const std::int32_t> train_labels,
                             const Mat& test_features, std::span<const std::int32_t> test_labels,
                             std::uint32_t num_classes, const LinearProbeConfig& config);

double linear_probe(const ModelParams& params, const Dataset& train, const Dataset& test,
                    const LinearProbeConfig& config);

}  // namespace ascl
