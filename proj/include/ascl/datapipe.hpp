#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ascl/numerics.hpp"

namespace ascl {

/// Samples plus class labels. Labels exist only for the probes; training
/// never reads them.
struct Dataset {
    Mat samples;
    std::vector<std::int32_t> labels;
    std::uint32_t num_classes = 0;
    std::map<std::string, std::string> metadata;

    std::size_t size() const noexcept { return samples.rows; }
    std::size_t dim() const noexcept { return samples.cols; }
    void validate() const;
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Class centers on a sphere of radius `separation`, unit-variance isotropic
/// noise around each. Samples are stored class-major.
Dataset gen_gaussian_clusters(std::uint32_t num_classes, std::size_t per_class, std::size_t dim,
                              double separation, Rng& rng);

/// Two interleaved half circles in the plane, with Gaussian noise.
Dataset two_moons_planar(std::size_t per_class, double noise_sigma, Rng& rng);

/// Zero-pads to `dim` and applies a random rotation drawn from `rng`.
Dataset embed_rotated(const Dataset& planar, std::size_t dim, Rng& rng);

Dataset gen_two_moons(std::size_t per_class, double noise_sigma, std::size_t dim, Rng& rng);

/// Every `every`-th sample (positions every-1, 2*every-1, ...) goes to the
/// test split, the rest to train.
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, std::size_t every = 5);

void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

enum class AugmentKind { Weak, Strong };

struct AugmentPolicy {
    AugmentKind kind = AugmentKind::Weak;
    double jitter_sigma = 0.05;
    double drop_prob = 0.0;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
    bool rotate = false;
    double max_rotation = 0.7853981633974483;  // radians, for the planar rotation

    void validate() const;
    static AugmentPolicy weak();
    static AugmentPolicy strong();
    friend bool operator==(const AugmentPolicy&, const AugmentPolicy&) = default;
};

/// Scale, then jitter, then (strong only) coordinate dropout and a planar
/// rotation of a random coordinate pair. Pure given the rng stream.
Vec augment(std::span<const double> x, const AugmentPolicy& policy, Rng& rng);

struct ViewPair {
    Vec query_view;   // strong
    Vec target_view;  // weak
    std::size_t source = 0;
};

struct Batch {
    std::vector<std::size_t> indices;
    Mat queries;
    Mat targets;
};

/// Shuffles once per epoch and builds one view pair per sample. Every
/// random draw is keyed by (epoch_seed, sample index, branch), so views do
/// not depend on batch size or on which batch a sample lands in.
std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size,
                                std::uint64_t epoch_seed, const AugmentPolicy& query_policy,
                                const AugmentPolicy& target_policy);

ViewPair make_view_pair(const Dataset& ds, std::size_t index, std::uint64_t epoch_seed,
                        const AugmentPolicy& query_policy, const AugmentPolicy& target_policy);

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t epoch_seed);

}  // namespace ascl
