#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ascl/error.hpp"

namespace ascl {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * cols, cols};
    }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    bool empty() const noexcept { return rows == 0; }
    void append_row(std::span<const double> r);

    friend bool operator==(const Mat&, const Mat&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
bool all_finite(std::span<const double> v) noexcept;

/// Softmax of logits / temperature, evaluated with max-subtraction.
Vec tempered_softmax(std::span<const double> logits, double temperature);

/// Natural-log entropy, with 0 ln 0 = 0. Rejects inputs that are not a
/// probability vector (negative entry or |sum - 1| > 1e-9).
double shannon_entropy(std::span<const double> dist);

/// Cosine similarity clamped to [-1, 1].
double cosine_sim(std::span<const double> a, std::span<const double> b);

Vec l2_normalize(std::span<const double> v);

/// Indices of the k largest values, descending; ties go to the lower index.
std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k);

/// Counter-based generator: output i of stream `key` is a pure function of
/// (key, i), so any stream can be split off and replayed independently of
/// how many draws its siblings consumed. Distributions are implemented here
/// rather than through <random> so sequences match across standard libraries.
class Rng {
public:
    struct State {
        std::uint64_t key = 0;
        std::uint64_t counter = 0;
        friend bool operator==(const State&, const State&) = default;
    };

    explicit Rng(std::uint64_t seed = 0);

    static Rng from_state(State s);
    State state() const noexcept { return {key_, counter_}; }

    /// Independent child stream; does not advance this generator.
    Rng split(std::uint64_t stream) const;

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ascl
