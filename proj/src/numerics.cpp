#include "ascl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ascl {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::InvalidDistribution: return "invalid-distribution";
        case ErrorCode::InvalidLabel: return "invalid-label";
        case ErrorCode::EmptyBank: return "empty-bank";
        case ErrorCode::InvalidState: return "invalid-state";
        case ErrorCode::Io: return "io";
        case ErrorCode::Format: return "format";
    }
    return "unknown";
}

void Mat::append_row(std::span<const double> r) {
    if (rows == 0 && cols == 0) {
        cols = r.size();
    }
    require(r.size() == cols, ErrorCode::InvalidArgument, "append_row: width mismatch");
    values.insert(values.end(), r.begin(), r.end());
    ++rows;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorCode::InvalidArgument, "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vec tempered_softmax(std::span<const double> logits, double temperature) {
    require(!logits.empty(), ErrorCode::InvalidArgument, "tempered_softmax: empty input");
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::InvalidArgument,
            "tempered_softmax: temperature must be positive");
    require(all_finite(logits), ErrorCode::InvalidArgument, "tempered_softmax: non-finite logit");

    const double top = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - top) / temperature);
        total += out[i];
    }
    for (double& p : out) {
        p /= total;
    }
    return out;
}

double shannon_entropy(std::span<const double> dist) {
    require(!dist.empty(), ErrorCode::InvalidDistribution, "shannon_entropy: empty distribution");
    double total = 0.0;
    for (double p : dist) {
        require(p >= 0.0 && std::isfinite(p), ErrorCode::InvalidDistribution,
                "shannon_entropy: negative or non-finite entry");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidDistribution,
            "shannon_entropy: entries do not sum to one");
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return std::max(h, 0.0);
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorCode::InvalidArgument, "cosine_sim: length mismatch");
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    require(na > 0.0 && nb > 0.0, ErrorCode::InvalidArgument, "cosine_sim: zero-norm input");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vec l2_normalize(std::span<const double> v) {
    const double n = l2_norm(v);
    require(n > 0.0 && std::isfinite(n), ErrorCode::InvalidArgument, "l2_normalize: zero vector");
    Vec out(v.begin(), v.end());
    for (double& x : out) {
        x /= n;
    }
    return out;
}

std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k) {
    require(k <= values.size(), ErrorCode::InvalidArgument, "topk_indices: k exceeds length");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto before = [&](std::size_t a, std::size_t b) {
        return values[a] > values[b] || (values[a] == values[b] && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    idx.resize(k);
    return idx;
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

Rng Rng::from_state(State s) {
    Rng r;
    r.key_ = s.key;
    r.counter_ = s.counter;
    return r;
}

Rng Rng::split(std::uint64_t stream) const {
    Rng child;
    child.key_ = mix64(key_ ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL));
    child.counter_ = 0;
    return child;
}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    // Box-Muller; one sample per pair of draws keeps the state a plain counter.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    require(n > 0, ErrorCode::InvalidArgument, "Rng::below: n must be positive");
    __extension__ using u128 = unsigned __int128;
    const u128 wide = static_cast<u128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
}

}  // namespace ascl
