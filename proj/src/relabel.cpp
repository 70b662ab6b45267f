#include "ascl/relabel.hpp"

#include <algorithm>
#include <cmath>

namespace ascl {

std::string_view to_string(LabelStrategy s) noexcept {
    switch (s) {
        case LabelStrategy::OneHot: return "onehot";
        case LabelStrategy::Hard: return "hard";
        case LabelStrategy::Ahcl: return "ahcl";
        case LabelStrategy::Ascl: return "ascl";
    }
    return "unknown";
}

PseudoLabel onehot_label(std::size_t bank_size) {
    PseudoLabel y{Vec(bank_size + 1, 0.0), LabelStrategy::OneHot};
    y.weights[0] = 1.0;
    return y;
}

Vec similarity_row(std::span<const double> target, const Mat& bank_entries) {
    if (bank_entries.rows == 0) {
        fail(ErrorCode::EmptyBank, "similarity_row: bank is empty");
    }
    require(bank_entries.cols == target.size(), ErrorCode::InvalidArgument,
            "similarity_row: width mismatch");
    Vec d(bank_entries.rows);
    for (std::size_t j = 0; j < bank_entries.rows; ++j) {
        d[j] = cosine_sim(target, bank_entries.row(j));
    }
    return d;
}

Vec similarity_row(std::span<const double> target, const MemoryBank& bank) {
    if (bank.empty()) {
        fail(ErrorCode::EmptyBank, "similarity_row: bank is empty");
    }
    return similarity_row(target, bank.snapshot());
}

Vec relative_distribution(std::span<const double> similarities, double sharpening_temperature) {
    return tempered_softmax(similarities, sharpening_temperature);
}

double confidence(std::span<const double> q) {
    require(q.size() >= 2, ErrorCode::InvalidArgument, "confidence: need at least two entries");
    // 1 - H(q)/ln n written as KL(q || uniform)/ln n, which is exactly zero
    // (after clamping) for a uniform q instead of leaving rounding residue.
    const double n = static_cast<double>(q.size());
    double kl = 0.0;
    for (double p : q) {
        require(p >= 0.0 && std::isfinite(p), ErrorCode::InvalidDistribution,
                "confidence: negative or non-finite entry");
        if (p > 0.0) {
            kl += p * std::log(n * p);
        }
    }
    return std::clamp(kl / std::log(n), 0.0, 1.0);
}

double row_confidence(std::span<const double> similarities, double sharpening_temperature) {
    if (similarities.size() < 2) {
        return 0.0;
    }
    return confidence(relative_distribution(similarities, sharpening_temperature));
}

PseudoLabel normalize_label(PseudoLabel y) {
    double total = 0.0;
    for (double w : y.weights) {
        require(w >= 0.0 && std::isfinite(w), ErrorCode::InvalidLabel,
                "normalize_label: negative or non-finite weight");
        total += w;
    }
    require(total > 0.0, ErrorCode::InvalidLabel, "normalize_label: all-zero label");
    for (double& w : y.weights) {
        w /= total;
    }
    return y;
}

PseudoLabel hard_label(std::span<const double> similarities, std::size_t k) {
    return ahcl_label_with_confidence(similarities, k, 1.0);
}

PseudoLabel ahcl_label_with_confidence(std::span<const double> similarities, std::size_t k,
                                       double c) {
    require(c >= 0.0 && c <= 1.0, ErrorCode::InvalidArgument, "ahcl: confidence outside [0, 1]");
    k = std::min(k, similarities.size());
    PseudoLabel y = onehot_label(similarities.size());
    for (std::size_t j : topk_indices(similarities, k)) {
        y.weights[j + 1] = c;
    }
    y.strategy = c == 1.0 ? LabelStrategy::Hard : LabelStrategy::Ahcl;
    return normalize_label(std::move(y));
}

PseudoLabel ahcl_label(std::span<const double> similarities, std::size_t k,
                       double sharpening_temperature) {
    require(sharpening_temperature > 0.0, ErrorCode::InvalidArgument,
            "ahcl_label: sharpening temperature must be positive");
    PseudoLabel y = ahcl_label_with_confidence(
        similarities, k, row_confidence(similarities, sharpening_temperature));
    y.strategy = LabelStrategy::Ahcl;
    return y;
}

Vec ascl_raw_weights(std::span<const double> similarities, std::size_t k,
                     double sharpening_temperature) {
    require(sharpening_temperature > 0.0, ErrorCode::InvalidArgument,
            "ascl_label: sharpening temperature must be positive");
    Vec w(similarities.size() + 1, 0.0);
    w[0] = 1.0;
    if (similarities.size() < 2) {
        return w;
    }
    const Vec q = relative_distribution(similarities, sharpening_temperature);
    const double scale = confidence(q) * static_cast<double>(k);
    for (std::size_t j = 0; j < q.size(); ++j) {
        w[j + 1] = std::min(1.0, scale * q[j]);
    }
    return w;
}

PseudoLabel ascl_label(std::span<const double> similarities, std::size_t k,
                       double sharpening_temperature) {
    return normalize_label(
        {ascl_raw_weights(similarities, k, sharpening_temperature), LabelStrategy::Ascl});
}

PseudoLabel make_label(const LabelConfig& config, std::span<const double> similarities) {
    switch (config.strategy) {
        case LabelStrategy::OneHot:
            return onehot_label(similarities.size());
        case LabelStrategy::Hard:
            return hard_label(similarities, config.num_neighbors);
        case LabelStrategy::Ahcl:
            return ahcl_label(similarities, config.num_neighbors, config.sharpening_temperature);
        case LabelStrategy::Ascl:
            return ascl_label(similarities, config.num_neighbors, config.sharpening_temperature);
    }
    fail(ErrorCode::InvalidArgument, "make_label: unknown strategy");
}

namespace {

// Similarities of target i to every other target, in batch order with i skipped.
Vec others_row(const Mat& targets, std::size_t i) {
    Vec d;
    d.reserve(targets.rows - 1);
    for (std::size_t j = 0; j < targets.rows; ++j) {
        if (j != i) {
            d.push_back(cosine_sim(targets.row(i), targets.row(j)));
        }
    }
    return d;
}

}  // namespace

Vec byol_inbatch_confidences(const Mat& batch_targets, double sharpening_temperature) {
    require(batch_targets.rows >= 3, ErrorCode::InvalidArgument,
            "byol_inbatch_labels: batch needs at least three samples");
    Vec c(batch_targets.rows);
    for (std::size_t i = 0; i < batch_targets.rows; ++i) {
        c[i] = confidence(relative_distribution(others_row(batch_targets, i),
                                                sharpening_temperature));
    }
    return c;
}

std::vector<PseudoLabel> byol_inbatch_labels(const Mat& batch_targets, std::size_t k,
                                             double sharpening_temperature) {
    require(batch_targets.rows >= 3, ErrorCode::InvalidArgument,
            "byol_inbatch_labels: batch needs at least three samples");
    require(sharpening_temperature > 0.0, ErrorCode::InvalidArgument,
            "byol_inbatch_labels: sharpening temperature must be positive");
    const std::size_t b = batch_targets.rows;
    std::vector<PseudoLabel> labels;
    labels.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        const Vec q = relative_distribution(others_row(batch_targets, i), sharpening_temperature);
        const double scale = confidence(q) * static_cast<double>(k);
        PseudoLabel y{Vec(b, 0.0), LabelStrategy::Ascl};
        y.weights[i] = 1.0;
        for (std::size_t j = 0, m = 0; j < b; ++j) {
            if (j != i) {
                y.weights[j] = std::min(1.0, scale * q[m++]);
            }
        }
        labels.push_back(normalize_label(std::move(y)));
    }
    return labels;
}

}  // namespace ascl
