#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "ascl/membank.hpp"
#include "ascl/numerics.hpp"

namespace ascl {

enum class LabelStrategy { OneHot, Hard, Ahcl, Ascl };

std::string_view to_string(LabelStrategy s) noexcept;

/// Target weights over [target view, bank entry 0, bank entry 1, ...].
/// Index 0 is always the target view; bank indices are shifted by one.
struct PseudoLabel {
    Vec weights;
    LabelStrategy strategy = LabelStrategy::OneHot;
};

struct LabelConfig {
    LabelStrategy strategy = LabelStrategy::Ascl;
    std::size_t num_neighbors = 1;        // K
    double sharpening_temperature = 0.05;  // tau'
};

PseudoLabel onehot_label(std::size_t bank_size);

/// Cosine similarity of `target` with each bank row, clamped to [-1, 1].
Vec similarity_row(std::span<const double> target, const Mat& bank_entries);
Vec similarity_row(std::span<const double> target, const MemoryBank& bank);

/// Sharpened softmax of the similarity row at temperature tau'.
Vec relative_distribution(std::span<const double> similarities, double sharpening_temperature);

/// One minus the entropy of q normalized by ln(len(q)); requires len(q) >= 2.
double confidence(std::span<const double> q);

PseudoLabel normalize_label(PseudoLabel y);

/// Top-K neighbours become full positives. K is clamped to the row length.
PseudoLabel hard_label(std::span<const double> similarities, std::size_t k);

/// Top-K neighbours weighted by an explicit confidence c in [0, 1].
PseudoLabel ahcl_label_with_confidence(std::span<const double> similarities, std::size_t k,
                                       double c);
/// Top-K neighbours weighted by the confidence of the sharpened distribution.
/// Rows shorter than two entries carry no usable entropy and give c = 0.
PseudoLabel ahcl_label(std::span<const double> similarities, std::size_t k,
                       double sharpening_temperature);

/// Unnormalized soft weights: 1 for the target, min(1, c*K*q_j) for bank j.
Vec ascl_raw_weights(std::span<const double> similarities, std::size_t k,
                     double sharpening_temperature);
PseudoLabel ascl_label(std::span<const double> similarities, std::size_t k,
                       double sharpening_temperature);

PseudoLabel make_label(const LabelConfig& config, std::span<const double> similarities);

/// Confidence for a row, or 0 when it has fewer than two entries.
double row_confidence(std::span<const double> similarities, double sharpening_temperature);

/// In-batch soft labels for the negative-free variant. Row i of the result
/// is indexed by batch position: weight 1 on i, min(1, c_i*K*q_ij) on j != i,
/// then normalized. Requires at least three targets.
std::vector<PseudoLabel> byol_inbatch_labels(const Mat& batch_targets, std::size_t k,
                                             double sharpening_temperature);

/// Per-sample confidence c_i used by byol_inbatch_labels.
Vec byol_inbatch_confidences(const Mat& batch_targets, double sharpening_temperature);

}  // namespace ascl
