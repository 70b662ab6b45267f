#pragma once

#include <span>
#include <vector>

#include "ascl/numerics.hpp"
#include "ascl/relabel.hpp"

namespace ascl {

struct LossAndGrad {
    double loss = 0.0;
    Vec grad;  // d loss / d z_q
};

/// Soft cross-entropy -sum_j y_j log p_j, where p is the tempered softmax of
/// the query's dot products with [target, bank rows...]. The gradient flows
/// into the query only: (1/tau) * sum_j (p_j - y_j) * key_j.
LossAndGrad soft_infonce(std::span<const double> query, std::span<const double> label,
                         std::span<const double> target, const Mat& bank_entries,
                         double temperature);

/// Classic single-positive InfoNCE, via log-sum-exp.
double infonce(std::span<const double> query, std::span<const double> target,
               const Mat& bank_entries, double temperature);

struct ByolBatchLoss {
    double value = 0.0;           // mean over samples
    Vec per_sample;               // 2 - 2 * sum_j y_ij cos(t_i, h_j)
    Mat grad_wrt_predictions;     // d value / d h_j
};

/// Soft-label cosine consistency loss between momentum targets t_i and
/// online predictions h_j. labels[i] is indexed by batch position j.
ByolBatchLoss byol_soft_loss(const Mat& predictions, const Mat& targets,
                             const std::vector<PseudoLabel>& labels);

}  // namespace ascl
