#pragma once

#include <vector>

#include "ascl/model.hpp"
#include "ascl/numerics.hpp"
#include "ascl/parallel.hpp"
#include "ascl/relabel.hpp"

namespace ascl::kernels {

/// a * b^T, blocked over rows of b. Row i of the result is computed by one
/// thread in a fixed order, so Serial and Parallel agree bit for bit.
Mat matmul_nt(const Mat& a, const Mat& b, Exec exec);

/// Per-sample outputs of one contrastive step over a batch.
struct ContrastiveBatch {
    Vec loss;            // soft cross-entropy per sample
    Vec confidence;      // c of each target's sharpened row (0 if bank < 2)
    Vec label_entropy;   // entropy of each normalized pseudo label
    Mat grad_queries;    // d loss_i / d z_q_i (not divided by batch size)
};

/// Labels every sample against the bank snapshot and evaluates the loss and
/// its query gradient. Uses dot products for similarities (all inputs are
/// unit-norm) and batched products for the logits.
ContrastiveBatch contrastive_batch(const Mat& queries, const Mat& targets, const Mat& bank,
                                   const LabelConfig& labels, double temperature, Exec exec);

/// Sums per-sample parameter gradients in sample order. grad_projection and
/// grad_prediction rows may be empty matrices when unused.
OnlineNets backward_batch(const ModelParams& params, const std::vector<ForwardCache>& caches,
                          const Mat& grad_projection, const Mat& grad_prediction, Exec exec);

/// Straightforward per-sample versions built directly on the relabel and
/// objective functions; kept as the reference the fast kernels are tested
/// and benchmarked against.
namespace reference {

Mat matmul_nt(const Mat& a, const Mat& b);

ContrastiveBatch contrastive_batch(const Mat& queries, const Mat& targets, const Mat& bank,
                                   const LabelConfig& labels, double temperature);

OnlineNets backward_batch(const ModelParams& params, const std::vector<ForwardCache>& caches,
                          const Mat& grad_projection, const Mat& grad_prediction);

}  // namespace reference

}  // namespace ascl::kernels
