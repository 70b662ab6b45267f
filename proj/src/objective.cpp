#include "ascl/objective.hpp"

#include <cmath>

namespace ascl {

namespace {

void check_inputs(std::span<const double> query, std::span<const double> target,
                  const Mat& bank_entries, double temperature) {
    require(temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
    require(query.size() == target.size(), ErrorCode::InvalidArgument,
            "query/target width mismatch");
    require(bank_entries.rows == 0 || bank_entries.cols == query.size(),
            ErrorCode::InvalidArgument, "bank width mismatch");
}

// Logits z_q . key_j / tau over keys [target, bank...].
Vec key_logits(std::span<const double> query, std::span<const double> target,
               const Mat& bank_entries, double temperature) {
    Vec logits(bank_entries.rows + 1);
    logits[0] = dot(query, target) / temperature;
    for (std::size_t j = 0; j < bank_entries.rows; ++j) {
        logits[j + 1] = dot(query, bank_entries.row(j)) / temperature;
    }
    return logits;
}

double log_sum_exp(std::span<const double> x) {
    double top = x[0];
    for (double v : x) {
        top = std::max(top, v);
    }
    double s = 0.0;
    for (double v : x) {
        s += std::exp(v - top);
    }
    return top + std::log(s);
}

}  // namespace

LossAndGrad soft_infonce(std::span<const double> query, std::span<const double> label,
                         std::span<const double> target, const Mat& bank_entries,
                         double temperature) {
    check_inputs(query, target, bank_entries, temperature);
    require(label.size() == bank_entries.rows + 1, ErrorCode::InvalidLabel,
            "soft_infonce: label length must be bank size + 1");
    double total = 0.0;
    for (double w : label) {
        require(w >= 0.0, ErrorCode::InvalidLabel, "soft_infonce: negative label weight");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidLabel,
            "soft_infonce: label is not normalized");

    const Vec logits = key_logits(query, target, bank_entries, temperature);
    const double lse = log_sum_exp(logits);

    LossAndGrad out;
    out.grad.assign(query.size(), 0.0);
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const double log_p = logits[j] - lse;
        if (label[j] != 0.0) {
            out.loss -= label[j] * log_p;
        }
        const double coeff = (std::exp(log_p) - label[j]) / temperature;
        auto key = j == 0 ? target : bank_entries.row(j - 1);
        for (std::size_t k = 0; k < query.size(); ++k) {
            out.grad[k] += coeff * key[k];
        }
    }
    return out;
}

double infonce(std::span<const double> query, std::span<const double> target,
               const Mat& bank_entries, double temperature) {
    check_inputs(query, target, bank_entries, temperature);
    const Vec logits = key_logits(query, target, bank_entries, temperature);
    return log_sum_exp(logits) - logits[0];
}

ByolBatchLoss byol_soft_loss(const Mat& predictions, const Mat& targets,
                             const std::vector<PseudoLabel>& labels) {
    const std::size_t b = predictions.rows;
    require(b >= 1 && targets.rows == b && labels.size() == b, ErrorCode::InvalidArgument,
            "byol_soft_loss: batch sizes differ");
    require(predictions.cols == targets.cols, ErrorCode::InvalidArgument,
            "byol_soft_loss: width mismatch");
    const std::size_t dim = predictions.cols;

    Vec pred_norm(b);
    Vec target_norm(b);
    for (std::size_t i = 0; i < b; ++i) {
        pred_norm[i] = l2_norm(predictions.row(i));
        target_norm[i] = l2_norm(targets.row(i));
        require(pred_norm[i] > 0.0, ErrorCode::InvalidArgument,
                "byol_soft_loss: zero-norm prediction");
        require(target_norm[i] > 0.0, ErrorCode::InvalidArgument,
                "byol_soft_loss: zero-norm target");
        require(labels[i].weights.size() == b, ErrorCode::InvalidLabel,
                "byol_soft_loss: label length must equal batch size");
    }

    ByolBatchLoss out;
    out.per_sample.assign(b, 0.0);
    out.grad_wrt_predictions = Mat(b, dim);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        auto t = targets.row(i);
        double agreement = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            const double y = labels[i].weights[j];
            if (y == 0.0) {
                continue;
            }
            auto h = predictions.row(j);
            const double denom = target_norm[i] * pred_norm[j];
            const double cos = dot(t, h) / denom;
            agreement += y * cos;
            // d cos / d h = t / (|t||h|) - cos * h / |h|^2
            const double scale = -2.0 * y * inv_b;
            auto g = out.grad_wrt_predictions.row(j);
            for (std::size_t k = 0; k < dim; ++k) {
                g[k] += scale * (t[k] / denom - cos * h[k] / (pred_norm[j] * pred_norm[j]));
            }
        }
        out.per_sample[i] = 2.0 - 2.0 * agreement;
        out.value += out.per_sample[i];
    }
    out.value *= inv_b;
    return out;
}

}  // namespace ascl
