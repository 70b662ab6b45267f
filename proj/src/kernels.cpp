#include "ascl/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "ascl/objective.hpp"

#if defined(ASCL_HAVE_OPENMP)
#include <omp.h>
#endif

namespace ascl {

int max_threads() noexcept {
#if defined(ASCL_HAVE_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace kernels {

namespace {

constexpr std::size_t kTile = 4;

void row_times_nt(std::span<const double> x, const Mat& b, std::span<double> out) {
    const std::size_t k = b.cols;
    const double* bp = b.values.data();
    std::size_t j = 0;
    for (; j + kTile <= b.rows; j += kTile) {
        const double* r0 = bp + j * k;
        const double* r1 = r0 + k;
        const double* r2 = r1 + k;
        const double* r3 = r2 + k;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const double xv = x[t];
            s0 += xv * r0[t];
            s1 += xv * r1[t];
            s2 += xv * r2[t];
            s3 += xv * r3[t];
        }
        out[j] = s0;
        out[j + 1] = s1;
        out[j + 2] = s2;
        out[j + 3] = s3;
    }
    for (; j < b.rows; ++j) {
        const double* r = bp + j * k;
        double s = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            s += x[t] * r[t];
        }
        out[j] = s;
    }
}

}  // namespace

Mat matmul_nt(const Mat& a, const Mat& b, Exec exec) {
    require(a.cols == b.cols, ErrorCode::InvalidArgument, "matmul_nt: inner dimension mismatch");
    Mat out(a.rows, b.rows);
    parallel_for(exec, a.rows, [&](std::size_t i) { row_times_nt(a.row(i), b, out.row(i)); });
    return out;
}

ContrastiveBatch contrastive_batch(const Mat& queries, const Mat& targets, const Mat& bank,
                                   const LabelConfig& labels, double temperature, Exec exec) {
    require(temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
    require(queries.rows == targets.rows && queries.cols == targets.cols,
            ErrorCode::InvalidArgument, "contrastive_batch: query/target shape mismatch");
    const std::size_t b = queries.rows;
    const std::size_t dim = queries.cols;
    const std::size_t n = bank.rows;
    require(n == 0 || bank.cols == dim, ErrorCode::InvalidArgument,
            "contrastive_batch: bank width mismatch");

    Mat target_sims;
    Mat query_sims;
    if (n > 0) {
        target_sims = matmul_nt(targets, bank, exec);
        query_sims = matmul_nt(queries, bank, exec);
    }

    ContrastiveBatch out{Vec(b), Vec(b), Vec(b), Mat(b, dim)};
    parallel_for(exec, b, [&](std::size_t i) {
        Vec d(n);
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = std::clamp(target_sims(i, j), -1.0, 1.0);
        }
        const PseudoLabel y = make_label(labels, d);
        out.confidence[i] = row_confidence(d, labels.sharpening_temperature);
        out.label_entropy[i] = shannon_entropy(y.weights);

        auto q = queries.row(i);
        auto t = targets.row(i);
        Vec logits(n + 1);
        logits[0] = dot(q, t) / temperature;
        double top = logits[0];
        for (std::size_t j = 0; j < n; ++j) {
            logits[j + 1] = query_sims(i, j) / temperature;
            top = std::max(top, logits[j + 1]);
        }
        double total = 0.0;
        for (double l : logits) {
            total += std::exp(l - top);
        }
        const double lse = top + std::log(total);

        double loss = 0.0;
        auto g = out.grad_queries.row(i);
        for (std::size_t j = 0; j <= n; ++j) {
            const double log_p = logits[j] - lse;
            const double w = y.weights[j];
            if (w != 0.0) {
                loss -= w * log_p;
            }
            const double coeff = (std::exp(log_p) - w) / temperature;
            auto key = j == 0 ? t : bank.row(j - 1);
            for (std::size_t k = 0; k < dim; ++k) {
                g[k] += coeff * key[k];
            }
        }
        out.loss[i] = loss;
    });
    return out;
}

OnlineNets backward_batch(const ModelParams& params, const std::vector<ForwardCache>& caches,
                          const Mat& grad_projection, const Mat& grad_prediction, Exec exec) {
    const std::size_t b = caches.size();
    std::vector<OnlineNets> per_sample(b);
    parallel_for(exec, b, [&](std::size_t i) {
        per_sample[i] = zero_grads(params);
        backward_into(params, caches[i],
                      grad_projection.empty() ? std::span<const double>{} : grad_projection.row(i),
                      grad_prediction.empty() ? std::span<const double>{} : grad_prediction.row(i),
                      per_sample[i]);
    });
    OnlineNets total = zero_grads(params);
    for (const OnlineNets& g : per_sample) {
        accumulate(total, g);
    }
    return total;
}

namespace reference {

Mat matmul_nt(const Mat& a, const Mat& b) {
    Mat out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.rows; ++j) {
            out(i, j) = dot(a.row(i), b.row(j));
        }
    }
    return out;
}

ContrastiveBatch contrastive_batch(const Mat& queries, const Mat& targets, const Mat& bank,
                                   const LabelConfig& labels, double temperature) {
    const std::size_t b = queries.rows;
    ContrastiveBatch out{Vec(b), Vec(b), Vec(b), Mat(b, queries.cols)};
    for (std::size_t i = 0; i < b; ++i) {
        const Vec d = bank.rows > 0 ? similarity_row(targets.row(i), bank) : Vec{};
        const PseudoLabel y = make_label(labels, d);
        out.confidence[i] = row_confidence(d, labels.sharpening_temperature);
        out.label_entropy[i] = shannon_entropy(y.weights);
        const LossAndGrad lg =
            soft_infonce(queries.row(i), y.weights, targets.row(i), bank, temperature);
        out.loss[i] = lg.loss;
        std::copy(lg.grad.begin(), lg.grad.end(), out.grad_queries.row(i).begin());
    }
    return out;
}

OnlineNets backward_batch(const ModelParams& params, const std::vector<ForwardCache>& caches,
                          const Mat& grad_projection, const Mat& grad_prediction) {
    OnlineNets total = zero_grads(params);
    for (std::size_t i = 0; i < caches.size(); ++i) {
        backward_into(params, caches[i],
                      grad_projection.empty() ? std::span<const double>{} : grad_projection.row(i),
                      grad_prediction.empty() ? std::span<const double>{} : grad_prediction.row(i),
                      total);
    }
    return total;
}

}  // namespace reference

}  // namespace kernels
}  // namespace ascl
