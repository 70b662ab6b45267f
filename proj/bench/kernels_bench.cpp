// Times the serial reference kernels against the parallel ones and checks
// that both produce the same numbers.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "ascl/kernels.hpp"
#include "ascl/model.hpp"

using namespace ascl;

namespace {

double best_ms(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

Mat unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        Vec v(cols);
        for (double& x : v) {
            x = rng.normal();
        }
        const Vec u = l2_normalize(v);
        std::copy(u.begin(), u.end(), m.row(i).begin());
    }
    return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

void report(const char* name, double ref_ms, double fast_ms, double diff) {
    std::printf("%-22s reference %9.3f ms   parallel %9.3f ms   speedup %5.2fx   max|diff| %.2e\n",
                name, ref_ms, fast_ms, ref_ms / fast_ms, diff);
}

}  // namespace

int main() {
    constexpr int kReps = 5;
    Rng rng(7);
    const std::size_t batch = 256, bank_size = 4096, dim = 16;
    const Mat queries = unit_rows(batch, dim, rng);
    const Mat targets = unit_rows(batch, dim, rng);
    const Mat bank = unit_rows(bank_size, dim, rng);
    std::printf("threads: %d\n", max_threads());

    Mat ref_mm, fast_mm;
    const double mm_ref = best_ms(kReps, [&] { ref_mm = kernels::reference::matmul_nt(queries, bank); });
    const double mm_fast =
        best_ms(kReps, [&] { fast_mm = kernels::matmul_nt(queries, bank, Exec::Parallel); });
    report("matmul_nt 256x4096", mm_ref, mm_fast, max_abs_diff(ref_mm.values, fast_mm.values));

    const LabelConfig labels{LabelStrategy::Ascl, 5, 0.05};
    kernels::ContrastiveBatch ref_cb, fast_cb;
    const double cb_ref = best_ms(kReps, [&] {
        ref_cb = kernels::reference::contrastive_batch(queries, targets, bank, labels, 0.1);
    });
    const double cb_fast = best_ms(kReps, [&] {
        fast_cb = kernels::contrastive_batch(queries, targets, bank, labels, 0.1, Exec::Parallel);
    });
    report("contrastive_batch", cb_ref, cb_fast,
           std::max(max_abs_diff(ref_cb.loss, fast_cb.loss),
                    max_abs_diff(ref_cb.grad_queries.values, fast_cb.grad_queries.values)));

    MlpSpec spec;
    Rng init(3);
    const ModelParams params = init_params(spec, init);
    Mat inputs(batch, spec.encoder.input_width());
    for (double& v : inputs.values) {
        v = rng.normal();
    }
    std::vector<ForwardCache> caches(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        caches[i] = forward_online(params, inputs.row(i), false).cache;
    }
    const Mat grads = unit_rows(batch, spec.projector.output_width(), rng);
    OnlineNets ref_bw, fast_bw;
    const double bw_ref = best_ms(
        kReps, [&] { ref_bw = kernels::reference::backward_batch(params, caches, grads, Mat{}); });
    const double bw_fast = best_ms(kReps, [&] {
        fast_bw = kernels::backward_batch(params, caches, grads, Mat{}, Exec::Parallel);
    });
    double bw_diff = 0.0;
    for (std::size_t l = 0; l < ref_bw.encoder.layers.size(); ++l) {
        bw_diff = std::max(bw_diff, max_abs_diff(ref_bw.encoder.layers[l].weight.values,
                                                 fast_bw.encoder.layers[l].weight.values));
    }
    report("backward_batch", bw_ref, bw_fast, bw_diff);
    return 0;
}
