#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ascl/model.hpp"

namespace ascl {

struct SgdConfig {
    double lr = 0.06;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// Velocity buffers in for_each_tensor order, plus the number of steps taken.
struct OptimizerState {
    std::vector<Vec> velocity;
    std::uint64_t step = 0;
    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

OptimizerState make_optimizer_state(const ModelParams& params);

/// v <- momentum * v + grad + wd * theta;  theta <- theta - lr * v
void sgd_update(std::span<double> params, std::span<const double> grads,
                std::span<double> velocity, double lr, double momentum, double weight_decay);

void sgd_step(ModelParams& params, const OnlineNets& grads, OptimizerState& state,
              const SgdConfig& config);

/// base_lr * (1 + cos(pi * progress)) / 2, progress clamped to [0, 1].
double cosine_lr(double progress, double base_lr);

/// Step schedule: x0.1 once progress reaches 0.6 and again at 0.8.
double step_lr(double progress, double base_lr);

}  // namespace ascl
