#include "ascl/optim.hpp"

#include <algorithm>
#include <cmath>

namespace ascl {

OptimizerState make_optimizer_state(const ModelParams& params) {
    OptimizerState s;
    for_each_tensor(params.online,
                    [&](std::span<const double> t) { s.velocity.emplace_back(t.size(), 0.0); });
    return s;
}

void sgd_update(std::span<double> params, std::span<const double> grads,
                std::span<double> velocity, double lr, double momentum, double weight_decay) {
    require(params.size() == grads.size() && params.size() == velocity.size(),
            ErrorCode::InvalidArgument, "sgd_update: shape mismatch");
    require(lr >= 0.0, ErrorCode::InvalidArgument, "sgd_update: lr must be >= 0");
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] + grads[i] + weight_decay * params[i];
        params[i] -= lr * velocity[i];
    }
}

void sgd_step(ModelParams& params, const OnlineNets& grads, OptimizerState& state,
              const SgdConfig& config) {
    std::vector<std::span<const double>> g;
    for_each_tensor(grads, [&](std::span<const double> t) { g.push_back(t); });
    require(g.size() == state.velocity.size(), ErrorCode::InvalidArgument,
            "sgd_step: gradient/optimizer shape mismatch");
    std::size_t k = 0;
    for_each_tensor(params.online, [&](std::span<double> t) {
        sgd_update(t, g[k], state.velocity[k], config.lr, config.momentum, config.weight_decay);
        ++k;
    });
    ++state.step;
    ++params.version;
}

double cosine_lr(double progress, double base_lr) {
    const double p = std::clamp(progress, 0.0, 1.0);
    if (p == 1.0) {
        return 0.0;
    }
    return std::max(0.0, base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * p)));
}

double step_lr(double progress, double base_lr) {
    if (progress >= 0.8) {
        return base_lr * 0.01;
    }
    if (progress >= 0.6) {
        return base_lr * 0.1;
    }
    return base_lr;
}

}  // namespace ascl
