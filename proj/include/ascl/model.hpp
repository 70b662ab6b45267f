#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ascl/numerics.hpp"

namespace ascl {

/// Widths of a fully connected stack, input first. ReLU follows every hidden
/// layer and, when `relu_on_output` is set, the last one too.
struct NetworkShape {
    std::vector<std::size_t> widths;
    bool relu_on_output = false;

    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Encoder f, projector g and optional predictor h. The projector output is
/// always L2-normalized so dot products of projections are cosines.
struct MlpSpec {
    NetworkShape encoder{{16, 64, 64}, true};
    NetworkShape projector{{64, 32, 16}, false};
    NetworkShape predictor{{16, 32, 16}, false};
    bool use_predictor = false;

    void validate() const;
    static MlpSpec with_input(std::size_t input_dim);
    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct DenseLayer {
    Mat weight;  // out x in
    Vec bias;    // out
    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Network {
    std::vector<DenseLayer> layers;
    bool relu_on_output = false;

    bool empty() const noexcept { return layers.empty(); }
    std::size_t input_width() const { return layers.front().weight.cols; }
    std::size_t output_width() const { return layers.back().weight.rows; }
    friend bool operator==(const Network&, const Network&) = default;
};

/// The trainable (online) half. Also used as the gradient container.
struct OnlineNets {
    Network encoder;
    Network projector;
    Network predictor;  // empty unless the spec asks for one
    friend bool operator==(const OnlineNets&, const OnlineNets&) = default;
};

struct ModelParams {
    MlpSpec spec;
    OnlineNets online;
    Network momentum_encoder;
    Network momentum_projector;
    /// Bumped on every mutation of the online weights; forward caches record
    /// it so a backward pass against changed weights is rejected.
    std::uint64_t version = 0;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Per-layer activations retained for the backward pass.
struct NetworkTrace {
    std::vector<Vec> inputs;  // input to each layer
    std::vector<Vec> pre;     // pre-activation output of each layer
};

struct ForwardCache {
    bool valid = false;
    std::uint64_t version = 0;
    NetworkTrace encoder;
    NetworkTrace projector;
    NetworkTrace predictor;
    Vec projection_raw;  // g(f(x)) before normalization
    Vec projection;      // normalized
    bool has_prediction = false;
};

struct OnlineForward {
    Vec representation;  // f(x)
    Vec projection;      // l2_normalize(g(f(x)))
    Vec prediction;      // h(projection), raw; empty unless requested
    ForwardCache cache;
};

ModelParams init_params(const MlpSpec& spec, Rng& rng);

Vec network_forward(const Network& net, std::span<const double> x, NetworkTrace* trace = nullptr);

/// Accumulates parameter gradients of `net` into `grads` and returns dL/dx.
Vec network_backward(const Network& net, const NetworkTrace& trace,
                     std::span<const double> grad_out, Network& grads);

OnlineForward forward_online(const ModelParams& params, std::span<const double> x,
                             bool with_prediction = false);

/// Projection from the momentum copy. Never records state.
Vec forward_momentum(const ModelParams& params, std::span<const double> x);

/// Online encoder representation f(x), as used by the probes.
Vec encode(const ModelParams& params, std::span<const double> x);

OnlineNets zero_grads(const ModelParams& params);

/// Chains dL/d(projection) and, optionally, dL/d(prediction) back through
/// the online networks, accumulating into `grads`.
void backward_into(const ModelParams& params, const ForwardCache& cache,
                   std::span<const double> grad_wrt_projection,
                   std::span<const double> grad_wrt_prediction, OnlineNets& grads);

OnlineNets backward(const ModelParams& params, const ForwardCache& cache,
                    std::span<const double> grad_wrt_projection,
                    std::span<const double> grad_wrt_prediction = {});

/// theta_t <- m * theta_t + (1 - m) * theta_q for encoder and projector.
void ema_update(ModelParams& params, double momentum);

/// Visits every weight and bias buffer in a fixed order.
void for_each_tensor(OnlineNets& nets, const std::function<void(std::span<double>)>& fn);
void for_each_tensor(const OnlineNets& nets,
                     const std::function<void(std::span<const double>)>& fn);
void for_each_tensor(Network& net, const std::function<void(std::span<double>)>& fn);

/// Elementwise a += b over identically shaped networks.
void accumulate(OnlineNets& a, const OnlineNets& b);

std::size_t parameter_count(const OnlineNets& nets);

}  // namespace ascl
