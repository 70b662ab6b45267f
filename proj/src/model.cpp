#include "ascl/model.hpp"

#include <cmath>

namespace ascl {

namespace {

void validate_shape(const NetworkShape& s, const char* name) {
    if (s.widths.size() < 2) {
        fail(ErrorCode::InvalidArgument, std::string(name) + ": needs at least one layer");
    }
    for (std::size_t w : s.widths) {
        if (w < 1) {
            fail(ErrorCode::InvalidArgument, std::string(name) + ": widths must be >= 1");
        }
    }
}

Network init_network(const NetworkShape& shape, Rng& rng) {
    Network net;
    net.relu_on_output = shape.relu_on_output;
    for (std::size_t l = 0; l + 1 < shape.widths.size(); ++l) {
        const std::size_t in = shape.widths[l];
        const std::size_t out = shape.widths[l + 1];
        DenseLayer layer{Mat(out, in), Vec(out, 0.0)};
        const double bound = std::sqrt(3.0 / static_cast<double>(in));
        for (double& w : layer.weight.values) {
            w = rng.uniform(-bound, bound);
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Network zeros_like(const Network& net) {
    Network z;
    z.relu_on_output = net.relu_on_output;
    for (const DenseLayer& l : net.layers) {
        z.layers.push_back({Mat(l.weight.rows, l.weight.cols), Vec(l.bias.size(), 0.0)});
    }
    return z;
}

bool activates(const Network& net, std::size_t layer) {
    return layer + 1 < net.layers.size() || net.relu_on_output;
}

// Jacobian-vector product of v -> v / |v|, applied to the upstream gradient.
Vec normalize_backward(std::span<const double> raw, std::span<const double> unit,
                       std::span<const double> grad) {
    const double n = l2_norm(raw);
    const double proj = dot(unit, grad);
    Vec out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = (grad[i] - unit[i] * proj) / n;
    }
    return out;
}

void ema_network(Network& target, const Network& online, double m) {
    for (std::size_t l = 0; l < target.layers.size(); ++l) {
        auto& tw = target.layers[l].weight.values;
        const auto& ow = online.layers[l].weight.values;
        for (std::size_t i = 0; i < tw.size(); ++i) {
            tw[i] = m * tw[i] + (1.0 - m) * ow[i];
        }
        auto& tb = target.layers[l].bias;
        const auto& ob = online.layers[l].bias;
        for (std::size_t i = 0; i < tb.size(); ++i) {
            tb[i] = m * tb[i] + (1.0 - m) * ob[i];
        }
    }
}

}  // namespace

void MlpSpec::validate() const {
    validate_shape(encoder, "encoder");
    validate_shape(projector, "projector");
    require(projector.input_width() == encoder.output_width(), ErrorCode::InvalidArgument,
            "projector input must match encoder output");
    require(projector.output_width() >= 2, ErrorCode::InvalidArgument,
            "projector output width must be >= 2");
    if (use_predictor) {
        validate_shape(predictor, "predictor");
        require(predictor.input_width() == projector.output_width() &&
                    predictor.output_width() == projector.output_width(),
                ErrorCode::InvalidArgument, "predictor must map projection space to itself");
    }
}

MlpSpec MlpSpec::with_input(std::size_t input_dim) {
    MlpSpec s;
    s.encoder.widths.front() = input_dim;
    return s;
}

ModelParams init_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    ModelParams p;
    p.spec = spec;
    p.online.encoder = init_network(spec.encoder, rng);
    p.online.projector = init_network(spec.projector, rng);
    if (spec.use_predictor) {
        p.online.predictor = init_network(spec.predictor, rng);
    }
    p.momentum_encoder = p.online.encoder;
    p.momentum_projector = p.online.projector;
    return p;
}

Vec network_forward(const Network& net, std::span<const double> x, NetworkTrace* trace) {
    require(!net.empty(), ErrorCode::InvalidState, "network_forward: empty network");
    require(x.size() == net.input_width(), ErrorCode::InvalidArgument,
            "network_forward: input width mismatch");
    if (trace) {
        trace->inputs.clear();
        trace->pre.clear();
    }
    Vec h(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        Vec z(layer.bias);
        for (std::size_t o = 0; o < layer.weight.rows; ++o) {
            z[o] += dot(layer.weight.row(o), h);
        }
        if (trace) {
            trace->inputs.push_back(std::move(h));
            trace->pre.push_back(z);
        }
        if (activates(net, l)) {
            for (double& v : z) {
                v = v > 0.0 ? v : 0.0;
            }
        }
        h = std::move(z);
    }
    return h;
}

Vec network_backward(const Network& net, const NetworkTrace& trace,
                     std::span<const double> grad_out, Network& grads) {
    require(trace.inputs.size() == net.layers.size(), ErrorCode::InvalidState,
            "network_backward: trace does not match network");
    Vec g(grad_out.begin(), grad_out.end());
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        DenseLayer& gl = grads.layers[l];
        const Vec& pre = trace.pre[l];
        const Vec& in = trace.inputs[l];
        if (activates(net, l)) {
            for (std::size_t o = 0; o < g.size(); ++o) {
                if (!(pre[o] > 0.0)) {
                    g[o] = 0.0;
                }
            }
        }
        Vec g_in(layer.weight.cols, 0.0);
        for (std::size_t o = 0; o < layer.weight.rows; ++o) {
            const double go = g[o];
            if (go == 0.0) {
                continue;
            }
            gl.bias[o] += go;
            auto w = layer.weight.row(o);
            auto gw = gl.weight.row(o);
            for (std::size_t i = 0; i < in.size(); ++i) {
                gw[i] += go * in[i];
                g_in[i] += go * w[i];
            }
        }
        g = std::move(g_in);
    }
    return g;
}

OnlineForward forward_online(const ModelParams& params, std::span<const double> x,
                             bool with_prediction) {
    OnlineForward out;
    ForwardCache& c = out.cache;
    out.representation = network_forward(params.online.encoder, x, &c.encoder);
    c.projection_raw = network_forward(params.online.projector, out.representation, &c.projector);
    c.projection = l2_normalize(c.projection_raw);
    out.projection = c.projection;
    if (with_prediction) {
        require(!params.online.predictor.empty(), ErrorCode::InvalidState,
                "forward_online: model has no predictor");
        out.prediction = network_forward(params.online.predictor, out.projection, &c.predictor);
        c.has_prediction = true;
    }
    c.version = params.version;
    c.valid = true;
    return out;
}

Vec forward_momentum(const ModelParams& params, std::span<const double> x) {
    return l2_normalize(
        network_forward(params.momentum_projector, network_forward(params.momentum_encoder, x)));
}

Vec encode(const ModelParams& params, std::span<const double> x) {
    return network_forward(params.online.encoder, x);
}

OnlineNets zero_grads(const ModelParams& params) {
    return {zeros_like(params.online.encoder), zeros_like(params.online.projector),
            zeros_like(params.online.predictor)};
}

void backward_into(const ModelParams& params, const ForwardCache& cache,
                   std::span<const double> grad_wrt_projection,
                   std::span<const double> grad_wrt_prediction, OnlineNets& grads) {
    require(cache.valid, ErrorCode::InvalidState, "backward: missing forward cache");
    require(cache.version == params.version, ErrorCode::InvalidState,
            "backward: cache is stale (parameters changed since forward)");
    const std::size_t dim = cache.projection.size();
    require(grad_wrt_projection.empty() || grad_wrt_projection.size() == dim,
            ErrorCode::InvalidArgument, "backward: projection gradient width mismatch");

    Vec g_proj(dim, 0.0);
    if (!grad_wrt_projection.empty()) {
        g_proj.assign(grad_wrt_projection.begin(), grad_wrt_projection.end());
    }
    if (!grad_wrt_prediction.empty()) {
        require(cache.has_prediction, ErrorCode::InvalidState,
                "backward: prediction gradient without a predictor pass");
        require(grad_wrt_prediction.size() == dim, ErrorCode::InvalidArgument,
                "backward: prediction gradient width mismatch");
        const Vec through = network_backward(params.online.predictor, cache.predictor,
                                             grad_wrt_prediction, grads.predictor);
        for (std::size_t i = 0; i < dim; ++i) {
            g_proj[i] += through[i];
        }
    }
    const Vec g_raw = normalize_backward(cache.projection_raw, cache.projection, g_proj);
    const Vec g_rep = network_backward(params.online.projector, cache.projector, g_raw,
                                       grads.projector);
    network_backward(params.online.encoder, cache.encoder, g_rep, grads.encoder);
}

OnlineNets backward(const ModelParams& params, const ForwardCache& cache,
                    std::span<const double> grad_wrt_projection,
                    std::span<const double> grad_wrt_prediction) {
    OnlineNets grads = zero_grads(params);
    backward_into(params, cache, grad_wrt_projection, grad_wrt_prediction, grads);
    return grads;
}

void ema_update(ModelParams& params, double momentum) {
    require(momentum >= 0.0 && momentum <= 1.0, ErrorCode::InvalidArgument,
            "ema_update: momentum must lie in [0, 1]");
    ema_network(params.momentum_encoder, params.online.encoder, momentum);
    ema_network(params.momentum_projector, params.online.projector, momentum);
}

void for_each_tensor(Network& net, const std::function<void(std::span<double>)>& fn) {
    for (DenseLayer& l : net.layers) {
        fn(l.weight.values);
        fn(l.bias);
    }
}

void for_each_tensor(OnlineNets& nets, const std::function<void(std::span<double>)>& fn) {
    for_each_tensor(nets.encoder, fn);
    for_each_tensor(nets.projector, fn);
    for_each_tensor(nets.predictor, fn);
}

void for_each_tensor(const OnlineNets& nets,
                     const std::function<void(std::span<const double>)>& fn) {
    for (const Network* net : {&nets.encoder, &nets.projector, &nets.predictor}) {
        for (const DenseLayer& l : net->layers) {
            fn(l.weight.values);
            fn(l.bias);
        }
    }
}

void accumulate(OnlineNets& a, const OnlineNets& b) {
    std::vector<std::span<const double>> src;
    for_each_tensor(b, [&](std::span<const double> t) { src.push_back(t); });
    std::size_t k = 0;
    for_each_tensor(a, [&](std::span<double> t) {
        require(k < src.size() && src[k].size() == t.size(), ErrorCode::InvalidArgument,
                "accumulate: shape mismatch");
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] += src[k][i];
        }
        ++k;
    });
}

std::size_t parameter_count(const OnlineNets& nets) {
    std::size_t n = 0;
    for_each_tensor(nets, [&](std::span<const double> t) { n += t.size(); });
    return n;
}

}  // namespace ascl
