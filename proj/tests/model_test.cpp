#include <gtest/gtest.h>

#include <cmath>

#include "ascl/model.hpp"
#include "ascl/objective.hpp"
#include "ascl/relabel.hpp"
#include "test_util.hpp"

using namespace ascl;
using ascl::testing::random_distribution;
using ascl::testing::random_unit;
using ascl::testing::random_unit_rows;
using ascl::testing::random_vec;
using ascl::testing::relative_error;

namespace {

MlpSpec small_spec(Rng& rng, bool predictor) {
    MlpSpec s;
    const std::size_t in = 3 + rng.below(5), hidden = 8 + rng.below(8), rep = 8 + rng.below(8),
                      proj = 3 + rng.below(4);
    s.encoder = {{in, hidden, rep}, true};
    s.projector = {{rep, 4 + rng.below(6), proj}, false};
    s.predictor = {{proj, 4 + rng.below(6), proj}, false};
    s.use_predictor = predictor;
    return s;
}

// Input whose projection is not entirely cut off by dead ReLUs, so it can be
// normalized.
Vec live_input(const ModelParams& p, Rng& rng) {
    for (;;) {
        Vec x = random_vec(p.spec.encoder.input_width(), rng);
        const Vec z = network_forward(p.online.projector, encode(p, x));
        if (l2_norm(z) > 1e-3 &&
            (!p.spec.use_predictor || l2_norm(network_forward(p.online.predictor, l2_normalize(z))) > 1e-3)) {
            return x;
        }
    }
}

Vec flatten(const OnlineNets& nets) {
    Vec out;
    for_each_tensor(nets, [&](std::span<const double> t) { out.insert(out.end(), t.begin(), t.end()); });
    return out;
}

// Central differences of `loss` over every online parameter.
Vec numeric_param_gradient(ModelParams& params, const std::function<double()>& loss) {
    Vec out;
    for_each_tensor(params.online, [&](std::span<double> t) {
        for (double& w : t) {
            const double saved = w;
            w = saved + 1e-5;
            const double up = loss();
            w = saved - 1e-5;
            const double down = loss();
            w = saved;
            out.push_back((up - down) / 2e-5);
        }
    });
    return out;
}

Network identity_layer(std::size_t n) {
    Network net;
    net.layers.push_back({Mat(n, n), Vec(n, 0.0)});
    for (std::size_t i = 0; i < n; ++i) {
        net.layers[0].weight(i, i) = 1.0;
    }
    return net;
}

}  // namespace

TEST(MlpSpec, DefaultsAndValidation) {
    const MlpSpec s;
    EXPECT_EQ(s.encoder.widths, (std::vector<std::size_t>{16, 64, 64}));
    EXPECT_EQ(s.projector.widths, (std::vector<std::size_t>{64, 32, 16}));
    EXPECT_EQ(s.predictor.widths, (std::vector<std::size_t>{16, 32, 16}));
    EXPECT_NO_THROW(s.validate());
    MlpSpec bad = s;
    bad.projector.widths = {64, 1};
    EXPECT_ASCL_ERROR(bad.validate(), ErrorCode::InvalidArgument);
    bad = s;
    bad.projector.widths = {32, 16};
    EXPECT_ASCL_ERROR(bad.validate(), ErrorCode::InvalidArgument);
    bad = s;
    bad.encoder.widths = {16, 0, 64};
    EXPECT_ASCL_ERROR(bad.validate(), ErrorCode::InvalidArgument);
}

TEST(InitParams, DeterministicAndMomentumClone) {
    Rng a(3), b(3);
    const ModelParams pa = init_params(MlpSpec{}, a);
    const ModelParams pb = init_params(MlpSpec{}, b);
    EXPECT_EQ(pa, pb);
    EXPECT_EQ(pa.momentum_encoder, pa.online.encoder);
    EXPECT_EQ(pa.momentum_projector, pa.online.projector);
}

TEST(InitParams, FanInBoundAndZeroBias) {
    MlpSpec s;
    s.encoder = {{100, 100, 64}, true};
    Rng rng(4);
    const ModelParams p = init_params(s, rng);
    const DenseLayer& first = p.online.encoder.layers[0];
    double max_abs = 0.0;
    for (double w : first.weight.values) {
        max_abs = std::max(max_abs, std::abs(w));
    }
    EXPECT_LE(max_abs, std::sqrt(1.0 / 100) * std::sqrt(3.0));
    EXPECT_GT(max_abs, 0.9 * std::sqrt(3.0 / 100));
    for (double bias : first.bias) {
        EXPECT_EQ(bias, 0.0);
    }
}

TEST(ForwardOnline, ZeroWeightsCannotNormalize) {
    Rng rng(5);
    ModelParams p = init_params(MlpSpec{}, rng);
    for_each_tensor(p.online, [](std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
    EXPECT_ASCL_ERROR(forward_online(p, Vec(16, 1.0)), ErrorCode::InvalidArgument);
}

TEST(ForwardOnline, IdentityNetworksReturnInput) {
    ModelParams p;
    p.spec.encoder = {{3, 3}, false};
    p.spec.projector = {{3, 3}, false};
    p.online.encoder = identity_layer(3);
    p.online.projector = identity_layer(3);
    const Vec x = l2_normalize(Vec{1, -2, 2});
    const OnlineForward f = forward_online(p, x);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(f.projection[i], x[i], 1e-15);
        EXPECT_EQ(f.representation[i], x[i]);
    }
}

TEST(ForwardOnline, WrongInputWidth) {
    Rng rng(6);
    const ModelParams p = init_params(MlpSpec{}, rng);
    EXPECT_ASCL_ERROR(forward_online(p, Vec(15, 1.0)), ErrorCode::InvalidArgument);
}

TEST(ForwardOnlineProperty, ProjectionIsUnitNorm) {
    Rng rng(7);
    const ModelParams p = init_params(MlpSpec{}, rng);
    for (int trial = 0; trial < 1000; ++trial) {
        ASSERT_NEAR(l2_norm(forward_online(p, random_vec(16, rng, 3.0)).projection), 1.0, 1e-9);
    }
}

TEST(ForwardMomentum, MatchesOnlineCopyAndIsPure) {
    Rng rng(8);
    ModelParams p = init_params(MlpSpec{}, rng);
    const Vec x = random_vec(16, rng);
    EXPECT_EQ(forward_momentum(p, x), forward_online(p, x).projection);

    // Copy oracle: momentum weights copied into a fresh online copy.
    p.momentum_encoder.layers[0].weight.values[0] += 0.25;
    const ModelParams before = p;
    ModelParams copy = p;
    copy.online.encoder = p.momentum_encoder;
    copy.online.projector = p.momentum_projector;
    EXPECT_EQ(forward_momentum(p, x), forward_online(copy, x).projection);
    EXPECT_EQ(p, before);
}

TEST(EmaUpdate, Endpoints) {
    Rng rng(9);
    ModelParams p = init_params(MlpSpec{}, rng);
    for_each_tensor(p.online, [&](std::span<double> t) {
        for (double& w : t) {
            w += rng.normal();
        }
    });
    ModelParams frozen = p;
    ema_update(frozen, 1.0);
    EXPECT_EQ(frozen.momentum_encoder, p.momentum_encoder);
    ModelParams copied = p;
    ema_update(copied, 0.0);
    EXPECT_EQ(copied.momentum_encoder, p.online.encoder);
    EXPECT_EQ(copied.momentum_projector, p.online.projector);
    EXPECT_ASCL_ERROR(ema_update(p, 1.5), ErrorCode::InvalidArgument);
    EXPECT_ASCL_ERROR(ema_update(p, -0.1), ErrorCode::InvalidArgument);
}

TEST(EmaUpdate, ScalarCase) {
    ModelParams p;
    p.online.encoder.layers.push_back({Mat(1, 1, 0.0), Vec{0.0}});
    p.momentum_encoder.layers.push_back({Mat(1, 1, 1.0), Vec{1.0}});
    ema_update(p, 0.99);
    EXPECT_DOUBLE_EQ(p.momentum_encoder.layers[0].weight(0, 0), 0.99);
    EXPECT_DOUBLE_EQ(p.momentum_encoder.layers[0].bias[0], 0.99);
}

TEST(EmaUpdateProperty, ContractsTowardOnline) {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        ModelParams p = init_params(small_spec(rng, false), rng);
        for_each_tensor(p.online, [&](std::span<double> t) {
            for (double& w : t) {
                w += rng.normal();
            }
        });
        const auto distance = [](const ModelParams& q) {
            OnlineNets momentum{q.momentum_encoder, q.momentum_projector, {}};
            OnlineNets online{q.online.encoder, q.online.projector, {}};
            const Vec a = flatten(momentum), b = flatten(online);
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                s += (a[i] - b[i]) * (a[i] - b[i]);
            }
            return std::sqrt(s);
        };
        const double m = rng.uniform();
        const double before = distance(p);
        ema_update(p, m);
        ASSERT_NEAR(distance(p), m * before, 1e-12 * (1.0 + before));
    }
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(11);
    const ModelParams p = init_params(MlpSpec{}, rng);
    const OnlineForward f = forward_online(p, random_vec(16, rng));
    const OnlineNets g = backward(p, f.cache, Vec(16, 0.0));
    for (double v : flatten(g)) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Backward, SingleLinearLayerClosedForm) {
    Rng rng(12);
    ModelParams p;
    p.spec.encoder = {{3, 3}, false};
    p.spec.projector = {{3, 4}, false};
    p.online.encoder = identity_layer(3);
    p.online.projector.layers.push_back({Mat(4, 3), random_vec(4, rng)});
    for (double& w : p.online.projector.layers[0].weight.values) {
        w = rng.normal();
    }
    const Vec x = random_vec(3, rng);
    const Vec g = random_vec(4, rng);
    const OnlineForward f = forward_online(p, x);
    const OnlineNets grads = backward(p, f.cache, g);

    // v = W x + b, u = v/|v|, dL/dv = (g - u (u.g)) / |v|, dL/dW = dL/dv x^T.
    const Vec& u = f.projection;
    const double n = l2_norm(f.cache.projection_raw);
    const double ug = dot(u, g);
    for (std::size_t i = 0; i < 4; ++i) {
        const double dv = (g[i] - u[i] * ug) / n;
        EXPECT_NEAR(grads.projector.layers[0].bias[i], dv, 1e-14);
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(grads.projector.layers[0].weight(i, j), dv * x[j], 1e-14);
        }
    }
}

TEST(Backward, RejectsStaleOrMissingCache) {
    Rng rng(13);
    ModelParams p = init_params(MlpSpec{}, rng);
    EXPECT_ASCL_ERROR(backward(p, ForwardCache{}, Vec(16, 1.0)), ErrorCode::InvalidState);
    const OnlineForward f = forward_online(p, random_vec(16, rng));
    ++p.version;
    EXPECT_ASCL_ERROR(backward(p, f.cache, Vec(16, 1.0)), ErrorCode::InvalidState);
    --p.version;
    EXPECT_ASCL_ERROR(backward(p, f.cache, Vec(16, 0.0), Vec(16, 1.0)), ErrorCode::InvalidState);
}

TEST(BackwardGradientCheck, EndToEndThroughSoftInfonce) {
    Rng rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams p = init_params(small_spec(rng, false), rng);
        const std::size_t dim = p.spec.projector.output_width();
        const Vec x = live_input(p, rng);
        const Vec zt = random_unit(dim, rng);
        const Mat bank = random_unit_rows(4, dim, rng);
        const Vec y = random_distribution(5, rng);
        const auto loss = [&] {
            return soft_infonce(forward_online(p, x).projection, y, zt, bank, 0.1).loss;
        };
        const OnlineForward f = forward_online(p, x);
        const LossAndGrad lg = soft_infonce(f.projection, y, zt, bank, 0.1);
        const Vec analytic = flatten(backward(p, f.cache, lg.grad));
        const Vec numeric = numeric_param_gradient(p, loss);
        ASSERT_LT(relative_error(analytic, numeric), 1e-5) << "trial " << trial;
    }
}

TEST(BackwardGradientCheck, EndToEndThroughPredictorAndByolLoss) {
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams p = init_params(small_spec(rng, true), rng);
        const std::size_t b = 4, dim = p.spec.projector.output_width();
        Mat xs(b, p.spec.encoder.input_width());
        for (std::size_t i = 0; i < b; ++i) {
            const Vec x = live_input(p, rng);
            std::copy(x.begin(), x.end(), xs.row(i).begin());
        }
        const Mat targets = random_unit_rows(b, dim, rng);
        const auto labels = byol_inbatch_labels(targets, 2, 0.5);
        const auto predictions = [&] {
            Mat h(b, dim);
            for (std::size_t i = 0; i < b; ++i) {
                const Vec pi = forward_online(p, xs.row(i), true).prediction;
                std::copy(pi.begin(), pi.end(), h.row(i).begin());
            }
            return h;
        };
        const auto loss = [&] { return byol_soft_loss(predictions(), targets, labels).value; };
        const ByolBatchLoss out = byol_soft_loss(predictions(), targets, labels);
        OnlineNets grads = zero_grads(p);
        for (std::size_t i = 0; i < b; ++i) {
            const OnlineForward f = forward_online(p, xs.row(i), true);
            backward_into(p, f.cache, {}, out.grad_wrt_predictions.row(i), grads);
        }
        ASSERT_LT(relative_error(flatten(grads), numeric_param_gradient(p, loss)), 1e-5)
            << "trial " << trial;
    }
}

TEST(Accumulate, ShapeMismatchRejected) {
    Rng rng(16);
    const ModelParams a = init_params(MlpSpec{}, rng);
    MlpSpec other;
    other.encoder = {{16, 8, 64}, true};
    const ModelParams b = init_params(other, rng);
    OnlineNets g = zero_grads(a);
    EXPECT_ASCL_ERROR(accumulate(g, zero_grads(b)), ErrorCode::InvalidArgument);
    EXPECT_EQ(parameter_count(zero_grads(a)),
              16u * 64 + 64 + 64 * 64 + 64 + 64 * 32 + 32 + 32 * 16 + 16);
}
