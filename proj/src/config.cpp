#include "ascl/config.hpp"

#include <set>

namespace ascl {

using nlohmann::json;

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::OneHot: return "onehot";
        case Method::Hard: return "hard";
        case Method::Ahcl: return "ahcl";
        case Method::Ascl: return "ascl";
        case Method::Byol: return "byol";
        case Method::ByolAscl: return "byol-ascl";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "onehot" || name == "moco") return Method::OneHot;
    if (name == "hard") return Method::Hard;
    if (name == "ahcl") return Method::Ahcl;
    if (name == "ascl") return Method::Ascl;
    if (name == "byol") return Method::Byol;
    if (name == "byol-ascl" || name == "byol+ascl") return Method::ByolAscl;
    fail(ErrorCode::InvalidArgument, "unknown strategy: " + std::string(name));
}

bool is_byol(Method m) noexcept {
    return m == Method::Byol || m == Method::ByolAscl;
}

LabelStrategy label_strategy(Method m) {
    switch (m) {
        case Method::OneHot: return LabelStrategy::OneHot;
        case Method::Hard: return LabelStrategy::Hard;
        case Method::Ahcl: return LabelStrategy::Ahcl;
        case Method::Ascl:
        case Method::ByolAscl: return LabelStrategy::Ascl;
        case Method::Byol: return LabelStrategy::OneHot;
    }
    return LabelStrategy::OneHot;
}

double RunConfig::base_lr() const {
    return lr.value_or(0.06 * static_cast<double>(batch_size) / 256.0);
}

LabelConfig RunConfig::label_config() const {
    return {label_strategy(method), num_neighbors, sharpening_temperature};
}

void RunConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) {
            fail(ErrorCode::InvalidArgument, std::string("config: ") + what);
        }
    };
    check(temperature > 0.0, "temperature must be positive");
    check(sharpening_temperature > 0.0, "sharpening temperature must be positive");
    check(ema_momentum >= 0.0 && ema_momentum <= 1.0, "ema momentum must lie in [0, 1]");
    check(base_lr() >= 0.0, "lr must be non-negative");
    check(sgd_momentum >= 0.0, "sgd momentum must be non-negative");
    check(weight_decay >= 0.0, "weight decay must be non-negative");
    check(epochs >= 1, "epochs must be >= 1");
    check(batch_size >= 1, "batch size must be >= 1");
    check(knn.k >= 1, "knn k must be >= 1");
    check(knn.temperature > 0.0, "knn temperature must be positive");
    check(knn_every >= 1, "knn_every must be >= 1");
    check(bank_capacity >= 1, "bank capacity must be >= 1");
    if (!is_byol(method)) {
        check(batch_size <= bank_capacity, "batch size must not exceed bank capacity");
        check(num_neighbors <= bank_capacity, "k must not exceed bank capacity");
    } else if (method == Method::ByolAscl) {
        check(batch_size >= 3, "byol-ascl needs batch size >= 3");
    }
    query_augment.validate();
    target_augment.validate();
    model.validate();
    if (is_byol(method)) {
        check(model.use_predictor, "byol methods need a predictor");
    }
}

json to_json(const AugmentPolicy& p) {
    return json{{"kind", p.kind == AugmentKind::Weak ? "weak" : "strong"},
                {"jitter_sigma", p.jitter_sigma},
                {"drop_prob", p.drop_prob},
                {"scale_lo", p.scale_lo},
                {"scale_hi", p.scale_hi},
                {"rotate", p.rotate},
                {"max_rotation", p.max_rotation}};
}

AugmentPolicy augment_policy_from_json(const json& j, AugmentPolicy p) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "weak") return AugmentPolicy::weak();
        if (name == "strong") return AugmentPolicy::strong();
        fail(ErrorCode::InvalidArgument, "augment policy must be weak, strong or an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            const auto k = value.get<std::string>();
            require(k == "weak" || k == "strong", ErrorCode::InvalidArgument,
                    "augment kind must be weak or strong");
            p.kind = k == "weak" ? AugmentKind::Weak : AugmentKind::Strong;
        } else if (key == "jitter_sigma") {
            p.jitter_sigma = value.get<double>();
        } else if (key == "drop_prob") {
            p.drop_prob = value.get<double>();
        } else if (key == "scale_lo") {
            p.scale_lo = value.get<double>();
        } else if (key == "scale_hi") {
            p.scale_hi = value.get<double>();
        } else if (key == "rotate") {
            p.rotate = value.get<bool>();
        } else if (key == "max_rotation") {
            p.max_rotation = value.get<double>();
        } else {
            fail(ErrorCode::InvalidArgument, "unknown augment key: " + key);
        }
    }
    return p;
}

json to_json(const MlpSpec& s) {
    return json{{"encoder", s.encoder.widths},
                {"encoder_relu_on_output", s.encoder.relu_on_output},
                {"projector", s.projector.widths},
                {"predictor", s.predictor.widths},
                {"use_predictor", s.use_predictor}};
}

MlpSpec mlp_spec_from_json(const json& j) {
    MlpSpec s;
    for (const auto& [key, value] : j.items()) {
        if (key == "encoder") {
            s.encoder.widths = value.get<std::vector<std::size_t>>();
        } else if (key == "encoder_relu_on_output") {
            s.encoder.relu_on_output = value.get<bool>();
        } else if (key == "projector") {
            s.projector.widths = value.get<std::vector<std::size_t>>();
        } else if (key == "predictor") {
            s.predictor.widths = value.get<std::vector<std::size_t>>();
        } else if (key == "use_predictor") {
            s.use_predictor = value.get<bool>();
        } else {
            fail(ErrorCode::InvalidArgument, "unknown model key: " + key);
        }
    }
    return s;
}

json to_json(const RunConfig& c) {
    json j{{"strategy", std::string(to_string(c.method))},
           {"k", c.num_neighbors},
           {"tau", c.temperature},
           {"tau_prime", c.sharpening_temperature},
           {"bank", c.bank_capacity},
           {"ema", c.ema_momentum},
           {"sgd_momentum", c.sgd_momentum},
           {"weight_decay", c.weight_decay},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"query_augment", to_json(c.query_augment)},
           {"target_augment", to_json(c.target_augment)},
           {"model", to_json(c.model)},
           {"knn_k", c.knn.k},
           {"knn_temperature", c.knn.temperature},
           {"knn_every", c.knn_every},
           {"record_wall_time", c.record_wall_time},
           {"data", c.dataset_path},
           {"test_data", c.test_dataset_path},
           {"out", c.output_dir}};
    j["lr"] = c.lr ? json(*c.lr) : json(nullptr);
    return j;
}

namespace {

std::size_t as_count(const json& v) {
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
            ErrorCode::InvalidArgument, "config: expected a non-negative integer");
    return v.get<std::size_t>();
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig c) {
    require(j.is_object(), ErrorCode::InvalidArgument, "config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "strategy") c.method = parse_method(v.get<std::string>());
            else if (key == "k") c.num_neighbors = as_count(v);
            else if (key == "tau") c.temperature = v.get<double>();
            else if (key == "tau_prime") c.sharpening_temperature = v.get<double>();
            else if (key == "bank") c.bank_capacity = as_count(v);
            else if (key == "ema") c.ema_momentum = v.get<double>();
            else if (key == "lr") c.lr = v.is_null() ? std::nullopt : std::optional(v.get<double>());
            else if (key == "sgd_momentum") c.sgd_momentum = v.get<double>();
            else if (key == "weight_decay") c.weight_decay = v.get<double>();
            else if (key == "epochs") c.epochs = as_count(v);
            else if (key == "batch_size") c.batch_size = as_count(v);
            else if (key == "seed") c.seed = as_count(v);
            else if (key == "query_augment") c.query_augment = augment_policy_from_json(v, c.query_augment);
            else if (key == "target_augment") c.target_augment = augment_policy_from_json(v, c.target_augment);
            else if (key == "model") c.model = mlp_spec_from_json(v);
            else if (key == "knn_k") c.knn.k = as_count(v);
            else if (key == "knn_temperature") c.knn.temperature = v.get<double>();
            else if (key == "knn_every") c.knn_every = as_count(v);
            else if (key == "record_wall_time") c.record_wall_time = v.get<bool>();
            else if (key == "data") c.dataset_path = v.get<std::string>();
            else if (key == "test_data") c.test_dataset_path = v.get<std::string>();
            else if (key == "out") c.output_dir = v.get<std::string>();
            else fail(ErrorCode::InvalidArgument, "unknown config key: " + key);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    return c;
}

}  // namespace ascl
