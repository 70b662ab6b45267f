#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ascl/datapipe.hpp"
#include "ascl/model.hpp"
#include "ascl/probe.hpp"
#include "ascl/relabel.hpp"

#include "json.hpp"

namespace ascl {

enum class Method { OneHot, Hard, Ahcl, Ascl, Byol, ByolAscl };

std::string_view to_string(Method m) noexcept;
/// Accepts onehot|moco, hard, ahcl, ascl, byol, byol-ascl|byol+ascl.
Method parse_method(std::string_view name);
bool is_byol(Method m) noexcept;
LabelStrategy label_strategy(Method m);

/// Every knob of a training run. Defaults follow the reference setup:
/// K=1, tau=0.1, tau'=0.05, bank 4096, EMA 0.99, SGD momentum 0.9,
/// weight decay 1e-4, 200 epochs, batch 256, lr 0.06 * batch / 256.
struct RunConfig {
    Method method = Method::Ascl;
    std::size_t num_neighbors = 1;
    double temperature = 0.1;
    double sharpening_temperature = 0.05;
    std::size_t bank_capacity = 4096;
    double ema_momentum = 0.99;
    std::optional<double> lr;  // unset: 0.06 * batch_size / 256
    double sgd_momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs = 200;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    AugmentPolicy query_augment = AugmentPolicy::strong();
    AugmentPolicy target_augment = AugmentPolicy::weak();
    MlpSpec model;
    KnnConfig knn;
    std::size_t knn_every = 1;  // epochs between KNN probes; the last epoch is always probed
    bool record_wall_time = false;
    std::string dataset_path;
    std::string test_dataset_path;
    std::string output_dir;

    double base_lr() const;
    LabelConfig label_config() const;
    /// Throws InvalidArgument describing the first inconsistency.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& c);
/// Keys absent from `j` keep the values already in `base`; unknown keys throw.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

nlohmann::json to_json(const MlpSpec& s);
MlpSpec mlp_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AugmentPolicy& p);
AugmentPolicy augment_policy_from_json(const nlohmann::json& j, AugmentPolicy base);

}  // namespace ascl
