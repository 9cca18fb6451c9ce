// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/config.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "oan/errors.hpp"

namespace oan {

namespace {

using Json = nlohmann::json;

template <typename T>
using Setters = std::map<std::string, std::function<void(T&, const Json&)>>;

template <typename T>
void apply(T& target, const Json& j, const Setters<T>& setters, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(std::string("unknown ") + what + " config key '" + key + "'");
        try {
            it->second(target, value);
        } catch (const Json::exception& e) {
            throw ConfigError(std::string("bad value for ") + what + " config key '" + key + "': " + e.what());
        }
    }
}

template <typename T, typename Field>
std::pair<const std::string, std::function<void(T&, const Json&)>> field(std::string name, Field T::*member) {
    return {std::move(name), [member](T& t, const Json& v) { t.*member = v.get<Field>(); }};
}

const Setters<TrainConfig>& train_setters() {
    static const Setters<TrainConfig> setters = {
        field("epochs", &TrainConfig::epochs),
        field("batch_size", &TrainConfig::batch_size),
        field("learning_rate", &TrainConfig::learning_rate),
        field("seed", &TrainConfig::seed),
        {"weights",
         [](TrainConfig& c, const Json& v) {
             const auto w = v.get<std::vector<double>>();
             if (w.size() != 3) throw ConfigError("weights must hold exactly three values");
             c.loss_weights = {w[0], w[1], w[2]};
         }},
        field("enable_in", &TrainConfig::enable_in),
        field("enable_s_hcr", &TrainConfig::enable_s_hcr),
        field("enable_t_hcr", &TrainConfig::enable_t_hcr),
        field("beta", &TrainConfig::beta),
        field("eta", &TrainConfig::eta),
        field("w", &TrainConfig::w),
        field("tau", &TrainConfig::tau),
        field("kernel_mu", &TrainConfig::kernel_mu),
        field("kernel_sigma_sq", &TrainConfig::kernel_sigma_sq),
        field("literal_coefficients", &TrainConfig::literal_coefficients),
        field("d_in", &TrainConfig::d_in),
        field("hidden", &TrainConfig::hidden),
        field("embed", &TrainConfig::embed),
        field("semantic_dim", &TrainConfig::semantic_dim),
        field("teacher_epochs", &TrainConfig::teacher_epochs),
        field("num_unseen", &TrainConfig::num_unseen),
        field("ks", &TrainConfig::ks),
    };
    return setters;
}

const Setters<SyntheticSpec>& data_setters() {
    static const Setters<SyntheticSpec> setters = {
        field("classes", &SyntheticSpec::num_classes),
        field("per_class", &SyntheticSpec::per_class_per_modality),
        field("d_in", &SyntheticSpec::d_in),
        field("modality_shift", &SyntheticSpec::modality_shift),
        field("noise", &SyntheticSpec::noise_std),
        field("seed", &SyntheticSpec::seed),
    };
    return setters;
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (pairwise losses need pairs)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be finite and >= 0");
    loss_weights.validate();
    inter_class().validate();
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("w must lie in [0, 1]");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    kernel().validate();
    if (hidden == 0 || embed < 2 || semantic_dim == 0) throw ConfigError("hidden, semantic_dim must be >= 1 and embed >= 2");
    if (num_unseen < 1) throw ConfigError("num_unseen must be >= 1");
    if (ks.empty()) throw ConfigError("ks must not be empty");
    for (std::size_t k : ks) {
        if (k == 0) throw ConfigError("every K in ks must be >= 1");
    }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = Json{
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"seed", c.seed},
        {"weights", {c.loss_weights.lambda1, c.loss_weights.lambda2, c.loss_weights.lambda3}},
        {"enable_in", c.enable_in},
        {"enable_s_hcr", c.enable_s_hcr},
        {"enable_t_hcr", c.enable_t_hcr},
        {"beta", c.beta},
        {"eta", c.eta},
        {"w", c.w},
        {"tau", c.tau},
        {"kernel_mu", c.kernel_mu},
        {"kernel_sigma_sq", c.kernel_sigma_sq},
        {"literal_coefficients", c.literal_coefficients},
        {"d_in", c.d_in},
        {"hidden", c.hidden},
        {"embed", c.embed},
        {"semantic_dim", c.semantic_dim},
        {"teacher_epochs", c.teacher_epochs},
        {"num_unseen", c.num_unseen},
        {"ks", c.ks},
    };
}

void merge_json(TrainConfig& cfg, const nlohmann::json& j) { apply(cfg, j, train_setters(), "train"); }

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
    j = Json{{"classes", s.num_classes}, {"per_class", s.per_class_per_modality},
             {"d_in", s.d_in},           {"modality_shift", s.modality_shift},
             {"noise", s.noise_std},     {"seed", s.seed}};
}

void merge_json(SyntheticSpec& spec, const nlohmann::json& j) { apply(spec, j, data_setters(), "data"); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the (seed, stream) pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace oan
