#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mccl/fusion.hpp"

namespace mccl {

/// Training configuration. The JSON schema mirrors the fields below; the
/// loss weights live under the "loss" object. Unknown keys are rejected.
struct TrainConfig {
    int batch_size = 128;
    double learning_rate = 0.001;
    double weight_decay = 0.09;
    int epochs = 40;
    std::uint64_t seed = 1;
    int embedding_dim = 64;
    int vgae_layers = 3;
    int denoise_layers = 4;
    int hops = 1;            // only 1 is supported
    int max_neighbors = 0;   // 0 = uncapped
    double rating_min = 1.0;
    double rating_max = 5.0;
    AblationMode ablation_mode = AblationMode::full;
    ContrastiveDenominator contrastive_denominator = ContrastiveDenominator::all;
    LossWeights loss;

    RatingScale scale() const { return {rating_min, rating_max}; }

    /// Throws ConfigError on invalid values (non-positive sizes, hops != 1,
    /// negative coefficients, tau <= 0, ...).
    void validate() const;

    static TrainConfig from_json(const nlohmann::json& j);
    static TrainConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
};

/// Applies "dotted.key=value" onto a config JSON document (e.g.
/// "loss.lambda=0.001", "epochs=5"). The key must already exist in the
/// schema; the value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& config, const std::string& dotted_key,
                    const std::string& value);

const char* to_string(AblationMode mode);
const char* to_string(ContrastiveDenominator denom);
AblationMode ablation_mode_from_string(const std::string& s);
ContrastiveDenominator denominator_from_string(const std::string& s);

}  // namespace mccl
