#include "mccl/config.hpp"

#include <fstream>
#include <set>

#include "mccl/errors.hpp"

namespace mccl {

namespace {

using nlohmann::json;

const std::set<std::string> kTopLevelKeys = {
    "batch_size",  "learning_rate", "weight_decay",  "epochs",
    "seed",        "embedding_dim", "vgae_layers",   "denoise_layers",
    "hops",        "max_neighbors", "rating_min",    "rating_max",
    "ablation_mode", "contrastive_denominator", "loss"};

const std::set<std::string> kLossKeys = {"alpha", "beta", "lambda", "tau"};

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

}  // namespace

const char* to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::full: return "full";
        case AblationMode::denoise_only: return "denoise_only";
        case AblationMode::vgae_only: return "vgae_only";
    }
    return "full";
}

const char* to_string(ContrastiveDenominator denom) {
    return denom == ContrastiveDenominator::all ? "all" : "negatives_only";
}

AblationMode ablation_mode_from_string(const std::string& s) {
    if (s == "full") return AblationMode::full;
    if (s == "denoise_only") return AblationMode::denoise_only;
    if (s == "vgae_only") return AblationMode::vgae_only;
    throw ConfigError("unknown ablation_mode '" + s +
                      "' (expected full|denoise_only|vgae_only)");
}

ContrastiveDenominator denominator_from_string(const std::string& s) {
    if (s == "all") return ContrastiveDenominator::all;
    if (s == "negatives_only") return ContrastiveDenominator::negatives_only;
    throw ConfigError("unknown contrastive_denominator '" + s +
                      "' (expected all|negatives_only)");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
    if (vgae_layers < 1) throw ConfigError("vgae_layers must be positive");
    if (denoise_layers < 1) throw ConfigError("denoise_layers must be positive");
    if (hops != 1) throw ConfigError("hops must be 1 in this version");
    if (max_neighbors < 0) throw ConfigError("max_neighbors must be non-negative");
    if (rating_min >= rating_max) throw ConfigError("rating_min must be below rating_max");
    if (loss.alpha < 0 || loss.beta < 0 || loss.lambda < 0) {
        throw ConfigError("loss coefficients must be non-negative");
    }
    if (loss.tau <= 0) throw ConfigError("loss.tau must be positive");
    if (ablation_mode == AblationMode::full && loss.lambda > 0 && batch_size < 2) {
        throw ConfigError("batch_size must be at least 2 while the contrastive loss is active");
    }
}

TrainConfig TrainConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kTopLevelKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
        (void)value;
    }
    if (j.contains("loss")) {
        if (!j.at("loss").is_object()) throw ConfigError("'loss' must be an object");
        for (const auto& [key, value] : j.at("loss").items()) {
            if (!kLossKeys.count(key)) throw ConfigError("unknown config key 'loss." + key + "'");
            (void)value;
        }
    }

    TrainConfig cfg;
    read_field(j, "batch_size", cfg.batch_size);
    read_field(j, "learning_rate", cfg.learning_rate);
    read_field(j, "weight_decay", cfg.weight_decay);
    read_field(j, "epochs", cfg.epochs);
    read_field(j, "seed", cfg.seed);
    read_field(j, "embedding_dim", cfg.embedding_dim);
    read_field(j, "vgae_layers", cfg.vgae_layers);
    read_field(j, "denoise_layers", cfg.denoise_layers);
    read_field(j, "hops", cfg.hops);
    read_field(j, "max_neighbors", cfg.max_neighbors);
    read_field(j, "rating_min", cfg.rating_min);
    read_field(j, "rating_max", cfg.rating_max);
    if (j.contains("ablation_mode")) {
        cfg.ablation_mode = ablation_mode_from_string(j.at("ablation_mode").get<std::string>());
    }
    if (j.contains("contrastive_denominator")) {
        cfg.contrastive_denominator =
            denominator_from_string(j.at("contrastive_denominator").get<std::string>());
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        read_field(l, "alpha", cfg.loss.alpha);
        read_field(l, "beta", cfg.loss.beta);
        read_field(l, "lambda", cfg.loss.lambda);
        read_field(l, "tau", cfg.loss.tau);
    }
    cfg.validate();
    return cfg;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return from_json(j);
}

json TrainConfig::to_json() const {
    json j;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["weight_decay"] = weight_decay;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["embedding_dim"] = embedding_dim;
    j["vgae_layers"] = vgae_layers;
    j["denoise_layers"] = denoise_layers;
    j["hops"] = hops;
    j["max_neighbors"] = max_neighbors;
    j["rating_min"] = rating_min;
    j["rating_max"] = rating_max;
    j["ablation_mode"] = to_string(ablation_mode);
    j["contrastive_denominator"] = to_string(contrastive_denominator);
    j["loss"] = {{"alpha", loss.alpha},
                 {"beta", loss.beta},
                 {"lambda", loss.lambda},
                 {"tau", loss.tau}};
    return j;
}

void apply_override(json& config, const std::string& dotted_key, const std::string& value) {
    std::vector<std::string> path;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = dotted_key.find('.', begin);
        path.push_back(dotted_key.substr(begin, dot - begin));
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }
    if (path.empty() || path.front().empty()) {
        throw ConfigError("empty override key");
    }

    // Keys must belong to the schema.
    if (path.size() == 1) {
        if (!kTopLevelKeys.count(path[0]) || path[0] == "loss") {
            throw ConfigError("unknown config key '" + dotted_key + "'");
        }
    } else if (path.size() == 2 && path[0] == "loss") {
        if (!kLossKeys.count(path[1])) {
            throw ConfigError("unknown config key '" + dotted_key + "'");
        }
    } else {
        throw ConfigError("unknown config key '" + dotted_key + "'");
    }

    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // plain string (e.g. ablation_mode=vgae_only)
    }

    json* node = &config;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &(*node)[path[i]];
    (*node)[path.back()] = parsed;
}

}  // namespace mccl
