#include "mccl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mccl/errors.hpp"

namespace mccl {

namespace {
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");
}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    json manifest;
    manifest["format"] = "mccl-checkpoint-v1";
    json params = json::object();
    std::size_t offset = 0;
    {
        std::ofstream bin((fs::path(dir) / "params.bin").string(), std::ios::binary);
        if (!bin) throw IoError("cannot write params.bin under '" + dir + "'");
        for (const auto& [name, tensor] : ckpt.params) {
            json entry;
            entry["shape"] = tensor.shape();
            entry["dtype"] = "f64";
            entry["offset"] = offset;
            params[name] = std::move(entry);
            bin.write(reinterpret_cast<const char*>(tensor.values().data()),
                      static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
            offset += tensor.numel() * sizeof(double);
        }
    }
    manifest["params"] = std::move(params);
    manifest["config"] = ckpt.config;
    manifest["best_validation_rmse"] = ckpt.best_validation_rmse;
    manifest["rng_state"] = ckpt.rng_state;

    std::ofstream mf((fs::path(dir) / "manifest.json").string());
    if (!mf) throw IoError("cannot write manifest.json under '" + dir + "'");
    mf << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf((fs::path(dir) / "manifest.json").string());
    if (!mf) throw IoError("cannot open manifest.json under '" + dir + "'");
    json manifest = json::parse(mf);
    if (manifest.value("format", "") != "mccl-checkpoint-v1") {
        throw IoError("'" + dir + "' is not an mccl checkpoint");
    }

    std::ifstream bin((fs::path(dir) / "params.bin").string(), std::ios::binary);
    if (!bin) throw IoError("cannot open params.bin under '" + dir + "'");
    std::vector<char> raw((std::istreambuf_iterator<char>(bin)),
                          std::istreambuf_iterator<char>());

    Checkpoint ckpt;
    // Restore binary-file order by sorting entries on their offset.
    std::vector<std::pair<std::size_t, std::string>> order;
    for (const auto& [name, entry] : manifest.at("params").items()) {
        order.emplace_back(entry.at("offset").get<std::size_t>(), name);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [offset, name] : order) {
        const json& entry = manifest.at("params").at(name);
        std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::size_t numel = 1;
        for (std::size_t d : shape) numel *= d;
        if (offset + numel * sizeof(double) > raw.size()) {
            throw IoError("params.bin truncated for parameter '" + name + "'");
        }
        std::vector<double> values(numel);
        std::memcpy(values.data(), raw.data() + offset, numel * sizeof(double));
        ckpt.params.emplace_back(name, Tensor::from_data(std::move(shape), std::move(values)));
    }
    ckpt.config = manifest.value("config", json::object());
    ckpt.best_validation_rmse = manifest.value("best_validation_rmse", 0.0);
    ckpt.rng_state = manifest.value("rng_state", "");
    return ckpt;
}

}  // namespace mccl
