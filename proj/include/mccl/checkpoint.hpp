#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mccl/tensor.hpp"

namespace mccl {

/// Saved model state: a manifest (parameter name -> shape/dtype/byte offset,
/// plus config snapshot, best validation RMSE and rng state) and one raw
/// little-endian float64 array file holding every parameter back to back.
struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> params;  // binary-file order
    nlohmann::json config;
    double best_validation_rmse = 0.0;
    std::string rng_state;
};

/// Writes manifest.json + params.bin under `dir` (created if needed).
void save_checkpoint(const Checkpoint& ckpt, const std::string& dir);
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace mccl
