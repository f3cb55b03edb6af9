#pragma once

#include <vector>

#include "mccl/nn.hpp"

namespace mccl {

struct VgaeOutput {
    Tensor z;       // N x d latent embeddings
    Tensor mu;      // N x d
    Tensor logstd;  // N x d
    Tensor target_predictions;          // B, dot(Z[u], Z[i])
    Tensor reconstruction_predictions;  // one per batch edge
};

struct VgaeConfig {
    int layers = 3;
    int embedding_dim = 64;
};

/// View 2: relational encoder -> (mu, log sigma) heads -> reparameterized
/// latents, decoded by dot products for both the targets and every batch
/// edge.
class VgaeView {
public:
    VgaeView() = default;
    VgaeView(int num_relations, const VgaeConfig& cfg, RngStream& init_rng);

    /// Training mode draws eps ~ N(0,1) per element from noise_rng; pass
    /// nullptr for evaluation (eps = 0, Z = mu, deterministic).
    VgaeOutput encode(const SubgraphBatch& batch, RngStream* noise_rng) const;

    void collect_params(std::vector<ParamRef>& out) const;
    int layers() const { return static_cast<int>(encoder_.size()); }

private:
    std::vector<RgcnLayerParams> encoder_;
    MlpParams mean_mlp_;
    MlpParams logstd_mlp_;
};

/// L_KL = mean over nodes of -1/2 sum_dims (1 + log sigma^2 - mu^2 - sigma^2).
Tensor kl_divergence(const Tensor& mu, const Tensor& logstd);

}  // namespace mccl
