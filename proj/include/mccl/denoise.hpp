#pragma once

#include <cstddef>
#include <vector>

#include "mccl/nn.hpp"

namespace mccl {

/// Per attention layer, per training step: batch-wide bounds of the
/// normalized weights plus whether the raw scores had at least two distinct
/// values (in which case 0 and 1 are attained exactly).
struct AttentionLayerStats {
    double alpha_min = 0.0;
    double alpha_max = 0.0;
    bool scores_distinct = false;
    std::size_t n_edges = 0;
};

struct DenoiseOutput {
    Tensor node_embeddings;            // N x d, final layer
    Tensor predictions;                // B, dot(H[target_user], H[target_item])
    std::vector<Tensor> attentions;    // one (E x 1) tensor per attention layer
    std::vector<AttentionLayerStats> attention_stats;
};

/// Raw attention scores: MLP(h_u || h_i), one scalar per undirected edge,
/// shared by both directions. Returns an (E x 1) tensor.
Tensor edge_attention(const SubgraphBatch& batch, const Tensor& h, const MlpParams& mlp);

/// Min-max normalization over all edges of the batch; when every score is
/// equal the weights collapse to 0.5 (and carry no gradient).
Tensor normalize_attention(const Tensor& scores);

struct DenoiseConfig {
    int layers = 4;  // 1 plain + (layers-1) attention layers
    int embedding_dim = 64;
};

/// View 1: relational message passing where layers after the first re-score
/// every edge from the previous layer's embeddings and down-weight it during
/// propagation.
class DenoiseView {
public:
    DenoiseView() = default;
    DenoiseView(int num_relations, const DenoiseConfig& cfg, RngStream& init_rng);

    /// attention_ones replaces the learned weights with 1s (plain relational
    /// stack); used to verify that attention is a strict extension.
    DenoiseOutput forward(const SubgraphBatch& batch, bool attention_ones = false) const;

    void collect_params(std::vector<ParamRef>& out) const;

    /// Number of edge_attention invocations since construction/reset.
    std::size_t attention_calls() const { return attention_calls_; }
    void reset_attention_calls() const { attention_calls_ = 0; }

    int layers() const { return static_cast<int>(layers_.size()); }

private:
    std::vector<RgcnLayerParams> layers_;
    std::vector<MlpParams> attention_mlps_;  // one per attention layer
    mutable std::size_t attention_calls_ = 0;
};

}  // namespace mccl
