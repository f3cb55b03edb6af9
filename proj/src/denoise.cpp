#include "mccl/denoise.hpp"

#include <algorithm>

#include "mccl/errors.hpp"

namespace mccl {

Tensor edge_attention(const SubgraphBatch& batch, const Tensor& h, const MlpParams& mlp) {
    std::vector<std::size_t> users, items;
    users.reserve(batch.edges.size());
    items.reserve(batch.edges.size());
    for (const LocalEdge& e : batch.edges) {
        users.push_back(static_cast<std::size_t>(e.src_user));
        items.push_back(static_cast<std::size_t>(e.dst_item));
    }
    Tensor pair_features = concat(gather_rows(h, users), gather_rows(h, items), 1);
    return mlp.forward(pair_features);  // (E x 1)
}

Tensor normalize_attention(const Tensor& scores) {
    if (scores.numel() == 0) throw EmptyInput("normalize_attention: no scores");
    const auto [lo, hi] = std::minmax_element(scores.values().begin(), scores.values().end());
    if (*lo == *hi) {
        return Tensor::full(scores.shape(), 0.5);
    }
    Tensor mn = min(scores);
    Tensor range = sub(max(scores), mn);
    return div(sub(scores, mn), range);
}

DenoiseView::DenoiseView(int num_relations, const DenoiseConfig& cfg, RngStream& init_rng) {
    const std::size_t d = static_cast<std::size_t>(cfg.embedding_dim);
    std::size_t in = 4;
    for (int l = 0; l < cfg.layers; ++l) {
        layers_.push_back(RgcnLayerParams::init(in, d, num_relations, init_rng));
        in = d;
    }
    for (int l = 1; l < cfg.layers; ++l) {
        attention_mlps_.push_back(MlpParams::init(2 * d, d, 1, init_rng));
    }
}

DenoiseOutput DenoiseView::forward(const SubgraphBatch& batch, bool attention_ones) const {
    DenoiseOutput out;
    Tensor h = rgcn_layer(batch, batch_node_features(batch), layers_[0], std::nullopt);
    for (std::size_t l = 1; l < layers_.size(); ++l) {
        std::optional<Tensor> alpha;
        if (batch.n_edges() > 0) {
            if (attention_ones) {
                alpha = Tensor::full({batch.n_edges(), 1}, 1.0);
            } else {
                ++attention_calls_;
                Tensor scores = edge_attention(batch, h, attention_mlps_[l - 1]);
                alpha = normalize_attention(scores);

                AttentionLayerStats stats;
                stats.n_edges = batch.n_edges();
                const auto [lo, hi] =
                    std::minmax_element(scores.values().begin(), scores.values().end());
                stats.scores_distinct = *lo != *hi;
                const auto [alo, ahi] =
                    std::minmax_element(alpha->values().begin(), alpha->values().end());
                stats.alpha_min = *alo;
                stats.alpha_max = *ahi;
                out.attentions.push_back(*alpha);
                out.attention_stats.push_back(stats);
            }
        }
        h = rgcn_layer(batch, h, layers_[l], alpha);
    }
    out.node_embeddings = h;
    out.predictions = dot_rows(gather_rows(h, batch.target_users),
                               gather_rows(h, batch.target_items));
    return out;
}

void DenoiseView::collect_params(std::vector<ParamRef>& out) const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        layers_[l].collect("view1.layer" + std::to_string(l), out);
    }
    for (std::size_t l = 0; l < attention_mlps_.size(); ++l) {
        attention_mlps_[l].collect("view1.att" + std::to_string(l + 1), true, out);
    }
}

}  // namespace mccl
