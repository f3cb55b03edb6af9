#include "mccl/model.hpp"

#include <unordered_map>

#include "mccl/errors.hpp"

namespace mccl {

MCCLModel::MCCLModel(const TrainConfig& cfg, int num_relations)
    : cfg_(cfg), num_relations_(num_relations) {
    cfg_.validate();
    RngStream init_rng(mix_seed(cfg.seed, 0x494E4954ULL));  // "INIT"
    if (cfg.ablation_mode != AblationMode::vgae_only) {
        DenoiseConfig dc{cfg.denoise_layers, cfg.embedding_dim};
        view1_.emplace(num_relations, dc, init_rng);
    }
    if (cfg.ablation_mode != AblationMode::denoise_only) {
        VgaeConfig vc{cfg.vgae_layers, cfg.embedding_dim};
        view2_.emplace(num_relations, vc, init_rng);
    }
    FusionConfig fc{cfg.embedding_dim, cfg.scale()};
    fusion_ = FusionHead(fc, init_rng);
}

MCCLModel::ForwardResult MCCLModel::forward(const SubgraphBatch& batch,
                                            RngStream* noise_rng) const {
    ForwardResult result;
    if (view1_) result.view1 = view1_->forward(batch);
    if (view2_) result.view2 = view2_->encode(batch, noise_rng);

    const Tensor* h1 = result.view1 ? &result.view1->node_embeddings : nullptr;
    const Tensor* h2 = result.view2 ? &result.view2->z : nullptr;
    const Tensor& left = h1 ? *h1 : *h2;
    const Tensor& right = h2 ? *h2 : *h1;
    result.fusion = fusion_.predict(batch, left, right);

    result.loss = total_loss(batch, result.view1 ? &*result.view1 : nullptr,
                             result.view2 ? &*result.view2 : nullptr, result.fusion, cfg_.loss,
                             cfg_.contrastive_denominator, &result.breakdown);
    return result;
}

std::vector<double> MCCLModel::predict(const SubgraphBatch& batch) const {
    const Tensor* h1 = nullptr;
    const Tensor* h2 = nullptr;
    std::optional<DenoiseOutput> v1;
    std::optional<VgaeOutput> v2;
    if (view1_) {
        v1 = view1_->forward(batch);
        h1 = &v1->node_embeddings;
    }
    if (view2_) {
        v2 = view2_->encode(batch, nullptr);
        h2 = &v2->z;
    }
    FusionOutput out = fusion_.predict(batch, h1 ? *h1 : *h2, h2 ? *h2 : *h1);
    return out.predictions.values();
}

std::vector<ParamRef> MCCLModel::parameters() const {
    std::vector<ParamRef> params;
    if (view1_) view1_->collect_params(params);
    if (view2_) view2_->collect_params(params);
    fusion_.collect_params(params);
    return params;
}

void MCCLModel::load_state(const Checkpoint& ckpt) {
    std::unordered_map<std::string, const Tensor*> saved;
    for (const auto& [name, tensor] : ckpt.params) saved.emplace(name, &tensor);

    std::vector<ParamRef> params = parameters();
    if (saved.size() != params.size()) {
        throw ShapeMismatch("checkpoint holds " + std::to_string(saved.size()) +
                            " parameters, model expects " + std::to_string(params.size()));
    }
    for (ParamRef& p : params) {
        auto it = saved.find(p.name);
        if (it == saved.end()) {
            throw ShapeMismatch("checkpoint is missing parameter '" + p.name + "'");
        }
        if (it->second->shape() != p.tensor.shape()) {
            throw ShapeMismatch("checkpoint shape mismatch for '" + p.name + "'");
        }
        p.tensor.values() = it->second->values();
    }
}

}  // namespace mccl
