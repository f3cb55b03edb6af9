#pragma once

#include <optional>

#include "mccl/checkpoint.hpp"
#include "mccl/config.hpp"
#include "mccl/fusion.hpp"

namespace mccl {

/// The assembled two-view model. In ablated modes only the surviving view
/// runs (its embeddings fill both head slots) and the dropped view's loss
/// terms are exactly zero.
class MCCLModel {
public:
    MCCLModel() = default;
    MCCLModel(const TrainConfig& cfg, int num_relations);

    struct ForwardResult {
        std::optional<DenoiseOutput> view1;
        std::optional<VgaeOutput> view2;
        FusionOutput fusion;
        Tensor loss;
        LossBreakdown breakdown;
    };

    /// Runs the configured views and assembles the total loss. noise_rng
    /// drives the reparameterization draw; pass nullptr for evaluation mode
    /// (eps = 0).
    ForwardResult forward(const SubgraphBatch& batch, RngStream* noise_rng) const;

    /// Evaluation-mode predictions (no tape, eps = 0).
    std::vector<double> predict(const SubgraphBatch& batch) const;

    std::vector<ParamRef> parameters() const;
    void load_state(const Checkpoint& ckpt);

    const DenoiseView* denoise_view() const {
        return view1_.has_value() ? &*view1_ : nullptr;
    }
    const TrainConfig& config() const { return cfg_; }
    int num_relations() const { return num_relations_; }

private:
    TrainConfig cfg_;
    int num_relations_ = 0;
    std::optional<DenoiseView> view1_;
    std::optional<VgaeView> view2_;
    FusionHead fusion_;
};

}  // namespace mccl
