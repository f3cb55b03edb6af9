#pragma once

#include <vector>

#include "mccl/denoise.hpp"
#include "mccl/vgae.hpp"

namespace mccl {

enum class ContrastiveDenominator {
    all,             // softmax denominator over every in-batch pair (default)
    negatives_only,  // negatives plus a small epsilon, excluding the positive
};

enum class AblationMode { full, denoise_only, vgae_only };

/// InfoNCE-style alignment of the two views' target embeddings:
///   s = z1 z2^T / tau,  loss_i = -log( exp(s_ii) / denom_i ),  mean over rows.
/// Callers evaluate it once with user embeddings and once with item
/// embeddings and average the two.
Tensor contrastive_loss(const Tensor& z1, const Tensor& z2, double tau,
                        ContrastiveDenominator denominator = ContrastiveDenominator::all);

struct FusionConfig {
    int view_dim = 64;  // per-view embedding size; node embeddings are 2x this
    RatingScale scale;
};

struct FusionOutput {
    Tensor predictions;  // B, inside (r_min, r_max)
};

/// Prediction head: user and item embeddings from both views are
/// concatenated (128 per node), joined (256), passed through the MLP and a
/// sigmoid rescaled onto the rating range. The output layer starts at zero,
/// so an untrained head predicts the midpoint of the scale.
class FusionHead {
public:
    FusionHead() = default;
    FusionHead(const FusionConfig& cfg, RngStream& init_rng);

    /// h1/h2 are the two views' node embedding matrices over the same batch;
    /// ablated modes pass the surviving view twice.
    FusionOutput predict(const SubgraphBatch& batch, const Tensor& h1, const Tensor& h2) const;

    void collect_params(std::vector<ParamRef>& out) const;

private:
    MlpParams head_;
    RatingScale scale_;
};

struct LossWeights {
    double alpha = 0.001;   // reconstruction coefficient
    double beta = 0.001;    // KL coefficient
    double lambda = 0.001;  // contrastive coefficient
    double tau = 0.2;       // contrastive temperature
};

struct LossBreakdown {
    double view1 = 0.0;
    double pred = 0.0;
    double rec = 0.0;
    double kl = 0.0;
    double cl = 0.0;
    double final_pred = 0.0;
    double total = 0.0;
};

/// Assembles the training objective
///   L = L_view1 + (L_pred + alpha L_rec + beta L_KL) + (L_final + lambda L_cl)
/// over one batch. Either view output may be null (ablations), dropping its
/// terms; the contrastive term needs both views and batch size >= 2.
Tensor total_loss(const SubgraphBatch& batch, const DenoiseOutput* view1,
                  const VgaeOutput* view2, const FusionOutput& fusion, const LossWeights& weights,
                  ContrastiveDenominator denominator, LossBreakdown* breakdown = nullptr);

}  // namespace mccl
