#include "mccl/fusion.hpp"

#include <algorithm>

#include "mccl/errors.hpp"

namespace mccl {

namespace {
constexpr double kDenominatorEpsilon = 1e-8;
}

Tensor contrastive_loss(const Tensor& z1, const Tensor& z2, double tau,
                        ContrastiveDenominator denominator) {
    if (z1.ndim() != 2 || z1.shape() != z2.shape()) {
        throw ShapeMismatch("contrastive_loss: views must be equal-shape 2-d tensors");
    }
    const std::size_t batch = z1.shape()[0];
    if (batch < 2) {
        throw BatchTooSmall("contrastive_loss needs a batch of at least 2, got " +
                            std::to_string(batch));
    }
    Tensor similarities = mul_scalar(matmul(z1, transpose(z2)), 1.0 / tau);
    if (denominator == ContrastiveDenominator::all) {
        return mul_scalar(mean(take_diag(log_softmax_rows(similarities))), -1.0);
    }
    // negatives_only: denom_i = sum_{j != i} exp(s_ij) + eps
    Tensor exp_sim = exp(similarities);
    Tensor denom = add_scalar(sub(sum_rows(exp_sim), take_diag(exp_sim)), kDenominatorEpsilon);
    return mean(sub(log(denom), take_diag(similarities)));
}

FusionHead::FusionHead(const FusionConfig& cfg, RngStream& init_rng) : scale_(cfg.scale) {
    const std::size_t node_dim = 2 * static_cast<std::size_t>(cfg.view_dim);
    head_ = MlpParams::init(2 * node_dim, node_dim, 1, init_rng);
    // Zero output layer: the head starts as the midpoint predictor.
    head_.output = LinearParams::zeros(node_dim, 1);
}

FusionOutput FusionHead::predict(const SubgraphBatch& batch, const Tensor& h1,
                                 const Tensor& h2) const {
    Tensor user_emb = concat(gather_rows(h1, batch.target_users),
                             gather_rows(h2, batch.target_users), 1);
    Tensor item_emb = concat(gather_rows(h1, batch.target_items),
                             gather_rows(h2, batch.target_items), 1);
    Tensor raw = head_.forward(concat(user_emb, item_emb, 1));  // (B x 1)
    Tensor squashed = sigmoid(reshape(raw, {batch.target_users.size()}));
    FusionOutput out;
    out.predictions = add_scalar(
        mul_scalar(squashed, scale_.max_rating - scale_.min_rating), scale_.min_rating);
    return out;
}

void FusionHead::collect_params(std::vector<ParamRef>& out) const {
    head_.collect("fusion.head", true, out);
}

Tensor total_loss(const SubgraphBatch& batch, const DenoiseOutput* view1,
                  const VgaeOutput* view2, const FusionOutput& fusion, const LossWeights& weights,
                  ContrastiveDenominator denominator, LossBreakdown* breakdown) {
    Tensor total = Tensor::scalar(0.0);
    LossBreakdown parts;

    if (view1 != nullptr) {
        Tensor view1_loss = mse_loss(view1->predictions, batch.target_ratings);
        parts.view1 = view1_loss.item();
        total = add(total, view1_loss);
    }

    if (view2 != nullptr) {
        Tensor pred_loss = mse_loss(view2->target_predictions, batch.target_ratings);
        parts.pred = pred_loss.item();
        total = add(total, pred_loss);

        if (batch.n_edges() > 0) {
            std::vector<double> edge_ratings;
            edge_ratings.reserve(batch.n_edges());
            for (const LocalEdge& e : batch.edges) edge_ratings.push_back(e.rating);
            Tensor rec_loss = mse_loss(view2->reconstruction_predictions, edge_ratings);
            parts.rec = rec_loss.item();
            total = add(total, mul_scalar(rec_loss, weights.alpha));
        }

        Tensor kl = kl_divergence(view2->mu, view2->logstd);
        parts.kl = kl.item();
        total = add(total, mul_scalar(kl, weights.beta));
    }

    Tensor final_loss = mse_loss(fusion.predictions, batch.target_ratings);
    parts.final_pred = final_loss.item();
    total = add(total, final_loss);

    if (view1 != nullptr && view2 != nullptr && batch.target_users.size() >= 2) {
        Tensor user_cl = contrastive_loss(gather_rows(view1->node_embeddings, batch.target_users),
                                          gather_rows(view2->z, batch.target_users), weights.tau,
                                          denominator);
        Tensor item_cl = contrastive_loss(gather_rows(view1->node_embeddings, batch.target_items),
                                          gather_rows(view2->z, batch.target_items), weights.tau,
                                          denominator);
        Tensor cl = mul_scalar(add(user_cl, item_cl), 0.5);
        parts.cl = cl.item();
        total = add(total, mul_scalar(cl, weights.lambda));
    }

    parts.total = total.item();
    if (breakdown != nullptr) *breakdown = parts;
    return total;
}

}  // namespace mccl
