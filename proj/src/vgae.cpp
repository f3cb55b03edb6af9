#include "mccl/vgae.hpp"

#include "mccl/errors.hpp"

namespace mccl {

VgaeView::VgaeView(int num_relations, const VgaeConfig& cfg, RngStream& init_rng) {
    const std::size_t d = static_cast<std::size_t>(cfg.embedding_dim);
    std::size_t in = 4;
    for (int l = 0; l < cfg.layers; ++l) {
        encoder_.push_back(RgcnLayerParams::init(in, d, num_relations, init_rng));
        in = d;
    }
    mean_mlp_ = MlpParams::init(d, d, d, init_rng);
    logstd_mlp_ = MlpParams::init(d, d, d, init_rng);
    // Start log sigma near -2 so sigma ~ 0.135 and the early KL term stays
    // small.
    std::fill(logstd_mlp_.output.bias.values().begin(), logstd_mlp_.output.bias.values().end(),
              -2.0);
}

VgaeOutput VgaeView::encode(const SubgraphBatch& batch, RngStream* noise_rng) const {
    Tensor h = batch_node_features(batch);
    for (const RgcnLayerParams& layer : encoder_) {
        h = rgcn_layer(batch, h, layer, std::nullopt);
    }

    VgaeOutput out;
    out.mu = mean_mlp_.forward(h);
    out.logstd = logstd_mlp_.forward(h);
    if (noise_rng != nullptr) {
        std::vector<double> eps(out.mu.numel());
        noise_rng->fill_normal(eps);
        Tensor noise = Tensor::from_data(out.mu.shape(), std::move(eps));
        out.z = add(out.mu, mul(noise, exp(out.logstd)));
    } else {
        out.z = out.mu;
    }

    out.target_predictions = dot_rows(gather_rows(out.z, batch.target_users),
                                      gather_rows(out.z, batch.target_items));
    std::vector<std::size_t> users, items;
    users.reserve(batch.edges.size());
    items.reserve(batch.edges.size());
    for (const LocalEdge& e : batch.edges) {
        users.push_back(static_cast<std::size_t>(e.src_user));
        items.push_back(static_cast<std::size_t>(e.dst_item));
    }
    out.reconstruction_predictions =
        dot_rows(gather_rows(out.z, users), gather_rows(out.z, items));
    return out;
}

void VgaeView::collect_params(std::vector<ParamRef>& out) const {
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        encoder_[l].collect("view2.enc" + std::to_string(l), out);
    }
    mean_mlp_.collect("view2.mean", true, out);
    // The log-std head never decays: shrinking it would bias sigma toward 1.
    logstd_mlp_.collect("view2.logstd", false, out);
}

Tensor kl_divergence(const Tensor& mu, const Tensor& logstd) {
    if (mu.ndim() != 2 || mu.shape() != logstd.shape()) {
        throw ShapeMismatch("kl_divergence: mu and logstd must be equal-shape 2-d tensors");
    }
    Tensor log_var = mul_scalar(logstd, 2.0);
    Tensor inner = add_scalar(log_var, 1.0);
    inner = sub(inner, mul(mu, mu));
    inner = sub(inner, exp(log_var));
    return mul_scalar(mean(sum_rows(inner)), -0.5);
}

}  // namespace mccl
