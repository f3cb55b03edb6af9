#include "mccl/nn.hpp"

#include <cmath>

#include "mccl/errors.hpp"

namespace mccl {

namespace {

std::vector<double> fan_in_uniform(std::size_t in, std::size_t out, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    for (double& v : w) v = rng.uniform_range(-bound, bound);
    return w;
}

}  // namespace

LinearParams LinearParams::init(std::size_t in, std::size_t out, RngStream& rng) {
    LinearParams p;
    p.weight = Tensor::parameter({in, out}, fan_in_uniform(in, out, rng));
    p.bias = Tensor::parameter({out}, std::vector<double>(out, 0.0));
    return p;
}

LinearParams LinearParams::zeros(std::size_t in, std::size_t out) {
    LinearParams p;
    p.weight = Tensor::parameter({in, out}, std::vector<double>(in * out, 0.0));
    p.bias = Tensor::parameter({out}, std::vector<double>(out, 0.0));
    return p;
}

void LinearParams::collect(const std::string& prefix, bool decay_weights,
                           std::vector<ParamRef>& out) const {
    out.push_back({prefix + ".weight", weight, decay_weights});
    out.push_back({prefix + ".bias", bias, false});
}

MlpParams MlpParams::init(std::size_t in, std::size_t hidden_dim, std::size_t out,
                          RngStream& rng) {
    MlpParams p;
    p.hidden = LinearParams::init(in, hidden_dim, rng);
    p.output = LinearParams::init(hidden_dim, out, rng);
    return p;
}

void MlpParams::collect(const std::string& prefix, bool decay_weights,
                        std::vector<ParamRef>& out) const {
    hidden.collect(prefix + ".hidden", decay_weights, out);
    output.collect(prefix + ".output", decay_weights, out);
}

RgcnLayerParams RgcnLayerParams::init(std::size_t in, std::size_t out, int num_relations,
                                      RngStream& rng) {
    RgcnLayerParams p;
    p.relation_weights.reserve(num_relations);
    for (int r = 0; r < num_relations; ++r) {
        p.relation_weights.push_back(Tensor::parameter({in, out}, fan_in_uniform(in, out, rng)));
    }
    p.self_weight = Tensor::parameter({in, out}, fan_in_uniform(in, out, rng));
    return p;
}

void RgcnLayerParams::collect(const std::string& prefix, std::vector<ParamRef>& out) const {
    for (std::size_t r = 0; r < relation_weights.size(); ++r) {
        out.push_back({prefix + ".rel" + std::to_string(r + 1) + ".weight", relation_weights[r],
                       true});
    }
    out.push_back({prefix + ".self.weight", self_weight, true});
}

Tensor batch_node_features(const SubgraphBatch& batch) {
    return Tensor::from_data({static_cast<std::size_t>(batch.n_nodes), 4}, batch.node_features);
}

Tensor rgcn_layer(const SubgraphBatch& batch, const Tensor& h_in, const RgcnLayerParams& params,
                  const std::optional<Tensor>& edge_attention) {
    const std::size_t n = static_cast<std::size_t>(batch.n_nodes);
    if (h_in.ndim() != 2 || h_in.shape()[0] != n) {
        throw ShapeMismatch("rgcn_layer: h_in must have one row per batch node");
    }
    if (static_cast<int>(params.relation_weights.size()) != batch.num_relations) {
        throw ShapeMismatch("rgcn_layer: one weight matrix per relation level");
    }
    if (edge_attention && edge_attention->numel() != batch.n_edges()) {
        throw ShapeMismatch("rgcn_layer: one attention weight per edge");
    }

    Tensor acc = matmul(h_in, params.self_weight);
    for (int r = 1; r <= batch.num_relations; ++r) {
        std::vector<std::size_t> sources, destinations, edge_ids;
        for (std::size_t e = 0; e < batch.edges.size(); ++e) {
            if (batch.edges[e].relation != r) continue;
            sources.push_back(static_cast<std::size_t>(batch.edges[e].src_user));
            destinations.push_back(static_cast<std::size_t>(batch.edges[e].dst_item));
            edge_ids.push_back(e);
        }
        if (sources.empty()) continue;
        const std::size_t half = sources.size();
        // reverse direction, same relation and attention
        for (std::size_t k = 0; k < half; ++k) {
            sources.push_back(destinations[k]);
            destinations.push_back(sources[k]);
            edge_ids.push_back(edge_ids[k]);
        }
        Tensor messages = matmul(gather_rows(h_in, sources), params.relation_weights[r - 1]);
        if (edge_attention) {
            messages = scale_rows(messages, gather_rows(*edge_attention, edge_ids));
        }
        acc = add(acc, scatter_add_rows(messages, destinations, n));
    }
    return relu(acc);
}

Tensor mse_loss(const Tensor& predictions, const std::vector<double>& targets) {
    if (predictions.numel() != targets.size()) {
        throw ShapeMismatch("mse_loss: " + std::to_string(predictions.numel()) +
                            " predictions vs " + std::to_string(targets.size()) + " targets");
    }
    if (targets.empty()) return Tensor::scalar(0.0);
    Tensor t = Tensor::from_data(predictions.shape(), targets);
    Tensor diff = sub(predictions, t);
    return mean(mul(diff, diff));
}

}  // namespace mccl
