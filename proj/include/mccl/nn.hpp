#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mccl/graph.hpp"
#include "mccl/rng.hpp"
#include "mccl/tensor.hpp"

namespace mccl {

/// Named handle to a trainable tensor. `decay` marks parameters subject to
/// weight decay (weight matrices; biases and the log-std head are excluded).
struct ParamRef {
    std::string name;
    Tensor tensor;
    bool decay = true;
};

struct LinearParams {
    Tensor weight;  // (in x out)
    Tensor bias;    // (out)

    /// Fan-in scaled uniform weights, zero bias.
    static LinearParams init(std::size_t in, std::size_t out, RngStream& rng);
    static LinearParams zeros(std::size_t in, std::size_t out);

    Tensor forward(const Tensor& x) const { return add_rowvec(matmul(x, weight), bias); }
    void collect(const std::string& prefix, bool decay_weights,
                 std::vector<ParamRef>& out) const;
};

/// Two-layer perceptron, relu hidden, linear output.
struct MlpParams {
    LinearParams hidden;
    LinearParams output;

    static MlpParams init(std::size_t in, std::size_t hidden_dim, std::size_t out,
                          RngStream& rng);

    Tensor forward(const Tensor& x) const {
        return output.forward(relu(hidden.forward(x)));
    }
    void collect(const std::string& prefix, bool decay_weights,
                 std::vector<ParamRef>& out) const;
};

/// Weights of one relational message-passing layer: one matrix per rating
/// level plus the self-loop matrix.
struct RgcnLayerParams {
    std::vector<Tensor> relation_weights;  // index r-1 holds relation r
    Tensor self_weight;

    static RgcnLayerParams init(std::size_t in, std::size_t out, int num_relations,
                                RngStream& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out) const;
    std::size_t in_dim() const { return self_weight.shape()[0]; }
    std::size_t out_dim() const { return self_weight.shape()[1]; }
};

/// One relational propagation step:
///   h_v' = relu( sum_r sum_{j in N_v^r} a_{v,j} W_r h_j + W_0 h_v )
/// Every batch edge messages in both directions with the same relation and,
/// when given, the same per-edge attention weight; the self-loop term is
/// never attenuated. With attention absent all a are 1 (plain layer).
Tensor rgcn_layer(const SubgraphBatch& batch, const Tensor& h_in, const RgcnLayerParams& params,
                  const std::optional<Tensor>& edge_attention);

/// Node features of a batch (one-hot labels) as a constant (N x 4) tensor.
Tensor batch_node_features(const SubgraphBatch& batch);

/// Mean squared error against constant targets; empty inputs give 0.
Tensor mse_loss(const Tensor& predictions, const std::vector<double>& targets);

}  // namespace mccl
