#pragma once

// Independent scalar-loop reference implementations used to check the tensor
// path. Everything here works on plain vectors of doubles and deliberately
// avoids the Tensor/Tape machinery.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

struct Edge {
    int src_user = 0;
    int dst_item = 0;
    int relation = 1;  // 1-based
    double rating = 0.0;
};

// Row-major matrix helper.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

double mse(const std::vector<double>& preds, const std::vector<double>& targets);

/// Eq.-style relational propagation with per-edge attention (alpha = 1 when
/// `attention` is empty); messages flow both ways, relu at the end.
Mat rgcn_layer(std::size_t n_nodes, const std::vector<Edge>& edges, const Mat& h_in,
               const std::vector<Mat>& relation_weights, const Mat& self_weight,
               const std::vector<double>& attention);

/// Two-layer perceptron (relu hidden, linear out) on one row.
std::vector<double> mlp_row(const std::vector<double>& x, const Mat& w1,
                            const std::vector<double>& b1, const Mat& w2,
                            const std::vector<double>& b2);

std::vector<double> normalize_attention(const std::vector<double>& scores);

/// Mean over nodes of -1/2 sum_d (1 + log sigma^2 - mu^2 - sigma^2).
double kl_divergence(const Mat& mu, const Mat& logstd);

/// InfoNCE over row pairs; denominator over all columns, or negatives plus
/// epsilon when negatives_only is set.
double contrastive(const Mat& z1, const Mat& z2, double tau, bool negatives_only,
                   double epsilon = 1e-8);

struct TotalLossInputs {
    std::vector<double> target_ratings;
    std::vector<double> edge_ratings;
    std::vector<double> view1_preds;
    std::vector<double> view2_target_preds;
    std::vector<double> view2_recon_preds;
    std::vector<double> fusion_preds;
    Mat mu, logstd;
    Mat z1_users, z2_users, z1_items, z2_items;
    double alpha = 0.0, beta = 0.0, lambda = 0.0, tau = 0.2;
    bool negatives_only = false;
    bool has_view1 = true, has_view2 = true;
};

double total_loss(const TotalLossInputs& in);

// ---- dataset / graph ----------------------------------------------------------

struct Triple {
    std::string user, item;
    double rating = 0.0;
    std::int64_t timestamp = -1;
};

/// Repeated full-scan deletion until no user or item has fewer than five
/// interactions.
std::vector<Triple> five_core(std::vector<Triple> triples);

struct SubgraphRef {
    std::vector<int> users;  // global user ids, target first
    std::vector<int> items;  // global item ids, target first
    std::vector<Edge> edges;  // global endpoint ids
};

/// Enumerates the induced 1-hop subgraph of (user, item) over an explicit
/// edge list, target edge removed.
SubgraphRef enclosing_subgraph(const std::vector<Edge>& all_edges, int user, int item);

// ---- metrics -----------------------------------------------------------------

struct UserItems {
    int user = 0;
    std::vector<int> items;
    std::vector<double> predicted;
    std::vector<double> truth;
    std::vector<std::int64_t> timestamps;
};

/// Selection-scan implementations (repeatedly pick the best remaining item).
double ndcg_rating(const std::vector<UserItems>& users, int top_n);
double mrr_rating(const std::vector<UserItems>& users, int top_n, double threshold);

/// Rank of `positive` among candidate (item, score) pairs by full sort.
std::size_t rank_of_positive(const std::vector<int>& items, const std::vector<double>& scores,
                             int positive);

}  // namespace oracle
