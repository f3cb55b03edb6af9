#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mccl/dataset.hpp"

namespace mccl {

/// One typed edge seen from one endpoint. relation is the bucketed rating
/// level in 1..num_relations.
struct GraphEdge {
    int counterpart = 0;
    int relation = 0;
    double rating = 0.0;
};

/// Rounds a rating to its discrete relation level (1-based), clamped to the
/// scale. For the default 1-5 scale the level equals the rounded rating.
int bucket_rating(double rating, RatingScale scale);
int num_relation_levels(RatingScale scale);

/// Immutable after construction; both directional adjacency lists carry every
/// edge.
class BipartiteGraph {
public:
    BipartiteGraph() = default;
    BipartiteGraph(int n_users, int n_items, int num_relations)
        : user_adj_(n_users), item_adj_(n_items), num_relations_(num_relations) {}

    int n_users() const { return static_cast<int>(user_adj_.size()); }
    int n_items() const { return static_cast<int>(item_adj_.size()); }
    int num_relations() const { return num_relations_; }
    std::size_t num_edges() const { return num_edges_; }

    const std::vector<GraphEdge>& user_edges(int user) const;
    const std::vector<GraphEdge>& item_edges(int item) const;

    void add_edge(int user, int item, int relation, double rating);
    std::optional<GraphEdge> find_edge(int user, int item) const;

private:
    std::vector<std::vector<GraphEdge>> user_adj_;
    std::vector<std::vector<GraphEdge>> item_adj_;
    int num_relations_ = 0;
    std::size_t num_edges_ = 0;
};

BipartiteGraph build_graph(const RatingDataset& data);

struct SubgraphConfig {
    int hops = 1;            // only 1 is supported
    int max_neighbors = 0;   // 0 = no cap; otherwise seeded uniform truncation
    std::uint64_t seed = 0;  // used only when max_neighbors > 0
};

/// Node labels (one-hot 4-vectors).
inline constexpr std::array<double, 4> kLabelTargetUser{1, 0, 0, 0};
inline constexpr std::array<double, 4> kLabelTargetItem{0, 1, 0, 0};
inline constexpr std::array<double, 4> kLabelContextUser{0, 0, 1, 0};
inline constexpr std::array<double, 4> kLabelContextItem{0, 0, 0, 1};

struct LocalEdge {
    int src_user = 0;  // local node index of the user endpoint
    int dst_item = 0;  // local node index of the item endpoint
    int relation = 0;
    double rating = 0.0;
};

/// 1-hop enclosing subgraph around a target pair. Local node order: target
/// user, target item, context users (ascending global index), context items
/// (ascending). global_ids encode items offset by n_users.
struct EnclosingSubgraph {
    std::vector<std::array<double, 4>> node_labels;
    std::vector<int> global_ids;
    std::vector<LocalEdge> edges;
    int target_user_local = 0;
    int target_item_local = 1;
    double target_rating = 0.0;  // NaN when the target pair has no edge in g
    int num_relations = 0;

    std::size_t n_nodes() const { return node_labels.size(); }
};

/// Induced 1-hop subgraph: nodes {u, i} plus their neighbors, every graph
/// edge among that node set except the (u, i) edge itself.
EnclosingSubgraph extract_subgraph(const BipartiteGraph& g, int user, int item,
                                   const SubgraphConfig& cfg = {});

/// Disjoint union of subgraphs, local indices offset by cumulative node
/// counts. No cross-subgraph edges exist by construction.
struct SubgraphBatch {
    int n_nodes = 0;
    std::vector<double> node_features;  // n_nodes x 4, row-major
    std::vector<LocalEdge> edges;       // indices into the merged node list
    std::vector<std::size_t> target_users;
    std::vector<std::size_t> target_items;
    std::vector<double> target_ratings;
    std::vector<int> node_offsets;  // size batch_size + 1
    std::vector<int> edge_offsets;  // size batch_size + 1
    std::vector<int> global_ids;    // aligned with merged nodes
    int batch_size = 0;
    int num_relations = 0;

    std::size_t n_edges() const { return edges.size(); }
};

SubgraphBatch make_batch(const std::vector<EnclosingSubgraph>& subgraphs);
std::vector<EnclosingSubgraph> unbatch(const SubgraphBatch& batch);

/// Debug dump (nodes, labels, edges) as a JSON string.
std::string subgraph_to_json(const EnclosingSubgraph& sg);

}  // namespace mccl
