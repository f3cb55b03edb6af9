#include "mccl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "mccl/errors.hpp"
#include "mccl/rng.hpp"

namespace mccl {

int num_relation_levels(RatingScale scale) {
    return static_cast<int>(std::lround(scale.max_rating) - std::lround(scale.min_rating)) + 1;
}

int bucket_rating(double rating, RatingScale scale) {
    const long lo = std::lround(scale.min_rating);
    const long hi = std::lround(scale.max_rating);
    long level = std::lround(rating);
    level = std::clamp(level, lo, hi);
    return static_cast<int>(level - lo) + 1;
}

const std::vector<GraphEdge>& BipartiteGraph::user_edges(int user) const {
    if (user < 0 || user >= n_users()) {
        throw InvalidIndex("user index " + std::to_string(user) + " out of range " +
                           std::to_string(n_users()));
    }
    return user_adj_[user];
}

const std::vector<GraphEdge>& BipartiteGraph::item_edges(int item) const {
    if (item < 0 || item >= n_items()) {
        throw InvalidIndex("item index " + std::to_string(item) + " out of range " +
                           std::to_string(n_items()));
    }
    return item_adj_[item];
}

void BipartiteGraph::add_edge(int user, int item, int relation, double rating) {
    if (user < 0 || user >= n_users() || item < 0 || item >= n_items()) {
        throw InvalidIndex("edge endpoints (" + std::to_string(user) + ", " +
                           std::to_string(item) + ") out of range");
    }
    if (relation < 1 || relation > num_relations_) {
        throw InvalidIndex("relation " + std::to_string(relation) + " outside 1.." +
                           std::to_string(num_relations_));
    }
    user_adj_[user].push_back({item, relation, rating});
    item_adj_[item].push_back({user, relation, rating});
    ++num_edges_;
}

std::optional<GraphEdge> BipartiteGraph::find_edge(int user, int item) const {
    for (const GraphEdge& e : user_edges(user)) {
        if (e.counterpart == item) return e;
    }
    return std::nullopt;
}

BipartiteGraph build_graph(const RatingDataset& data) {
    BipartiteGraph g(static_cast<int>(data.n_users()), static_cast<int>(data.n_items()),
                     num_relation_levels(data.scale()));
    for (const RatingTriple& t : data.triples()) {
        g.add_edge(data.user_index(t.user_id), data.item_index(t.item_id),
                   bucket_rating(t.rating, data.scale()), t.rating);
    }
    return g;
}

namespace {

/// Neighbor list of a target node, optionally truncated to `cap` by seeded
/// uniform sampling, returned in ascending index order.
std::vector<int> neighbor_set(const std::vector<GraphEdge>& edges, int exclude, int cap,
                              std::uint64_t stream_seed) {
    std::vector<int> ids;
    ids.reserve(edges.size());
    for (const GraphEdge& e : edges) {
        if (e.counterpart != exclude) ids.push_back(e.counterpart);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (cap > 0 && static_cast<int>(ids.size()) > cap) {
        RngStream rng(stream_seed);
        // partial Fisher-Yates: the first `cap` slots are a uniform sample
        for (int k = 0; k < cap; ++k) {
            const std::size_t j = k + rng.uniform_index(ids.size() - k);
            std::swap(ids[k], ids[j]);
        }
        ids.resize(cap);
        std::sort(ids.begin(), ids.end());
    }
    return ids;
}

}  // namespace

EnclosingSubgraph extract_subgraph(const BipartiteGraph& g, int user, int item,
                                   const SubgraphConfig& cfg) {
    if (cfg.hops != 1) {
        throw InvalidIndex("only 1-hop subgraphs are supported, got hops=" +
                           std::to_string(cfg.hops));
    }
    if (user < 0 || user >= g.n_users() || item < 0 || item >= g.n_items()) {
        throw InvalidIndex("target pair (" + std::to_string(user) + ", " + std::to_string(item) +
                           ") out of range");
    }

    const std::vector<int> context_users =
        neighbor_set(g.item_edges(item), user, cfg.max_neighbors,
                     mix_seed(cfg.seed, static_cast<std::uint64_t>(user) << 32 | 1u,
                              static_cast<std::uint64_t>(item)));
    const std::vector<int> context_items =
        neighbor_set(g.user_edges(user), item, cfg.max_neighbors,
                     mix_seed(cfg.seed, static_cast<std::uint64_t>(user) << 32 | 2u,
                              static_cast<std::uint64_t>(item)));

    EnclosingSubgraph sg;
    sg.num_relations = g.num_relations();
    sg.target_user_local = 0;
    sg.target_item_local = 1;

    std::unordered_map<int, int> user_local;  // global user -> local node
    std::unordered_map<int, int> item_local;
    auto add_user = [&](int u, const std::array<double, 4>& label) {
        user_local.emplace(u, static_cast<int>(sg.node_labels.size()));
        sg.node_labels.push_back(label);
        sg.global_ids.push_back(u);
    };
    auto add_item = [&](int i, const std::array<double, 4>& label) {
        item_local.emplace(i, static_cast<int>(sg.node_labels.size()));
        sg.node_labels.push_back(label);
        sg.global_ids.push_back(g.n_users() + i);
    };
    add_user(user, kLabelTargetUser);
    add_item(item, kLabelTargetItem);
    for (int u : context_users) add_user(u, kLabelContextUser);
    for (int i : context_items) add_item(i, kLabelContextItem);

    // Induced edges: scan each included user's adjacency, keep edges landing
    // on included items. Cost is linear in the incident edges of the
    // neighborhood.
    std::vector<std::pair<int, int>> ordered_users(user_local.begin(), user_local.end());
    std::sort(ordered_users.begin(), ordered_users.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [gu, lu] : ordered_users) {
        for (const GraphEdge& e : g.user_edges(gu)) {
            if (gu == user && e.counterpart == item) continue;  // target edge removed
            auto it = item_local.find(e.counterpart);
            if (it == item_local.end()) continue;
            sg.edges.push_back({lu, it->second, e.relation, e.rating});
        }
    }

    const std::optional<GraphEdge> target = g.find_edge(user, item);
    sg.target_rating = target ? target->rating : std::numeric_limits<double>::quiet_NaN();
    return sg;
}

SubgraphBatch make_batch(const std::vector<EnclosingSubgraph>& subgraphs) {
    if (subgraphs.empty()) throw EmptyBatch("make_batch: no subgraphs");

    SubgraphBatch batch;
    batch.batch_size = static_cast<int>(subgraphs.size());
    batch.num_relations = subgraphs.front().num_relations;
    batch.node_offsets.push_back(0);
    batch.edge_offsets.push_back(0);

    for (const EnclosingSubgraph& sg : subgraphs) {
        if (sg.num_relations != batch.num_relations) {
            throw ShapeMismatch("make_batch: mixed relation counts");
        }
        const int offset = batch.n_nodes;
        for (const auto& label : sg.node_labels) {
            batch.node_features.insert(batch.node_features.end(), label.begin(), label.end());
        }
        batch.global_ids.insert(batch.global_ids.end(), sg.global_ids.begin(),
                                sg.global_ids.end());
        for (const LocalEdge& e : sg.edges) {
            batch.edges.push_back(
                {e.src_user + offset, e.dst_item + offset, e.relation, e.rating});
        }
        batch.target_users.push_back(static_cast<std::size_t>(sg.target_user_local + offset));
        batch.target_items.push_back(static_cast<std::size_t>(sg.target_item_local + offset));
        batch.target_ratings.push_back(sg.target_rating);
        batch.n_nodes += static_cast<int>(sg.n_nodes());
        batch.node_offsets.push_back(batch.n_nodes);
        batch.edge_offsets.push_back(static_cast<int>(batch.edges.size()));
    }
    return batch;
}

std::vector<EnclosingSubgraph> unbatch(const SubgraphBatch& batch) {
    std::vector<EnclosingSubgraph> out;
    out.reserve(batch.batch_size);
    for (int b = 0; b < batch.batch_size; ++b) {
        EnclosingSubgraph sg;
        sg.num_relations = batch.num_relations;
        const int node_begin = batch.node_offsets[b];
        const int node_end = batch.node_offsets[b + 1];
        for (int n = node_begin; n < node_end; ++n) {
            std::array<double, 4> label;
            std::copy_n(batch.node_features.begin() + 4 * n, 4, label.begin());
            sg.node_labels.push_back(label);
            sg.global_ids.push_back(batch.global_ids[n]);
        }
        for (int e = batch.edge_offsets[b]; e < batch.edge_offsets[b + 1]; ++e) {
            const LocalEdge& edge = batch.edges[e];
            sg.edges.push_back({edge.src_user - node_begin, edge.dst_item - node_begin,
                                edge.relation, edge.rating});
        }
        sg.target_user_local = static_cast<int>(batch.target_users[b]) - node_begin;
        sg.target_item_local = static_cast<int>(batch.target_items[b]) - node_begin;
        sg.target_rating = batch.target_ratings[b];
        out.push_back(std::move(sg));
    }
    return out;
}

std::string subgraph_to_json(const EnclosingSubgraph& sg) {
    nlohmann::json j;
    j["n_nodes"] = sg.n_nodes();
    j["labels"] = sg.node_labels;
    j["global_ids"] = sg.global_ids;
    nlohmann::json edges = nlohmann::json::array();
    for (const LocalEdge& e : sg.edges) {
        edges.push_back({{"src", e.src_user}, {"dst", e.dst_item}, {"relation", e.relation}});
    }
    j["edges"] = std::move(edges);
    j["target_user"] = sg.target_user_local;
    j["target_item"] = sg.target_item_local;
    return j.dump();
}

}  // namespace mccl
