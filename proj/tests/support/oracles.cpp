#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oracle {

double mse(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        acc += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    }
    return acc / static_cast<double>(preds.size());
}

Mat rgcn_layer(std::size_t n_nodes, const std::vector<Edge>& edges, const Mat& h_in,
               const std::vector<Mat>& relation_weights, const Mat& self_weight,
               const std::vector<double>& attention) {
    const std::size_t d_out = self_weight.cols;
    Mat out{n_nodes, d_out, std::vector<double>(n_nodes * d_out, 0.0)};

    for (std::size_t v = 0; v < n_nodes; ++v) {
        for (std::size_t o = 0; o < d_out; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self_weight.rows; ++i) {
                acc += h_in.at(v, i) * self_weight.at(i, o);
            }
            // every directed message landing on v
            for (std::size_t e = 0; e < edges.size(); ++e) {
                int src = -1;
                if (static_cast<std::size_t>(edges[e].dst_item) == v) src = edges[e].src_user;
                if (static_cast<std::size_t>(edges[e].src_user) == v) src = edges[e].dst_item;
                if (src < 0) continue;
                const Mat& w = relation_weights[edges[e].relation - 1];
                const double a = attention.empty() ? 1.0 : attention[e];
                for (std::size_t i = 0; i < w.rows; ++i) {
                    acc += a * h_in.at(src, i) * w.at(i, o);
                }
            }
            out.at(v, o) = acc > 0.0 ? acc : 0.0;
        }
    }
    return out;
}

std::vector<double> mlp_row(const std::vector<double>& x, const Mat& w1,
                            const std::vector<double>& b1, const Mat& w2,
                            const std::vector<double>& b2) {
    std::vector<double> hidden(w1.cols, 0.0);
    for (std::size_t o = 0; o < w1.cols; ++o) {
        double acc = b1[o];
        for (std::size_t i = 0; i < w1.rows; ++i) acc += x[i] * w1.at(i, o);
        hidden[o] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> out(w2.cols, 0.0);
    for (std::size_t o = 0; o < w2.cols; ++o) {
        double acc = b2[o];
        for (std::size_t i = 0; i < w2.rows; ++i) acc += hidden[i] * w2.at(i, o);
        out[o] = acc;
    }
    return out;
}

std::vector<double> normalize_attention(const std::vector<double>& scores) {
    double lo = scores[0], hi = scores[0];
    for (double s : scores) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = (hi == lo) ? 0.5 : (scores[i] - lo) / (hi - lo);
    }
    return out;
}

double kl_divergence(const Mat& mu, const Mat& logstd) {
    double total = 0.0;
    for (std::size_t v = 0; v < mu.rows; ++v) {
        double node = 0.0;
        for (std::size_t i = 0; i < mu.cols; ++i) {
            const double m = mu.at(v, i);
            const double ls = logstd.at(v, i);
            const double var = std::exp(ls) * std::exp(ls);
            node += 1.0 + std::log(var) - m * m - var;
        }
        total += -0.5 * node;
    }
    return total / static_cast<double>(mu.rows);
}

double contrastive(const Mat& z1, const Mat& z2, double tau, bool negatives_only,
                   double epsilon) {
    const std::size_t n = z1.rows;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pos = 0.0;
        double denom = negatives_only ? epsilon : 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < z1.cols; ++c) s += z1.at(i, c) * z2.at(j, c);
            s /= tau;
            if (j == i) pos = s;
            if (!negatives_only || j != i) denom += std::exp(s);
        }
        loss += -std::log(std::exp(pos) / denom);
    }
    return loss / static_cast<double>(n);
}

double total_loss(const TotalLossInputs& in) {
    double total = 0.0;
    if (in.has_view1) total += mse(in.view1_preds, in.target_ratings);
    if (in.has_view2) {
        total += mse(in.view2_target_preds, in.target_ratings);
        total += in.alpha * mse(in.view2_recon_preds, in.edge_ratings);
        total += in.beta * kl_divergence(in.mu, in.logstd);
    }
    total += mse(in.fusion_preds, in.target_ratings);
    if (in.has_view1 && in.has_view2 && in.target_ratings.size() >= 2) {
        const double cl_users =
            contrastive(in.z1_users, in.z2_users, in.tau, in.negatives_only);
        const double cl_items =
            contrastive(in.z1_items, in.z2_items, in.tau, in.negatives_only);
        total += in.lambda * 0.5 * (cl_users + cl_items);
    }
    return total;
}

std::vector<Triple> five_core(std::vector<Triple> triples) {
    while (true) {
        std::map<std::string, int> user_count, item_count;
        for (const Triple& t : triples) {
            ++user_count[t.user];
            ++item_count[t.item];
        }
        std::vector<Triple> next;
        for (const Triple& t : triples) {
            if (user_count[t.user] >= 5 && item_count[t.item] >= 5) next.push_back(t);
        }
        if (next.size() == triples.size()) return triples;
        triples = std::move(next);
    }
}

SubgraphRef enclosing_subgraph(const std::vector<Edge>& all_edges, int user, int item) {
    SubgraphRef ref;
    std::set<int> users{user}, items{item};
    for (const Edge& e : all_edges) {
        if (e.src_user == user) items.insert(e.dst_item);
        if (e.dst_item == item) users.insert(e.src_user);
    }
    ref.users.push_back(user);
    for (int u : users) {
        if (u != user) ref.users.push_back(u);
    }
    ref.items.push_back(item);
    for (int i : items) {
        if (i != item) ref.items.push_back(i);
    }
    for (const Edge& e : all_edges) {
        if (e.src_user == user && e.dst_item == item) continue;
        if (users.count(e.src_user) && items.count(e.dst_item)) ref.edges.push_back(e);
    }
    return ref;
}

namespace {

/// Index of the best remaining item under (score desc, item asc).
std::size_t best_remaining(const std::vector<int>& items, const std::vector<double>& scores,
                           const std::vector<bool>& used) {
    std::size_t best = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (used[i]) continue;
        if (best == items.size() || scores[i] > scores[best] ||
            (scores[i] == scores[best] && items[i] < items[best])) {
            best = i;
        }
    }
    return best;
}

}  // namespace

double ndcg_rating(const std::vector<UserItems>& users, int top_n) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const UserItems& u : users) {
        if (u.items.empty()) continue;
        std::vector<bool> used(u.items.size(), false);
        double dcg = 0.0;
        for (int pos = 1; pos <= top_n && static_cast<std::size_t>(pos) <= u.items.size();
             ++pos) {
            const std::size_t pick = best_remaining(u.items, u.predicted, used);
            used[pick] = true;
            dcg += u.truth[pick] / std::log2(pos + 1.0);
        }
        std::fill(used.begin(), used.end(), false);
        double idcg = 0.0;
        for (int pos = 1; pos <= top_n && static_cast<std::size_t>(pos) <= u.items.size();
             ++pos) {
            std::size_t pick = u.items.size();
            for (std::size_t i = 0; i < u.items.size(); ++i) {
                if (!used[i] && (pick == u.items.size() || u.truth[i] > u.truth[pick])) pick = i;
            }
            used[pick] = true;
            idcg += u.truth[pick] / std::log2(pos + 1.0);
        }
        if (idcg == 0.0) continue;
        total += dcg / idcg;
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double mrr_rating(const std::vector<UserItems>& users, int top_n, double threshold) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const UserItems& u : users) {
        bool qualifies = false;
        for (double r : u.truth) qualifies |= (r >= threshold);
        if (!qualifies) continue;
        std::vector<bool> used(u.items.size(), false);
        double contribution = 0.0;
        for (int pos = 1; pos <= top_n && static_cast<std::size_t>(pos) <= u.items.size();
             ++pos) {
            const std::size_t pick = best_remaining(u.items, u.predicted, used);
            used[pick] = true;
            if (u.truth[pick] >= threshold) {
                contribution = 1.0 / pos;
                break;
            }
        }
        total += contribution;
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

std::size_t rank_of_positive(const std::vector<int>& items, const std::vector<double>& scores,
                             int positive) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return items[a] < items[b];
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (items[order[pos]] == positive) return pos;
    }
    return order.size();
}

}  // namespace oracle
