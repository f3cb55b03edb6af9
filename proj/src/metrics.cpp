#include "mccl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mccl/errors.hpp"
#include "mccl/rng.hpp"

namespace mccl {

namespace {

/// Indices of a user's items ordered by predicted score descending, ties by
/// ascending item index.
std::vector<std::size_t> prediction_order(const UserTestItems& u) {
    std::vector<std::size_t> order(u.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (u.predicted[a] != u.predicted[b]) return u.predicted[a] > u.predicted[b];
        return u.items[a] < u.items[b];
    });
    return order;
}

double log2_discount(std::size_t one_based_position) {
    return std::log2(static_cast<double>(one_based_position) + 1.0);
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["rmse"] = rmse;
    j["ndcg_rating"] = ndcg_rating;
    j["mrr_rating"] = mrr_rating;
    j["ndcg_ranking"] = ndcg_ranking;
    j["mrr_ranking"] = mrr_ranking;
    j["top_n"] = top_n;
    j["users_evaluated"] = users_evaluated;
    return j;
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size()) {
        throw LengthMismatch("rmse: " + std::to_string(predictions.size()) + " vs " +
                             std::to_string(targets.size()));
    }
    if (predictions.empty()) throw EmptyInput("rmse: no predictions");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(predictions.size()));
}

double ndcg_rating(const std::vector<UserTestItems>& users, int top_n) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const UserTestItems& u : users) {
        if (u.items.empty()) continue;
        const std::vector<std::size_t> order = prediction_order(u);
        const std::size_t limit = std::min<std::size_t>(top_n, order.size());

        double dcg = 0.0;
        for (std::size_t pos = 0; pos < limit; ++pos) {
            dcg += u.truth[order[pos]] / log2_discount(pos + 1);
        }
        std::vector<double> ideal = u.truth;
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t pos = 0; pos < limit; ++pos) {
            idcg += ideal[pos] / log2_discount(pos + 1);
        }
        if (idcg == 0.0) continue;  // skipped, still counted below
        total += dcg / idcg;
        ++counted;
    }
    if (counted == 0) throw NoEvaluableUsers("ndcg_rating: every user was skipped");
    return total / static_cast<double>(counted);
}

double mrr_rating(const std::vector<UserTestItems>& users, int top_n, double threshold) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const UserTestItems& u : users) {
        bool qualifies = false;
        for (double r : u.truth) {
            if (r >= threshold) {
                qualifies = true;
                break;
            }
        }
        if (!qualifies) continue;
        const std::vector<std::size_t> order = prediction_order(u);
        const std::size_t limit = std::min<std::size_t>(top_n, order.size());
        double contribution = 0.0;
        for (std::size_t pos = 0; pos < limit; ++pos) {
            if (u.truth[order[pos]] >= threshold) {
                contribution = 1.0 / static_cast<double>(pos + 1);
                break;
            }
        }
        total += contribution;
        ++counted;
    }
    if (counted == 0) throw NoEvaluableUsers("mrr_rating: no user has a qualifying item");
    return total / static_cast<double>(counted);
}

std::vector<int> sample_negatives(const BipartiteGraph& interactions, int user, int k,
                                  std::uint64_t seed) {
    std::vector<bool> seen(interactions.n_items(), false);
    for (const GraphEdge& e : interactions.user_edges(user)) seen[e.counterpart] = true;
    std::vector<int> candidates;
    candidates.reserve(interactions.n_items());
    for (int i = 0; i < interactions.n_items(); ++i) {
        if (!seen[i]) candidates.push_back(i);
    }
    if (static_cast<int>(candidates.size()) < k) {
        throw InsufficientNegatives("user " + std::to_string(user) + " has only " +
                                    std::to_string(candidates.size()) +
                                    " non-interacted items, need " + std::to_string(k));
    }
    RngStream rng(mix_seed(seed, 0x4E454721ULL, static_cast<std::uint64_t>(user)));  // "NEG!"
    for (int j = 0; j < k; ++j) {
        const std::size_t pick = j + rng.uniform_index(candidates.size() - j);
        std::swap(candidates[j], candidates[pick]);
    }
    candidates.resize(k);
    return candidates;
}

RankingMetrics ranking_protocol(const Scorer& scorer, const std::vector<UserTestItems>& users,
                                const BipartiteGraph& interactions, int top_n, int k,
                                std::uint64_t seed) {
    RankingMetrics out;
    for (const UserTestItems& u : users) {
        if (u.items.empty()) continue;
        // positive = latest-timestamp test item, ties to the largest index
        std::size_t pos_idx = 0;
        for (std::size_t i = 1; i < u.items.size(); ++i) {
            if (u.timestamps[i] > u.timestamps[pos_idx] ||
                (u.timestamps[i] == u.timestamps[pos_idx] && u.items[i] > u.items[pos_idx])) {
                pos_idx = i;
            }
        }
        const int positive = u.items[pos_idx];

        std::vector<int> candidates = sample_negatives(interactions, u.user, k, seed);
        candidates.insert(candidates.begin(), positive);
        const std::vector<double> scores = scorer(u.user, candidates);
        if (scores.size() != candidates.size()) {
            throw LengthMismatch("ranking_protocol: scorer returned wrong count");
        }

        std::size_t rank = 0;  // 0-indexed position of the positive
        for (std::size_t c = 1; c < candidates.size(); ++c) {
            if (scores[c] > scores[0] ||
                (scores[c] == scores[0] && candidates[c] < positive)) {
                ++rank;
            }
        }
        if (rank < static_cast<std::size_t>(top_n)) {
            out.mrr += 1.0 / static_cast<double>(rank + 1);
            out.ndcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
        }
        ++out.users;
    }
    if (out.users == 0) throw NoEvaluableUsers("ranking_protocol: no evaluable users");
    out.mrr /= static_cast<double>(out.users);
    out.ndcg /= static_cast<double>(out.users);
    return out;
}

std::vector<UserTestItems> group_by_user(const RatingDataset& data) {
    std::map<int, UserTestItems> by_user;
    for (const RatingTriple& t : data.triples()) {
        const int u = data.user_index(t.user_id);
        UserTestItems& entry = by_user[u];
        entry.user = u;
        entry.items.push_back(data.item_index(t.item_id));
        entry.truth.push_back(t.rating);
        entry.timestamps.push_back(t.timestamp);
    }
    std::vector<UserTestItems> out;
    out.reserve(by_user.size());
    for (auto& [user, entry] : by_user) out.push_back(std::move(entry));
    return out;
}

namespace {

/// Scores (user, item) pairs through freshly extracted subgraphs.
std::vector<double> score_pairs(const MCCLModel& model, const BipartiteGraph& g_train,
                                const SubgraphConfig& sg_cfg, int batch_size,
                                const std::vector<std::pair<int, int>>& pairs) {
    std::vector<double> scores;
    scores.reserve(pairs.size());
    std::size_t begin = 0;
    while (begin < pairs.size()) {
        const std::size_t end = std::min(begin + static_cast<std::size_t>(batch_size), pairs.size());
        std::vector<EnclosingSubgraph> subgraphs;
        subgraphs.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            subgraphs.push_back(
                extract_subgraph(g_train, pairs[i].first, pairs[i].second, sg_cfg));
        }
        const std::vector<double> preds = model.predict(make_batch(subgraphs));
        scores.insert(scores.end(), preds.begin(), preds.end());
        begin = end;
    }
    return scores;
}

}  // namespace

MetricReport evaluate_model(const MCCLModel& model, const SplitDataset& split,
                            const BipartiteGraph& g_train, const BipartiteGraph& interactions,
                            const EvalConfig& cfg) {
    const TrainConfig& tc = model.config();
    const SubgraphConfig sg_cfg{tc.hops, tc.max_neighbors, tc.seed};

    std::vector<std::pair<int, int>> pairs;
    std::vector<double> truth;
    for (const RatingTriple& t : split.test.triples()) {
        pairs.emplace_back(split.test.user_index(t.user_id), split.test.item_index(t.item_id));
        truth.push_back(t.rating);
    }
    if (pairs.empty()) throw EmptyInput("evaluate_model: empty test split");
    const std::vector<double> preds =
        score_pairs(model, g_train, sg_cfg, tc.batch_size, pairs);

    MetricReport report;
    report.top_n = cfg.top_n;
    report.rmse = rmse(preds, truth);

    std::vector<UserTestItems> users = group_by_user(split.test);
    {
        // Attach predictions: group_by_user preserves triple order per user.
        std::map<int, std::vector<double>> preds_by_user;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            preds_by_user[pairs[i].first].push_back(preds[i]);
        }
        for (UserTestItems& u : users) u.predicted = preds_by_user[u.user];
    }
    report.users_evaluated = users.size();
    report.ndcg_rating = ndcg_rating(users, cfg.top_n);
    report.mrr_rating = mrr_rating(users, cfg.top_n, cfg.relevance_threshold);

    Scorer scorer = [&](int user, const std::vector<int>& items) {
        std::vector<std::pair<int, int>> candidate_pairs;
        candidate_pairs.reserve(items.size());
        for (int item : items) candidate_pairs.emplace_back(user, item);
        return score_pairs(model, g_train, sg_cfg, tc.batch_size, candidate_pairs);
    };
    const RankingMetrics ranking =
        ranking_protocol(scorer, users, interactions, cfg.top_n, cfg.negatives, cfg.seed);
    report.ndcg_ranking = ranking.ndcg;
    report.mrr_ranking = ranking.mrr;
    return report;
}

}  // namespace mccl
