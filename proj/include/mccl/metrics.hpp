#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "mccl/graph.hpp"
#include "mccl/model.hpp"

namespace mccl {

struct MetricReport {
    double rmse = 0.0;
    double ndcg_rating = 0.0;
    double mrr_rating = 0.0;
    double ndcg_ranking = 0.0;
    double mrr_ranking = 0.0;
    int top_n = 10;
    std::size_t users_evaluated = 0;

    nlohmann::json to_json() const;
};

struct EvalConfig {
    int top_n = 10;
    int negatives = 99;                // candidate pool size for the ranking protocol
    double relevance_threshold = 4.0;  // "highly rated" cutoff for MRR-rating
    std::uint64_t seed = 0;
};

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets);

/// One evaluated user's test items with model scores and ground truth.
struct UserTestItems {
    int user = 0;
    std::vector<int> items;
    std::vector<double> predicted;
    std::vector<double> truth;
    std::vector<std::int64_t> timestamps;
};

/// Mean over users of DCG@N / IDCG@N with true ratings as relevance; items
/// ranked by predicted score (ties: ascending item index). Users whose IDCG
/// is zero are skipped.
double ndcg_rating(const std::vector<UserTestItems>& users, int top_n);

/// Mean over users (having at least one item rated >= threshold) of the
/// reciprocal 1-based rank of the first such item inside the top N; 0 when
/// none of the top N qualify.
double mrr_rating(const std::vector<UserTestItems>& users, int top_n, double threshold);

/// k distinct items the user never interacted with (across every split),
/// sampled uniformly without replacement; deterministic per (seed, user).
std::vector<int> sample_negatives(const BipartiteGraph& interactions, int user, int k,
                                  std::uint64_t seed);

using Scorer = std::function<std::vector<double>(int user, const std::vector<int>& items)>;

struct RankingMetrics {
    double ndcg = 0.0;
    double mrr = 0.0;
    std::size_t users = 0;
};

/// Leave-last-out protocol: per user the latest-timestamp test item (ties:
/// largest index) is scored against k sampled negatives; with the positive at
/// 0-indexed rank r the user contributes 1/(r+1) to MRR and 1/log2(r+2) to
/// NDCG when r < N, else 0.
RankingMetrics ranking_protocol(const Scorer& scorer, const std::vector<UserTestItems>& users,
                                const BipartiteGraph& interactions, int top_n, int k,
                                std::uint64_t seed);

/// Groups a dataset's triples by user (dense indices, deterministic order).
std::vector<UserTestItems> group_by_user(const RatingDataset& data);

/// Full evaluation of a trained model on the test split: RMSE plus the four
/// ranking metrics. g_train supplies message-passing context; interactions
/// (train+val+test) defines the negative-sampling exclusion set.
MetricReport evaluate_model(const MCCLModel& model, const SplitDataset& split,
                            const BipartiteGraph& g_train, const BipartiteGraph& interactions,
                            const EvalConfig& cfg);

}  // namespace mccl
