#pragma once

// Synthetic rating data with a planted low-rank structure, used by the
// training and acceptance tests.

#include <cstdint>
#include <vector>

#include "mccl/dataset.hpp"

namespace testsupport {

struct PlantedSpec {
    int n_users = 200;
    int n_items = 100;
    int rank = 3;
    int min_ratings_per_user = 8;
    int max_ratings_per_user = 16;
    double signal = 0.95;  // weight of the low-rank term
    double noise = 0.35;   // observation noise std
    std::uint64_t seed = 7;
    mccl::RatingScale scale;
};

/// Ratings r_ui ~ round(clamp(mid + signal * <u, v>/sqrt(rank) + noise)),
/// with distinct random items per user and random timestamps.
std::vector<mccl::RatingTriple> planted_ratings(const PlantedSpec& spec = {});

/// Convenience: planted data -> five-core filter -> 60/20/20 split.
mccl::SplitDataset planted_split(const PlantedSpec& spec = {}, std::uint64_t split_seed = 11);

}  // namespace testsupport
