#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace mccl {

/// One observed interaction. timestamp is -1 when the source had none.
struct RatingTriple {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    std::int64_t timestamp = -1;
};

struct RatingScale {
    double min_rating = 1.0;
    double max_rating = 5.0;
};

/// Dense id mapping, shared between the parts of a split so that indices stay
/// comparable across train/validation/test.
struct IdIndex {
    std::unordered_map<std::string, int> user_to_index;
    std::unordered_map<std::string, int> item_to_index;
    std::vector<std::string> users;  // dense index -> external id
    std::vector<std::string> items;
};

class RatingDataset {
public:
    RatingDataset() : index_(std::make_shared<IdIndex>()) {}

    /// Builds a dataset owning a fresh index (first-occurrence order).
    /// Duplicate (user, item) pairs are resolved by keeping the latest
    /// timestamp; ties keep the later entry.
    RatingDataset(std::vector<RatingTriple> triples, RatingScale scale);

    /// View over an existing mapping; every id must be present in it.
    RatingDataset(std::vector<RatingTriple> triples, RatingScale scale,
                  std::shared_ptr<const IdIndex> index);

    const std::vector<RatingTriple>& triples() const { return triples_; }
    const IdIndex& index() const { return *index_; }
    std::shared_ptr<const IdIndex> shared_index() const { return index_; }
    RatingScale scale() const { return scale_; }

    std::size_t size() const { return triples_.size(); }
    std::size_t n_users() const { return index_->users.size(); }
    std::size_t n_items() const { return index_->items.size(); }

    int user_index(const std::string& id) const;
    int item_index(const std::string& id) const;

private:
    std::vector<RatingTriple> triples_;
    std::shared_ptr<const IdIndex> index_;
    RatingScale scale_;
};

struct SplitDataset {
    RatingDataset train;
    RatingDataset validation;
    RatingDataset test;
    std::uint64_t seed = 0;
};

struct DatasetStats {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t interactions = 0;
    double density = 0.0;
};

/// Parses `user,item,rating[,timestamp]` lines (comma or tab, auto-detected
/// from the first data line; `#` lines ignored). Duplicates keep the latest
/// timestamp, ties the last occurrence in file order.
RatingDataset load_ratings(const std::string& path, RatingScale scale = {});

/// Writes triples back out in the load_ratings format (always 4 fields,
/// timestamp -1 when absent).
void save_ratings(const RatingDataset& data, const std::string& path);

/// Iterates to the 5-core fixpoint: repeatedly drops every user and item with
/// fewer than five remaining interactions, then re-indexes densely.
RatingDataset five_core_filter(const RatingDataset& data);

/// Seeded uniform shuffle followed by a contiguous 60/20/20 cut; validation
/// and test each get floor(0.2 n), train the remainder. The three parts share
/// the input's id mapping.
SplitDataset split(const RatingDataset& data, std::uint64_t seed);

/// Users/items/interactions present in the triples; density over the implied
/// rectangle. Empty data reports all zeros.
DatasetStats dataset_stats(const RatingDataset& data);

/// Split persistence: train.csv / validation.csv / test.csv plus mapping.json
/// (ordered id lists, scale, seed) and stats.json under `dir`.
void save_split(const SplitDataset& split_data, const std::string& dir);
SplitDataset load_split(const std::string& dir);

}  // namespace mccl
