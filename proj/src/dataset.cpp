#include "mccl/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mccl/errors.hpp"
#include "mccl/rng.hpp"

namespace mccl {

namespace {

using nlohmann::json;

double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
    return v;
}

std::int64_t parse_int_field(const std::string& s, std::size_t line_no, const char* what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
    return v;
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, delim)) out.push_back(field);
    return out;
}

/// Dedup on (user, item): keep the highest timestamp, ties keep the later
/// record. The surviving triple stays at the first occurrence's position.
std::vector<RatingTriple> dedup_triples(std::vector<RatingTriple> triples) {
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<RatingTriple> kept;
    kept.reserve(triples.size());
    for (RatingTriple& t : triples) {
        std::string key = t.user_id + '\x1f' + t.item_id;
        auto it = slot.find(key);
        if (it == slot.end()) {
            slot.emplace(std::move(key), kept.size());
            kept.push_back(std::move(t));
        } else if (t.timestamp >= kept[it->second].timestamp) {
            kept[it->second] = std::move(t);
        }
    }
    return kept;
}

std::shared_ptr<IdIndex> build_index(const std::vector<RatingTriple>& triples) {
    auto index = std::make_shared<IdIndex>();
    for (const RatingTriple& t : triples) {
        if (index->user_to_index.emplace(t.user_id, static_cast<int>(index->users.size())).second) {
            index->users.push_back(t.user_id);
        }
        if (index->item_to_index.emplace(t.item_id, static_cast<int>(index->items.size())).second) {
            index->items.push_back(t.item_id);
        }
    }
    return index;
}

std::string format_rating(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

RatingDataset::RatingDataset(std::vector<RatingTriple> triples, RatingScale scale)
    : triples_(dedup_triples(std::move(triples))), scale_(scale) {
    index_ = build_index(triples_);
}

RatingDataset::RatingDataset(std::vector<RatingTriple> triples, RatingScale scale,
                             std::shared_ptr<const IdIndex> index)
    : triples_(std::move(triples)), index_(std::move(index)), scale_(scale) {
    for (const RatingTriple& t : triples_) {
        if (!index_->user_to_index.count(t.user_id) || !index_->item_to_index.count(t.item_id)) {
            throw InvalidIndex("triple (" + t.user_id + ", " + t.item_id +
                               ") not covered by the shared id mapping");
        }
    }
}

int RatingDataset::user_index(const std::string& id) const {
    auto it = index_->user_to_index.find(id);
    if (it == index_->user_to_index.end()) throw InvalidIndex("unknown user id '" + id + "'");
    return it->second;
}

int RatingDataset::item_index(const std::string& id) const {
    auto it = index_->item_to_index.find(id);
    if (it == index_->item_to_index.end()) throw InvalidIndex("unknown item id '" + id + "'");
    return it->second;
}

RatingDataset load_ratings(const std::string& path, RatingScale scale) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::vector<RatingTriple> triples;
    std::string line;
    std::size_t line_no = 0;
    char delim = '\0';
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (delim == '\0') delim = (line.find('\t') != std::string::npos) ? '\t' : ',';

        std::vector<std::string> fields = split_fields(line, delim);
        if (fields.size() < 3) {
            throw ParseError("line " + std::to_string(line_no) + ": expected at least 3 fields");
        }
        RatingTriple t;
        t.user_id = fields[0];
        t.item_id = fields[1];
        if (t.user_id.empty() || t.item_id.empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": empty id");
        }
        t.rating = parse_double_field(fields[2], line_no, "rating");
        if (t.rating < scale.min_rating || t.rating > scale.max_rating) {
            throw RatingOutOfScale("line " + std::to_string(line_no) + ": rating " +
                                   format_rating(t.rating) + " outside [" +
                                   format_rating(scale.min_rating) + ", " +
                                   format_rating(scale.max_rating) + "]");
        }
        if (fields.size() >= 4) t.timestamp = parse_int_field(fields[3], line_no, "timestamp");
        triples.push_back(std::move(t));
    }
    if (triples.empty()) throw EmptyDataset("no valid rows in '" + path + "'");
    return RatingDataset(std::move(triples), scale);
}

void save_ratings(const RatingDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const RatingTriple& t : data.triples()) {
        out << t.user_id << ',' << t.item_id << ',' << format_rating(t.rating) << ','
            << t.timestamp << '\n';
    }
}

RatingDataset five_core_filter(const RatingDataset& data) {
    if (data.size() == 0) throw EmptyDataset("five_core_filter: input is empty");

    std::vector<RatingTriple> alive = data.triples();
    bool changed = true;
    while (changed && !alive.empty()) {
        std::unordered_map<std::string, int> user_deg, item_deg;
        for (const RatingTriple& t : alive) {
            ++user_deg[t.user_id];
            ++item_deg[t.item_id];
        }
        std::vector<RatingTriple> next;
        next.reserve(alive.size());
        for (RatingTriple& t : alive) {
            if (user_deg[t.user_id] >= 5 && item_deg[t.item_id] >= 5) {
                next.push_back(std::move(t));
            }
        }
        changed = next.size() != alive.size();
        alive = std::move(next);
    }
    if (alive.empty()) throw EmptyDataset("five_core_filter: fixpoint is empty");
    return RatingDataset(std::move(alive), data.scale());
}

SplitDataset split(const RatingDataset& data, std::uint64_t seed) {
    const std::size_t n = data.size();
    if (n < 5) throw DatasetTooSmall("split needs at least 5 interactions, got " +
                                     std::to_string(n));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream rng(mix_seed(seed, 0x53504C4954ULL));  // "SPLIT"
    rng.shuffle(order);

    const std::size_t n_val = n / 5;
    const std::size_t n_test = n / 5;
    const std::size_t n_train = n - n_val - n_test;

    auto take = [&](std::size_t begin, std::size_t count) {
        std::vector<RatingTriple> part;
        part.reserve(count);
        for (std::size_t i = begin; i < begin + count; ++i) {
            part.push_back(data.triples()[order[i]]);
        }
        return RatingDataset(std::move(part), data.scale(), data.shared_index());
    };

    SplitDataset out;
    out.train = take(0, n_train);
    out.validation = take(n_train, n_val);
    out.test = take(n_train + n_val, n_test);
    out.seed = seed;
    return out;
}

DatasetStats dataset_stats(const RatingDataset& data) {
    DatasetStats stats;
    std::unordered_map<std::string, int> users, items;
    for (const RatingTriple& t : data.triples()) {
        users.emplace(t.user_id, 0);
        items.emplace(t.item_id, 0);
    }
    stats.users = users.size();
    stats.items = items.size();
    stats.interactions = data.size();
    stats.density = stats.interactions == 0
                        ? 0.0
                        : static_cast<double>(stats.interactions) /
                              (static_cast<double>(stats.users) * static_cast<double>(stats.items));
    return stats;
}

void save_split(const SplitDataset& split_data, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_ratings(split_data.train, (fs::path(dir) / "train.csv").string());
    save_ratings(split_data.validation, (fs::path(dir) / "validation.csv").string());
    save_ratings(split_data.test, (fs::path(dir) / "test.csv").string());

    const IdIndex& index = split_data.train.index();
    json mapping;
    mapping["users"] = index.users;
    mapping["items"] = index.items;
    mapping["scale"] = {split_data.train.scale().min_rating, split_data.train.scale().max_rating};
    mapping["seed"] = split_data.seed;
    std::ofstream mf((fs::path(dir) / "mapping.json").string());
    if (!mf) throw IoError("cannot write mapping.json under '" + dir + "'");
    mf << mapping.dump(2) << '\n';

    std::vector<RatingTriple> all = split_data.train.triples();
    all.insert(all.end(), split_data.validation.triples().begin(),
               split_data.validation.triples().end());
    all.insert(all.end(), split_data.test.triples().begin(), split_data.test.triples().end());
    DatasetStats stats =
        dataset_stats(RatingDataset(std::move(all), split_data.train.scale(),
                                    split_data.train.shared_index()));
    json sj;
    sj["users"] = stats.users;
    sj["items"] = stats.items;
    sj["interactions"] = stats.interactions;
    sj["density"] = stats.density;
    std::ofstream sf((fs::path(dir) / "stats.json").string());
    if (!sf) throw IoError("cannot write stats.json under '" + dir + "'");
    sf << sj.dump(2) << '\n';
}

SplitDataset load_split(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf((fs::path(dir) / "mapping.json").string());
    if (!mf) throw IoError("cannot open mapping.json under '" + dir + "'");
    json mapping = json::parse(mf);

    auto index = std::make_shared<IdIndex>();
    for (const auto& u : mapping.at("users")) {
        index->user_to_index.emplace(u.get<std::string>(),
                                     static_cast<int>(index->users.size()));
        index->users.push_back(u.get<std::string>());
    }
    for (const auto& i : mapping.at("items")) {
        index->item_to_index.emplace(i.get<std::string>(),
                                     static_cast<int>(index->items.size()));
        index->items.push_back(i.get<std::string>());
    }
    RatingScale scale{mapping.at("scale")[0].get<double>(), mapping.at("scale")[1].get<double>()};

    auto load_part = [&](const char* name) {
        RatingDataset raw = load_ratings((fs::path(dir) / name).string(), scale);
        return RatingDataset(raw.triples(), scale, index);
    };
    SplitDataset out;
    out.train = load_part("train.csv");
    out.validation = load_part("validation.csv");
    out.test = load_part("test.csv");
    out.seed = mapping.value("seed", 0ULL);
    return out;
}

}  // namespace mccl
