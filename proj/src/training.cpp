#include "mccl/training.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include "mccl/errors.hpp"

namespace mccl {

// ---- optimizer ---------------------------------------------------------------

AdamW::AdamW(std::vector<ParamRef> params, double learning_rate, double weight_decay,
             double beta1, double beta2, double epsilon)
    : params_(std::move(params)),
      lr_(learning_rate),
      wd_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const ParamRef& p : params_) {
        m_.emplace_back(p.tensor.numel(), 0.0);
        v_.emplace_back(p.tensor.numel(), 0.0);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        std::vector<double>& theta = params_[p].tensor.values();
        const std::vector<double>& grad = params_[p].tensor.grad();
        std::vector<double>& m = m_[p];
        std::vector<double>& v = v_[p];
        const bool decay = params_[p].decay;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
            if (decay) theta[i] -= lr_ * wd_ * theta[i];
        }
    }
}

void AdamW::zero_grad() {
    for (ParamRef& p : params_) p.tensor.zero_grad();
}

// ---- batch production ----------------------------------------------------------

namespace {

struct TrainTarget {
    int user = 0;
    int item = 0;
    double rating = 0.0;
};

SubgraphBatch build_training_batch(const BipartiteGraph& g, const SubgraphConfig& sg_cfg,
                                   const std::vector<TrainTarget>& targets,
                                   const std::vector<std::size_t>& order, std::size_t begin,
                                   std::size_t end) {
    std::vector<EnclosingSubgraph> subgraphs;
    subgraphs.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        const TrainTarget& t = targets[order[i]];
        EnclosingSubgraph sg = extract_subgraph(g, t.user, t.item, sg_cfg);
        sg.target_rating = t.rating;
        subgraphs.push_back(std::move(sg));
    }
    return make_batch(subgraphs);
}

int env_num_workers() {
    const char* raw = std::getenv("MCCL_NUM_WORKERS");
    if (raw == nullptr) return 0;
    const int n = std::atoi(raw);
    return n < 0 ? 0 : n;
}

/// Hands batches to the trainer in order while up to `workers` threads
/// extract ahead through a bounded window. With workers == 0 batches are
/// built inline. Identical output either way.
class BatchProducer {
public:
    BatchProducer(const BipartiteGraph& g, const SubgraphConfig& sg_cfg,
                  const std::vector<TrainTarget>& targets, std::vector<std::size_t> order,
                  std::size_t batch_size, int workers)
        : g_(g), sg_cfg_(sg_cfg), targets_(targets), order_(std::move(order)) {
        for (std::size_t begin = 0; begin < order_.size(); begin += batch_size) {
            bounds_.emplace_back(begin, std::min(begin + batch_size, order_.size()));
        }
        if (workers > 0) {
            const std::size_t capacity = static_cast<std::size_t>(workers) * 2;
            for (int w = 0; w < workers; ++w) {
                threads_.emplace_back([this, capacity]() { worker_loop(capacity); });
            }
            threaded_ = true;
        }
    }

    ~BatchProducer() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (std::thread& t : threads_) t.join();
    }

    std::size_t num_batches() const { return bounds_.size(); }

    SubgraphBatch next() {
        const std::size_t idx = next_consumed_++;
        if (!threaded_) {
            return build_training_batch(g_, sg_cfg_, targets_, order_, bounds_[idx].first,
                                        bounds_[idx].second);
        }
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&]() { return ready_.count(idx) > 0; });
        SubgraphBatch batch = std::move(ready_.at(idx));
        ready_.erase(idx);
        ++consumed_;
        cv_.notify_all();
        return batch;
    }

private:
    void worker_loop(std::size_t capacity) {
        while (true) {
            std::size_t idx;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [&]() {
                    return stop_ || (next_claimed_ < bounds_.size() &&
                                     next_claimed_ - consumed_ < capacity);
                });
                if (stop_ || next_claimed_ >= bounds_.size()) return;
                idx = next_claimed_++;
            }
            SubgraphBatch batch = build_training_batch(g_, sg_cfg_, targets_, order_,
                                                       bounds_[idx].first, bounds_[idx].second);
            {
                std::lock_guard<std::mutex> lock(mutex_);
                ready_.emplace(idx, std::move(batch));
            }
            cv_.notify_all();
        }
    }

    const BipartiteGraph& g_;
    SubgraphConfig sg_cfg_;
    const std::vector<TrainTarget>& targets_;
    std::vector<std::size_t> order_;
    std::vector<std::pair<std::size_t, std::size_t>> bounds_;

    bool threaded_ = false;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::size_t, SubgraphBatch> ready_;
    std::size_t next_claimed_ = 0;   // guarded by mutex_
    std::size_t next_consumed_ = 0;  // consumer thread only
    std::size_t consumed_ = 0;       // guarded by mutex_
    bool stop_ = false;
};

std::vector<TrainTarget> dense_targets(const RatingDataset& data) {
    std::vector<TrainTarget> targets;
    targets.reserve(data.size());
    for (const RatingTriple& t : data.triples()) {
        targets.push_back({data.user_index(t.user_id), data.item_index(t.item_id), t.rating});
    }
    return targets;
}

double validation_rmse(const MCCLModel& model, const BipartiteGraph& g,
                       const SubgraphConfig& sg_cfg, const std::vector<TrainTarget>& targets,
                       std::size_t batch_size) {
    if (targets.empty()) return 0.0;
    std::vector<double> preds, truth;
    preds.reserve(targets.size());
    truth.reserve(targets.size());
    std::size_t begin = 0;
    while (begin < targets.size()) {
        const std::size_t end = std::min(begin + batch_size, targets.size());
        std::vector<EnclosingSubgraph> subgraphs;
        for (std::size_t i = begin; i < end; ++i) {
            subgraphs.push_back(extract_subgraph(g, targets[i].user, targets[i].item, sg_cfg));
            truth.push_back(targets[i].rating);
        }
        const std::vector<double> p = model.predict(make_batch(subgraphs));
        preds.insert(preds.end(), p.begin(), p.end());
        begin = end;
    }
    return rmse(preds, truth);
}

Checkpoint snapshot(const MCCLModel& model, const TrainConfig& cfg, double best_rmse,
                    const std::string& rng_state) {
    Checkpoint ckpt;
    for (const ParamRef& p : model.parameters()) {
        ckpt.params.emplace_back(p.name, Tensor::from_data(p.tensor.shape(), p.tensor.values()));
    }
    ckpt.config = cfg.to_json();
    ckpt.best_validation_rmse = best_rmse;
    ckpt.rng_state = rng_state;
    return ckpt;
}

}  // namespace

// ---- train ----------------------------------------------------------------------

TrainResult train(const SplitDataset& split, const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    const BipartiteGraph g_train = build_graph(split.train);
    const SubgraphConfig sg_cfg{cfg.hops, cfg.max_neighbors, cfg.seed};
    const std::vector<TrainTarget> train_targets = dense_targets(split.train);
    const std::vector<TrainTarget> val_targets = dense_targets(split.validation);
    if (train_targets.empty()) throw EmptyDataset("train: no training interactions");

    MCCLModel model(cfg, g_train.num_relations());
    AdamW optimizer(model.parameters(), cfg.learning_rate, cfg.weight_decay);
    const int workers = env_num_workers();

    TrainResult result;
    double best_rmse = 0.0;
    int best_epoch = -1;
    Checkpoint best;

    auto consider = [&](int epoch, double val) {
        if (best_epoch < 0 || val < best_rmse) {
            best_rmse = val;
            best_epoch = epoch;
            best = snapshot(model, cfg, val,
                            "seed=" + std::to_string(cfg.seed) +
                                ";epochs_done=" + std::to_string(epoch));
        }
    };

    if (cfg.epochs == 0) {
        consider(0, validation_rmse(model, g_train, sg_cfg, val_targets, cfg.batch_size));
    }

    int global_step = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(train_targets.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        RngStream shuffle_rng(mix_seed(cfg.seed, 0x45504F43ULL, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        BatchProducer producer(g_train, sg_cfg, train_targets, std::move(order), cfg.batch_size,
                               workers);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < producer.num_batches(); ++b) {
            SubgraphBatch batch = producer.next();
            ++global_step;
            RngStream noise_rng(
                mix_seed(cfg.seed, 0x4E4F4953ULL, static_cast<std::uint64_t>(global_step)));

            Tape tape;
            MCCLModel::ForwardResult fwd = model.forward(batch, &noise_rng);
            tape.backward(fwd.loss);
            optimizer.step();
            optimizer.zero_grad();

            epoch_loss += fwd.breakdown.total;
            if (hooks.on_step) {
                StepLog log;
                log.step = global_step;
                log.losses = fwd.breakdown;
                if (fwd.view1) log.attention = fwd.view1->attention_stats;
                hooks.on_step(log);
            }
        }
        epoch_loss /= static_cast<double>(producer.num_batches());

        EpochLog elog;
        elog.epoch = epoch;
        elog.train_loss = epoch_loss;
        elog.val_rmse = validation_rmse(model, g_train, sg_cfg, val_targets, cfg.batch_size);
        result.epochs.push_back(elog);
        if (hooks.on_epoch) hooks.on_epoch(elog);
        consider(epoch, elog.val_rmse);
    }

    result.checkpoint = std::move(best);
    result.best_val_rmse = best_rmse;
    result.best_epoch = best_epoch;
    if (const DenoiseView* v1 = model.denoise_view()) {
        result.attention_calls = v1->attention_calls();
    }
    return result;
}

MCCLModel model_from_checkpoint(const Checkpoint& ckpt) {
    TrainConfig cfg = TrainConfig::from_json(ckpt.config);
    MCCLModel model(cfg, num_relation_levels(cfg.scale()));
    model.load_state(ckpt);
    return model;
}

AblationResult ablate(const SplitDataset& split, const TrainConfig& cfg,
                      const TrainHooks& hooks) {
    AblationResult result;
    TrainConfig c = cfg;
    c.ablation_mode = AblationMode::full;
    result.full = train(split, c, hooks);
    c.ablation_mode = AblationMode::denoise_only;
    result.denoise_only = train(split, c, hooks);
    c.ablation_mode = AblationMode::vgae_only;
    result.vgae_only = train(split, c, hooks);
    return result;
}

std::vector<SweepRow> sweep(const SplitDataset& split, const TrainConfig& cfg,
                            const std::string& param, const std::vector<double>& values,
                            const EvalConfig& eval_cfg, const TrainHooks& hooks) {
    if (values.empty()) throw ConfigError("sweep: no values given");
    double LossWeights::*field = nullptr;
    if (param == "alpha") field = &LossWeights::alpha;
    else if (param == "beta") field = &LossWeights::beta;
    else if (param == "lambda") field = &LossWeights::lambda;
    else throw ConfigError("sweep: param must be alpha|beta|lambda, got '" + param + "'");

    const BipartiteGraph g_train = build_graph(split.train);
    std::vector<RatingTriple> all = split.train.triples();
    all.insert(all.end(), split.validation.triples().begin(), split.validation.triples().end());
    all.insert(all.end(), split.test.triples().begin(), split.test.triples().end());
    const BipartiteGraph interactions = build_graph(
        RatingDataset(std::move(all), split.train.scale(), split.train.shared_index()));

    std::vector<SweepRow> rows;
    for (double value : values) {
        TrainConfig c = cfg;
        c.loss.*field = value;
        TrainResult r = train(split, c, hooks);
        MCCLModel model = model_from_checkpoint(r.checkpoint);
        SweepRow row;
        row.value = value;
        row.report = evaluate_model(model, split, g_train, interactions, eval_cfg);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mccl
