#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mccl/metrics.hpp"

namespace mccl {

/// Adaptive moment estimation with decoupled weight decay. Decay applies only
/// to parameters flagged decay=true (weight matrices; never biases or the
/// log-std head).
class AdamW {
public:
    AdamW(std::vector<ParamRef> params, double learning_rate, double weight_decay,
          double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    void step();
    void zero_grad();
    const std::vector<ParamRef>& params() const { return params_; }

private:
    std::vector<ParamRef> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, wd_, beta1_, beta2_, eps_;
    long t_ = 0;
};

struct StepLog {
    int step = 0;
    LossBreakdown losses;
    std::vector<AttentionLayerStats> attention;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;  // mean total loss over the epoch's steps
    double val_rmse = 0.0;
};

struct TrainHooks {
    std::function<void(const StepLog&)> on_step;
    std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
    Checkpoint checkpoint;  // best-validation parameters
    std::vector<EpochLog> epochs;
    double best_val_rmse = 0.0;
    int best_epoch = 0;
    std::size_t attention_calls = 0;
};

/// Full optimization loop: per epoch a seeded shuffle of the training
/// interactions, subgraph extraction and batching (optionally prefetched by
/// MCCL_NUM_WORKERS threads), both views forward, Eq.-style total loss,
/// backward, AdamW update; validation RMSE after every epoch selects the
/// checkpointed parameters. Deterministic for a fixed config and seed.
TrainResult train(const SplitDataset& split, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Restores a model (architecture from the checkpoint's config snapshot).
MCCLModel model_from_checkpoint(const Checkpoint& ckpt);

struct AblationResult {
    TrainResult full;
    TrainResult denoise_only;
    TrainResult vgae_only;
};

/// Three runs sharing one seed, one per ablation mode.
AblationResult ablate(const SplitDataset& split, const TrainConfig& cfg,
                      const TrainHooks& hooks = {});

struct SweepRow {
    double value = 0.0;
    MetricReport report;
};

/// Trains and evaluates once per value of the chosen coefficient
/// ("alpha" | "beta" | "lambda"), identical seed throughout.
std::vector<SweepRow> sweep(const SplitDataset& split, const TrainConfig& cfg,
                            const std::string& param, const std::vector<double>& values,
                            const EvalConfig& eval_cfg = {}, const TrainHooks& hooks = {});

}  // namespace mccl
