#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rmk/attacks.hpp"
#include "rmk/config.hpp"
#include "rmk/dataset.hpp"
#include "rmk/models.hpp"
#include "rmk/rng.hpp"
#include "rmk/tensor.hpp"

#include <json.hpp>

namespace rmk {

// ---- inner maximization -----------------------------------------------------

struct SeveritySearchResult {
    double severity = 0.0;
    double loss_sum = 0.0;                 // message loss summed over the sub-batch at the winner
    std::vector<double> grid_losses;       // one summed loss per grid value, grid order
};

// Decodes an attacked sub-batch and returns per-batch message predictions.
using DecodeFn = std::function<Tensor(const Tensor& attacked)>;

// Exhaustively scans the severity grid of one attack family, replaying the same
// random draw at every grid value so severities differ only in strength, and
// returns the severity with the largest summed message loss. Ties break toward
// the harsher severity.
SeveritySearchResult worst_case_severity(const AttackSpec& spec, const Tensor& x_wm,
                                         const Tensor& cover, const Tensor& messages,
                                         const DecodeFn& decode, RngState& rng);

// One contiguous sub-batch assigned to one attack family.
struct AttackGroup {
    std::size_t start = 0;
    std::size_t count = 0;
    std::size_t attack_index = 0;          // into cfg.attacks
    double severity = 0.0;
    double search_loss_sum = 0.0;          // only meaningful when searched
    bool searched = false;
    Tensor attacked;
    AttackCache cache;                     // replay state for the gradient pass
};

struct InnerMaxResult {
    std::vector<AttackGroup> groups;
};

// Encodes the batch (training-mode batch norm), splits it into contiguous
// sub-batches, picks each group's severity (grid search or the configured fixed
// value), and applies the chosen attack. `x_wm_out` receives the watermarked
// batch; `enc_cache` the encoder state for the later backward pass.
InnerMaxResult build_attacked_batch(ModelBundle& m, const Tensor& cover, const Tensor& messages,
                                    const TrainConfig& cfg, RngState& rng_step,
                                    Encoder::Cache& enc_cache, Tensor& x_wm_out);

// ---- optimizer ----------------------------------------------------------------

struct ParamRef {
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

class Optimizer {
public:
    Optimizer() = default;
    Optimizer(OptimizerKind kind, double lr, std::vector<ParamRef> params);

    void step();
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    OptimizerKind kind_ = OptimizerKind::sgd;
    double lr_ = 0.0;
    std::vector<ParamRef> params_;
    std::vector<Tensor> m_, v_;            // adam moments, parallel to params_
    std::int64_t t_ = 0;
};

// ---- training loop ------------------------------------------------------------

struct StepReport {
    std::int64_t step = 0;                 // global step, 0-based
    std::int64_t epoch = 0;
    double loss_message = 0.0;             // batch-mean decoded-message squared error
    double loss_image = 0.0;               // weighted residual term
    double loss_adversarial = 0.0;         // weighted realism term
    double loss_joint = 0.0;               // sum of the three
    double loss_discriminator = 0.0;
    double bit_accuracy = 0.0;             // on this (attacked) batch
    std::vector<std::string> group_attacks;
    std::vector<double> group_severities;
    std::vector<bool> group_searched;
    double wall_seconds = 0.0;
};

nlohmann::json step_report_to_json(const StepReport& r, bool include_timing);

struct TrainOutput {
    ModelBundle model;
    std::vector<StepReport> history;
    int epochs_run = 0;
    bool early_stopped = false;
};

class Trainer {
public:
    Trainer(TrainConfig cfg, ModelBundle* model);

    // One full min-max update on a minibatch. rng_step is this step's fork.
    StepReport train_step(const Tensor& cover, const Tensor& messages, RngState& rng_step,
                          std::int64_t step, std::int64_t epoch);

    const TrainConfig& config() const { return cfg_; }

    // Scales all three learning rates to factor x their configured values;
    // train() drives this once per epoch when lr_decay is set.
    void set_lr_factor(double factor);

private:
    TrainConfig cfg_;
    ModelBundle* model_;
    Optimizer opt_encoder_, opt_decoder_, opt_discriminator_;
};

using StepCallback = std::function<void(const StepReport&, ModelBundle&)>;
using EpochCallback = std::function<void(int epoch, ModelBundle&)>;

// Initializes a model from cfg.arch and runs the min-max loop over the dataset.
// Callbacks may be empty. Throws TrainingError if a loss goes non-finite.
TrainOutput train(const ImageDataset& ds, const TrainConfig& cfg, const StepCallback& on_step = {},
                  const EpochCallback& on_epoch = {});

} // namespace rmk
