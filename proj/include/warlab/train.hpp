#pragma once

#include "warlab/attack.hpp"
#include "warlab/data.hpp"
#include "warlab/losses.hpp"
#include "warlab/nn.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace warlab {

// ---------------------------------------------------------------------------
// Learning-rate schedules

enum class ScheduleKind { StepWise, ExpDecay, Cosine, Constant };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

struct Schedule {
    ScheduleKind kind = ScheduleKind::ExpDecay;
    double base_lr = 0.1;
    std::size_t total_epochs = 100;
    std::size_t milestone = 75;

    void validate() const;
};

/// Learning rate for a 0-based epoch.
///
/// StepWise divides by 10 from `milestone` on and by 100 from ceil(0.9 T).
/// ExpDecay halves once per epoch from `milestone` on. Cosine anneals over
/// T epochs without reaching zero.
double lr_at(const Schedule& schedule, std::size_t epoch);

// ---------------------------------------------------------------------------
// Width Adjusted Regularization

struct WarState {
    double zeta = 30.0;        // target natural / robust ratio
    double alpha = 0.1;        // controller rate
    double lambda = 0.0;       // current regularization weight
    double ratio_cap = 300.0;  // ratios above this are clipped
    double rob_floor = 1e-8;   // updates are skipped when l_rob <= rob_floor

    void validate() const;
    /// Defaults with ratio_cap = 10 * zeta.
    static WarState with_target(double zeta, double alpha = 0.1, double lambda0 = 0.0);
};

/// One controller step: lambda <- max(lambda + alpha * (zeta - min(nat/rob, cap)), 0).
WarState war_update(WarState state, double l_nat, double l_rob);

/// Mean of l_nat / l_rob over the last `window` entries.
double measure_zeta(const std::vector<std::pair<double, double>>& trajectory, std::size_t window,
                    double rob_floor = 1e-8);

// ---------------------------------------------------------------------------
// Projected weight descent

struct NtkTrainingConfig {
    double radius = 1.0;  // R; each layer stays within R / sqrt(m) of its initial weights
    double epsilon = 0.0;

    void validate() const;
    /// Whether R / sqrt(m) + epsilon <= c / (H^6 (log m)^3) for the given c.
    bool satisfies_width_condition(std::size_t width, std::size_t depth, double c) const;
};

/// Pulls every hidden layer back onto the Frobenius ball around its initial
/// weights. Layers already inside are left untouched.
void project_weights(NetworkParams& net, const NtkTrainingConfig& cfg);

// ---------------------------------------------------------------------------
// Outer minimization

struct TrainOptions {
    std::size_t batch_size = 128;
    /// depth + 1 flags: hidden layers in order, then the output layer.
    /// Empty means every layer is trainable.
    std::vector<bool> trainable;
    std::optional<NtkTrainingConfig> projection;
    double momentum = 0.0;
};

/// Random streams used by training. Shuffling and attack starts draw from
/// separate generators so attack settings cannot change the data order.
struct TrainRng {
    Rng shuffle;
    Rng attack;

    explicit TrainRng(std::uint64_t seed);
};

struct EpochSummary {
    std::size_t epoch = 0;
    double lr = 0.0;
    double lambda = 0.0;   // lambda after the final minibatch
    double l_nat = 0.0;    // example-mean natural loss
    double l_rob = 0.0;    // example-mean robust regularizer
    std::size_t steps = 0;
};

/// Momentum buffers persisted across epochs; unused when momentum == 0.
struct OptimizerState {
    std::vector<Matrix> layer_velocity;
    Matrix output_velocity;
};

/// One pass over `data` in shuffled minibatches. When `war` is set its
/// lambda replaces `loss_cfg.lambda` and is updated once per minibatch from
/// batch-mean losses before the parameter step.
EpochSummary train_epoch(NetworkParams& net, const Dataset& data, const AttackConfig& attack_cfg,
                         const RobustLossConfig& loss_cfg, const Schedule& schedule,
                         std::size_t epoch, const TrainOptions& options, TrainRng& rng,
                         WarState* war = nullptr, OptimizerState* optimizer = nullptr);

}  // namespace warlab
