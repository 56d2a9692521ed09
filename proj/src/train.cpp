#include "warlab/train.hpp"

#include "warlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace warlab {

std::string to_string(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::StepWise: return "step_wise";
    case ScheduleKind::ExpDecay: return "exp_decay";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::Constant: return "constant";
    }
    return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "step_wise") return ScheduleKind::StepWise;
    if (name == "exp_decay") return ScheduleKind::ExpDecay;
    if (name == "cosine") return ScheduleKind::Cosine;
    if (name == "constant") return ScheduleKind::Constant;
    throw InvalidArgument("unknown schedule kind '" + name + "'");
}

void Schedule::validate() const {
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw InvalidArgument("base_lr must be > 0");
    if (total_epochs == 0) throw InvalidArgument("total_epochs must be >= 1");
    if (milestone == 0) throw InvalidArgument("schedule milestone must be >= 1");
}

double lr_at(const Schedule& schedule, std::size_t epoch) {
    schedule.validate();
    if (epoch >= schedule.total_epochs) {
        throw InvalidArgument("epoch " + std::to_string(epoch) + " outside schedule of " +
                              std::to_string(schedule.total_epochs) + " epochs");
    }
    const double lr0 = schedule.base_lr;
    switch (schedule.kind) {
    case ScheduleKind::Constant: return lr0;
    case ScheduleKind::StepWise: {
        const auto second = static_cast<std::size_t>(
            std::ceil(0.9 * static_cast<double>(schedule.total_epochs)));
        if (epoch >= second) return lr0 / 100.0;
        if (epoch >= schedule.milestone) return lr0 / 10.0;
        return lr0;
    }
    case ScheduleKind::ExpDecay: {
        const std::size_t halvings = epoch + 1 > schedule.milestone ? epoch + 1 - schedule.milestone : 0;
        return std::ldexp(lr0, -static_cast<int>(std::min<std::size_t>(halvings, 1000)));
    }
    case ScheduleKind::Cosine: {
        const double t = static_cast<double>(epoch) / static_cast<double>(schedule.total_epochs);
        return lr0 * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
    }
    }
    return lr0;
}

// ---------------------------------------------------------------------------

void WarState::validate() const {
    if (!(zeta > 0.0)) throw InvalidArgument("WAR zeta must be > 0");
    if (!(alpha > 0.0)) throw InvalidArgument("WAR alpha must be > 0");
    if (!(lambda >= 0.0)) throw InvalidArgument("WAR lambda must be >= 0");
    if (!(ratio_cap > 0.0)) throw InvalidArgument("WAR ratio_cap must be > 0");
    if (!(rob_floor > 0.0)) throw InvalidArgument("WAR rob_floor must be > 0");
}

WarState WarState::with_target(double zeta, double alpha, double lambda0) {
    WarState s;
    s.zeta = zeta;
    s.alpha = alpha;
    s.lambda = lambda0;
    s.ratio_cap = 10.0 * zeta;
    s.validate();
    return s;
}

WarState war_update(WarState state, double l_nat, double l_rob) {
    if (!(l_nat >= 0.0)) throw InvalidArgument("war_update requires l_nat >= 0");
    if (!(l_rob > state.rob_floor)) return state;
    const double ratio = std::min(l_nat / l_rob, state.ratio_cap);
    state.lambda = std::max(state.lambda + state.alpha * (state.zeta - ratio), 0.0);
    return state;
}

double measure_zeta(const std::vector<std::pair<double, double>>& trajectory, std::size_t window,
                    double rob_floor) {
    if (window == 0) throw InvalidArgument("measure_zeta window must be >= 1");
    if (trajectory.size() < window) {
        throw InvalidArgument("measure_zeta window exceeds trajectory length");
    }
    double sum = 0.0;
    for (std::size_t i = trajectory.size() - window; i < trajectory.size(); ++i) {
        const auto [nat, rob] = trajectory[i];
        if (!(rob > rob_floor)) {
            throw InvalidArgument("measure_zeta: robust regularizer " + std::to_string(rob) +
                                  " at epoch " + std::to_string(i) + " is below the floor");
        }
        sum += nat / rob;
    }
    return sum / static_cast<double>(window);
}

// ---------------------------------------------------------------------------

void NtkTrainingConfig::validate() const {
    if (!(radius > 0.0)) throw InvalidArgument("projection radius must be > 0");
    if (!(epsilon >= 0.0)) throw InvalidArgument("projection epsilon must be >= 0");
}

bool NtkTrainingConfig::satisfies_width_condition(std::size_t width, std::size_t depth,
                                                  double c) const {
    const double m = static_cast<double>(width);
    const double lhs = radius / std::sqrt(m) + epsilon;
    const double rhs = c / (std::pow(static_cast<double>(depth), 6) * std::pow(std::log(m), 3));
    return lhs <= rhs;
}

void project_weights(NetworkParams& net, const NtkTrainingConfig& cfg) {
    cfg.validate();
    const double limit = cfg.radius / std::sqrt(static_cast<double>(net.config().width));
    const auto& initial = net.initial_layers();
    for (std::size_t h = 0; h < net.layers.size(); ++h) {
        Matrix delta = net.layers[h] - initial[h];
        const double norm = delta.norm();
        if (norm > limit) net.layers[h] = initial[h] + delta * (limit / norm);
    }
}

// ---------------------------------------------------------------------------

TrainRng::TrainRng(std::uint64_t seed) : shuffle(seed), attack(seed ^ 0x9e3779b97f4a7c15ull) {}

namespace {

void apply_update(Matrix& param, const Matrix& grad, double lr, double momentum,
                  Matrix* velocity) {
    if (momentum == 0.0 || velocity == nullptr) {
        param -= lr * grad;
        return;
    }
    if (!same_shape(*velocity, grad)) *velocity = Matrix::Zero(grad.rows(), grad.cols());
    *velocity = momentum * *velocity + grad;
    param -= lr * *velocity;
}

}  // namespace

EpochSummary train_epoch(NetworkParams& net, const Dataset& data, const AttackConfig& attack_cfg,
                         const RobustLossConfig& loss_cfg, const Schedule& schedule,
                         std::size_t epoch, const TrainOptions& options, TrainRng& rng,
                         WarState* war, OptimizerState* optimizer) {
    if (options.batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
    if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
    if (!options.trainable.empty() && options.trainable.size() != net.depth() + 1) {
        throw InvalidArgument("trainable mask needs depth + 1 entries");
    }
    loss_cfg.validate();
    if (war) war->validate();

    const double lr = lr_at(schedule, epoch);
    const auto trainable = [&](std::size_t layer) {
        return options.trainable.empty() || options.trainable[layer];
    };
    if (optimizer && optimizer->layer_velocity.size() != net.depth()) {
        optimizer->layer_velocity.assign(net.depth(), Matrix());
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.shuffle);

    EpochSummary summary;
    summary.epoch = epoch;
    summary.lr = lr;
    double nat_sum = 0.0;
    double rob_sum = 0.0;
    RobustLossConfig step_cfg = loss_cfg;

    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
        const std::size_t stop = std::min(start + options.batch_size, order.size());
        idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(stop));
        const Matrix x = data.gather(idx);
        const auto labels = data.gather_labels(idx);

        const Matrix x_adv = pgd_attack_batch(net, x, labels, attack_cfg, rng.attack).adversarial;

        if (war) {
            const auto parts = robust_loss_components(net, x, x_adv, labels, loss_cfg.variant);
            *war = war_update(*war, parts.mean_natural(), parts.mean_regularizer());
            step_cfg.lambda = war->lambda;
        }

        const auto result = robust_loss_batch(net, x, x_adv, labels, step_cfg);
        if (!std::isfinite(result.loss.total)) {
            throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
        }
        const auto n = static_cast<double>(idx.size());
        nat_sum += result.loss.natural * n;
        rob_sum += result.loss.regularizer * n;

        const double momentum = options.momentum;
        for (std::size_t h = 0; h < net.depth(); ++h) {
            if (!trainable(h)) continue;
            apply_update(net.layers[h], result.grads.layer_grads[h], lr, momentum,
                         optimizer ? &optimizer->layer_velocity[h] : nullptr);
        }
        if (trainable(net.depth())) {
            apply_update(net.output, result.grads.output_grad, lr, momentum,
                         optimizer ? &optimizer->output_velocity : nullptr);
        }
        if (options.projection) project_weights(net, *options.projection);
        ++summary.steps;
    }

    bool finite = net.output.allFinite();
    for (const auto& w : net.layers) finite = finite && w.allFinite();
    if (!finite) throw NumericalError("non-finite weights after epoch " + std::to_string(epoch));

    const auto total = static_cast<double>(data.size());
    summary.l_nat = nat_sum / total;
    summary.l_rob = rob_sum / total;
    summary.lambda = step_cfg.lambda;
    return summary;
}

}  // namespace warlab
