#include "warlab/attack.hpp"

#include "warlab/errors.hpp"

#include <cmath>
#include <limits>

namespace warlab {

std::string to_string(NormType norm) { return norm == NormType::Linf ? "linf" : "l2"; }

std::string to_string(AttackObjective objective) {
    return objective == AttackObjective::CrossEntropy ? "cross_entropy" : "kl_to_clean";
}

NormType norm_from_string(const std::string& name) {
    if (name == "linf") return NormType::Linf;
    if (name == "l2") return NormType::L2;
    throw InvalidArgument("unknown norm '" + name + "' (expected linf or l2)");
}

AttackObjective objective_from_string(const std::string& name) {
    if (name == "cross_entropy") return AttackObjective::CrossEntropy;
    if (name == "kl_to_clean") return AttackObjective::KlToClean;
    throw InvalidArgument("unknown attack objective '" + name + "'");
}

DataBounds DataBounds::uniform(std::size_t dim, double lo, double hi) {
    const auto n = static_cast<Eigen::Index>(dim);
    return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

void AttackConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw InvalidArgument("attack epsilon must be > 0");
    }
    if (!(step_size > 0.0) || !std::isfinite(step_size)) {
        throw InvalidArgument("attack step_size must be > 0");
    }
    if (data_bounds) {
        if (data_bounds->lo.size() != data_bounds->hi.size()) {
            throw InvalidArgument("data bounds lo/hi have different sizes");
        }
        if ((data_bounds->lo.array() >= data_bounds->hi.array()).any()) {
            throw InvalidArgument("data bounds require lo < hi in every dimension");
        }
    }
}

double dual_norm(const Eigen::Ref<const Vector>& g, NormType threat) {
    return threat == NormType::Linf ? g.lpNorm<1>() : g.norm();
}

Matrix project_ball(const Matrix& x0, const Matrix& x, const AttackConfig& cfg) {
    if (!same_shape(x0, x)) throw InvalidArgument("project_ball shape mismatch");
    Matrix out(x.rows(), x.cols());
    if (cfg.norm == NormType::Linf) {
        out = x.array().max(x0.array() - cfg.epsilon).min(x0.array() + cfg.epsilon).matrix();
    } else {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const Vector delta = x.col(j) - x0.col(j);
            const double norm = delta.norm();
            out.col(j) = norm > cfg.epsilon ? Vector(x0.col(j) + delta * (cfg.epsilon / norm))
                                            : Vector(x.col(j));
        }
    }
    if (cfg.data_bounds) {
        const auto& b = *cfg.data_bounds;
        if (b.lo.size() != x.rows()) {
            throw InvalidArgument("data bounds dimension does not match input dimension");
        }
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            out.col(j) = out.col(j).cwiseMax(b.lo).cwiseMin(b.hi);
        }
    }
    return out;
}

namespace {

Matrix random_start(const Matrix& x, const AttackConfig& cfg, Rng& rng) {
    Matrix start = x;
    const Eigen::Index d = x.rows();
    if (cfg.norm == NormType::Linf) {
        std::uniform_real_distribution<double> uniform(-cfg.epsilon, cfg.epsilon);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            for (Eigen::Index i = 0; i < d; ++i) start(i, j) += uniform(rng);
        }
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            Vector dir(d);
            for (Eigen::Index i = 0; i < d; ++i) dir(i) = normal(rng);
            const double norm = dir.norm();
            const double radius = cfg.epsilon * std::pow(unit(rng), 1.0 / static_cast<double>(d));
            if (norm > 0.0) start.col(j) += dir * (radius / norm);
        }
    }
    return project_ball(x, start, cfg);
}

struct ObjectiveEval {
    std::vector<double> values;
    Matrix input_grad;
    Matrix ce_input_grad;  // only filled when requested and objective is KL
};

ObjectiveEval evaluate_objective(const NetworkParams& net, const Matrix& point,
                                 const std::vector<std::size_t>& labels,
                                 const Matrix& clean_logits, const AttackConfig& cfg,
                                 bool need_grad, bool need_ce_grad) {
    ObjectiveEval out;
    if (!need_grad && !need_ce_grad) {
        const Matrix logits = predict_logits(net, point);
        out.values = cfg.objective == AttackObjective::CrossEntropy
                         ? cross_entropy_batch(logits, labels).losses
                         : kl_divergence_batch(clean_logits, logits).kls;
        return out;
    }
    auto fwd = forward(net, point);
    if (cfg.objective == AttackObjective::CrossEntropy) {
        auto ce = cross_entropy_batch(fwd.logits, labels);
        out.values = std::move(ce.losses);
        out.input_grad = backward(net, fwd.cache, ce.grad, GradientTargets::InputOnly).input_grad;
    } else {
        auto kl = kl_divergence_batch(clean_logits, fwd.logits);
        out.values = std::move(kl.kls);
        if (need_grad) {
            out.input_grad =
                backward(net, fwd.cache, kl.grad_q, GradientTargets::InputOnly).input_grad;
        }
        if (need_ce_grad) {
            auto ce = cross_entropy_batch(fwd.logits, labels);
            out.ce_input_grad =
                backward(net, fwd.cache, ce.grad, GradientTargets::InputOnly).input_grad;
        }
    }
    return out;
}

Matrix ce_input_grad(const NetworkParams& net, const Matrix& point,
                     const std::vector<std::size_t>& labels) {
    auto fwd = forward(net, point);
    auto ce = cross_entropy_batch(fwd.logits, labels);
    return backward(net, fwd.cache, ce.grad, GradientTargets::InputOnly).input_grad;
}

void update_lipschitz(std::vector<double>& lipschitz, const Matrix& grads, NormType norm) {
    for (Eigen::Index j = 0; j < grads.cols(); ++j) {
        auto& slot = lipschitz[static_cast<std::size_t>(j)];
        slot = std::max(slot, dual_norm(grads.col(j), norm));
    }
}

}  // namespace

AttackResult pgd_attack_batch(const NetworkParams& net, const Matrix& x,
                              const std::vector<std::size_t>& labels, const AttackConfig& cfg,
                              Rng& rng, AttackOptions options) {
    cfg.validate();
    if (x.rows() != static_cast<Eigen::Index>(net.config().input_dim)) {
        throw InvalidArgument("attack input dimension does not match network");
    }
    if (labels.size() != static_cast<std::size_t>(x.cols())) {
        throw InvalidArgument("attack label count does not match batch size");
    }
    const auto batch = static_cast<std::size_t>(x.cols());

    Matrix clean_logits;
    if (cfg.objective == AttackObjective::KlToClean) clean_logits = predict_logits(net, x);

    AttackResult result;
    result.best_values.assign(batch, -std::numeric_limits<double>::infinity());
    if (options.track_lipschitz) {
        result.lipschitz.assign(batch, 0.0);
        if (cfg.random_start) update_lipschitz(result.lipschitz, ce_input_grad(net, x, labels), cfg.norm);
    }

    Matrix current = cfg.random_start ? random_start(x, cfg, rng) : x;
    result.adversarial = current;

    for (std::size_t k = 0;; ++k) {
        const bool ce_grad_needed =
            options.track_lipschitz && cfg.objective == AttackObjective::KlToClean;
        const bool last = k == cfg.steps;
        auto eval = evaluate_objective(net, current, labels, clean_logits, cfg,
                                       !last || options.track_lipschitz, ce_grad_needed);

        if (options.track_lipschitz) {
            update_lipschitz(result.lipschitz,
                             ce_grad_needed ? eval.ce_input_grad : eval.input_grad, cfg.norm);
        }
        for (std::size_t j = 0; j < batch; ++j) {
            if (eval.values[j] > result.best_values[j]) {
                result.best_values[j] = eval.values[j];
                result.adversarial.col(static_cast<Eigen::Index>(j)) =
                    current.col(static_cast<Eigen::Index>(j));
            }
        }
        if (last) break;

        const Matrix& g = eval.input_grad;
        for (Eigen::Index j = 0; j < current.cols(); ++j) {
            if (cfg.norm == NormType::Linf) {
                if ((g.col(j).array() == 0.0).all()) continue;
                current.col(j) += cfg.step_size * g.col(j).array().sign().matrix();
            } else {
                const double norm = g.col(j).norm();
                if (norm == 0.0) continue;
                current.col(j) += g.col(j) * (cfg.step_size / norm);
            }
        }
        current = project_ball(x, current, cfg);
    }
    return result;
}

Matrix pgd_attack(const NetworkParams& net, const Matrix& x, std::size_t label,
                  const AttackConfig& cfg) {
    if (x.cols() != 1) throw InvalidArgument("pgd_attack expects a single d x 1 input");
    Rng rng(cfg.seed);
    return pgd_attack_batch(net, x, {label}, cfg, rng).adversarial;
}

Matrix fgsm_attack(const NetworkParams& net, const Matrix& x, std::size_t label,
                   const AttackConfig& cfg) {
    AttackConfig single = cfg;
    single.steps = 1;
    single.step_size = cfg.epsilon;
    single.random_start = false;
    return pgd_attack(net, x, label, single);
}

double attack_objective_value(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                              std::size_t label, const AttackConfig& cfg) {
    const Matrix logits = predict_logits(net, x_adv);
    if (cfg.objective == AttackObjective::CrossEntropy) return cross_entropy(logits, label).loss;
    return kl_divergence(predict_logits(net, x), logits).kl;
}

}  // namespace warlab
