#include "warlab/metrics.hpp"

#include "warlab/errors.hpp"

#include <algorithm>
#include <numeric>

namespace warlab {

ExampleOutcome make_outcome(std::size_t label, std::size_t clean_pred, std::size_t adv_pred) {
    ExampleOutcome out;
    out.clean_pred = clean_pred;
    out.adv_pred = adv_pred;
    out.correct = clean_pred == label;
    out.stable = adv_pred == clean_pred;
    out.robust = out.correct && out.stable;
    return out;
}

EvalRecord summarize(std::vector<ExampleOutcome> outcomes, double lipschitz_estimate) {
    if (outcomes.empty()) throw InvalidArgument("cannot summarize an empty evaluation");
    EvalRecord record;
    std::size_t correct = 0;
    std::size_t stable = 0;
    std::size_t robust = 0;
    for (const auto& o : outcomes) {
        correct += o.correct;
        stable += o.stable;
        robust += o.robust;
    }
    const auto n = static_cast<double>(outcomes.size());
    record.natural_accuracy = static_cast<double>(correct) / n;
    record.perturbation_stability = static_cast<double>(stable) / n;
    record.robust_accuracy = static_cast<double>(robust) / n;
    record.lipschitz_estimate = lipschitz_estimate;
    record.per_example = std::move(outcomes);
    return record;
}

EvalRecord evaluate(const NetworkParams& net, const Dataset& data, const AttackConfig& attack_cfg,
                    EvalOptions options) {
    if (data.size() == 0) throw InvalidArgument("evaluate requires a non-empty batch");
    const std::size_t chunk = std::max<std::size_t>(options.chunk_size, 1);
    Rng rng(attack_cfg.seed);

    std::vector<ExampleOutcome> outcomes;
    outcomes.reserve(data.size());
    std::size_t attacked_correct = 0;
    double lipschitz_sum = 0.0;

    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        const std::size_t stop = std::min(start + chunk, data.size());
        idx.resize(stop - start);
        std::iota(idx.begin(), idx.end(), start);
        const Matrix x = data.gather(idx);
        const auto labels = data.gather_labels(idx);

        const Matrix clean_logits = predict_logits(net, x);
        auto attack = pgd_attack_batch(net, x, labels, attack_cfg, rng,
                                       {.track_lipschitz = options.track_lipschitz});
        const Matrix adv_logits = predict_logits(net, attack.adversarial);

        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto col = static_cast<Eigen::Index>(k);
            auto outcome =
                make_outcome(labels[k], argmax_column(clean_logits, col), argmax_column(adv_logits, col));
            attacked_correct += outcome.adv_pred == labels[k];
            outcomes.push_back(outcome);
            if (options.track_lipschitz) lipschitz_sum += attack.lipschitz[k];
        }
    }
    const double n = static_cast<double>(outcomes.size());
    EvalRecord record = summarize(std::move(outcomes), lipschitz_sum / n);
    record.attacked_accuracy = static_cast<double>(attacked_correct) / n;
    return record;
}

double lipschitz_estimate(const NetworkParams& net, const Matrix& x, std::size_t label,
                          const AttackConfig& attack_cfg) {
    if (x.cols() != 1) throw InvalidArgument("lipschitz_estimate expects a single d x 1 input");
    if (attack_cfg.steps < 1) throw InvalidArgument("lipschitz_estimate needs at least one step");
    Rng rng(attack_cfg.seed);
    auto result = pgd_attack_batch(net, x, {label}, attack_cfg, rng, {.track_lipschitz = true});
    return result.lipschitz.front();
}

SurrogateBound surrogate_bound(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                               std::size_t label, const AttackConfig& attack_cfg) {
    SurrogateBound out;
    out.observed_gap = cross_entropy(predict_logits(net, x_adv), label).loss -
                       cross_entropy(predict_logits(net, x), label).loss;
    out.bound = attack_cfg.epsilon * lipschitz_estimate(net, x, label, attack_cfg);
    return out;
}

}  // namespace warlab
