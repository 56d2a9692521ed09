#pragma once

#include "warlab/attack.hpp"
#include "warlab/data.hpp"
#include "warlab/nn.hpp"

#include <cstddef>
#include <vector>

namespace warlab {

struct ExampleOutcome {
    bool correct = false;  // clean prediction equals the label
    bool stable = false;   // adversarial prediction equals the clean prediction
    bool robust = false;   // correct and stable
    std::size_t clean_pred = 0;
    std::size_t adv_pred = 0;
};

struct EvalRecord {
    std::vector<ExampleOutcome> per_example;
    double natural_accuracy = 0.0;
    double perturbation_stability = 0.0;
    double robust_accuracy = 0.0;
    /// Fraction whose adversarial prediction equals the label.
    double attacked_accuracy = 0.0;
    /// Mean over examples of the per-example local Lipschitz estimate.
    double lipschitz_estimate = 0.0;
};

/// Builds an outcome from predictions; robust is derived, never stored separately.
ExampleOutcome make_outcome(std::size_t label, std::size_t clean_pred, std::size_t adv_pred);

/// Aggregates outcomes into rates over the same N.
EvalRecord summarize(std::vector<ExampleOutcome> outcomes, double lipschitz_estimate = 0.0);

struct EvalOptions {
    std::size_t chunk_size = 256;
    bool track_lipschitz = true;
};

/// Attacks every example with `attack_cfg` (random starts seeded from
/// attack_cfg.seed) and records the three-way decomposition.
EvalRecord evaluate(const NetworkParams& net, const Dataset& data, const AttackConfig& attack_cfg,
                    EvalOptions options = {});

/// Max dual norm of the cross-entropy input gradient over the clean point
/// and every PGD iterate. A lower bound on the local Lipschitz constant.
double lipschitz_estimate(const NetworkParams& net, const Matrix& x, std::size_t label,
                          const AttackConfig& attack_cfg);

struct SurrogateBound {
    double observed_gap = 0.0;  // CE(x_adv) - CE(x)
    double bound = 0.0;         // epsilon * lipschitz_estimate
};

SurrogateBound surrogate_bound(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                               std::size_t label, const AttackConfig& attack_cfg);

}  // namespace warlab
