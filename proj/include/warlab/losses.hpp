#pragma once

#include "warlab/matrix.hpp"
#include "warlab/nn.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace warlab {

enum class LossVariant {
    /// (1 - lambda) CE(x) + lambda CE(x_adv)
    GeneralizedAT,
    /// CE(x) + lambda KL(f(x) || f(x_adv))
    TradesKL,
    /// CE(x) + lambda max(CE(x_adv) - CE(x), 0)
    ClippedAT,
};

std::string to_string(LossVariant variant);
LossVariant loss_variant_from_string(const std::string& name);

struct RobustLossConfig {
    LossVariant variant = LossVariant::TradesKL;
    double lambda = 6.0;

    void validate() const;
};

/// Natural risk, robust regularizer and their combination total = nat + lambda * rob.
struct LossBreakdown {
    double natural = 0.0;
    double regularizer = 0.0;
    double total = 0.0;
};

struct RobustLossResult {
    LossBreakdown loss;
    GradientBundle grads;
};

/// Robust objective of one example. The adversarial input is treated as a
/// constant; `grads.input_grad` is the gradient with respect to the clean input.
RobustLossResult robust_loss(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                             std::size_t label, const RobustLossConfig& cfg);

/// Loss components per example without gradients.
struct BatchLossComponents {
    std::vector<double> natural;
    std::vector<double> regularizer;

    double mean_natural() const;
    double mean_regularizer() const;
};

BatchLossComponents robust_loss_components(const NetworkParams& net, const Matrix& x,
                                           const Matrix& x_adv,
                                           const std::vector<std::size_t>& labels,
                                           LossVariant variant);

/// Batch-mean robust objective and its parameter gradient (mean over columns).
/// Input gradients are per column.
RobustLossResult robust_loss_batch(const NetworkParams& net, const Matrix& x,
                                   const Matrix& x_adv, const std::vector<std::size_t>& labels,
                                   const RobustLossConfig& cfg);

}  // namespace warlab
