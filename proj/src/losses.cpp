#include "warlab/losses.hpp"

#include "warlab/errors.hpp"

#include <cmath>
#include <numeric>

namespace warlab {

std::string to_string(LossVariant variant) {
    switch (variant) {
    case LossVariant::GeneralizedAT: return "generalized_at";
    case LossVariant::TradesKL: return "trades_kl";
    case LossVariant::ClippedAT: return "clipped_at";
    }
    return "unknown";
}

LossVariant loss_variant_from_string(const std::string& name) {
    if (name == "generalized_at") return LossVariant::GeneralizedAT;
    if (name == "trades_kl") return LossVariant::TradesKL;
    if (name == "clipped_at") return LossVariant::ClippedAT;
    throw InvalidArgument("unknown loss variant '" + name + "'");
}

void RobustLossConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("loss lambda must be a finite value >= 0");
    }
}

namespace {

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_inputs(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                  const std::vector<std::size_t>& labels) {
    if (!same_shape(x, x_adv)) throw InvalidArgument("clean and adversarial inputs differ in shape");
    if (x.rows() != static_cast<Eigen::Index>(net.config().input_dim)) {
        throw InvalidArgument("input dimension does not match network");
    }
    if (labels.size() != static_cast<std::size_t>(x.cols())) {
        throw InvalidArgument("label count does not match batch size");
    }
}

}  // namespace

double BatchLossComponents::mean_natural() const { return mean(natural); }
double BatchLossComponents::mean_regularizer() const { return mean(regularizer); }

BatchLossComponents robust_loss_components(const NetworkParams& net, const Matrix& x,
                                           const Matrix& x_adv,
                                           const std::vector<std::size_t>& labels,
                                           LossVariant variant) {
    check_inputs(net, x, x_adv, labels);
    const Matrix clean_logits = predict_logits(net, x);
    const Matrix adv_logits = predict_logits(net, x_adv);
    auto clean = cross_entropy_batch(clean_logits, labels);

    BatchLossComponents out;
    out.natural = clean.losses;
    if (variant == LossVariant::TradesKL) {
        out.regularizer = kl_divergence_batch(clean_logits, adv_logits).kls;
        return out;
    }
    const auto adv = cross_entropy_batch(adv_logits, labels);
    out.regularizer.resize(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
        const double diff = adv.losses[j] - clean.losses[j];
        out.regularizer[j] = variant == LossVariant::ClippedAT ? std::max(diff, 0.0) : diff;
    }
    return out;
}

RobustLossResult robust_loss_batch(const NetworkParams& net, const Matrix& x,
                                   const Matrix& x_adv, const std::vector<std::size_t>& labels,
                                   const RobustLossConfig& cfg) {
    cfg.validate();
    check_inputs(net, x, x_adv, labels);
    const auto batch = static_cast<std::size_t>(x.cols());
    const double lambda = cfg.lambda;

    auto clean_fwd = forward(net, x);
    auto adv_fwd = forward(net, x_adv);
    auto clean = cross_entropy_batch(clean_fwd.logits, labels);

    Matrix clean_up = clean.grad;
    Matrix adv_up = Matrix::Zero(adv_fwd.logits.rows(), adv_fwd.logits.cols());
    std::vector<double> reg(batch);

    if (cfg.variant == LossVariant::TradesKL) {
        auto kl = kl_divergence_batch(clean_fwd.logits, adv_fwd.logits);
        reg = kl.kls;
        if (lambda != 0.0) clean_up += lambda * kl.grad_p;
        adv_up = lambda * kl.grad_q;
    } else {
        auto adv = cross_entropy_batch(adv_fwd.logits, labels);
        for (std::size_t j = 0; j < batch; ++j) {
            const auto col = static_cast<Eigen::Index>(j);
            const double diff = adv.losses[j] - clean.losses[j];
            const bool active = cfg.variant == LossVariant::GeneralizedAT || diff > 0.0;
            reg[j] = active ? diff : 0.0;
            if (active) {
                clean_up.col(col) *= 1.0 - lambda;
                adv_up.col(col) = lambda * adv.grad.col(col);
            }
        }
    }

    const double scale = 1.0 / static_cast<double>(batch);
    RobustLossResult result;
    result.loss.natural = mean(clean.losses);
    result.loss.regularizer = mean(reg);
    result.loss.total = result.loss.natural + lambda * result.loss.regularizer;

    result.grads = backward(net, clean_fwd.cache, clean_up);
    if (lambda != 0.0) {
        auto adv_grads = backward(net, adv_fwd.cache, adv_up);
        for (std::size_t h = 0; h < net.depth(); ++h) {
            result.grads.layer_grads[h] += adv_grads.layer_grads[h];
        }
        result.grads.output_grad += adv_grads.output_grad;
    }
    for (auto& g : result.grads.layer_grads) g *= scale;
    result.grads.output_grad *= scale;
    // Per-column input gradients are left unscaled.
    return result;
}

RobustLossResult robust_loss(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                             std::size_t label, const RobustLossConfig& cfg) {
    if (x.cols() != 1) throw InvalidArgument("robust_loss expects a single d x 1 input");
    return robust_loss_batch(net, x, x_adv, {label}, cfg);
}

}  // namespace warlab
