#include "warlab/nn.hpp"

#include "warlab/errors.hpp"

#include <cmath>
#include <random>

namespace warlab {

std::string to_string(InitScheme scheme) {
    switch (scheme) {
    case InitScheme::NtkGaussian: return "ntk_gaussian";
    case InitScheme::HeGaussian: return "he_gaussian";
    }
    return "unknown";
}

InitScheme init_scheme_from_string(const std::string& name) {
    if (name == "ntk_gaussian") return InitScheme::NtkGaussian;
    if (name == "he_gaussian") return InitScheme::HeGaussian;
    throw InvalidArgument("unknown init scheme '" + name + "'");
}

void NetworkConfig::validate() const {
    if (input_dim == 0) throw InvalidArgument("network input_dim must be >= 1");
    if (width == 0) throw InvalidArgument("network width must be >= 1");
    if (depth == 0) throw InvalidArgument("network depth must be >= 1");
}

NetworkParams::NetworkParams(NetworkConfig config, std::size_t num_classes,
                             std::vector<Matrix> layers_in, Matrix output_in)
    : layers(std::move(layers_in)),
      output(std::move(output_in)),
      config_(config),
      num_classes_(num_classes),
      initial_layers_(layers) {
    check_shapes();
}

NetworkParams::NetworkParams(NetworkConfig config, std::size_t num_classes,
                             std::vector<Matrix> layers_in, Matrix output_in,
                             std::vector<Matrix> initial_layers)
    : layers(std::move(layers_in)),
      output(std::move(output_in)),
      config_(config),
      num_classes_(num_classes),
      initial_layers_(std::move(initial_layers)) {
    check_shapes();
    if (initial_layers_.size() != layers.size()) {
        throw InvalidArgument("initial snapshot has a different number of layers");
    }
    for (std::size_t h = 0; h < layers.size(); ++h) {
        if (!same_shape(initial_layers_[h], layers[h])) {
            throw InvalidArgument("initial snapshot layer " + std::to_string(h + 1) +
                                  " has the wrong shape");
        }
    }
}

void NetworkParams::check_shapes() const {
    config_.validate();
    if (num_classes_ == 0) throw InvalidArgument("num_classes must be >= 1");
    const auto d = static_cast<Eigen::Index>(config_.input_dim);
    const auto m = static_cast<Eigen::Index>(config_.width);
    if (layers.size() != config_.depth) {
        throw InvalidArgument("expected " + std::to_string(config_.depth) + " layers, got " +
                              std::to_string(layers.size()));
    }
    for (std::size_t h = 0; h < layers.size(); ++h) {
        const Eigen::Index cols = h == 0 ? d : m;
        if (layers[h].rows() != m || layers[h].cols() != cols) {
            throw InvalidArgument("layer " + std::to_string(h + 1) + " must be " +
                                  std::to_string(m) + "x" + std::to_string(cols));
        }
    }
    if (output.rows() != m || output.cols() != static_cast<Eigen::Index>(num_classes_)) {
        throw InvalidArgument("output layer must be " + std::to_string(m) + "x" +
                              std::to_string(num_classes_));
    }
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double variance,
                       std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(variance));
    Matrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
    }
    return out;
}

}  // namespace

NetworkParams init_network(const NetworkConfig& config, std::size_t num_classes) {
    config.validate();
    if (num_classes == 0) throw InvalidArgument("num_classes must be >= 1");

    const auto d = static_cast<Eigen::Index>(config.input_dim);
    const auto m = static_cast<Eigen::Index>(config.width);
    const auto c = static_cast<Eigen::Index>(num_classes);
    std::mt19937_64 rng(config.seed);

    std::vector<Matrix> layers;
    layers.reserve(config.depth);
    layers.push_back(gaussian_matrix(m, d, 2.0 / static_cast<double>(d), rng));
    for (std::size_t h = 1; h < config.depth; ++h) {
        layers.push_back(gaussian_matrix(m, m, 2.0 / static_cast<double>(m), rng));
    }
    const double output_variance =
        config.init == InitScheme::NtkGaussian ? 1.0 : 2.0 / static_cast<double>(m);
    Matrix output = gaussian_matrix(m, c, output_variance, rng);
    return NetworkParams(config, num_classes, std::move(layers), std::move(output));
}

ForwardResult forward(const NetworkParams& net, const Matrix& x) {
    if (x.rows() != static_cast<Eigen::Index>(net.config().input_dim)) {
        throw InvalidArgument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                              std::to_string(net.config().input_dim));
    }
    ForwardResult result;
    auto& cache = result.cache;
    cache.layer_inputs.reserve(net.depth());
    cache.pre_activations.reserve(net.depth());

    Matrix h = x;
    for (const auto& w : net.layers) {
        Matrix z = w * h;
        cache.layer_inputs.push_back(std::move(h));
        h = z.cwiseMax(0.0);
        cache.pre_activations.push_back(std::move(z));
    }
    result.logits = net.output.transpose() * h;
    cache.hidden = std::move(h);
    return result;
}

Matrix predict_logits(const NetworkParams& net, const Matrix& x) {
    if (x.rows() != static_cast<Eigen::Index>(net.config().input_dim)) {
        throw InvalidArgument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                              std::to_string(net.config().input_dim));
    }
    Matrix h = x;
    for (const auto& w : net.layers) h = (w * h).cwiseMax(0.0);
    return net.output.transpose() * h;
}

GradientBundle& GradientBundle::operator+=(const GradientBundle& other) {
    if (layer_grads.size() != other.layer_grads.size()) {
        throw InvalidArgument("cannot add gradient bundles of different depth");
    }
    for (std::size_t h = 0; h < layer_grads.size(); ++h) layer_grads[h] += other.layer_grads[h];
    if (has_param_grads()) output_grad += other.output_grad;
    if (same_shape(input_grad, other.input_grad)) input_grad += other.input_grad;
    return *this;
}

GradientBundle& GradientBundle::operator*=(double scale) {
    for (auto& g : layer_grads) g *= scale;
    output_grad *= scale;
    input_grad *= scale;
    return *this;
}

GradientBundle zero_gradients(const NetworkParams& net, Eigen::Index batch) {
    GradientBundle out;
    for (const auto& w : net.layers) out.layer_grads.push_back(Matrix::Zero(w.rows(), w.cols()));
    out.output_grad = Matrix::Zero(net.output.rows(), net.output.cols());
    out.input_grad = Matrix::Zero(static_cast<Eigen::Index>(net.config().input_dim), batch);
    return out;
}

GradientBundle backward(const NetworkParams& net, const ForwardCache& cache,
                        const Matrix& upstream, GradientTargets targets) {
    const std::size_t depth = net.depth();
    if (cache.pre_activations.size() != depth || cache.layer_inputs.size() != depth) {
        throw InvalidArgument("forward cache does not match network depth");
    }
    const Eigen::Index batch = cache.hidden.cols();
    if (upstream.rows() != static_cast<Eigen::Index>(net.num_classes()) ||
        upstream.cols() != batch) {
        throw InvalidArgument("upstream gradient must be C x batch");
    }
    for (std::size_t h = 0; h < depth; ++h) {
        if (cache.pre_activations[h].rows() != net.layers[h].rows() ||
            cache.layer_inputs[h].rows() != net.layers[h].cols() ||
            cache.pre_activations[h].cols() != batch) {
            throw InvalidArgument("forward cache is stale for layer " + std::to_string(h + 1));
        }
    }

    const bool want_params = targets == GradientTargets::ParamsAndInput;
    GradientBundle grads;
    if (want_params) {
        grads.layer_grads.resize(depth);
        grads.output_grad = cache.hidden * upstream.transpose();
    }

    Matrix delta = net.output * upstream;  // d / d h^(H)
    for (std::size_t i = depth; i-- > 0;) {
        delta = (cache.pre_activations[i].array() > 0.0).select(delta, 0.0);
        if (want_params) grads.layer_grads[i] = delta * cache.layer_inputs[i].transpose();
        delta = net.layers[i].transpose() * delta;
    }
    grads.input_grad = std::move(delta);
    return grads;
}

// ---------------------------------------------------------------------------

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        const double mx = logits.col(j).maxCoeff();
        const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
        out.col(j) = logits.col(j).array() - lse;
    }
    return out;
}

Matrix softmax(const Matrix& logits) { return log_softmax(logits).array().exp().matrix(); }

BatchLoss cross_entropy_batch(const Matrix& logits, const std::vector<std::size_t>& labels) {
    if (logits.rows() < 2) throw InvalidArgument("cross_entropy needs at least 2 classes");
    if (labels.size() != static_cast<std::size_t>(logits.cols())) {
        throw InvalidArgument("label count does not match logit columns");
    }
    const Matrix logp = log_softmax(logits);
    BatchLoss out;
    out.losses.resize(labels.size());
    out.grad = logp.array().exp().matrix();
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] >= static_cast<std::size_t>(logits.rows())) {
            throw InvalidArgument("label " + std::to_string(labels[j]) + " out of range [0, " +
                                  std::to_string(logits.rows()) + ")");
        }
        const auto col = static_cast<Eigen::Index>(j);
        const auto row = static_cast<Eigen::Index>(labels[j]);
        out.losses[j] = -logp(row, col);
        out.grad(row, col) -= 1.0;
    }
    return out;
}

LossAndGrad cross_entropy(const Matrix& logits, std::size_t label) {
    if (logits.cols() != 1) throw InvalidArgument("cross_entropy expects a C x 1 logit vector");
    auto batch = cross_entropy_batch(logits, {label});
    return {batch.losses[0], std::move(batch.grad)};
}

BatchKl kl_divergence_batch(const Matrix& p_logits, const Matrix& q_logits) {
    if (!same_shape(p_logits, q_logits)) throw InvalidArgument("kl_divergence shape mismatch");
    const Matrix logp = log_softmax(p_logits);
    const Matrix logq = log_softmax(q_logits);
    const Matrix p = logp.array().exp().matrix();
    const Matrix q = logq.array().exp().matrix();
    const Matrix log_ratio = logp - logq;

    BatchKl out;
    out.kls.resize(static_cast<std::size_t>(p_logits.cols()));
    out.grad_q = q - p;
    out.grad_p.resize(p.rows(), p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double kl = p.col(j).dot(log_ratio.col(j));
        // Rounding can leave a tiny negative value when p == q.
        out.kls[static_cast<std::size_t>(j)] = std::max(kl, 0.0);
        out.grad_p.col(j) = p.col(j).array() * (log_ratio.col(j).array() - kl);
    }
    return out;
}

KlResult kl_divergence(const Matrix& p_logits, const Matrix& q_logits) {
    if (p_logits.cols() != 1) throw InvalidArgument("kl_divergence expects C x 1 logit vectors");
    auto batch = kl_divergence_batch(p_logits, q_logits);
    return {batch.kls[0], std::move(batch.grad_q), std::move(batch.grad_p)};
}

}  // namespace warlab
