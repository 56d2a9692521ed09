#pragma once

#include "warlab/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace warlab {

enum class InitScheme {
    /// Unit-variance output layer over fan-in scaled hidden layers. The input
    /// gradient norm grows like sqrt(width) at initialization.
    NtkGaussian,
    /// Normal(0, 2 / fan_in) for every layer including the output layer.
    HeGaussian,
};

std::string to_string(InitScheme scheme);
InitScheme init_scheme_from_string(const std::string& name);

struct NetworkConfig {
    std::size_t input_dim = 1;  // d
    std::size_t width = 1;      // m
    std::size_t depth = 1;      // H, number of hidden weight matrices
    InitScheme init = InitScheme::NtkGaussian;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const NetworkConfig&) const = default;
};

/// Bias-free ReLU network f(x) = a^T relu(W_H relu(... relu(W_1 x))).
///
/// `layers[0]` is m x d, the remaining hidden layers are m x m and `output`
/// is m x C. The initial snapshot is taken at construction and cannot be
/// modified afterwards.
class NetworkParams {
public:
    NetworkParams(NetworkConfig config, std::size_t num_classes, std::vector<Matrix> layers,
                  Matrix output);
    /// Restores a network whose initial snapshot differs from its current weights.
    NetworkParams(NetworkConfig config, std::size_t num_classes, std::vector<Matrix> layers,
                  Matrix output, std::vector<Matrix> initial_layers);

    const NetworkConfig& config() const { return config_; }
    std::size_t num_classes() const { return num_classes_; }
    std::size_t depth() const { return layers.size(); }

    const std::vector<Matrix>& initial_layers() const { return initial_layers_; }

    std::vector<Matrix> layers;
    Matrix output;

private:
    void check_shapes() const;

    NetworkConfig config_;
    std::size_t num_classes_;
    std::vector<Matrix> initial_layers_;
};

NetworkParams init_network(const NetworkConfig& config, std::size_t num_classes);

/// Pre-activations and layer inputs retained for the backward pass.
struct ForwardCache {
    std::vector<Matrix> layer_inputs;     // h^(0) .. h^(H-1)
    std::vector<Matrix> pre_activations;  // W^(h) h^(h-1), h = 1..H
    Matrix hidden;                        // h^(H)
};

struct ForwardResult {
    Matrix logits;  // C x batch
    ForwardCache cache;
};

/// Evaluates the network on a d x batch input. Each column is one example.
ForwardResult forward(const NetworkParams& net, const Matrix& x);

/// Forward pass without retaining the cache.
Matrix predict_logits(const NetworkParams& net, const Matrix& x);

struct GradientBundle {
    std::vector<Matrix> layer_grads;  // shapes match NetworkParams::layers
    Matrix output_grad;               // m x C
    Matrix input_grad;                // d x batch

    bool has_param_grads() const { return !layer_grads.empty(); }
    GradientBundle& operator+=(const GradientBundle& other);
    GradientBundle& operator*=(double scale);
};

enum class GradientTargets { ParamsAndInput, InputOnly };

/// Gradients of sum_j upstream(:, j)^T logits(:, j) with respect to the
/// parameters (summed over the batch) and with respect to every input column.
/// ReLU has subgradient 0 at 0.
GradientBundle backward(const NetworkParams& net, const ForwardCache& cache,
                        const Matrix& upstream,
                        GradientTargets targets = GradientTargets::ParamsAndInput);

/// Zero-valued bundle with parameter shapes of `net` and an input gradient of
/// `batch` columns.
GradientBundle zero_gradients(const NetworkParams& net, Eigen::Index batch = 1);

// ---------------------------------------------------------------------------
// Losses on logits
// ---------------------------------------------------------------------------

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad;  // d loss / d logits
};

/// Column-wise softmax computed with max subtraction.
Matrix softmax(const Matrix& logits);
/// Column-wise log-softmax via log-sum-exp.
Matrix log_softmax(const Matrix& logits);

/// Softmax cross-entropy of one C x 1 logit vector.
LossAndGrad cross_entropy(const Matrix& logits, std::size_t label);

/// Per-column cross-entropy of a C x batch logit matrix. `grad` holds the
/// per-column gradients (not averaged).
struct BatchLoss {
    std::vector<double> losses;
    Matrix grad;
};
BatchLoss cross_entropy_batch(const Matrix& logits, const std::vector<std::size_t>& labels);

struct KlResult {
    double kl = 0.0;
    Matrix grad_q;  // d KL / d q_logits = softmax(q) - softmax(p)
    Matrix grad_p;  // d KL / d p_logits
};

/// KL(softmax(p) || softmax(q)) for C x 1 logit vectors, in log space.
KlResult kl_divergence(const Matrix& p_logits, const Matrix& q_logits);

struct BatchKl {
    std::vector<double> kls;
    Matrix grad_q;
    Matrix grad_p;
};
BatchKl kl_divergence_batch(const Matrix& p_logits, const Matrix& q_logits);

}  // namespace warlab
