#pragma once

#include "warlab/matrix.hpp"
#include "warlab/nn.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace warlab {

enum class NormType { Linf, L2 };
enum class AttackObjective { CrossEntropy, KlToClean };

std::string to_string(NormType norm);
std::string to_string(AttackObjective objective);
NormType norm_from_string(const std::string& name);
AttackObjective objective_from_string(const std::string& name);

/// Per-dimension box the attacked input must stay in.
struct DataBounds {
    Vector lo;
    Vector hi;

    static DataBounds uniform(std::size_t dim, double lo, double hi);
};

struct AttackConfig {
    NormType norm = NormType::Linf;
    double epsilon = 0.1;
    double step_size = 0.01;
    std::size_t steps = 10;
    bool random_start = true;
    AttackObjective objective = AttackObjective::CrossEntropy;
    std::optional<DataBounds> data_bounds;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Dual norm used for gradient magnitudes under a threat model: Linf pairs
/// with l1, L2 with l2.
double dual_norm(const Eigen::Ref<const Vector>& g, NormType threat);

/// Projects every column of `x` onto the ball around the matching column of
/// `x0`, then clamps to the data box when one is configured.
Matrix project_ball(const Matrix& x0, const Matrix& x, const AttackConfig& cfg);

using Rng = std::mt19937_64;

struct AttackResult {
    Matrix adversarial;               // d x batch, best iterate per column
    std::vector<double> best_values;  // attack objective at the returned point
    /// Largest dual norm of the cross-entropy input gradient over every
    /// visited iterate, including the clean input.
    std::vector<double> lipschitz;
};

struct AttackOptions {
    bool track_lipschitz = false;
};

/// Projected gradient ascent over a batch of examples (one per column).
/// Random starts are drawn from `rng` in column order.
AttackResult pgd_attack_batch(const NetworkParams& net, const Matrix& x,
                              const std::vector<std::size_t>& labels, const AttackConfig& cfg,
                              Rng& rng, AttackOptions options = {});

/// Single-example PGD; random starts are seeded from `cfg.seed`.
Matrix pgd_attack(const NetworkParams& net, const Matrix& x, std::size_t label,
                  const AttackConfig& cfg);

/// One signed step of size epsilon from the clean point.
Matrix fgsm_attack(const NetworkParams& net, const Matrix& x, std::size_t label,
                   const AttackConfig& cfg);

/// Objective value of `cfg.objective` at `x_adv` relative to clean input `x`.
double attack_objective_value(const NetworkParams& net, const Matrix& x, const Matrix& x_adv,
                              std::size_t label, const AttackConfig& cfg);

}  // namespace warlab
