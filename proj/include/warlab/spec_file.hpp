#pragma once

#include "warlab/attack.hpp"
#include "warlab/data.hpp"
#include "warlab/losses.hpp"
#include "warlab/nn.hpp"
#include "warlab/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace warlab {

inline constexpr int kSpecSchemaVersion = 1;

enum class ExperimentKind { Train, Sweep, NtkProbe, WarCompare };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct DatasetSpec {
    enum class Kind { Idx, Gaussians };
    Kind kind = Kind::Gaussians;

    std::string train_images;
    std::string train_labels;
    std::string eval_images;
    std::string eval_labels;
    std::optional<std::size_t> train_limit;
    std::optional<std::size_t> eval_limit;

    GaussianSpec gaussians;
    std::size_t eval_n_per_class = 100;
};

struct NetworkGridSpec {
    std::vector<std::size_t> widths;
    std::size_t depth = 2;
    InitScheme init = InitScheme::NtkGaussian;
    std::vector<bool> trainable;  // empty: everything trains
};

/// How an attack config obtains its data box.
enum class BoundsSource { None, Dataset, Explicit };

struct AttackSpec {
    AttackConfig config;
    BoundsSource bounds = BoundsSource::Dataset;
    double lo = 0.0;
    double hi = 1.0;

    /// Config with the data box filled in for `data`.
    AttackConfig resolve(const Dataset& data) const;
};

struct WarSpec {
    std::optional<double> zeta;  // required outside war-compare
    double alpha = 0.1;
    std::optional<double> ratio_cap;  // default 10 * zeta
    double rob_floor = 1e-8;

    WarState state(double zeta_value, double lambda0) const;
};

struct WarCompareSpec {
    std::size_t thin_width = 64;
    std::size_t wide_width = 1024;
    std::vector<double> thin_lambdas;
    std::vector<double> wide_lambdas;
    std::size_t zeta_window = 5;
};

struct NtkProbeSpec {
    std::vector<std::size_t> widths;
    std::size_t depth = 3;
    std::size_t n_inputs = 32;
    std::size_t input_dim = 16;
    std::size_t num_classes = 10;
    double epsilon = 0.1;
    std::size_t steps = 10;
    double step_size = 0.025;
};

struct ProjectionSpec {
    NtkTrainingConfig config;
    std::optional<double> condition_c;
};

/// Fully resolved experiment description. Every subcommand, including
/// `validate`, obtains it from `parse_spec`.
struct ExperimentSpec {
    int schema_version = kSpecSchemaVersion;
    ExperimentKind kind = ExperimentKind::Train;
    std::string name;
    std::string output_dir;
    std::vector<std::uint64_t> seeds;

    DatasetSpec dataset;
    NetworkGridSpec network;
    LossVariant variant = LossVariant::TradesKL;
    std::vector<double> lambdas;
    AttackSpec attack_train;
    AttackSpec attack_eval;
    Schedule schedule;
    std::size_t epochs = 1;
    std::size_t batch_size = 128;
    double momentum = 0.0;
    std::size_t eval_chunk = 256;
    bool record_timing = false;

    std::optional<WarSpec> war;
    std::optional<WarCompareSpec> war_compare;
    std::optional<NtkProbeSpec> ntk_probe;
    std::optional<ProjectionSpec> projection;
};

struct SpecOverrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

/// Strict parse: unknown keys, missing required keys and out-of-range values
/// raise SpecError naming the offending key path.
ExperimentSpec parse_spec(const nlohmann::json& json, const SpecOverrides& overrides = {});
ExperimentSpec load_spec(const std::filesystem::path& path, const SpecOverrides& overrides = {});

/// Canonical JSON of a resolved spec; parse_spec(to_json(s)) reproduces s.
nlohmann::json to_json(const ExperimentSpec& spec);

nlohmann::json to_json(const AttackSpec& attack);
nlohmann::json to_json(const WarState& state);

}  // namespace warlab
