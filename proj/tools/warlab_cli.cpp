#include "warlab/checkpoint.hpp"
#include "warlab/errors.hpp"
#include "warlab/experiments.hpp"
#include "warlab/metrics.hpp"
#include "warlab/spec_file.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kSpec = 2, kIo = 3, kNumerical = 4 };

struct CommonArgs {
    std::string spec;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_spec = true) {
    auto* spec = cmd->add_option("--spec", args.spec, "Experiment spec (JSON)");
    if (needs_spec) spec->required();
    cmd->add_option("--output-dir", args.output_dir, "Override the output directory");
    cmd->add_option("--seed", args.seed, "Run a single seed instead of the spec's list");
    cmd->add_option("--threads", args.threads, "Worker threads for linear algebra")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
}

warlab::ExperimentSpec load(const CommonArgs& args) {
    warlab::SpecOverrides overrides;
    if (!args.output_dir.empty()) overrides.output_dir = args.output_dir;
    overrides.seed = args.seed;
    return warlab::load_spec(args.spec, overrides);
}

void require_kind(const warlab::ExperimentSpec& spec, warlab::ExperimentKind kind) {
    if (spec.kind != kind) {
        throw warlab::SpecError("spec kind is '" + warlab::to_string(spec.kind) +
                                "' but the subcommand expects '" + warlab::to_string(kind) + "'");
    }
}

warlab::RunOptions run_options(const CommonArgs& args) {
    warlab::RunOptions opts;
    if (!args.quiet) opts.log = &std::cerr;
    return opts;
}

void check_inputs_exist(const warlab::ExperimentSpec& spec) {
    if (spec.kind == warlab::ExperimentKind::NtkProbe) return;
    const auto& d = spec.dataset;
    if (d.kind != warlab::DatasetSpec::Kind::Idx) return;
    for (const auto& p : {d.train_images, d.train_labels, d.eval_images, d.eval_labels}) {
        if (!std::filesystem::exists(p)) throw warlab::IoError("dataset file '" + p + "' not found");
    }
}

int cmd_validate(const CommonArgs& args) {
    const auto spec = load(args);
    check_inputs_exist(spec);
    nlohmann::json out = {{"spec", warlab::to_json(spec)}};
    nlohmann::json runs = nlohmann::json::array();
    if (spec.kind == warlab::ExperimentKind::Train || spec.kind == warlab::ExperimentKind::Sweep) {
        const auto seeds = spec.kind == warlab::ExperimentKind::Train
                               ? std::vector<std::uint64_t>{spec.seeds.front()}
                               : spec.seeds;
        for (auto w : spec.network.widths) {
            for (double lambda : spec.lambdas) {
                for (auto seed : seeds) {
                    warlab::RunRequest req{w, lambda, seed, std::nullopt};
                    if (spec.war) req.war_zeta = spec.war->zeta;
                    runs.push_back({{"run_id", warlab::run_id(warlab::run_spec_json(spec, req))},
                                    {"width", w},
                                    {"lambda", lambda},
                                    {"seed", seed}});
                }
            }
        }
    }
    out["planned_runs"] = runs;
    std::cout << warlab::dump_json(out);
    return kOk;
}

int cmd_train(const CommonArgs& args) {
    const auto spec = load(args);
    require_kind(spec, warlab::ExperimentKind::Train);
    const auto data = warlab::load_data(spec.dataset);
    warlab::RunRequest req{spec.network.widths.front(), spec.lambdas.front(), spec.seeds.front(),
                           std::nullopt};
    if (spec.war) req.war_zeta = spec.war->zeta;
    const auto result = warlab::run_training(spec, data, req, run_options(args));
    std::cout << warlab::dump_json(
        {{"run_dir", result.directory.string()}, {"summary", warlab::run_summary_json(result)}});
    return kOk;
}

int cmd_sweep(const CommonArgs& args) {
    const auto spec = load(args);
    require_kind(spec, warlab::ExperimentKind::Sweep);
    const auto report = warlab::run_sweep(spec, run_options(args));
    if (!args.quiet) {
        std::cerr << "wrote " << report.runs.size() << " runs and summary.csv to " << spec.output_dir
                  << '\n';
    }
    std::cout << (std::filesystem::path(spec.output_dir) / "summary.csv").string() << '\n';
    return kOk;
}

int cmd_ntk_probe(const CommonArgs& args) {
    const auto spec = load(args);
    require_kind(spec, warlab::ExperimentKind::NtkProbe);
    const auto report = warlab::run_ntk_probe(*spec.ntk_probe, spec.seeds, run_options(args));
    warlab::write_ntk_probe(spec.output_dir, report);
    std::cout << warlab::dump_json(warlab::to_json(report));
    return report.degenerate ? kNumerical : kOk;
}

int cmd_war_compare(const CommonArgs& args) {
    const auto spec = load(args);
    require_kind(spec, warlab::ExperimentKind::WarCompare);
    const auto report = warlab::run_war_compare(spec, run_options(args));
    std::cout << warlab::dump_json(warlab::to_json(report));
    return kOk;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path) {
    const auto spec = load(args);
    if (spec.kind == warlab::ExperimentKind::NtkProbe) {
        throw warlab::SpecError("eval needs a spec with a dataset and an eval attack");
    }
    const auto checkpoint = warlab::load_checkpoint(checkpoint_path);
    const auto data = warlab::load_data(spec.dataset);
    if (checkpoint.net.config().input_dim != data.eval.input_dim()) {
        throw warlab::SpecError("checkpoint input dimension does not match the dataset");
    }
    if (checkpoint.net.num_classes() < data.eval.num_classes) {
        throw warlab::SpecError("checkpoint has fewer classes than the dataset");
    }
    warlab::EvalOptions opts;
    opts.chunk_size = spec.eval_chunk;
    const auto record =
        warlab::evaluate(checkpoint.net, data.eval, spec.attack_eval.resolve(data.eval), opts);
    std::cout << warlab::dump_json(warlab::to_json(record));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial training experiments for wide ReLU networks"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs args;
    std::string checkpoint;
    auto* validate = app.add_subcommand("validate", "Parse a spec and print the resolved config");
    auto* train = app.add_subcommand("train", "Train a single configuration");
    auto* sweep = app.add_subcommand("sweep", "Run a width x lambda grid");
    auto* probe = app.add_subcommand("ntk-probe", "Input-gradient scaling at initialization");
    auto* compare = app.add_subcommand("war-compare", "Compare lambda tuning strategies");
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    for (auto* cmd : {validate, train, sweep, probe, compare, eval}) add_common(cmd, args);
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (args.threads > 0) Eigen::setNbThreads(args.threads);

    try {
        if (validate->parsed()) return cmd_validate(args);
        if (train->parsed()) return cmd_train(args);
        if (sweep->parsed()) return cmd_sweep(args);
        if (probe->parsed()) return cmd_ntk_probe(args);
        if (compare->parsed()) return cmd_war_compare(args);
        if (eval->parsed()) return cmd_eval(args, checkpoint);
    } catch (const warlab::SpecError& e) {
        std::cerr << "spec error: " << e.what() << '\n';
        return kSpec;
    } catch (const warlab::InvalidArgument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kSpec;
    } catch (const warlab::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const warlab::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
