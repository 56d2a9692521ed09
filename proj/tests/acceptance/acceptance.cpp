// Acceptance checks. Each criterion prints one PASS/FAIL line.

#include "idx_fixtures.hpp"
#include "support.hpp"

#include "warlab/attack.hpp"
#include "warlab/checkpoint.hpp"
#include "warlab/data.hpp"
#include "warlab/errors.hpp"
#include "warlab/experiments.hpp"
#include "warlab/losses.hpp"
#include "warlab/metrics.hpp"
#include "warlab/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

using namespace warlab;

namespace {

namespace fs = std::filesystem;

const fs::path kSource = WARLAB_SOURCE_DIR;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path run_root() {
    const char* env = std::getenv("WARLAB_ACCEPTANCE_DIR");
    return env ? fs::path(env) : fs::current_path() / "acceptance_runs";
}

ExperimentSpec load_config(const std::string& name, const fs::path& out) {
    SpecOverrides o;
    o.output_dir = out.string();
    return load_spec(kSource / "configs" / name, o);
}

RunOptions progress() {
    RunOptions opts;
    if (std::getenv("WARLAB_ACCEPTANCE_VERBOSE")) opts.log = &std::cerr;
    return opts;
}

/// Pairs (i < j) ordered against the expected direction.
std::size_t inversions(const std::vector<double>& v, bool non_increasing) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            if (non_increasing ? v[j] > v[i] : v[j] < v[i]) ++n;
        }
    }
    return n;
}

std::string list(const std::vector<double>& v) {
    std::ostringstream s;
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    return "[" + s.str() + "]";
}

// ---------------------------------------------------------------------------

double loss_total(const NetworkParams& net, const Matrix& x, const Matrix& x_adv, std::size_t y,
                  const RobustLossConfig& cfg) {
    return robust_loss(net, x, x_adv, y, cfg).loss.total;
}

Verdict gradient_correctness() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    const LossVariant variants[] = {LossVariant::GeneralizedAT, LossVariant::TradesKL,
                                    LossVariant::ClippedAT};
    const std::size_t networks = 300;
    // Below this gradient norm a difference quotient cannot resolve 1e-5
    // relative accuracy, so those checks compare absolute error instead.
    const double resolvable = 1e-6;
    double worst_relative = 0.0, worst_absolute = 0.0;
    std::size_t checks = 0, tiny = 0, live = 0, redrawn = 0;
    for (std::size_t t = 0; t < networks; ++t) {
        const std::size_t d = 1 + rng() % 6, m = 1 + rng() % 8, depth = 1 + rng() % 8;
        const std::size_t classes = 2 + rng() % 4;
        auto net = testing::random_network(rng, d, m, depth, classes);
        const std::size_t y = rng() % classes;
        Matrix x, x_adv;
        // Keep every ReLU and the clipped-loss clamp well clear of the stencil.
        for (int attempt = 0;; ++attempt) {
            x = testing::random_matrix(rng, static_cast<Eigen::Index>(d), 1);
            x_adv = x + testing::random_matrix(rng, static_cast<Eigen::Index>(d), 1, 0.3);
            const auto fc = forward(net, x);
            const auto fa = forward(net, x_adv);
            const double gap = std::abs(cross_entropy(fa.logits, y).loss - cross_entropy(fc.logits, y).loss);
            double margin = gap != 0.0 ? gap : std::numeric_limits<double>::infinity();
            // Exact zeros come from dead inputs and do not move under perturbation.
            for (std::size_t h = 0; h < depth; ++h) {
                for (const Matrix* z : {&fc.cache.pre_activations[h], &fa.cache.pre_activations[h]}) {
                    for (Eigen::Index i = 0; i < z->size(); ++i) {
                        const double a = std::abs(z->data()[i]);
                        if (a != 0.0) margin = std::min(margin, a);
                    }
                }
            }
            if (margin >= 1e-2 || attempt == 1000) break;
            ++redrawn;
        }
        const double lambda = 0.5 + 3.0 * std::uniform_real_distribution<double>()(rng);
        const std::size_t tiny_before = tiny, checks_before = checks;

        auto record = [&](const Matrix& analytic, const Matrix& numeric) {
            ++checks;
            if (std::max(analytic.norm(), numeric.norm()) < resolvable) {
                ++tiny;
                worst_absolute = std::max(worst_absolute, (analytic - numeric).norm());
            } else {
                worst_relative =
                    std::max(worst_relative, testing::relative_error(analytic, numeric));
            }
        };

        for (auto variant : variants) {
            const RobustLossConfig cfg{variant, lambda};
            const auto r = robust_loss(net, x, x_adv, y, cfg);
            const auto f = [&] { return loss_total(net, x, x_adv, y, cfg); };
            record(r.grads.output_grad, testing::five_point_difference(net.output, f, 1e-4));
            for (std::size_t h = 0; h < depth; ++h) {
                record(r.grads.layer_grads[h], testing::five_point_difference(net.layers[h], f, 1e-4));
            }
            record(r.grads.input_grad, testing::five_point_difference(x, f, 1e-4));

            // Input gradient at the perturbed point, as used by the attack.
            const auto g = [&] {
                const auto fwd = forward(net, x_adv);
                return variant == LossVariant::TradesKL
                           ? kl_divergence(forward(net, x).logits, fwd.logits).kl
                           : cross_entropy(fwd.logits, y).loss;
            };
            auto fwd = forward(net, x_adv);
            Matrix up;
            if (variant == LossVariant::TradesKL) {
                up = kl_divergence(forward(net, x).logits, fwd.logits).grad_q;
            } else {
                up = cross_entropy(fwd.logits, y).grad;
            }
            const Matrix analytic =
                backward(net, fwd.cache, up, GradientTargets::InputOnly).input_grad;
            record(analytic, testing::five_point_difference(x_adv, g, 1e-4));
        }
        if (tiny - tiny_before < checks - checks_before) ++live;
    }
    const double elapsed = seconds_since(start);
    v.require(worst_relative < 1e-5, "max relative error " + std::to_string(worst_relative));
    v.require(live >= 100, "only " + std::to_string(live) + " networks with resolvable gradients");
    v.require(worst_absolute < 1e-10, "max absolute error on tiny gradients " +
                                          std::to_string(worst_absolute));
    v.require(elapsed < 60.0, "runtime " + std::to_string(elapsed) + " s");
    v.detail << (v.pass ? "" : " | ") << networks << " networks (" << live
             << " with resolvable gradients, " << redrawn << " points redrawn), " << checks
             << " gradient checks, max relative error " << worst_relative << "; " << tiny
             << " checks with norm < " << resolvable << ", max absolute error " << worst_absolute
             << "; " << elapsed << " s";
    return v;
}

// ---------------------------------------------------------------------------

void check_record(Verdict& v, const EvalRecord& r, const std::vector<std::size_t>& labels) {
    std::size_t correct = 0, stable = 0, robust = 0, attacked = 0;
    bool identity = true;
    for (std::size_t i = 0; i < r.per_example.size(); ++i) {
        const auto& e = r.per_example[i];
        identity = identity && e.correct == (e.clean_pred == labels[i]) &&
                   e.stable == (e.adv_pred == e.clean_pred) && e.robust == (e.correct && e.stable);
        correct += e.correct;
        stable += e.stable;
        robust += e.robust;
        attacked += e.adv_pred == labels[i];
    }
    const auto n = static_cast<double>(r.per_example.size());
    v.require(identity, "robust != correct and stable for some example");
    v.require(r.natural_accuracy == static_cast<double>(correct) / n &&
                  r.perturbation_stability == static_cast<double>(stable) / n &&
                  r.robust_accuracy == static_cast<double>(robust) / n &&
                  r.attacked_accuracy == static_cast<double>(attacked) / n,
              "rates disagree with per-example counts");
    v.require(r.robust_accuracy <= std::min(r.natural_accuracy, r.perturbation_stability),
              "robust accuracy exceeds min(natural, stability)");
}

Verdict decomposition_identity() {
    Verdict v;
    std::size_t records = 0;
    std::mt19937_64 rng(7);
    for (int t = 0; t < 24; ++t) {
        const GaussianSpec spec{40, 4, 5, 1.0, 0.4, static_cast<std::uint64_t>(t)};
        const Dataset data = make_gaussians(spec);
        auto net = testing::random_network(rng, 5, 4 + rng() % 12, 1 + rng() % 3, 4);
        AttackConfig cfg;
        cfg.norm = t % 2 ? NormType::L2 : NormType::Linf;
        cfg.epsilon = 0.05 + 0.1 * (t % 5);
        cfg.step_size = cfg.epsilon / 4.0;
        cfg.steps = static_cast<std::size_t>(t % 6);
        cfg.random_start = t % 3 != 0;
        cfg.seed = static_cast<std::uint64_t>(t);
        cfg.data_bounds = DataBounds::uniform(5, data.lo, data.hi);
        const auto a = evaluate(net, data, cfg);
        const auto b = evaluate(net, data, cfg);
        check_record(v, a, data.labels);
        records += 2;
        bool same = a.per_example.size() == b.per_example.size();
        for (std::size_t i = 0; same && i < a.per_example.size(); ++i) {
            same = a.per_example[i].clean_pred == b.per_example[i].clean_pred &&
                   a.per_example[i].adv_pred == b.per_example[i].adv_pred;
        }
        v.require(same && a.robust_accuracy == b.robust_accuracy,
                  "repeated evaluation differs");
    }

    const double natural = 84.90, stability = 67.25, robust = 54.18;
    v.require(robust <= std::min(natural, stability), "reference triple");
    v.detail << (v.pass ? "" : " | ") << records
             << " evaluation records, identity exact; reference triple " << robust
             << " <= min(" << natural << ", " << stability << ")";
    return v;
}

// ---------------------------------------------------------------------------

Verdict attack_feasibility() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(99);
    double worst_excess = 0.0;
    std::size_t attacks = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 2 + rng() % 6;
        auto net = testing::random_network(rng, d, 2 + rng() % 10, 1 + rng() % 3, 3);
        const Matrix x = testing::random_matrix(rng, static_cast<Eigen::Index>(d), 6, 0.5)
                             .cwiseMax(-1.0)
                             .cwiseMin(1.0);
        AttackConfig cfg;
        cfg.norm = t % 2 ? NormType::L2 : NormType::Linf;
        cfg.epsilon = 0.05 + 0.5 * std::uniform_real_distribution<double>()(rng);
        cfg.step_size = cfg.epsilon * (0.1 + std::uniform_real_distribution<double>()(rng));
        cfg.steps = 1 + rng() % 10;
        cfg.random_start = t % 3 != 0;
        cfg.objective = t % 4 == 0 ? AttackObjective::KlToClean : AttackObjective::CrossEntropy;
        cfg.data_bounds = DataBounds::uniform(d, -1.0, 1.0);
        Rng attack_rng(static_cast<std::uint64_t>(t));
        const std::vector<std::size_t> labels = {0, 1, 2, 0, 1, 2};
        const auto res = pgd_attack_batch(net, x, labels, cfg, attack_rng);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const Vector delta = res.adversarial.col(j) - x.col(j);
            const double size =
                cfg.norm == NormType::Linf ? delta.lpNorm<Eigen::Infinity>() : delta.norm();
            worst_excess = std::max(worst_excess, size - cfg.epsilon);
            const double box = std::max(res.adversarial.col(j).maxCoeff() - 1.0,
                                        -1.0 - res.adversarial.col(j).minCoeff());
            worst_excess = std::max(worst_excess, box);
            ++attacks;
        }
    }
    v.require(worst_excess <= 1e-12, "iterate outside the ball or box by " +
                                         std::to_string(worst_excess));

    double worst_maximizer = 0.0, worst_gap = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 2 + rng() % 6;
        const Vector w = testing::random_matrix(rng, static_cast<Eigen::Index>(d), 1);
        const auto net = testing::linear_net(w);
        AttackConfig cfg;
        cfg.norm = NormType::Linf;
        cfg.epsilon = 0.05 + 0.2 * std::uniform_real_distribution<double>()(rng);
        cfg.step_size = cfg.epsilon / 2.0;
        cfg.steps = 6;
        cfg.random_start = t % 2 == 0;
        cfg.seed = static_cast<std::uint64_t>(t);

        // Label 1: cross-entropy rises along +w.
        const Matrix x = testing::random_matrix(rng, static_cast<Eigen::Index>(d), 1);
        const Matrix expected = x + cfg.epsilon * w.cwiseSign();
        const Matrix pgd = pgd_attack(net, x, 1, cfg);
        worst_maximizer = std::max(worst_maximizer, (pgd - expected).lpNorm<Eigen::Infinity>());
        const Matrix fgsm = fgsm_attack(net, x, 1, cfg);
        worst_maximizer = std::max(worst_maximizer, (fgsm - expected).lpNorm<Eigen::Infinity>());

        // Far into the misclassified region cross-entropy is linear in x.
        const double s = 40.0 / w.lpNorm<1>();
        const Matrix far = s * w.cwiseSign();
        const Matrix far_adv = pgd_attack(net, far, 1, cfg);
        const auto bound = surrogate_bound(net, far, far_adv, 1, cfg);
        const double expected_gap = 2.0 * cfg.epsilon * w.lpNorm<1>();
        worst_gap = std::max({worst_gap, std::abs(bound.observed_gap - bound.bound) / bound.bound,
                              std::abs(bound.observed_gap - expected_gap) / expected_gap});
    }
    const double elapsed = seconds_since(start);
    v.require(worst_maximizer <= 1e-10, "linear maximizer off by " + std::to_string(worst_maximizer));
    v.require(worst_gap <= 1e-10, "linear bound not tight, relative gap " + std::to_string(worst_gap));
    v.require(elapsed < 60.0, "runtime " + std::to_string(elapsed) + " s");
    v.detail << (v.pass ? "" : " | ") << attacks << " attacked points feasible (max excess "
             << worst_excess << "); linear maximizer error " << worst_maximizer
             << "; bound relative gap " << worst_gap << "; " << elapsed << " s";
    return v;
}

// ---------------------------------------------------------------------------

Verdict ntk_scaling() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    const auto out = run_root() / "ntk_probe";
    const auto spec = load_config("ntk_probe.json", out);
    const auto report = run_ntk_probe(*spec.ntk_probe, spec.seeds, progress());
    write_ntk_probe(out, report);
    const double elapsed = seconds_since(start);
    std::vector<double> means;
    for (const auto& w : report.widths) means.push_back(w.mean);
    v.require(!report.degenerate, "zero gradient estimates");
    v.require(report.slope >= 0.35 && report.slope <= 0.65,
              "slope " + std::to_string(report.slope) + " outside [0.35, 0.65]");
    v.require(report.rank_correlation == 1.0 && report.strictly_increasing,
              "means not strictly increasing");
    v.require(elapsed < 600.0, "runtime " + std::to_string(elapsed) + " s");
    v.detail << (v.pass ? "" : " | ") << "slope " << report.slope << ", rank correlation "
             << report.rank_correlation << ", means " << list(means) << ", " << elapsed << " s";
    return v;
}

// ---------------------------------------------------------------------------

Verdict width_trend() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    const auto spec = load_config("mnist_width_sweep.json", run_root() / "width_sweep");
    const auto report = run_sweep(spec, progress());
    const double elapsed = seconds_since(start);
    std::vector<double> stability, robust;
    for (auto w : spec.network.widths) {
        stability.push_back(report.cell(w, spec.lambdas.front()).stability.mean);
        robust.push_back(report.cell(w, spec.lambdas.front()).robust_acc.mean);
    }
    const auto inv = inversions(stability, true);
    v.require(inv <= 1, std::to_string(inv) + " rank inversions in stability");
    v.require(elapsed < 7200.0, "runtime " + std::to_string(elapsed) + " s");
    v.detail << (v.pass ? "" : " | ") << "widths " << spec.network.widths.size()
             << ", peak-epoch stability " << list(stability) << " (" << inv
             << " inversions), robust accuracy " << list(robust) << ", " << elapsed << " s";
    return v;
}

Verdict lambda_trend() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    const auto spec = load_config("mnist_lambda_sweep.json", run_root() / "lambda_sweep");
    const auto report = run_sweep(spec, progress());
    const double elapsed = seconds_since(start);
    std::vector<double> stability, natural;
    for (double lambda : spec.lambdas) {
        stability.push_back(report.cell(spec.network.widths.front(), lambda).stability.mean);
        natural.push_back(report.cell(spec.network.widths.front(), lambda).natural_acc.mean);
    }
    const auto inv_s = inversions(stability, false);
    const auto inv_n = inversions(natural, true);
    v.require(inv_s <= 1, std::to_string(inv_s) + " rank inversions in stability");
    v.require(inv_n <= 1, std::to_string(inv_n) + " rank inversions in natural accuracy");
    v.require(elapsed < 7200.0, "runtime " + std::to_string(elapsed) + " s");
    v.detail << (v.pass ? "" : " | ") << "stability " << list(stability) << " (" << inv_s
             << " inversions), natural accuracy " << list(natural) << " (" << inv_n
             << " inversions), " << elapsed << " s";
    return v;
}

// ---------------------------------------------------------------------------

Verdict war_controller() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();

    bool non_negative = true;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int t = 0; t < 10000; ++t) {
        auto s = WarState::with_target(0.5 + u(rng), 0.01 + u(rng) / 10.0, u(rng) / 5.0);
        for (int k = 0; k < 20; ++k) {
            s = war_update(s, u(rng), u(rng) * (k % 5 == 0 ? 1e-9 : 1.0));
            non_negative = non_negative && s.lambda >= 0.0;
        }
    }
    v.require(non_negative, "lambda went negative");

    bool fixed = true;
    for (double zeta : {0.5, 3.0, 30.0}) {
        for (double lambda : {0.0, 1.5, 6.0}) {
            const auto s = WarState::with_target(zeta, 0.3, lambda);
            const auto next = war_update(s, zeta * 0.25, 0.25);
            fixed = fixed && next.lambda == lambda;
        }
    }
    v.require(fixed, "lambda moved at ratio == zeta");

    const auto spec = load_config("mnist_war_compare.json", run_root() / "war_compare");
    const auto report = run_war_compare(spec, progress());
    write_war_compare(spec.output_dir, report);
    const double elapsed = seconds_since(start);
    const auto& war = report.strategy("war");
    const auto& none = report.strategy("no_tuning");
    const double ratio = war.final_ratio.mean;
    const double rel = std::abs(ratio - report.zeta) / report.zeta;
    v.require(std::isfinite(ratio) && rel <= 0.25,
              "final ratio " + std::to_string(ratio) + " vs zeta " + std::to_string(report.zeta));
    v.require(war.robust_acc.mean >= none.robust_acc.mean - 0.005,
              "robust accuracy " + std::to_string(war.robust_acc.mean) + " < no tuning " +
                  std::to_string(none.robust_acc.mean) + " - 0.005");
    v.require(elapsed < 7200.0, "runtime " + std::to_string(elapsed) + " s");
    v.detail << (v.pass ? "" : " | ") << "lambda >= 0 and fixed point hold; zeta " << report.zeta
             << " (lambda* " << report.lambda_star << "), final ratio " << ratio << " ("
             << 100.0 * rel << "% off); robust accuracy war " << war.robust_acc.mean
             << " vs no tuning " << none.robust_acc.mean << " vs manual grid "
             << report.strategy("manual_grid").robust_acc.mean << "; " << elapsed << " s";
    return v;
}

// ---------------------------------------------------------------------------

Verdict determinism_and_formats() {
    Verdict v;
    const auto root = run_root() / "determinism";
    fs::remove_all(root);
    const auto first = run_sweep(load_config("gaussians_sweep.json", root / "a"));
    const auto second = run_sweep(load_config("gaussians_sweep.json", root / "b"));
    std::size_t files = 0;
    bool same = first.runs.size() == second.runs.size();
    for (std::size_t i = 0; same && i < first.runs.size(); ++i) {
        for (const char* name : {"trajectory.csv", "summary.json", "checkpoint.bin"}) {
            const auto a = slurp(first.runs[i].directory / name);
            same = same && !a.empty() && a == slurp(second.runs[i].directory / name);
            ++files;
        }
    }
    for (const char* name : {"summary.csv", "summary.json"}) {
        same = same && slurp(root / "a" / name) == slurp(root / "b" / name);
        ++files;
    }
    v.require(same, "re-run output differs");

    testing::TempDir dir("accept-idx");
    testing::write_reference_idx(dir.path() / "img", dir.path() / "lbl");
    const auto data = load_idx(dir.path() / "img", dir.path() / "lbl");
    bool idx_ok = data.size() == 2 && data.input_dim() == 4 &&
                  data.labels == std::vector<std::size_t>{0, 1};
    for (Eigen::Index i = 0; idx_ok && i < 8; ++i) {
        idx_ok = data.inputs(i % 4, i / 4) == static_cast<double>(i) / 255.0;
    }
    bool errors_ok = false;
    testing::write_bytes(dir.path() / "bad", testing::idx_images(2, 2, 2, {0, 1, 2}));
    try {
        load_idx(dir.path() / "bad", dir.path() / "lbl");
    } catch (const TruncatedFileError&) {
        errors_ok = true;
    }
    v.require(idx_ok && errors_ok, "IDX fixture");

    std::mt19937_64 rng(3);
    auto net = testing::random_network(rng, 6, 8, 3, 4);
    net.layers[0](0, 0) = -0.0;
    net.output(1, 1) = std::nextafter(1.0, 2.0);
    const auto war = WarState::with_target(7.25, 0.1, 1.0 / 3.0);
    save_checkpoint(dir.path() / "ck.bin", net, war);
    const auto loaded = load_checkpoint(dir.path() / "ck.bin");
    bool ck_ok = loaded.net.config() == net.config() && loaded.net.output == net.output &&
                 std::signbit(loaded.net.layers[0](0, 0)) && loaded.war &&
                 loaded.war->lambda == war.lambda;
    for (std::size_t h = 0; h < net.depth(); ++h) {
        ck_ok = ck_ok && loaded.net.layers[h] == net.layers[h] &&
                loaded.net.initial_layers()[h] == net.initial_layers()[h];
    }
    save_checkpoint(dir.path() / "ck2.bin", loaded.net, loaded.war);
    ck_ok = ck_ok && slurp(dir.path() / "ck.bin") == slurp(dir.path() / "ck2.bin");
    v.require(ck_ok, "checkpoint round-trip");

    v.detail << (v.pass ? "" : " | ") << first.runs.size() << " runs re-run, " << files
             << " files byte-identical; IDX fixture exact; checkpoint bit-exact";
    return v;
}

Verdict run_criterion(int n) {
    switch (n) {
    case 1: return gradient_correctness();
    case 2: return decomposition_identity();
    case 3: return attack_feasibility();
    case 4: return ntk_scaling();
    case 5: return width_trend();
    case 6: return lambda_trend();
    case 7: return war_controller();
    case 8: return determinism_and_formats();
    }
    throw InvalidArgument("unknown criterion " + std::to_string(n));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> criteria;
    app.add_option("--criterion", criteria, "Criterion numbers to run (default: all)")
        ->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);
    if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8};

    bool all = true;
    for (int n : criteria) {
        Verdict v;
        try {
            v = run_criterion(n);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail.str()
                  << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
