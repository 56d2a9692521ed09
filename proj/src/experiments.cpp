#include "warlab/experiments.hpp"

#include "warlab/checkpoint.hpp"
#include "warlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

namespace warlab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

namespace {

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory CSV

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string trajectory_header() {
    std::string out;
    for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) {
        if (i) out += ',';
        out += kTrajectoryColumns[i];
    }
    return out;
}

std::string format_trajectory_row(const TrajectoryRow& r) {
    std::string out = std::to_string(r.epoch);
    for (double v : {r.lr, r.lambda, r.l_nat, r.l_rob, r.natural_acc, r.stability, r.robust_acc,
                     r.attacked_acc, r.lipschitz_est, r.wall_clock_s}) {
        out += ',';
        out += format_double(v);
    }
    return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows) {
    std::string text = trajectory_header() + "\n";
    for (const auto& r : rows) text += format_trajectory_row(r) + "\n";
    write_text_file(path, text);
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    const auto strip = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };
    if (!std::getline(in, line)) throw FormatError("'" + path.string() + "' is empty");
    strip(line);
    if (line != trajectory_header()) {
        throw FormatError("'" + path.string() + "' has header '" + line + "', expected '" +
                          trajectory_header() + "'");
    }
    std::vector<TrajectoryRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip(line);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        const auto bad = [&](const std::string& what) {
            return FormatError("'" + path.string() + "' line " + std::to_string(line_no) + ": " +
                               what);
        };
        if (fields.size() != kTrajectoryColumns.size()) throw bad("wrong number of fields");
        std::vector<double> values(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto& f = fields[i];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), values[i]);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
                throw bad("cannot parse '" + f + "'");
            }
        }
        TrajectoryRow r;
        if (values[0] < 0 || values[0] != std::floor(values[0])) throw bad("epoch is not an integer");
        r.epoch = static_cast<std::size_t>(values[0]);
        r.lr = values[1];
        r.lambda = values[2];
        r.l_nat = values[3];
        r.l_rob = values[4];
        r.natural_acc = values[5];
        r.stability = values[6];
        r.robust_acc = values[7];
        r.attacked_acc = values[8];
        r.lipschitz_est = values[9];
        r.wall_clock_s = values[10];
        rows.push_back(r);
    }
    return rows;
}

std::size_t select_peak(const std::vector<TrajectoryRow>& rows) {
    if (rows.empty()) throw InvalidArgument("select_peak on an empty trajectory");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].robust_acc > rows[best].robust_acc) best = i;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Single runs

LoadedData load_data(const DatasetSpec& spec) {
    LoadedData out;
    if (spec.kind == DatasetSpec::Kind::Idx) {
        out.train = load_idx(spec.train_images, spec.train_labels, spec.train_limit);
        out.eval = load_idx(spec.eval_images, spec.eval_labels, spec.eval_limit);
        out.eval.num_classes = std::max(out.eval.num_classes, out.train.num_classes);
        out.train.num_classes = out.eval.num_classes;
    } else {
        out.train = make_gaussians(spec.gaussians);
        GaussianSpec eval_spec = spec.gaussians;
        eval_spec.n_per_class = spec.eval_n_per_class;
        eval_spec.seed = spec.gaussians.seed + 1;
        out.eval = make_gaussians(eval_spec);
        out.eval.name = "gaussians-eval";
        const double lo = std::min(out.train.lo, out.eval.lo);
        const double hi = std::max(out.train.hi, out.eval.hi);
        out.train.lo = out.eval.lo = lo;
        out.train.hi = out.eval.hi = hi;
    }
    out.train.validate();
    out.eval.validate();
    if (out.train.input_dim() != out.eval.input_dim()) {
        throw FormatError("training and evaluation inputs have different dimensions");
    }
    return out;
}

json run_spec_json(const ExperimentSpec& spec, const RunRequest& request) {
    json j = to_json(spec);
    j["kind"] = to_string(ExperimentKind::Train);
    j["seeds"] = {request.seed};
    j["network"]["widths"] = {request.width};
    j["loss"]["lambda"] = {request.lambda};
    j.erase("war_compare");
    if (request.war_zeta) {
        const WarSpec war = spec.war.value_or(WarSpec{});
        j["war"] = {{"zeta", *request.war_zeta}, {"alpha", war.alpha}, {"rob_floor", war.rob_floor}};
        if (war.ratio_cap) j["war"]["ratio_cap"] = *war.ratio_cap;
    } else {
        j.erase("war");
    }
    return j;
}

std::string run_id(const json& run_spec) {
    json hashed = run_spec;
    hashed.erase("output_dir");
    const std::string text = hashed.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

json row_json(const TrajectoryRow& r) {
    return {{"epoch", r.epoch},
            {"lr", r.lr},
            {"lambda", r.lambda},
            {"l_nat", r.l_nat},
            {"l_rob", r.l_rob},
            {"natural_acc", r.natural_acc},
            {"stability", r.stability},
            {"robust_acc", r.robust_acc},
            {"attacked_acc", r.attacked_acc},
            {"lipschitz_est", r.lipschitz_est}};
}

json aggregate_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}}; }

}  // namespace

json run_summary_json(const RunResult& result) {
    json j;
    j["run_id"] = result.run_id;
    j["width"] = result.request.width;
    j["lambda"] = result.request.lambda;
    j["seed"] = result.request.seed;
    j["epochs"] = result.trajectory.size();
    j["peak"] = row_json(result.peak_row());
    j["final"] = row_json(result.trajectory.back());
    if (result.final_war) {
        j["war"] = to_json(*result.final_war);
    } else {
        j["war"] = nullptr;
    }
    return j;
}

RunResult run_training(const ExperimentSpec& spec, const LoadedData& data,
                       const RunRequest& request, const RunOptions& options) {
    const json run_spec = run_spec_json(spec, request);
    RunResult result;
    result.run_id = run_id(run_spec);
    result.request = request;
    result.directory = std::filesystem::path(spec.output_dir) / result.run_id;
    ensure_directory(result.directory);
    write_text_file(result.directory / "spec_resolved.json", dump_json(run_spec));

    NetworkConfig net_cfg;
    net_cfg.input_dim = data.train.input_dim();
    net_cfg.width = request.width;
    net_cfg.depth = spec.network.depth;
    net_cfg.init = spec.network.init;
    net_cfg.seed = request.seed;
    NetworkParams net = init_network(net_cfg, data.train.num_classes);

    const AttackConfig attack_train = spec.attack_train.resolve(data.train);
    const AttackConfig attack_eval = spec.attack_eval.resolve(data.eval);
    RobustLossConfig loss_cfg;
    loss_cfg.variant = spec.variant;
    loss_cfg.lambda = request.lambda;

    TrainOptions train_opts;
    train_opts.batch_size = spec.batch_size;
    train_opts.trainable = spec.network.trainable;
    train_opts.momentum = spec.momentum;
    if (spec.projection) train_opts.projection = spec.projection->config;

    Schedule schedule = spec.schedule;
    schedule.total_epochs = spec.epochs;

    std::optional<WarState> war;
    if (request.war_zeta) war = spec.war.value_or(WarSpec{}).state(*request.war_zeta, request.lambda);

    EvalOptions eval_opts;
    eval_opts.chunk_size = spec.eval_chunk;
    eval_opts.track_lipschitz = true;

    const auto csv_path = result.directory / "trajectory.csv";
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot write '" + csv_path.string() + "'");
    csv << trajectory_header() << '\n' << std::flush;

    TrainRng rng(request.seed);
    OptimizerState optimizer;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        const EpochSummary s = train_epoch(net, data.train, attack_train, loss_cfg, schedule, epoch,
                                           train_opts, rng, war ? &*war : nullptr, &optimizer);
        const EvalRecord rec = evaluate(net, data.eval, attack_eval, eval_opts);
        if (!std::isfinite(rec.lipschitz_estimate)) {
            throw NumericalError("non-finite Lipschitz estimate at epoch " + std::to_string(epoch));
        }
        TrajectoryRow row;
        row.epoch = epoch;
        row.lr = s.lr;
        row.lambda = s.lambda;
        row.l_nat = s.l_nat;
        row.l_rob = s.l_rob;
        row.natural_acc = rec.natural_accuracy;
        row.stability = rec.perturbation_stability;
        row.robust_acc = rec.robust_accuracy;
        row.attacked_acc = rec.attacked_accuracy;
        row.lipschitz_est = rec.lipschitz_estimate;
        result.wall_clock_s = seconds_since(start);
        row.wall_clock_s = spec.record_timing ? result.wall_clock_s : 0.0;
        result.trajectory.push_back(row);
        csv << format_trajectory_row(row) << '\n' << std::flush;
        if (!csv) throw IoError("failed writing '" + csv_path.string() + "'");

        if (options.log) {
            *options.log << result.run_id << " m=" << request.width << " lambda=" << row.lambda
                         << " seed=" << request.seed << " epoch " << epoch + 1 << "/" << spec.epochs
                         << " l_nat=" << row.l_nat << " l_rob=" << row.l_rob
                         << " nat=" << row.natural_acc << " stab=" << row.stability
                         << " rob=" << row.robust_acc << '\n';
        }
    }
    csv.close();

    result.peak = select_peak(result.trajectory);
    result.final_war = war;
    save_checkpoint(result.directory / "checkpoint.bin", net, war);

    json summary = run_summary_json(result);
    if (spec.projection && spec.projection->condition_c) {
        summary["width_condition"] = spec.projection->config.satisfies_width_condition(
            request.width, spec.network.depth, *spec.projection->condition_c);
    }
    write_text_file(result.directory / "summary.json", dump_json(summary));
    return result;
}

// ---------------------------------------------------------------------------
// Width / lambda sweep

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw InvalidArgument("aggregate of an empty list");
    Aggregate a;
    const auto n = static_cast<double>(values.size());
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.std = std::sqrt(ss / (n - 1.0));
    }
    return a;
}

SweepCell summarize_cell(std::size_t width, double lambda, const std::vector<const RunResult*>& runs) {
    if (runs.empty()) throw InvalidArgument("summarize_cell needs at least one run");
    SweepCell cell;
    cell.width = width;
    cell.lambda = lambda;
    cell.n_seeds = runs.size();
    std::vector<double> epoch, nat, stab, rob, att, lip, lam;
    for (const RunResult* r : runs) {
        const auto& p = r->peak_row();
        epoch.push_back(static_cast<double>(p.epoch));
        nat.push_back(p.natural_acc);
        stab.push_back(p.stability);
        rob.push_back(p.robust_acc);
        att.push_back(p.attacked_acc);
        lip.push_back(p.lipschitz_est);
        lam.push_back(r->trajectory.back().lambda);
    }
    cell.peak_epoch = aggregate(epoch);
    cell.natural_acc = aggregate(nat);
    cell.stability = aggregate(stab);
    cell.robust_acc = aggregate(rob);
    cell.attacked_acc = aggregate(att);
    cell.lipschitz_est = aggregate(lip);
    cell.final_lambda = aggregate(lam);
    return cell;
}

const SweepCell& SweepReport::cell(std::size_t width, double lambda) const {
    for (const auto& c : cells) {
        if (c.width == width && c.lambda == lambda) return c;
    }
    throw InvalidArgument("no sweep cell for width " + std::to_string(width) + " and lambda " +
                          format_double(lambda));
}

namespace {

json cell_json(const SweepCell& c) {
    return {{"width", c.width},
            {"lambda", c.lambda},
            {"n_seeds", c.n_seeds},
            {"peak_epoch", aggregate_json(c.peak_epoch)},
            {"natural_acc", aggregate_json(c.natural_acc)},
            {"stability", aggregate_json(c.stability)},
            {"robust_acc", aggregate_json(c.robust_acc)},
            {"attacked_acc", aggregate_json(c.attacked_acc)},
            {"lipschitz_est", aggregate_json(c.lipschitz_est)},
            {"final_lambda", aggregate_json(c.final_lambda)}};
}

std::string cell_csv_row(const SweepCell& c) {
    std::string out = std::to_string(c.width) + "," + format_double(c.lambda) + "," +
                      std::to_string(c.n_seeds);
    for (const Aggregate* a : {&c.peak_epoch, &c.natural_acc, &c.stability, &c.robust_acc,
                               &c.attacked_acc, &c.lipschitz_est, &c.final_lambda}) {
        out += "," + format_double(a->mean) + "," + format_double(a->std);
    }
    return out;
}

std::string join_columns(const auto& columns) {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i];
    }
    return out;
}

std::vector<SweepCell> sweep_grid(const std::vector<std::size_t>& widths,
                                  const std::vector<double>& lambdas,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::function<const RunResult&(std::size_t, double,
                                                                       std::uint64_t)>& run) {
    std::vector<SweepCell> cells;
    for (auto w : widths) {
        for (double lambda : lambdas) {
            std::vector<const RunResult*> runs;
            for (auto seed : seeds) runs.push_back(&run(w, lambda, seed));
            cells.push_back(summarize_cell(w, lambda, runs));
        }
    }
    return cells;
}

}  // namespace

void write_sweep_summary(const std::filesystem::path& dir, const std::string& name,
                         const SweepReport& report) {
    ensure_directory(dir);
    std::string csv = join_columns(kSummaryColumns) + "\n";
    json cells = json::array();
    for (const auto& c : report.cells) {
        csv += cell_csv_row(c) + "\n";
        cells.push_back(cell_json(c));
    }
    json runs = json::array();
    for (const auto& r : report.runs) {
        runs.push_back({{"run_id", r.run_id},
                        {"width", r.request.width},
                        {"lambda", r.request.lambda},
                        {"seed", r.request.seed}});
    }
    write_text_file(dir / "summary.csv", csv);
    write_text_file(dir / "summary.json",
                    dump_json({{"name", name}, {"kind", "sweep"}, {"cells", cells}, {"runs", runs}}));
}

SweepReport run_sweep(const ExperimentSpec& spec, const RunOptions& options) {
    const LoadedData data = load_data(spec.dataset);
    SweepReport report;
    std::map<std::tuple<std::size_t, double, std::uint64_t>, std::size_t> index;
    report.runs.reserve(spec.network.widths.size() * spec.lambdas.size() * spec.seeds.size());
    const auto run = [&](std::size_t w, double lambda, std::uint64_t seed) -> const RunResult& {
        const auto key = std::make_tuple(w, lambda, seed);
        if (auto it = index.find(key); it != index.end()) return report.runs[it->second];
        RunRequest req{w, lambda, seed, std::nullopt};
        if (spec.war) req.war_zeta = spec.war->zeta;
        report.runs.push_back(run_training(spec, data, req, options));
        index[key] = report.runs.size() - 1;
        return report.runs.back();
    };
    report.cells = sweep_grid(spec.network.widths, spec.lambdas, spec.seeds, run);
    write_sweep_summary(spec.output_dir, spec.name, report);
    return report;
}

// ---------------------------------------------------------------------------
// Gradient-norm scaling probe

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidArgument("least_squares_slope needs at least two paired points");
    }
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw InvalidArgument("least_squares_slope needs distinct x values");
    return sxy / sxx;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidArgument("spearman_correlation needs at least two paired points");
    }
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

NtkProbeReport run_ntk_probe(const NtkProbeSpec& probe, const std::vector<std::uint64_t>& seeds,
                             const RunOptions& options) {
    if (probe.widths.size() < 3) throw InvalidArgument("the probe needs at least three widths");
    const auto [min_w, max_w] = std::minmax_element(probe.widths.begin(), probe.widths.end());
    if (*max_w < 4 * *min_w) throw InvalidArgument("probe widths must span at least two octaves");
    if (seeds.empty()) throw InvalidArgument("the probe needs at least one seed");

    AttackConfig attack;
    attack.norm = NormType::L2;
    attack.epsilon = probe.epsilon;
    attack.step_size = probe.step_size;
    attack.steps = probe.steps;
    attack.random_start = false;
    attack.objective = AttackObjective::CrossEntropy;
    attack.validate();

    NtkProbeReport report;
    for (auto w : probe.widths) report.widths.push_back({w, {}, 0.0, 0.0, 0});

    const auto d = static_cast<Eigen::Index>(probe.input_dim);
    const auto n = static_cast<Eigen::Index>(probe.n_inputs);
    for (auto seed : seeds) {
        Rng gen(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> label_dist(0, probe.num_classes - 1);
        Matrix x(d, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < d; ++i) x(i, j) = normal(gen);
            x.col(j).normalize();
        }
        std::vector<std::size_t> labels(probe.n_inputs);
        for (auto& y : labels) y = label_dist(gen);

        for (auto& entry : report.widths) {
            NetworkConfig cfg;
            cfg.input_dim = probe.input_dim;
            cfg.width = entry.width;
            cfg.depth = probe.depth;
            cfg.init = InitScheme::NtkGaussian;
            cfg.seed = mix64(seed ^ mix64(entry.width));
            const NetworkParams net = init_network(cfg, probe.num_classes);
            Rng attack_rng(seed);
            const auto res = pgd_attack_batch(net, x, labels, attack, attack_rng, {true});
            double sum = 0.0;
            for (double v : res.lipschitz) {
                if (v == 0.0) ++entry.zero_estimates;
                sum += v;
            }
            entry.per_seed.push_back(sum / static_cast<double>(res.lipschitz.size()));
            if (options.log) {
                *options.log << "probe seed=" << seed << " m=" << entry.width
                             << " estimate=" << entry.per_seed.back() << '\n';
            }
        }
    }

    std::vector<double> log_w, log_est, ws, means;
    for (auto& entry : report.widths) {
        const auto agg = aggregate(entry.per_seed);
        entry.mean = agg.mean;
        entry.std = agg.std;
        if (entry.zero_estimates > 0 || entry.mean <= 0.0) report.degenerate = true;
        ws.push_back(static_cast<double>(entry.width));
        means.push_back(entry.mean);
        log_w.push_back(std::log(static_cast<double>(entry.width)));
        log_est.push_back(std::log(std::max(entry.mean, std::numeric_limits<double>::min())));
    }
    report.slope = least_squares_slope(log_w, log_est);
    report.rank_correlation = spearman_correlation(ws, means);

    std::vector<std::size_t> order(report.widths.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return report.widths[a].width < report.widths[b].width; });
    report.strictly_increasing = true;
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (!(report.widths[order[k]].mean > report.widths[order[k - 1]].mean)) {
            report.strictly_increasing = false;
        }
    }
    return report;
}

json to_json(const NtkProbeReport& report) {
    json widths = json::array();
    for (const auto& w : report.widths) {
        widths.push_back({{"width", w.width},
                          {"per_seed", w.per_seed},
                          {"mean", w.mean},
                          {"std", w.std},
                          {"zero_estimates", w.zero_estimates}});
    }
    return {{"kind", "ntk-probe"},
            {"widths", widths},
            {"slope", report.slope},
            {"rank_correlation", report.rank_correlation},
            {"strictly_increasing", report.strictly_increasing},
            {"degenerate", report.degenerate}};
}

void write_ntk_probe(const std::filesystem::path& dir, const NtkProbeReport& report) {
    ensure_directory(dir);
    std::string csv = "width,mean_lipschitz,std_lipschitz,n_seeds,zero_estimates\n";
    for (const auto& w : report.widths) {
        csv += std::to_string(w.width) + "," + format_double(w.mean) + "," + format_double(w.std) +
               "," + std::to_string(w.per_seed.size()) + "," + std::to_string(w.zero_estimates) +
               "\n";
    }
    write_text_file(dir / "ntk_probe.csv", csv);
    write_text_file(dir / "ntk_probe.json", dump_json(to_json(report)));
}

// ---------------------------------------------------------------------------
// WAR comparison

const StrategyResult& WarCompareReport::strategy(const std::string& name) const {
    for (const auto& s : strategies) {
        if (s.strategy == name) return s;
    }
    throw InvalidArgument("no strategy named '" + name + "'");
}

namespace {

double final_ratio(const RunResult& run, std::size_t window, double floor) {
    const auto& t = run.trajectory;
    const std::size_t k = std::min(window, t.size());
    double sum = 0.0;
    for (std::size_t i = t.size() - k; i < t.size(); ++i) {
        if (!(t[i].l_rob > floor)) return std::numeric_limits<double>::infinity();
        sum += t[i].l_nat / t[i].l_rob;
    }
    return sum / static_cast<double>(k);
}

const SweepCell& best_cell(const std::vector<SweepCell>& cells) {
    const SweepCell* best = &cells.front();
    for (const auto& c : cells) {
        if (c.robust_acc.mean > best->robust_acc.mean ||
            (c.robust_acc.mean == best->robust_acc.mean && c.lambda < best->lambda)) {
            best = &c;
        }
    }
    return *best;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

WarCompareReport run_war_compare(const ExperimentSpec& spec, const RunOptions& options) {
    if (!spec.war_compare) throw SpecError("war-compare needs a war_compare section");
    const auto& wc = *spec.war_compare;
    const WarSpec war_spec = spec.war.value_or(WarSpec{});
    const LoadedData data = load_data(spec.dataset);

    using Key = std::tuple<std::size_t, double, std::uint64_t, double>;
    std::map<Key, RunResult> cache;
    const auto run = [&](std::size_t w, double lambda, std::uint64_t seed,
                         std::optional<double> zeta) -> const RunResult& {
        const Key key{w, lambda, seed, zeta.value_or(-1.0)};
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        RunRequest req{w, lambda, seed, zeta};
        return cache.emplace(key, run_training(spec, data, req, options)).first->second;
    };
    const auto fixed = [&](std::size_t w, double lambda, std::uint64_t seed) -> const RunResult& {
        return run(w, lambda, seed, std::nullopt);
    };

    WarCompareReport report;
    report.thin_cells = sweep_grid({wc.thin_width}, wc.thin_lambdas, spec.seeds, fixed);
    report.lambda_star = best_cell(report.thin_cells).lambda;
    {
        std::vector<double> zetas;
        for (auto seed : spec.seeds) {
            const auto& r = fixed(wc.thin_width, report.lambda_star, seed);
            std::vector<std::pair<double, double>> losses;
            for (const auto& row : r.trajectory) losses.emplace_back(row.l_nat, row.l_rob);
            zetas.push_back(measure_zeta(losses, wc.zeta_window, war_spec.rob_floor));
        }
        report.zeta = aggregate(zetas).mean;
    }
    if (war_spec.zeta) report.zeta = *war_spec.zeta;

    const auto strategy = [&](const std::string& name, double lambda,
                              const std::vector<const RunResult*>& runs, double wall) {
        StrategyResult s;
        s.strategy = name;
        s.lambda = lambda;
        std::vector<double> nat, stab, rob, ratio;
        for (const auto* r : runs) {
            nat.push_back(r->peak_row().natural_acc);
            stab.push_back(r->peak_row().stability);
            rob.push_back(r->peak_row().robust_acc);
            ratio.push_back(final_ratio(*r, wc.zeta_window, war_spec.rob_floor));
        }
        s.natural_acc = aggregate(nat);
        s.stability = aggregate(stab);
        s.robust_acc = aggregate(rob);
        s.final_ratio = aggregate(ratio);
        s.wall_clock_s = wall;
        return s;
    };

    {
        std::vector<const RunResult*> runs;
        double wall = 0.0;
        for (auto seed : spec.seeds) {
            runs.push_back(&fixed(wc.wide_width, report.lambda_star, seed));
            wall += runs.back()->wall_clock_s;
        }
        report.strategies.push_back(strategy("no_tuning", report.lambda_star, runs, wall));
    }
    {
        report.wide_cells = sweep_grid({wc.wide_width}, wc.wide_lambdas, spec.seeds, fixed);
        const double best = best_cell(report.wide_cells).lambda;
        double wall = 0.0;
        for (double lambda : wc.wide_lambdas) {
            for (auto seed : spec.seeds) wall += fixed(wc.wide_width, lambda, seed).wall_clock_s;
        }
        std::vector<const RunResult*> runs;
        for (auto seed : spec.seeds) runs.push_back(&fixed(wc.wide_width, best, seed));
        report.strategies.push_back(strategy("manual_grid", best, runs, wall));
    }
    {
        std::vector<const RunResult*> runs;
        std::vector<double> lambdas;
        double wall = 0.0;
        for (auto seed : spec.seeds) {
            runs.push_back(&run(wc.wide_width, 0.0, seed, report.zeta));
            wall += runs.back()->wall_clock_s;
            lambdas.push_back(runs.back()->final_war->lambda);
        }
        report.strategies.push_back(strategy("war", aggregate(lambdas).mean, runs, wall));
    }
    write_war_compare(spec.output_dir, report);
    return report;
}

json to_json(const WarCompareReport& report) {
    json thin = json::array();
    for (const auto& c : report.thin_cells) thin.push_back(cell_json(c));
    json wide = json::array();
    for (const auto& c : report.wide_cells) wide.push_back(cell_json(c));
    json strategies = json::array();
    for (const auto& s : report.strategies) {
        strategies.push_back({{"strategy", s.strategy},
                              {"lambda", s.lambda},
                              {"natural_acc", aggregate_json(s.natural_acc)},
                              {"stability", aggregate_json(s.stability)},
                              {"robust_acc", aggregate_json(s.robust_acc)},
                              {"final_ratio",
                               {{"mean", finite_or_null(s.final_ratio.mean)},
                                {"std", finite_or_null(s.final_ratio.std)}}},
                              {"wall_clock_s", s.wall_clock_s}});
    }
    return {{"kind", "war-compare"},
            {"lambda_star", report.lambda_star},
            {"zeta", report.zeta},
            {"thin_cells", thin},
            {"wide_cells", wide},
            {"strategies", strategies}};
}

void write_war_compare(const std::filesystem::path& dir, const WarCompareReport& report) {
    ensure_directory(dir);
    std::string csv =
        "strategy,lambda,natural_acc_mean,natural_acc_std,stability_mean,stability_std,"
        "robust_acc_mean,robust_acc_std,final_ratio_mean,final_ratio_std,wall_clock_s\n";
    for (const auto& s : report.strategies) {
        csv += s.strategy + "," + format_double(s.lambda);
        for (const Aggregate* a : {&s.natural_acc, &s.stability, &s.robust_acc, &s.final_ratio}) {
            csv += "," + format_double(a->mean) + "," + format_double(a->std);
        }
        csv += "," + format_double(s.wall_clock_s) + "\n";
    }
    write_text_file(dir / "comparison.csv", csv);
    write_text_file(dir / "comparison.json", dump_json(to_json(report)));
}

// ---------------------------------------------------------------------------

json to_json(const EvalRecord& record) {
    return {{"n", record.per_example.size()},
            {"natural_acc", record.natural_accuracy},
            {"stability", record.perturbation_stability},
            {"robust_acc", record.robust_accuracy},
            {"attacked_acc", record.attacked_accuracy},
            {"lipschitz_est", record.lipschitz_estimate}};
}

}  // namespace warlab
