#include "warlab/spec_file.hpp"

#include "warlab/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace warlab {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::Train: return "train";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::NtkProbe: return "ntk-probe";
    case ExperimentKind::WarCompare: return "war-compare";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "train") return ExperimentKind::Train;
    if (name == "sweep") return ExperimentKind::Sweep;
    if (name == "ntk-probe") return ExperimentKind::NtkProbe;
    if (name == "war-compare") return ExperimentKind::WarCompare;
    throw InvalidArgument("unknown experiment kind '" + name + "'");
}

AttackConfig AttackSpec::resolve(const Dataset& data) const {
    AttackConfig cfg = config;
    switch (bounds) {
    case BoundsSource::None: cfg.data_bounds.reset(); break;
    case BoundsSource::Dataset:
        cfg.data_bounds = DataBounds::uniform(data.input_dim(), data.lo, data.hi);
        break;
    case BoundsSource::Explicit: cfg.data_bounds = DataBounds::uniform(data.input_dim(), lo, hi); break;
    }
    cfg.validate();
    return cfg;
}

WarState WarSpec::state(double zeta_value, double lambda0) const {
    WarState s = WarState::with_target(zeta_value, alpha, lambda0);
    if (ratio_cap) s.ratio_cap = *ratio_cap;
    s.rob_floor = rob_floor;
    s.validate();
    return s;
}

namespace {

/// Strict view over one JSON object: every key must be consumed.
class Section {
public:
    Section(const json& j, std::string path) : json_(j), path_(std::move(path)) {
        if (!j.is_object()) throw SpecError(where() + " must be an object");
    }

    bool has(const std::string& key) const { return json_.contains(key) && !json_.at(key).is_null(); }

    template <typename T>
    T get(const std::string& key) {
        used_.insert(key);
        if (!json_.contains(key)) throw SpecError("missing required key '" + child(key) + "'");
        return convert<T>(key);
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        used_.insert(key);
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    template <typename T>
    std::optional<T> get_opt(const std::string& key) {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        return convert<T>(key);
    }

    Section section(const std::string& key) {
        used_.insert(key);
        if (!json_.contains(key)) throw SpecError("missing required section '" + child(key) + "'");
        return Section(json_.at(key), child(key));
    }

    std::optional<Section> section_opt(const std::string& key) {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        return Section(json_.at(key), child(key));
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return json_.at(key);
    }

    void finish() const {
        for (const auto& [key, value] : json_.items()) {
            if (!used_.count(key)) throw SpecError("unknown key '" + child(key) + "'");
        }
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "spec" : "'" + path_ + "'"; }

private:
    template <typename T>
    T convert(const std::string& key) const {
        try {
            return json_.at(key).get<T>();
        } catch (const json::exception&) {
            throw SpecError("key '" + child(key) + "' has the wrong type");
        }
    }

    const json& json_;
    std::string path_;
    std::set<std::string> used_;
};

template <typename T>
T checked(const std::string& key, T value, bool ok, const std::string& requirement) {
    if (!ok) throw SpecError("key '" + key + "' " + requirement);
    return value;
}

template <typename Fn>
auto enum_value(const std::string& key, const std::string& name, Fn parse) {
    try {
        return parse(name);
    } catch (const InvalidArgument& e) {
        throw SpecError("key '" + key + "': " + e.what());
    }
}

std::vector<double> number_list(Section& s, const std::string& key) {
    const json& v = s.raw(key);
    std::vector<double> out;
    try {
        if (v.is_number()) out.push_back(v.get<double>());
        else out = v.get<std::vector<double>>();
    } catch (const json::exception&) {
        throw SpecError("key '" + s.child(key) + "' must be a number or a list of numbers");
    }
    if (out.empty()) throw SpecError("key '" + s.child(key) + "' must not be empty");
    return out;
}

template <typename T>
std::vector<T> list_or_scalar(Section& s, const std::string& key) {
    const json& v = s.raw(key);
    std::vector<T> out;
    try {
        if (v.is_array()) out = v.get<std::vector<T>>();
        else out.push_back(v.get<T>());
    } catch (const json::exception&) {
        throw SpecError("key '" + s.child(key) + "' has the wrong type");
    }
    if (out.empty()) throw SpecError("key '" + s.child(key) + "' must not be empty");
    return out;
}

std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path.lexically_normal().string();
}

AttackSpec parse_attack(Section s) {
    AttackSpec out;
    auto& c = out.config;
    const auto key = [&](const std::string& k) { return s.child(k); };
    c.norm = enum_value(key("norm"), s.get<std::string>("norm"), norm_from_string);
    c.epsilon = s.get<double>("epsilon");
    checked(key("epsilon"), c.epsilon, c.epsilon > 0.0, "must be > 0");
    c.step_size = s.get<double>("step_size");
    checked(key("step_size"), c.step_size, c.step_size > 0.0, "must be > 0");
    const auto steps = s.get<long long>("steps");
    checked(key("steps"), steps, steps >= 0, "must be >= 0");
    c.steps = static_cast<std::size_t>(steps);
    c.random_start = s.get_or<bool>("random_start", true);
    c.objective = enum_value(key("objective"),
                             s.get_or<std::string>("objective", "cross_entropy"),
                             objective_from_string);
    c.seed = s.get_or<std::uint64_t>("seed", 0);

    if (!s.has("data_bounds")) {
        s.get_opt<json>("data_bounds");
        out.bounds = BoundsSource::None;
    } else {
        const json& b = s.raw("data_bounds");
        if (b.is_string() && b.get<std::string>() == "dataset") {
            out.bounds = BoundsSource::Dataset;
        } else if (b.is_array() && b.size() == 2 && b[0].is_number() && b[1].is_number()) {
            out.bounds = BoundsSource::Explicit;
            out.lo = b[0].get<double>();
            out.hi = b[1].get<double>();
            checked(key("data_bounds"), 0, out.lo < out.hi, "requires lo < hi");
        } else {
            throw SpecError("key '" + key("data_bounds") +
                            "' must be null, \"dataset\" or [lo, hi]");
        }
    }
    s.finish();
    return out;
}

DatasetSpec parse_dataset(Section s, const std::filesystem::path& base) {
    DatasetSpec out;
    const auto kind = s.get<std::string>("kind");
    if (kind == "idx") {
        out.kind = DatasetSpec::Kind::Idx;
        out.train_images = resolve_path(s.get<std::string>("train_images"), base);
        out.train_labels = resolve_path(s.get<std::string>("train_labels"), base);
        out.eval_images = resolve_path(s.get<std::string>("eval_images"), base);
        out.eval_labels = resolve_path(s.get<std::string>("eval_labels"), base);
        out.train_limit = s.get_opt<std::size_t>("train_limit");
        out.eval_limit = s.get_opt<std::size_t>("eval_limit");
    } else if (kind == "gaussians") {
        out.kind = DatasetSpec::Kind::Gaussians;
        auto& g = out.gaussians;
        g.n_per_class = s.get<std::size_t>("n_per_class");
        g.num_classes = s.get<std::size_t>("num_classes");
        g.input_dim = s.get<std::size_t>("input_dim");
        g.separation = s.get<double>("separation");
        g.noise_sigma = s.get<double>("noise_sigma");
        g.seed = s.get_or<std::uint64_t>("seed", 0);
        out.eval_n_per_class = s.get<std::size_t>("eval_n_per_class");
        checked(s.child("n_per_class"), 0, g.n_per_class > 0, "must be >= 1");
        checked(s.child("eval_n_per_class"), 0, out.eval_n_per_class > 0, "must be >= 1");
        checked(s.child("num_classes"), 0, g.num_classes >= 2, "must be >= 2");
        checked(s.child("input_dim"), 0, g.input_dim > 0, "must be >= 1");
        checked(s.child("separation"), 0, g.separation > 0.0, "must be > 0");
        checked(s.child("noise_sigma"), 0, g.noise_sigma >= 0.0, "must be >= 0");
    } else {
        throw SpecError("key '" + s.child("kind") + "' must be \"idx\" or \"gaussians\"");
    }
    s.finish();
    return out;
}

}  // namespace

ExperimentSpec parse_spec_at(const json& root, const SpecOverrides& overrides,
                             const std::filesystem::path& base) {
    Section s(root, "");
    ExperimentSpec spec;
    spec.schema_version = s.get<int>("schema_version");
    if (spec.schema_version != kSpecSchemaVersion) {
        throw SpecError("unsupported schema_version " + std::to_string(spec.schema_version) +
                        " (expected " + std::to_string(kSpecSchemaVersion) + ")");
    }
    spec.kind = enum_value("kind", s.get<std::string>("kind"), experiment_kind_from_string);
    spec.name = s.get_or<std::string>("name", to_string(spec.kind));
    spec.seeds = list_or_scalar<std::uint64_t>(s, "seeds");
    if (overrides.seed) spec.seeds = {*overrides.seed};
    spec.record_timing = s.get_or<bool>("record_timing", false);

    const auto listed_dir = s.get_opt<std::string>("output_dir");
    if (overrides.output_dir) {
        spec.output_dir = *overrides.output_dir;
    } else if (listed_dir) {
        spec.output_dir = *listed_dir;
    } else {
        const char* root_env = std::getenv("WARLAB_OUTPUT_ROOT");
        const std::filesystem::path root_dir = root_env && *root_env ? root_env : "runs";
        spec.output_dir = (root_dir / spec.name).string();
    }

    if (spec.kind == ExperimentKind::NtkProbe) {
        auto p = s.section("ntk_probe");
        NtkProbeSpec probe;
        probe.widths = list_or_scalar<std::size_t>(p, "widths");
        probe.depth = p.get_or<std::size_t>("depth", 3);
        probe.n_inputs = p.get_or<std::size_t>("n_inputs", 32);
        probe.input_dim = p.get_or<std::size_t>("input_dim", 16);
        probe.num_classes = p.get_or<std::size_t>("num_classes", 10);
        probe.epsilon = p.get_or<double>("epsilon", 0.1);
        probe.steps = p.get_or<std::size_t>("steps", 10);
        probe.step_size = p.get_or<double>("step_size", probe.epsilon / 4.0);
        checked(p.child("depth"), 0, probe.depth >= 1, "must be >= 1");
        checked(p.child("n_inputs"), 0, probe.n_inputs >= 1, "must be >= 1");
        checked(p.child("input_dim"), 0, probe.input_dim >= 1, "must be >= 1");
        checked(p.child("num_classes"), 0, probe.num_classes >= 2, "must be >= 2");
        checked(p.child("epsilon"), 0, probe.epsilon > 0.0, "must be > 0");
        checked(p.child("steps"), 0, probe.steps >= 1, "must be >= 1");
        checked(p.child("step_size"), 0, probe.step_size > 0.0, "must be > 0");
        p.finish();
        spec.ntk_probe = probe;
        s.finish();
        return spec;
    }

    spec.dataset = parse_dataset(s.section("dataset"), base);

    {
        auto n = s.section("network");
        spec.network.widths = list_or_scalar<std::size_t>(n, "widths");
        for (auto w : spec.network.widths) checked(n.child("widths"), 0, w >= 1, "entries must be >= 1");
        spec.network.depth = n.get<std::size_t>("depth");
        checked(n.child("depth"), 0, spec.network.depth >= 1, "must be >= 1");
        spec.network.init = enum_value(n.child("init"), n.get_or<std::string>("init", "ntk_gaussian"),
                                       init_scheme_from_string);
        spec.network.trainable = n.get_or<std::vector<bool>>("trainable", {});
        checked(n.child("trainable"), 0,
                spec.network.trainable.empty() ||
                    spec.network.trainable.size() == spec.network.depth + 1,
                "must list depth + 1 flags (hidden layers, then output)");
        n.finish();
    }
    {
        auto l = s.section("loss");
        spec.variant = enum_value(l.child("variant"), l.get<std::string>("variant"),
                                  loss_variant_from_string);
        if (!l.has("lambda")) throw SpecError("missing required key '" + l.child("lambda") + "'");
        spec.lambdas = number_list(l, "lambda");
        for (double v : spec.lambdas) checked(l.child("lambda"), 0, v >= 0.0, "entries must be >= 0");
        l.finish();
    }
    {
        auto a = s.section("attack");
        spec.attack_train = parse_attack(a.section("train"));
        spec.attack_eval = parse_attack(a.section("eval"));
        a.finish();
    }
    spec.epochs = s.get<std::size_t>("epochs");
    checked("epochs", 0, spec.epochs >= 1, "must be >= 1");
    spec.batch_size = s.get_or<std::size_t>("batch_size", 128);
    checked("batch_size", 0, spec.batch_size >= 1, "must be >= 1");
    spec.momentum = s.get_or<double>("momentum", 0.0);
    checked("momentum", 0, spec.momentum >= 0.0 && spec.momentum < 1.0, "must be in [0, 1)");
    spec.eval_chunk = s.get_or<std::size_t>("eval_chunk", 256);
    {
        auto sc = s.section("schedule");
        spec.schedule.kind = enum_value(sc.child("kind"), sc.get<std::string>("kind"),
                                        schedule_kind_from_string);
        spec.schedule.base_lr = sc.get<double>("base_lr");
        checked(sc.child("base_lr"), 0, spec.schedule.base_lr > 0.0, "must be > 0");
        spec.schedule.milestone = sc.get_or<std::size_t>("milestone", spec.epochs);
        checked(sc.child("milestone"), 0, spec.schedule.milestone >= 1, "must be >= 1");
        spec.schedule.total_epochs = spec.epochs;
        sc.finish();
    }
    if (auto w = s.section_opt("war")) {
        WarSpec war;
        war.zeta = w->get_opt<double>("zeta");
        war.alpha = w->get_or<double>("alpha", 0.1);
        war.ratio_cap = w->get_opt<double>("ratio_cap");
        war.rob_floor = w->get_or<double>("rob_floor", 1e-8);
        if (war.zeta) checked(w->child("zeta"), 0, *war.zeta > 0.0, "must be > 0");
        checked(w->child("alpha"), 0, war.alpha > 0.0, "must be > 0");
        if (war.ratio_cap) checked(w->child("ratio_cap"), 0, *war.ratio_cap > 0.0, "must be > 0");
        checked(w->child("rob_floor"), 0, war.rob_floor > 0.0, "must be > 0");
        w->finish();
        if (!war.zeta && spec.kind != ExperimentKind::WarCompare) {
            throw SpecError("missing required key 'war.zeta'");
        }
        spec.war = war;
    }
    if (auto c = s.section_opt("war_compare")) {
        WarCompareSpec wc;
        wc.thin_width = c->get<std::size_t>("thin_width");
        wc.wide_width = c->get<std::size_t>("wide_width");
        wc.thin_lambdas = number_list(*c, "thin_lambdas");
        wc.wide_lambdas = number_list(*c, "wide_lambdas");
        wc.zeta_window = c->get_or<std::size_t>("zeta_window", 5);
        checked(c->child("zeta_window"), 0, wc.zeta_window >= 1 && wc.zeta_window <= spec.epochs,
                "must be in [1, epochs]");
        checked(c->child("thin_width"), 0, wc.thin_width >= 1, "must be >= 1");
        checked(c->child("wide_width"), 0, wc.wide_width >= 1, "must be >= 1");
        c->finish();
        spec.war_compare = wc;
    }
    if (auto p = s.section_opt("projection")) {
        ProjectionSpec proj;
        proj.config.radius = p->get<double>("radius");
        proj.config.epsilon = spec.attack_train.config.epsilon;
        proj.condition_c = p->get_opt<double>("condition_c");
        checked(p->child("radius"), 0, proj.config.radius > 0.0, "must be > 0");
        p->finish();
        spec.projection = proj;
    }
    s.finish();

    switch (spec.kind) {
    case ExperimentKind::Train:
        if (spec.network.widths.size() != 1 || spec.lambdas.size() != 1) {
            throw SpecError("a train spec needs exactly one width and one lambda");
        }
        break;
    case ExperimentKind::WarCompare:
        if (!spec.war_compare) throw SpecError("missing required section 'war_compare'");
        if (!spec.war) spec.war = WarSpec{};
        break;
    default: break;
    }
    return spec;
}

ExperimentSpec parse_spec(const json& root, const SpecOverrides& overrides) {
    return parse_spec_at(root, overrides, {});
}

ExperimentSpec load_spec(const std::filesystem::path& path, const SpecOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec file '" + path.string() + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SpecError("spec file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_spec_at(root, overrides, path.parent_path());
}

json to_json(const AttackSpec& attack) {
    const auto& c = attack.config;
    json j = {{"norm", to_string(c.norm)},
              {"epsilon", c.epsilon},
              {"step_size", c.step_size},
              {"steps", c.steps},
              {"random_start", c.random_start},
              {"objective", to_string(c.objective)},
              {"seed", c.seed}};
    switch (attack.bounds) {
    case BoundsSource::None: j["data_bounds"] = nullptr; break;
    case BoundsSource::Dataset: j["data_bounds"] = "dataset"; break;
    case BoundsSource::Explicit: j["data_bounds"] = {attack.lo, attack.hi}; break;
    }
    return j;
}

json to_json(const WarState& state) {
    return {{"zeta", state.zeta},
            {"alpha", state.alpha},
            {"lambda", state.lambda},
            {"ratio_cap", state.ratio_cap},
            {"rob_floor", state.rob_floor}};
}

json to_json(const ExperimentSpec& spec) {
    json j;
    j["schema_version"] = spec.schema_version;
    j["kind"] = to_string(spec.kind);
    j["name"] = spec.name;
    j["output_dir"] = spec.output_dir;
    j["seeds"] = spec.seeds;
    j["record_timing"] = spec.record_timing;
    if (spec.kind == ExperimentKind::NtkProbe) {
        const auto& p = *spec.ntk_probe;
        j["ntk_probe"] = {{"widths", p.widths},       {"depth", p.depth},
                          {"n_inputs", p.n_inputs},   {"input_dim", p.input_dim},
                          {"num_classes", p.num_classes}, {"epsilon", p.epsilon},
                          {"steps", p.steps},         {"step_size", p.step_size}};
        return j;
    }

    const auto& d = spec.dataset;
    if (d.kind == DatasetSpec::Kind::Idx) {
        j["dataset"] = {{"kind", "idx"},
                        {"train_images", d.train_images},
                        {"train_labels", d.train_labels},
                        {"eval_images", d.eval_images},
                        {"eval_labels", d.eval_labels}};
        if (d.train_limit) j["dataset"]["train_limit"] = *d.train_limit;
        if (d.eval_limit) j["dataset"]["eval_limit"] = *d.eval_limit;
    } else {
        const auto& g = d.gaussians;
        j["dataset"] = {{"kind", "gaussians"},
                        {"n_per_class", g.n_per_class},
                        {"num_classes", g.num_classes},
                        {"input_dim", g.input_dim},
                        {"separation", g.separation},
                        {"noise_sigma", g.noise_sigma},
                        {"seed", g.seed},
                        {"eval_n_per_class", d.eval_n_per_class}};
    }
    j["network"] = {{"widths", spec.network.widths},
                    {"depth", spec.network.depth},
                    {"init", to_string(spec.network.init)}};
    if (!spec.network.trainable.empty()) j["network"]["trainable"] = spec.network.trainable;
    j["loss"] = {{"variant", to_string(spec.variant)}, {"lambda", spec.lambdas}};
    j["attack"] = {{"train", to_json(spec.attack_train)}, {"eval", to_json(spec.attack_eval)}};
    j["epochs"] = spec.epochs;
    j["batch_size"] = spec.batch_size;
    j["momentum"] = spec.momentum;
    j["eval_chunk"] = spec.eval_chunk;
    j["schedule"] = {{"kind", to_string(spec.schedule.kind)},
                     {"base_lr", spec.schedule.base_lr},
                     {"milestone", spec.schedule.milestone}};
    if (spec.war) {
        json w = {{"alpha", spec.war->alpha}, {"rob_floor", spec.war->rob_floor}};
        if (spec.war->zeta) w["zeta"] = *spec.war->zeta;
        if (spec.war->ratio_cap) w["ratio_cap"] = *spec.war->ratio_cap;
        j["war"] = w;
    }
    if (spec.war_compare) {
        const auto& c = *spec.war_compare;
        j["war_compare"] = {{"thin_width", c.thin_width},     {"wide_width", c.wide_width},
                            {"thin_lambdas", c.thin_lambdas}, {"wide_lambdas", c.wide_lambdas},
                            {"zeta_window", c.zeta_window}};
    }
    if (spec.projection) {
        j["projection"] = {{"radius", spec.projection->config.radius}};
        if (spec.projection->condition_c) {
            j["projection"]["condition_c"] = *spec.projection->condition_c;
        }
    }
    return j;
}

}  // namespace warlab
