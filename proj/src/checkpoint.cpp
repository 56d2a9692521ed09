#include "warlab/checkpoint.hpp"

#include "warlab/binary_io.hpp"

#include <array>

namespace warlab {

namespace {
constexpr std::array<char, 8> kMagic = {'W', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& net,
                     const std::optional<WarState>& war) {
    binary::Writer w(path.string());
    w.bytes(kMagic.data(), kMagic.size());
    w.value<std::uint32_t>(kCheckpointVersion);
    const auto& cfg = net.config();
    w.value<std::uint64_t>(cfg.input_dim);
    w.value<std::uint64_t>(cfg.width);
    w.value<std::uint64_t>(cfg.depth);
    w.value<std::uint32_t>(static_cast<std::uint32_t>(cfg.init));
    w.value<std::uint64_t>(cfg.seed);
    w.value<std::uint64_t>(net.num_classes());
    for (const auto& layer : net.layers) w.matrix(layer);
    w.matrix(net.output);
    for (const auto& layer : net.initial_layers()) w.matrix(layer);
    w.value<std::uint8_t>(war ? 1 : 0);
    if (war) {
        w.value<double>(war->zeta);
        w.value<double>(war->alpha);
        w.value<double>(war->lambda);
        w.value<double>(war->ratio_cap);
        w.value<double>(war->rob_floor);
    }
    w.close();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    binary::Reader r(path.string());
    std::array<char, 8> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kMagic) throw BadMagicError("'" + path.string() + "' is not a warlab checkpoint");
    const auto version = r.value<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw FormatError("'" + path.string() + "' has unsupported checkpoint version " +
                          std::to_string(version));
    }
    NetworkConfig cfg;
    cfg.input_dim = r.value<std::uint64_t>();
    cfg.width = r.value<std::uint64_t>();
    cfg.depth = r.value<std::uint64_t>();
    const auto init = r.value<std::uint32_t>();
    if (init > static_cast<std::uint32_t>(InitScheme::HeGaussian)) {
        throw FormatError("'" + path.string() + "' has an unknown init scheme");
    }
    cfg.init = static_cast<InitScheme>(init);
    cfg.seed = r.value<std::uint64_t>();
    const auto num_classes = r.value<std::uint64_t>();
    if (cfg.depth == 0 || cfg.depth > 4096) {
        throw FormatError("'" + path.string() + "' declares an implausible depth");
    }

    std::vector<Matrix> layers;
    for (std::size_t h = 0; h < cfg.depth; ++h) layers.push_back(r.matrix());
    Matrix output = r.matrix();
    std::vector<Matrix> initial;
    for (std::size_t h = 0; h < cfg.depth; ++h) initial.push_back(r.matrix());

    std::optional<WarState> war;
    if (r.value<std::uint8_t>() != 0) {
        WarState s;
        s.zeta = r.value<double>();
        s.alpha = r.value<double>();
        s.lambda = r.value<double>();
        s.ratio_cap = r.value<double>();
        s.rob_floor = r.value<double>();
        war = s;
    }
    try {
        return {NetworkParams(cfg, num_classes, std::move(layers), std::move(output),
                              std::move(initial)),
                war};
    } catch (const InvalidArgument& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

}  // namespace warlab
