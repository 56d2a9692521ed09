#pragma once

#include "warlab/nn.hpp"
#include "warlab/train.hpp"

#include <filesystem>
#include <optional>

namespace warlab {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    NetworkParams net;
    std::optional<WarState> war;
};

/// Binary container: magic, format version, network config, every W^(h),
/// the output layer, the initial snapshot and an optional WAR state.
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& net,
                     const std::optional<WarState>& war = std::nullopt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace warlab
