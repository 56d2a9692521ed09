#pragma once

#include "warlab/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace warlab {

/// Labelled inputs stored one example per column (d x N).
struct Dataset {
    Matrix inputs;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    double lo = 0.0;
    double hi = 1.0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t input_dim() const { return static_cast<std::size_t>(inputs.rows()); }

    void validate() const;
    /// Columns `indices` as a new d x k matrix.
    Matrix gather(const std::vector<std::size_t>& indices) const;
    std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& indices) const;
    /// First `n` examples (or all when n >= size()).
    Dataset head(std::size_t n) const;
};

/// Reads an IDX image file (magic 0x00000803) and label file (magic
/// 0x00000801). Pixels are scaled to [0, 1]. Labels define C = max label + 1,
/// at least 2.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::optional<std::size_t> limit = std::nullopt);

struct GaussianSpec {
    std::size_t n_per_class = 100;
    std::size_t num_classes = 2;
    std::size_t input_dim = 2;
    double separation = 1.0;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    bool operator==(const GaussianSpec&) const = default;
};

/// Class c is centred at separation * e_(c mod d); samples add isotropic
/// Gaussian noise. Bounds are the observed range padded by 3 sigma.
Dataset make_gaussians(const GaussianSpec& spec);

/// Versioned binary cache of a synthetic dataset and its generation parameters.
void save_dataset_cache(const std::filesystem::path& path, const Dataset& data,
                        const GaussianSpec& spec);

struct CachedDataset {
    Dataset data;
    GaussianSpec spec;
};
CachedDataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace warlab
