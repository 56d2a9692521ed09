#include "warlab/data.hpp"

#include "warlab/binary_io.hpp"
#include "warlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>

namespace warlab {

void Dataset::validate() const {
    if (labels.empty()) throw InvalidArgument("dataset '" + name + "' is empty");
    if (static_cast<std::size_t>(inputs.cols()) != labels.size()) {
        throw InvalidArgument("dataset '" + name + "' has mismatched input and label counts");
    }
    if (!(lo < hi)) throw InvalidArgument("dataset '" + name + "' bounds require lo < hi");
    for (auto y : labels) {
        if (y >= num_classes) throw InvalidArgument("dataset '" + name + "' label out of range");
    }
    if (!inputs.allFinite() || inputs.minCoeff() < lo || inputs.maxCoeff() > hi) {
        throw InvalidArgument("dataset '" + name + "' has inputs outside its bounds");
    }
}

Matrix Dataset::gather(const std::vector<std::size_t>& indices) const {
    Matrix out(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(indices[k]));
    }
    return out;
}

std::vector<std::size_t> Dataset::gather_labels(const std::vector<std::size_t>& indices) const {
    std::vector<std::size_t> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(labels[i]);
    return out;
}

Dataset Dataset::head(std::size_t n) const {
    const std::size_t k = std::min(n, size());
    Dataset out = *this;
    out.inputs = inputs.leftCols(static_cast<Eigen::Index>(k));
    out.labels.resize(k);
    return out;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
    if (buf.size() < offset + 4) {
        throw TruncatedFileError("'" + path.string() + "' is too short for its IDX header");
    }
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::optional<std::size_t> limit) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);

    const auto image_magic = read_be32(images, 0, images_path);
    if (image_magic != kIdxImagesMagic) {
        throw BadMagicError("'" + images_path.string() + "' has magic " +
                            std::to_string(image_magic) + ", expected 0x00000803");
    }
    const auto label_magic = read_be32(labels, 0, labels_path);
    if (label_magic != kIdxLabelsMagic) {
        throw BadMagicError("'" + labels_path.string() + "' has magic " +
                            std::to_string(label_magic) + ", expected 0x00000801");
    }

    const std::size_t n_images = read_be32(images, 4, images_path);
    const std::size_t rows = read_be32(images, 8, images_path);
    const std::size_t cols = read_be32(images, 12, images_path);
    const std::size_t n_labels = read_be32(labels, 4, labels_path);
    if (n_images != n_labels) {
        throw CountMismatchError("'" + images_path.string() + "' holds " +
                                 std::to_string(n_images) + " images but '" +
                                 labels_path.string() + "' holds " + std::to_string(n_labels) +
                                 " labels");
    }
    const std::size_t dim = rows * cols;
    if (dim == 0) throw FormatError("'" + images_path.string() + "' has zero-sized images");
    if (images.size() < 16 + n_images * dim) {
        throw TruncatedFileError("'" + images_path.string() + "' is truncated");
    }
    if (labels.size() < 8 + n_labels) {
        throw TruncatedFileError("'" + labels_path.string() + "' is truncated");
    }

    const std::size_t n = limit ? std::min(*limit, n_images) : n_images;
    if (n == 0) throw InvalidArgument("IDX dataset is empty after applying the limit");

    Dataset data;
    data.name = images_path.filename().string();
    data.lo = 0.0;
    data.hi = 1.0;
    data.inputs.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
    data.labels.resize(n);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* pixels = images.data() + 16 + i * dim;
        for (std::size_t p = 0; p < dim; ++p) {
            data.inputs(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
                static_cast<double>(pixels[p]) / 255.0;
        }
        data.labels[i] = labels[8 + i];
        max_label = std::max(max_label, data.labels[i]);
    }
    data.num_classes = std::max<std::size_t>(max_label + 1, 2);
    return data;
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset make_gaussians(const GaussianSpec& spec) {
    if (spec.n_per_class == 0 || spec.num_classes == 0 || spec.input_dim == 0) {
        throw InvalidArgument("make_gaussians requires positive counts and dimension");
    }
    if (spec.num_classes > 2 * spec.input_dim) {
        throw InvalidArgument("make_gaussians supports at most 2 * input_dim classes");
    }
    if (!(spec.noise_sigma >= 0.0) || !(spec.separation > 0.0)) {
        throw InvalidArgument("make_gaussians requires separation > 0 and noise_sigma >= 0");
    }

    const auto d = static_cast<Eigen::Index>(spec.input_dim);
    const std::size_t n = spec.n_per_class * spec.num_classes;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset data;
    data.name = "gaussians";
    data.num_classes = spec.num_classes;
    data.inputs.resize(d, static_cast<Eigen::Index>(n));
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % spec.num_classes;
        const auto axis = static_cast<Eigen::Index>(c % spec.input_dim);
        const double sign = (c / spec.input_dim) % 2 == 0 ? 1.0 : -1.0;
        const auto col = static_cast<Eigen::Index>(i);
        for (Eigen::Index r = 0; r < d; ++r) {
            data.inputs(r, col) = spec.noise_sigma * noise(rng);
        }
        data.inputs(axis, col) += sign * spec.separation;
        data.labels[i] = c;
    }
    const double pad = 3.0 * spec.noise_sigma;
    data.lo = data.inputs.minCoeff() - pad;
    data.hi = data.inputs.maxCoeff() + pad;
    if (!(data.lo < data.hi)) data.hi = data.lo + 1.0;
    return data;
}

namespace {
constexpr std::array<char, 8> kCacheMagic = {'W', 'L', 'D', 'S', 'C', 'A', 'C', 'H'};
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

void save_dataset_cache(const std::filesystem::path& path, const Dataset& data,
                        const GaussianSpec& spec) {
    binary::Writer w(path.string());
    w.bytes(kCacheMagic.data(), kCacheMagic.size());
    w.value<std::uint32_t>(kCacheVersion);
    w.value<std::uint64_t>(spec.n_per_class);
    w.value<std::uint64_t>(spec.num_classes);
    w.value<std::uint64_t>(spec.input_dim);
    w.value<double>(spec.separation);
    w.value<double>(spec.noise_sigma);
    w.value<std::uint64_t>(spec.seed);
    w.value<std::uint64_t>(data.num_classes);
    w.value<double>(data.lo);
    w.value<double>(data.hi);
    w.matrix(data.inputs);
    w.value<std::uint64_t>(data.labels.size());
    for (auto y : data.labels) w.value<std::uint64_t>(y);
    w.close();
}

CachedDataset load_dataset_cache(const std::filesystem::path& path) {
    binary::Reader r(path.string());
    std::array<char, 8> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kCacheMagic) throw BadMagicError("'" + path.string() + "' is not a dataset cache");
    const auto version = r.value<std::uint32_t>();
    if (version != kCacheVersion) {
        throw FormatError("'" + path.string() + "' has unsupported cache version " +
                          std::to_string(version));
    }
    CachedDataset out;
    out.spec.n_per_class = r.value<std::uint64_t>();
    out.spec.num_classes = r.value<std::uint64_t>();
    out.spec.input_dim = r.value<std::uint64_t>();
    out.spec.separation = r.value<double>();
    out.spec.noise_sigma = r.value<double>();
    out.spec.seed = r.value<std::uint64_t>();
    out.data.name = "gaussians";
    out.data.num_classes = r.value<std::uint64_t>();
    out.data.lo = r.value<double>();
    out.data.hi = r.value<double>();
    out.data.inputs = r.matrix();
    const auto n = r.value<std::uint64_t>();
    if (n != static_cast<std::uint64_t>(out.data.inputs.cols())) {
        throw CountMismatchError("'" + path.string() + "' has mismatched label count");
    }
    out.data.labels.resize(n);
    for (auto& y : out.data.labels) y = r.value<std::uint64_t>();
    return out;
}

}  // namespace warlab
