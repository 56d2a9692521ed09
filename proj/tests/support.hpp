#pragma once

#include "warlab/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

namespace testing {

using warlab::Matrix;

inline warlab::NetworkParams random_network(std::mt19937_64& rng, std::size_t d, std::size_t m,
                                            std::size_t depth, std::size_t classes) {
    warlab::NetworkConfig cfg;
    cfg.input_dim = d;
    cfg.width = m;
    cfg.depth = depth;
    cfg.init = warlab::InitScheme::HeGaussian;
    cfg.seed = rng();
    return warlab::init_network(cfg, classes);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = n(rng);
    return out;
}

/// Exactly linear two-class network: logits = (v^T x, -v^T x), realised
/// with paired ReLUs carrying x and -x.
inline warlab::NetworkParams linear_net(const warlab::Vector& v) {
    const auto d = v.size();
    Matrix w1(2 * d, d);
    w1 << Matrix::Identity(d, d), -Matrix::Identity(d, d);
    Matrix a(2 * d, 2);
    a.col(0) << v, -v;
    a.col(1) = -a.col(0);
    warlab::NetworkConfig cfg{static_cast<std::size_t>(d), static_cast<std::size_t>(2 * d), 1,
                              warlab::InitScheme::HeGaussian, 0};
    return warlab::NetworkParams(cfg, 2, {w1}, a);
}

/// Central differences of `f` with respect to every entry of `param`.
inline Matrix central_difference(Matrix& param, const std::function<double()>& f, double h) {
    Matrix grad(param.rows(), param.cols());
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
        for (Eigen::Index i = 0; i < param.rows(); ++i) {
            const double saved = param(i, j);
            param(i, j) = saved + h;
            const double up = f();
            param(i, j) = saved - h;
            const double down = f();
            param(i, j) = saved;
            grad(i, j) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

/// Fourth-order five-point differences; less round-off than central_difference.
inline Matrix five_point_difference(Matrix& param, const std::function<double()>& f, double h) {
    Matrix grad(param.rows(), param.cols());
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
        for (Eigen::Index i = 0; i < param.rows(); ++i) {
            const double saved = param(i, j);
            double v[4];
            const double offsets[4] = {2.0 * h, h, -h, -2.0 * h};
            for (int k = 0; k < 4; ++k) {
                param(i, j) = saved + offsets[k];
                v[k] = f();
            }
            param(i, j) = saved;
            grad(i, j) = (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * h);
        }
    }
    return grad;
}

/// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-8) {
    const double scale = std::max({a.norm(), b.norm(), floor});
    return (a - b).norm() / scale;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("warlab-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
