#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace warlab {

/// Dense 64-bit matrix. Vectors are single-column matrices and batches of
/// examples are stored one example per column.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline bool same_shape(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

/// Index of the largest entry of column `col`; ties go to the lowest index.
inline std::size_t argmax_column(const Matrix& m, Eigen::Index col) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < m.rows(); ++r) {
        if (m(r, col) > m(best, col)) best = r;
    }
    return static_cast<std::size_t>(best);
}

}  // namespace warlab
