#pragma once

#include "graphfv/sparse_matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace graphfv {

/// Row-major square dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    double min_entry() const;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

inline constexpr std::size_t default_dense_cap = 64;

DenseMatrix to_dense(const SparseMatrix& m);

/// Dense LU with partial pivoting; throws SingularMatrixError.
std::vector<double> dense_solve(DenseMatrix a, std::span<const double> b);

/// Inverse by dense LU; n must not exceed cap.
DenseMatrix dense_inverse(const SparseMatrix& m, std::size_t cap = default_dense_cap);

}  // namespace graphfv
