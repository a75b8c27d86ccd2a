#pragma once

#include "graphfv/sparse_matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace graphfv {

struct LuOptions {
    /// A diagonal candidate is kept as pivot when |a_kk| >= tol * max |a_ik|.
    double pivot_tolerance = 1.0;
    /// Ordering root; a pseudo-peripheral vertex is used when absent.
    std::optional<std::size_t> ordering_root;
    double residual_tolerance = 1e-10;
    int refinement_steps = 2;
};

/// Row-compressed triangular factor in factor-space indices.
struct TriangularFactor {
    std::vector<std::int32_t> ptr{0};
    std::vector<std::int32_t> col;
    std::vector<double> val;
    bool empty() const noexcept { return col.empty(); }
};

/// Reverse breadth-first ordering of the symmetrized pattern starting at root.
std::vector<std::size_t> reverse_bfs_ordering(const SparseMatrix& m, std::optional<std::size_t> root);

/// Left-looking sparse LU with partial pivoting: P A Q = L U.
class SparseLU {
public:
    explicit SparseLU(const SparseMatrix& m, LuOptions opts = {});

    std::size_t size() const noexcept { return n_; }

    /// Solves A x = b; throws SingularMatrixError if the residual check fails.
    std::vector<double> solve(std::span<const double> b) const;

    /// Factor-space solve of L U y = y in place.
    void solve_factor_space(std::span<double> y) const;

    /// Original equation index of factor row k.
    std::span<const std::size_t> row_order() const noexcept { return prow_; }
    /// Original unknown index of factor column k.
    std::span<const std::size_t> col_order() const noexcept { return q_; }
    bool symmetric_permutation() const noexcept { return symmetric_; }

    /// Strictly lower factor, unit diagonal implied.
    const TriangularFactor& lower() const noexcept { return l_; }
    /// Strictly upper factor.
    const TriangularFactor& upper() const noexcept { return u_; }
    std::span<const double> inverse_diagonal() const noexcept { return inv_diag_; }

    std::size_t fill_nnz() const noexcept { return l_.col.size() + u_.col.size() + n_; }

private:
    std::vector<double> raw_solve(std::span<const double> b) const;

    SparseMatrix a_;
    LuOptions opts_;
    std::size_t n_ = 0;
    std::vector<std::size_t> q_, prow_;
    bool symmetric_ = false;
    TriangularFactor l_, u_;
    std::vector<double> inv_diag_;
};

/// One-shot sparse direct solve.
std::vector<double> solve(const SparseMatrix& m, std::span<const double> rhs, LuOptions opts = {});

double relative_residual(const SparseMatrix& m, std::span<const double> x, std::span<const double> b);

}  // namespace graphfv
