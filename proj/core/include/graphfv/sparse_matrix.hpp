#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace graphfv {

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Square matrix in compressed-row form with sorted, unique column indices.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Duplicate (row, col) pairs are summed.
    static SparseMatrix from_triplets(std::size_t n, std::span<const Triplet> entries);
    static SparseMatrix identity(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    std::size_t nnz() const noexcept { return val_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_; }
    std::span<const double> values() const noexcept { return val_; }

    /// Entry (i, j), zero when not stored.
    double at(std::size_t i, std::size_t j) const;

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;

    SparseMatrix transpose() const;
    std::vector<Triplet> triplets() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> ptr_{0};
    std::vector<std::size_t> col_;
    std::vector<double> val_;
};

/// Text triplet format: optional `#`/`%` comment lines, a header `n nnz`,
/// then `row col value` lines with 0-based indices.
void write_triplets(std::ostream& os, const SparseMatrix& m);
void write_triplets(const std::filesystem::path& path, const SparseMatrix& m);
SparseMatrix read_triplets(std::istream& is);
SparseMatrix read_triplets(const std::filesystem::path& path);

}  // namespace graphfv
