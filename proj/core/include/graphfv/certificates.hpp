#pragma once

#include "graphfv/dense.hpp"
#include "graphfv/sparse_matrix.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace graphfv {

struct CertificateReport {
    std::size_t n = 0;
    bool is_z_matrix = false;
    bool positive_diagonal = false;
    std::vector<double> column_sums;
    std::vector<double> row_sums;
    std::size_t diag_dominant_rows = 0;
    std::size_t strictly_dominant_rows = 0;
    std::size_t diag_dominant_cols = 0;
    std::size_t strictly_dominant_cols = 0;
    bool sc_connected = false;
    std::optional<bool> inverse_nonnegative;
    std::optional<double> min_inverse_entry;

    /// Nonsingular M-matrix evidence: Z pattern, positive diagonal, and strict
    /// dominance everywhere or weak dominance with one strict line plus SC.
    bool m_matrix_certified() const;
    /// m_matrix_certified() and, when computed, a nonnegative inverse.
    bool passes() const;
};

/// Off-diagonal entries may exceed zero by tolerance times the largest |entry|.
CertificateReport verify_certificates(const SparseMatrix& m, std::size_t dense_cap = default_dense_cap,
                                      double tolerance = 1e-12);

/// Connectivity of the symmetrized nonzero pattern.
bool pattern_connected(const SparseMatrix& m);

std::string describe(const CertificateReport& r);

}  // namespace graphfv
