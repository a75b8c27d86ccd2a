#include "graphfv/certificates.hpp"

#include "graphfv/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace graphfv {

bool CertificateReport::m_matrix_certified() const {
    if (!is_z_matrix || !positive_diagonal || n == 0) return false;
    if (strictly_dominant_rows == n || strictly_dominant_cols == n) return true;
    if (sc_connected && diag_dominant_rows == n && strictly_dominant_rows > 0) return true;
    if (sc_connected && diag_dominant_cols == n && strictly_dominant_cols > 0) return true;
    return false;
}

bool CertificateReport::passes() const {
    return m_matrix_certified() && inverse_nonnegative.value_or(true);
}

bool pattern_connected(const SparseMatrix& m) {
    const std::size_t n = m.size();
    if (n == 0) return false;
    const auto t = m.transpose();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (const SparseMatrix* a : {&m, &t}) {
            const auto ptr = a->row_ptr();
            const auto col = a->col_idx();
            const auto val = a->values();
            for (std::size_t p = ptr[v]; p < ptr[v + 1]; ++p) {
                const std::size_t w = col[p];
                if (val[p] != 0.0 && !seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
            }
        }
    }
    return reached == n;
}

CertificateReport verify_certificates(const SparseMatrix& m, std::size_t dense_cap, double tolerance) {
    CertificateReport r;
    const std::size_t n = m.size();
    r.n = n;
    r.is_z_matrix = true;
    r.positive_diagonal = true;
    r.column_sums.assign(n, 0.0);
    r.row_sums.assign(n, 0.0);
    std::vector<double> diag(n, 0.0), row_off(n, 0.0), col_off(n, 0.0);
    const auto ptr = m.row_ptr();
    const auto col = m.col_idx();
    const auto val = m.values();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
            const std::size_t j = col[p];
            const double v = val[p];
            r.row_sums[i] += v;
            r.column_sums[j] += v;
            if (j == i) {
                diag[i] += v;
            } else {
                if (v > 0.0) r.is_z_matrix = false;
                row_off[i] += std::abs(v);
                col_off[j] += std::abs(v);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(diag[i] > 0.0)) r.positive_diagonal = false;
        const double d = std::abs(diag[i]);
        const double row_slack = tolerance * (d + row_off[i]);
        const double col_slack = tolerance * (d + col_off[i]);
        if (d >= row_off[i] - row_slack) ++r.diag_dominant_rows;
        if (d > row_off[i] + row_slack) ++r.strictly_dominant_rows;
        if (d >= col_off[i] - col_slack) ++r.diag_dominant_cols;
        if (d > col_off[i] + col_slack) ++r.strictly_dominant_cols;
    }
    r.sc_connected = pattern_connected(m);
    if (n <= dense_cap) {
        try {
            const DenseMatrix inv = dense_inverse(m, dense_cap);
            r.min_inverse_entry = inv.min_entry();
            r.inverse_nonnegative = *r.min_inverse_entry >= -tolerance;
        } catch (const SingularMatrixError&) {
            r.inverse_nonnegative = false;
        }
    }
    return r;
}

std::string describe(const CertificateReport& r) {
    auto yes = [](bool b) { return b ? "pass" : "fail"; };
    double min_col = r.column_sums.empty() ? 0.0 : r.column_sums.front();
    double min_row = r.row_sums.empty() ? 0.0 : r.row_sums.front();
    for (double v : r.column_sums) min_col = std::min(min_col, v);
    for (double v : r.row_sums) min_row = std::min(min_row, v);
    std::ostringstream os;
    char buf[64];
    os << "dimension              " << r.n << '\n';
    os << "z-matrix               " << yes(r.is_z_matrix) << '\n';
    os << "positive diagonal      " << yes(r.positive_diagonal) << '\n';
    std::snprintf(buf, sizeof buf, "%.9g", min_col);
    os << "min column sum         " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.9g", min_row);
    os << "min row sum            " << buf << '\n';
    os << "dominant rows          " << r.diag_dominant_rows << " (strict " << r.strictly_dominant_rows << ")\n";
    os << "dominant columns       " << r.diag_dominant_cols << " (strict " << r.strictly_dominant_cols << ")\n";
    os << "sc connected           " << yes(r.sc_connected) << '\n';
    if (r.inverse_nonnegative) {
        os << "inverse nonnegative    " << yes(*r.inverse_nonnegative);
        if (r.min_inverse_entry) {
            std::snprintf(buf, sizeof buf, "%.3g", *r.min_inverse_entry);
            os << " (min entry " << buf << ')';
        }
        os << '\n';
    } else {
        os << "inverse nonnegative    skipped\n";
    }
    os << "m-matrix certificate   " << yes(r.passes()) << '\n';
    return os.str();
}

}  // namespace graphfv
