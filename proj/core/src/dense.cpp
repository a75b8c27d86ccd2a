#include "graphfv/dense.hpp"

#include "graphfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace graphfv {

double DenseMatrix::min_entry() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : a_) m = std::min(m, v);
    return m;
}

DenseMatrix to_dense(const SparseMatrix& m) {
    DenseMatrix d(m.size());
    const auto ptr = m.row_ptr();
    const auto col = m.col_idx();
    const auto val = m.values();
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) d(i, col[p]) += val[p];
    return d;
}

namespace {

/// In-place LU of a; returns row permutation.
std::vector<std::size_t> factor(DenseMatrix& a) {
    const std::size_t n = a.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        if (!(std::abs(a(p, k)) > 1e-14 * scale))
            throw SingularMatrixError(k, "singular dense matrix at pivot " + std::to_string(k));
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(perm[k], perm[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return perm;
}

void substitute(const DenseMatrix& lu, std::span<double> x) {
    const std::size_t n = lu.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
        x[i] /= lu(i, i);
    }
}

}  // namespace

std::vector<double> dense_solve(DenseMatrix a, std::span<const double> b) {
    if (b.size() != a.size()) throw Error("dimension mismatch in dense solve");
    const auto perm = factor(a);
    std::vector<double> x(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) x[i] = b[perm[i]];
    substitute(a, x);
    return x;
}

DenseMatrix dense_inverse(const SparseMatrix& m, std::size_t cap) {
    if (m.size() > cap) throw Error("matrix dimension exceeds dense cap");
    DenseMatrix lu = to_dense(m);
    const auto perm = factor(lu);
    const std::size_t n = m.size();
    DenseMatrix inv(n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = perm[i] == j ? 1.0 : 0.0;
        substitute(lu, col);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

}  // namespace graphfv
