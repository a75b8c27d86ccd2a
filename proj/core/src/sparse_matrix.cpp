#include "graphfv/sparse_matrix.hpp"

#include "graphfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace graphfv {

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::span<const Triplet> entries) {
    SparseMatrix m;
    m.n_ = n;
    std::vector<std::size_t> count(n + 1, 0);
    for (const Triplet& t : entries) {
        if (t.row >= n || t.col >= n) throw Error("triplet index out of range");
        ++count[t.row + 1];
    }
    for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];

    std::vector<std::size_t> cols(entries.size());
    std::vector<double> vals(entries.size());
    std::vector<std::size_t> fill(count.begin(), count.end() - 1);
    for (const Triplet& t : entries) {
        cols[fill[t.row]] = t.col;
        vals[fill[t.row]++] = t.value;
    }

    m.ptr_.assign(n + 1, 0);
    m.col_.reserve(entries.size());
    m.val_.reserve(entries.size());
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
        order.resize(count[i + 1] - count[i]);
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = count[i] + k;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return cols[a] < cols[b]; });
        for (std::size_t k : order) {
            if (!m.col_.empty() && m.col_.size() > m.ptr_[i] && m.col_.back() == cols[k]) {
                m.val_.back() += vals[k];
            } else {
                m.col_.push_back(cols[k]);
                m.val_.push_back(vals[k]);
            }
        }
        m.ptr_[i + 1] = m.col_.size();
    }
    return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, t);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw Error("matrix index out of range");
    const auto first = col_.begin() + static_cast<std::ptrdiff_t>(ptr_[i]);
    const auto last = col_.begin() + static_cast<std::ptrdiff_t>(ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return val_[static_cast<std::size_t>(it - col_.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_) throw Error("dimension mismatch in matrix-vector product");
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t p = ptr_[i]; p < ptr_[i + 1]; ++p) s += val_[p] * x[col_[p]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

SparseMatrix SparseMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t p = ptr_[i]; p < ptr_[i + 1]; ++p) t.push_back({col_[p], i, val_[p]});
    return from_triplets(n_, t);
}

std::vector<Triplet> SparseMatrix::triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t p = ptr_[i]; p < ptr_[i + 1]; ++p) t.push_back({i, col_[p], val_[p]});
    return t;
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
    char buf[64];
    os << m.size() << ' ' << m.nnz() << '\n';
    for (const Triplet& t : m.triplets()) {
        std::snprintf(buf, sizeof buf, "%.17g", t.value);
        os << t.row << ' ' << t.col << ' ' << buf << '\n';
    }
}

void write_triplets(const std::filesystem::path& path, const SparseMatrix& m) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    write_triplets(os, m);
}

SparseMatrix read_triplets(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++lineno;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#' || line[pos] == '%') continue;
            return true;
        }
        return false;
    };

    if (!next_line()) throw ParseError(lineno, "missing header");
    long long n = -1, nnz = -1;
    {
        std::istringstream ss(line);
        std::string extra;
        if (!(ss >> n >> nnz) || (ss >> extra) || n < 1 || nnz < 0)
            throw ParseError(lineno, "header must be `n nnz`");
    }
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
        if (!next_line()) throw ParseError(lineno, "expected " + std::to_string(nnz) + " entries");
        std::istringstream ss(line);
        long long i = -1, j = -1;
        double v = 0.0;
        std::string extra;
        if (!(ss >> i >> j >> v) || (ss >> extra)) throw ParseError(lineno, "entry must be `row col value`");
        if (i < 0 || j < 0 || i >= n || j >= n) throw ParseError(lineno, "index out of range");
        if (!std::isfinite(v)) throw ParseError(lineno, "non-finite value");
        t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), v});
    }
    if (next_line()) throw ParseError(lineno, "trailing data after entries");
    return SparseMatrix::from_triplets(static_cast<std::size_t>(n), t);
}

SparseMatrix read_triplets(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path.string());
    return read_triplets(is);
}

}  // namespace graphfv
