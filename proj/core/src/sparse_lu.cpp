#include "graphfv/sparse_lu.hpp"

#include "graphfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace graphfv {

namespace {

/// Symmetrized adjacency without the diagonal, neighbours sorted.
std::vector<std::vector<std::size_t>> symmetric_pattern(const SparseMatrix& m) {
    const std::size_t n = m.size();
    std::vector<std::vector<std::size_t>> adj(n);
    const auto ptr = m.row_ptr();
    const auto col = m.col_idx();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p)
            if (col[p] != i) {
                adj[i].push_back(col[p]);
                adj[col[p]].push_back(i);
            }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

/// BFS from root; returns visit order and the last level's first vertex.
std::size_t bfs(const std::vector<std::vector<std::size_t>>& adj, std::size_t root,
                std::vector<std::size_t>& level, std::vector<std::size_t>& order) {
    order.clear();
    level.assign(adj.size(), std::numeric_limits<std::size_t>::max());
    level[root] = 0;
    order.push_back(root);
    for (std::size_t head = 0; head < order.size(); ++head) {
        const std::size_t v = order[head];
        for (std::size_t w : adj[v])
            if (level[w] == std::numeric_limits<std::size_t>::max()) {
                level[w] = level[v] + 1;
                order.push_back(w);
            }
    }
    return level[order.back()];
}

std::size_t pseudo_peripheral(const std::vector<std::vector<std::size_t>>& adj, std::size_t start) {
    std::vector<std::size_t> level, order;
    std::size_t root = start;
    std::size_t ecc = bfs(adj, root, level, order);
    for (int it = 0; it < 8; ++it) {
        std::size_t best = order.back();
        for (std::size_t v : order)
            if (level[v] == ecc && adj[v].size() < adj[best].size()) best = v;
        const std::size_t e2 = bfs(adj, best, level, order);
        if (e2 <= ecc) break;
        root = best;
        ecc = e2;
    }
    return root;
}

}  // namespace

std::vector<std::size_t> reverse_bfs_ordering(const SparseMatrix& m, std::optional<std::size_t> root) {
    const std::size_t n = m.size();
    const auto adj = symmetric_pattern(m);
    std::vector<char> done(n, 0);
    std::vector<std::size_t> perm;
    perm.reserve(n);
    std::vector<std::size_t> level, order;
    std::size_t next_unvisited = 0;
    bool first = true;
    while (perm.size() < n) {
        while (done[next_unvisited]) ++next_unvisited;
        std::size_t r = next_unvisited;
        if (first && root && *root < n) {
            r = *root;
        } else {
            r = pseudo_peripheral(adj, r);
        }
        first = false;
        bfs(adj, r, level, order);
        for (std::size_t v : order) {
            done[v] = 1;
            perm.push_back(v);
        }
    }
    std::reverse(perm.begin(), perm.end());
    return perm;
}

SparseLU::SparseLU(const SparseMatrix& m, LuOptions opts) : a_(m), opts_(opts), n_(m.size()) {
    if (n_ == 0) throw Error("empty matrix");
    if (n_ > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max() / 4))
        throw Error("matrix too large for factorization");
    q_ = reverse_bfs_ordering(m, opts.ordering_root);

    // Column-compressed copy of A.
    const std::size_t n = n_;
    std::vector<std::size_t> ap(n + 1, 0), ai(m.nnz());
    std::vector<double> ax(m.nnz());
    {
        const auto ptr = m.row_ptr();
        const auto col = m.col_idx();
        const auto val = m.values();
        for (std::size_t p = 0; p < m.nnz(); ++p) ++ap[col[p] + 1];
        for (std::size_t j = 0; j < n; ++j) ap[j + 1] += ap[j];
        std::vector<std::size_t> fill(ap.begin(), ap.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
                ai[fill[col[p]]] = i;
                ax[fill[col[p]]++] = val[p];
            }
    }

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> lp(n + 1), li, up(n + 1), ui;
    std::vector<double> lx, ux;
    li.reserve(2 * m.nnz() + n);
    lx.reserve(2 * m.nnz() + n);
    ui.reserve(2 * m.nnz() + n);
    ux.reserve(2 * m.nnz() + n);
    std::vector<std::size_t> pinv(n, none), xi(n), stack(n), pstack(n), mark(n, none);
    std::vector<double> x(n, 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        lp[k] = li.size();
        up[k] = ui.size();
        const std::size_t col = q_[k];

        // Nonzero pattern of L \ A(:,col), in topological order xi[top..n).
        std::size_t top = n;
        for (std::size_t p = ap[col]; p < ap[col + 1]; ++p) {
            const std::size_t start = ai[p];
            if (mark[start] == k) continue;
            std::ptrdiff_t head = 0;
            stack[0] = start;
            while (head >= 0) {
                const std::size_t j = stack[static_cast<std::size_t>(head)];
                const std::size_t jnew = pinv[j];
                if (mark[j] != k) {
                    mark[j] = k;
                    pstack[static_cast<std::size_t>(head)] = jnew == none ? 0 : lp[jnew];
                }
                bool finished = true;
                const std::size_t pend = jnew == none ? 0 : lp[jnew + 1];
                for (std::size_t q = pstack[static_cast<std::size_t>(head)]; q < pend; ++q) {
                    const std::size_t i = li[q];
                    if (mark[i] == k) continue;
                    pstack[static_cast<std::size_t>(head)] = q;
                    stack[static_cast<std::size_t>(++head)] = i;
                    finished = false;
                    break;
                }
                if (finished) {
                    --head;
                    xi[--top] = j;
                }
            }
        }

        // Numeric sparse triangular solve.
        double col_scale = 0.0;
        for (std::size_t p = ap[col]; p < ap[col + 1]; ++p) {
            x[ai[p]] = ax[p];
            col_scale = std::max(col_scale, std::abs(ax[p]));
        }
        for (std::size_t px = top; px < n; ++px) {
            const std::size_t j = xi[px];
            const std::size_t jj = pinv[j];
            if (jj == none) continue;
            const double xj = x[j];
            for (std::size_t p = lp[jj] + 1; p < lp[jj + 1]; ++p) x[li[p]] -= lx[p] * xj;
        }

        // Pivot choice.
        std::size_t ipiv = none;
        double amax = -1.0;
        for (std::size_t px = top; px < n; ++px) {
            const std::size_t i = xi[px];
            if (pinv[i] == none) {
                const double t = std::abs(x[i]);
                if (t > amax) {
                    amax = t;
                    ipiv = i;
                }
            } else {
                ui.push_back(pinv[i]);
                ux.push_back(x[i]);
            }
        }
        if (ipiv == none || !(amax > 1e-14 * col_scale) || !std::isfinite(amax))
            throw SingularMatrixError(k, "singular matrix at pivot " + std::to_string(k));
        if (pinv[col] == none && mark[col] == k && std::abs(x[col]) >= amax * opts_.pivot_tolerance) ipiv = col;

        const double pivot = x[ipiv];
        ui.push_back(k);
        ux.push_back(pivot);
        pinv[ipiv] = k;
        li.push_back(ipiv);
        lx.push_back(1.0);
        for (std::size_t px = top; px < n; ++px) {
            const std::size_t i = xi[px];
            if (pinv[i] == none) {
                li.push_back(i);
                lx.push_back(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    lp[n] = li.size();
    up[n] = ui.size();

    prow_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) prow_[pinv[i]] = i;
    symmetric_ = std::equal(prow_.begin(), prow_.end(), q_.begin());

    // Row-compressed strict factors in factor indices.
    auto to_rows = [n](TriangularFactor& f, const std::vector<std::size_t>& cp,
                       const std::vector<std::size_t>& rows, const std::vector<double>& vals,
                       auto row_of, auto keep) {
        std::vector<std::int32_t> count(n + 1, 0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = cp[j]; p < cp[j + 1]; ++p)
                if (keep(row_of(rows[p]), j)) ++count[row_of(rows[p]) + 1];
        for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];
        f.ptr = count;
        f.col.assign(static_cast<std::size_t>(count[n]), 0);
        f.val.assign(static_cast<std::size_t>(count[n]), 0.0);
        std::vector<std::int32_t> fill(count.begin(), count.end() - 1);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = cp[j]; p < cp[j + 1]; ++p) {
                const std::size_t r = row_of(rows[p]);
                if (!keep(r, j)) continue;
                const auto at = static_cast<std::size_t>(fill[r]++);
                f.col[at] = static_cast<std::int32_t>(j);
                f.val[at] = vals[p];
            }
    };
    to_rows(l_, lp, li, lx, [&](std::size_t r) { return pinv[r]; },
            [](std::size_t r, std::size_t j) { return r > j; });
    to_rows(u_, up, ui, ux, [](std::size_t r) { return r; },
            [](std::size_t r, std::size_t j) { return r < j; });
    inv_diag_.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) inv_diag_[j] = 1.0 / ux[up[j + 1] - 1];
}

void SparseLU::solve_factor_space(std::span<double> y) const {
    if (y.size() != n_) throw Error("dimension mismatch in solve");
    const std::int32_t n = static_cast<std::int32_t>(n_);
    if (!l_.empty()) {
        const std::int32_t* lp = l_.ptr.data();
        const std::int32_t* lc = l_.col.data();
        const double* lv = l_.val.data();
        for (std::int32_t i = 0; i < n; ++i) {
            double s = y[static_cast<std::size_t>(i)];
            for (std::int32_t p = lp[i]; p < lp[i + 1]; ++p) s -= lv[p] * y[static_cast<std::size_t>(lc[p])];
            y[static_cast<std::size_t>(i)] = s;
        }
    }
    const std::int32_t* up = u_.ptr.data();
    const std::int32_t* uc = u_.col.data();
    const double* uv = u_.val.data();
    const double* d = inv_diag_.data();
    for (std::int32_t i = n - 1; i >= 0; --i) {
        double s = y[static_cast<std::size_t>(i)];
        for (std::int32_t p = up[i]; p < up[i + 1]; ++p) s -= uv[p] * y[static_cast<std::size_t>(uc[p])];
        y[static_cast<std::size_t>(i)] = s * d[i];
    }
}

std::vector<double> SparseLU::raw_solve(std::span<const double> b) const {
    std::vector<double> y(n_);
    for (std::size_t k = 0; k < n_; ++k) y[k] = b[prow_[k]];
    solve_factor_space(y);
    std::vector<double> x(n_);
    for (std::size_t k = 0; k < n_; ++k) x[q_[k]] = y[k];
    return x;
}

std::vector<double> SparseLU::solve(std::span<const double> b) const {
    if (b.size() != n_) throw Error("dimension mismatch in solve");
    std::vector<double> x = raw_solve(b);
    std::vector<double> r(n_);
    for (int it = 0;; ++it) {
        a_.multiply(x, r);
        for (std::size_t i = 0; i < n_; ++i) r[i] = b[i] - r[i];
        double rn = 0.0, bn = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            rn += std::abs(r[i]);
            bn += std::abs(b[i]);
        }
        if (!std::isfinite(rn))
            throw SingularMatrixError(n_, "non-finite solution");
        if (rn <= opts_.residual_tolerance * std::max(bn, std::numeric_limits<double>::min())) return x;
        if (it >= opts_.refinement_steps)
            throw SingularMatrixError(n_, "residual check failed: relative residual " +
                                              std::to_string(rn / std::max(bn, std::numeric_limits<double>::min())));
        const auto dx = raw_solve(r);
        for (std::size_t i = 0; i < n_; ++i) x[i] += dx[i];
    }
}

std::vector<double> solve(const SparseMatrix& m, std::span<const double> rhs, LuOptions opts) {
    if (rhs.size() != m.size()) throw Error("dimension mismatch in solve");
    return SparseLU(m, opts).solve(rhs);
}

double relative_residual(const SparseMatrix& m, std::span<const double> x, std::span<const double> b) {
    const auto ax = m.multiply(x);
    double rn = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        rn += std::abs(ax[i] - b[i]);
        bn += std::abs(b[i]);
    }
    return rn / std::max(bn, std::numeric_limits<double>::min());
}

}  // namespace graphfv
