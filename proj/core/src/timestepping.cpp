#include "graphfv/timestepping.hpp"

#include "graphfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <utility>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace graphfv {

TimeGrid TimeGrid::make(double t0, double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt must be positive");
    if (!(t_end > t0)) throw Error("t_end must be greater than t0");
    const double span = t_end - t0;
    const double n = std::round(span / dt);
    if (n < 1.0) throw Error("time grid needs at least one step");
    if (std::abs(n * dt - span) > 1e-9 * span) throw Error("t_end - t0 is not a multiple of dt");
    return TimeGrid{t0, t_end, dt, static_cast<std::size_t>(n)};
}

double SolutionState::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : u_edges) m = std::min(m, v);
    for (double v : u_bif) m = std::min(m, v);
    return m;
}

double SolutionState::max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : u_edges) m = std::max(m, v);
    for (double v : u_bif) m = std::max(m, v);
    return m;
}

double SolutionState::max_abs() const {
    double m = 0.0;
    for (double v : u_edges) m = std::max(m, std::abs(v));
    for (double v : u_bif) m = std::max(m, std::abs(v));
    return m;
}

double SolutionState::mass(const Graph& g) const {
    if (u_edges.size() != g.num_edges()) throw Error("dimension mismatch in mass");
    double s = 0.0;
    for (const Edge& e : g.edges()) s += e.length * u_edges[e.id];
    return s;
}

std::vector<double> SolutionState::stacked() const {
    std::vector<double> out(u_edges);
    out.insert(out.end(), u_bif.begin(), u_bif.end());
    return out;
}

SolutionState initialize(const Refinement& mesh, const UnknownLayout& layout, const PlaceFunction& u0, double t0) {
    SolutionState s;
    s.time = t0;
    s.u_edges.resize(mesh.graph.num_edges());
    for (std::size_t k = 0; k < s.u_edges.size(); ++k) s.u_edges[k] = u0(mesh.cell_midpoints[k]);
    s.u_bif.resize(layout.n_bif);
    for (std::size_t j = 0; j < layout.n_bif; ++j) s.u_bif[j] = u0(mesh.node_places[layout.bif_nodes[j]]);
    return s;
}

SolutionState initialize(const Graph& g, const UnknownLayout& layout, const PositionFunction& u0, double t0) {
    SolutionState s;
    s.time = t0;
    s.u_edges.resize(g.num_edges());
    for (const Edge& e : g.edges()) {
        const Vec3 a = g.node(e.upstream).position;
        const Vec3 b = g.node(e.downstream).position;
        s.u_edges[e.id] = u0({0.5 * (a.x + b.x), 0.5 * (a.y + b.y), 0.5 * (a.z + b.z)});
    }
    s.u_bif.resize(layout.n_bif);
    for (std::size_t j = 0; j < layout.n_bif; ++j) s.u_bif[j] = u0(g.node(layout.bif_nodes[j]).position);
    return s;
}

namespace {

/// Flushes subnormal results to zero while alive. Upwind tails decay
/// geometrically and would otherwise spend most of the sweep in slow
/// subnormal arithmetic.
class FlushDenormals {
public:
#if defined(__SSE2__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~FlushDenormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

}  // namespace

struct TimeStepper::Impl {
    LinearSystem sys;
    BoundaryData bc;
    StepOptions opts;
    std::unique_ptr<SparseLU> lu;
    std::size_t n = 0;
    double t = 0.0;
    double t_start = 0.0;
    std::size_t count = 0;

    bool fast = false;
    bool lower_empty = false;
    std::vector<double> x;  // factor order when fast, original order otherwise
    std::vector<double> scale;       // per factor row
    TriangularFactor upper_scaled;   // U rows multiplied by the inverse diagonal
    struct Inflow {
        std::size_t pos;
        NodeId node;
        double weight;
    };
    std::vector<Inflow> inflow;
    std::vector<std::size_t> edge_pos;
    std::vector<double> source_weight;

    // Bidiagonal factor: x_i = scale_i x_i - chain_i x_{i+1}, several steps per sweep.
    bool chain = false;
    std::vector<double> chain_coeff;
    struct ChainInflow {
        std::size_t pos;
        std::vector<std::pair<NodeId, double>> terms;
    };
    std::vector<ChainInflow> chain_inflow;  // descending positions

    bool violated = false;
    bool warned = false;
    bool checked = false;
    double cur_min = 0.0;
    double cur_max = 0.0;
    double run_min = 0.0;
    double run_max = 0.0;

    void set_fast_data();
    void kernel();
    template <int K>
    void chain_block();
    void chain_steps(std::size_t k);
    std::vector<double> original_order() const;
    void check_positivity(bool inputs_nonnegative);
};

void TimeStepper::Impl::set_fast_data() {
    const auto q = lu->col_order();
    const auto d = lu->inverse_diagonal();
    lower_empty = lu->lower().empty();
    scale.resize(n);
    for (std::size_t k = 0; k < n; ++k) scale[k] = lower_empty ? sys.mass[q[k]] * d[k] : sys.mass[q[k]];
    upper_scaled = lu->upper();
    for (std::size_t i = 0; i < n; ++i)
        for (auto p = upper_scaled.ptr[i]; p < upper_scaled.ptr[i + 1]; ++p)
            upper_scaled.val[static_cast<std::size_t>(p)] *= d[i];

    std::vector<std::size_t> pos(n);
    for (std::size_t k = 0; k < n; ++k) pos[q[k]] = k;
    for (const BoundaryTerm& b : sys.boundary)
        inflow.push_back({pos[b.row], b.node, b.coeff / sys.mass[b.row]});
    edge_pos.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(sys.layout.n_e));
    source_weight.resize(sys.layout.n_e);
    for (std::size_t k = 0; k < sys.layout.n_e; ++k) source_weight[k] = sys.cell_length[k] / sys.mass[k];

    chain = lower_empty;
    chain_coeff.assign(n, 0.0);
    for (std::size_t i = 0; i < n && chain; ++i) {
        const auto b = upper_scaled.ptr[i], e = upper_scaled.ptr[i + 1];
        if (e - b > 1) chain = false;
        else if (e - b == 1) {
            if (static_cast<std::size_t>(upper_scaled.col[static_cast<std::size_t>(b)]) != i + 1) chain = false;
            else chain_coeff[i] = upper_scaled.val[static_cast<std::size_t>(b)];
        }
    }
    if (chain) {
        std::map<std::size_t, ChainInflow> by_pos;
        for (const auto& in : inflow) {
            auto& c = by_pos[in.pos];
            c.pos = in.pos;
            c.terms.emplace_back(in.node, in.weight);
        }
        for (auto it = by_pos.rbegin(); it != by_pos.rend(); ++it) chain_inflow.push_back(it->second);
    }
}

template <int K>
void TimeStepper::Impl::chain_block() {
    const FlushDenormals ftz;
    // adds[b * K + k]: inflow increment at chain_inflow[b] for step k.
    std::vector<double> adds(chain_inflow.size() * K, 0.0);
    bool nonneg = true;
    for (std::size_t b = 0; b < chain_inflow.size(); ++b)
        for (int k = 0; k < K; ++k) {
            const double tk = t_start + static_cast<double>(count + static_cast<std::size_t>(k) + 1) * sys.dt;
            for (const auto& [node, w] : chain_inflow[b].terms) {
                const double v = bc.dirichlet_value(node, tk);
                nonneg = nonneg && v >= 0.0;
                adds[b * K + static_cast<std::size_t>(k)] += w * v;
            }
        }
    const double prev_bound = opts.positivity_tol * std::max({1.0, std::abs(cur_min), std::abs(cur_max)});
    nonneg = nonneg && cur_min >= -prev_bound;

    double carry[K];
    for (int k = 0; k < K; ++k) carry[k] = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    double* xs = x.data();
    const double* sc = scale.data();
    const double* cu = chain_coeff.data();
    auto sweep = [&](std::ptrdiff_t hi, std::ptrdiff_t lo) {
        for (std::ptrdiff_t i = hi; i >= lo; --i) {
            double v = xs[i];
            const double a = sc[i], c = cu[i];
            for (int k = 0; k < K; ++k) {
                v = a * v - c * carry[k];
                carry[k] = v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            xs[i] = v;
        }
    };
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
    for (std::size_t b = 0; b < chain_inflow.size(); ++b) {
        const auto pos = static_cast<std::ptrdiff_t>(chain_inflow[b].pos);
        sweep(hi, pos + 1);
        double v = xs[pos];
        const double a = sc[pos], c = cu[pos];
        for (int k = 0; k < K; ++k) {
            v = a * (v + adds[b * K + static_cast<std::size_t>(k)]) - c * carry[k];
            carry[k] = v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        xs[pos] = v;
        hi = pos - 1;
    }
    sweep(hi, 0);

    count += static_cast<std::size_t>(K);
    t = t_start + static_cast<double>(count) * sys.dt;
    cur_min = mn;
    cur_max = mx;
    if (!std::isfinite(cur_min) || !std::isfinite(cur_max)) throw SingularMatrixError(n, "non-finite values in time step");
    run_min = std::min(run_min, cur_min);
    run_max = std::max(run_max, cur_max);
    check_positivity(nonneg);
}

void TimeStepper::Impl::chain_steps(std::size_t k) {
    switch (k) {
        case 1: chain_block<1>(); break;
        case 2: chain_block<2>(); break;
        case 3: chain_block<3>(); break;
        case 4: chain_block<4>(); break;
        case 5: chain_block<5>(); break;
        case 6: chain_block<6>(); break;
        case 7: chain_block<7>(); break;
        default: chain_block<8>(); break;
    }
}

void TimeStepper::Impl::kernel() {
    const FlushDenormals ftz;
    const auto ni = static_cast<std::int32_t>(n);
    double* xs = x.data();
    const double* sc = scale.data();
    const std::int32_t* up = upper_scaled.ptr.data();
    const std::int32_t* uc = upper_scaled.col.data();
    const double* uv = upper_scaled.val.data();
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    if (lower_empty) {
        for (std::int32_t i = ni - 1; i >= 0; --i) {
            double s = sc[i] * xs[i];
            for (std::int32_t p = up[i]; p < up[i + 1]; ++p) s -= uv[p] * xs[uc[p]];
            xs[i] = s;
            mn = std::min(mn, s);
            mx = std::max(mx, s);
        }
    } else {
        const std::int32_t* lp = lu->lower().ptr.data();
        const std::int32_t* lc = lu->lower().col.data();
        const double* lv = lu->lower().val.data();
        for (std::int32_t i = 0; i < ni; ++i) {
            double s = sc[i] * xs[i];
            for (std::int32_t p = lp[i]; p < lp[i + 1]; ++p) s -= lv[p] * xs[lc[p]];
            xs[i] = s;
        }
        const double* d = lu->inverse_diagonal().data();
        for (std::int32_t i = ni - 1; i >= 0; --i) {
            double s = d[i] * xs[i];
            for (std::int32_t p = up[i]; p < up[i + 1]; ++p) s -= uv[p] * xs[uc[p]];
            xs[i] = s;
            mn = std::min(mn, s);
            mx = std::max(mx, s);
        }
    }
    cur_min = mn;
    cur_max = mx;
}

std::vector<double> TimeStepper::Impl::original_order() const {
    if (!fast) return x;
    std::vector<double> u(n);
    const auto q = lu->col_order();
    for (std::size_t k = 0; k < n; ++k) u[q[k]] = x[k];
    return u;
}

void TimeStepper::Impl::check_positivity(bool inputs_nonnegative) {
    const double bound = opts.positivity_tol * std::max({1.0, std::abs(cur_min), std::abs(cur_max)});
    if (!inputs_nonnegative || cur_min >= -bound) return;
    violated = true;
    const std::string msg = "positivity violated at t=" + std::to_string(t) + ": min u = " + std::to_string(cur_min);
    if (opts.positivity == PositivityMode::strict) throw PositivityError(t, cur_min, msg);
    if (!warned) {
        std::cerr << "warning: " << msg << '\n';
        warned = true;
    }
}

TimeStepper::TimeStepper(const Graph& g, LinearSystem sys, BoundaryData bc, StepOptions opts)
    : impl_(std::make_unique<Impl>()) {
    Impl& m = *impl_;
    if (!(sys.dt > 0.0)) throw Error("time stepping requires a system assembled with dt > 0");
    if (sys.layout.n_e != g.num_edges()) throw Error("dimension mismatch: system was assembled for another graph");
    check_boundary(g, bc);
    m.sys = std::move(sys);
    m.bc = std::move(bc);
    m.opts = opts;
    m.n = m.sys.layout.dimension();
    LuOptions lu_opts = opts.lu;
    if (!lu_opts.ordering_root && !m.sys.boundary.empty()) lu_opts.ordering_root = m.sys.boundary.front().row;
    m.lu = std::make_unique<SparseLU>(m.sys.matrix, lu_opts);

    bool mass_ok = true;
    for (const BoundaryTerm& b : m.sys.boundary) mass_ok = mass_ok && m.sys.mass[b.row] > 0.0;
    for (std::size_t k = 0; k < m.sys.layout.n_e; ++k) mass_ok = mass_ok && m.sys.mass[k] > 0.0;
    m.fast = m.lu->symmetric_permutation() && mass_ok;
    if (m.fast) m.set_fast_data();
    m.x.assign(m.n, 0.0);
}

TimeStepper::~TimeStepper() = default;
TimeStepper::TimeStepper(TimeStepper&&) noexcept = default;
TimeStepper& TimeStepper::operator=(TimeStepper&&) noexcept = default;

void TimeStepper::reset(const SolutionState& s) {
    Impl& m = *impl_;
    if (s.u_edges.size() != m.sys.layout.n_e || s.u_bif.size() != m.sys.layout.n_bif)
        throw Error("dimension mismatch: state does not match the system layout");
    const auto u = s.stacked();
    if (m.fast) {
        const auto q = m.lu->col_order();
        for (std::size_t k = 0; k < m.n; ++k) m.x[k] = u[q[k]];
    } else {
        m.x = u;
    }
    m.t = s.time;
    m.t_start = s.time;
    m.count = 0;
    m.cur_min = s.min_value();
    m.cur_max = s.max_value();
    m.run_min = m.cur_min;
    m.run_max = m.cur_max;
}

void TimeStepper::advance() {
    Impl& m = *impl_;
    const double t_next = m.t_start + static_cast<double>(m.count + 1) * m.sys.dt;
    const double prev_scale = m.opts.positivity_tol * std::max({1.0, std::abs(m.cur_min), std::abs(m.cur_max)});
    bool nonneg = m.cur_min >= -prev_scale;

    std::vector<double> check_rhs;
    if (!m.checked) check_rhs = build_rhs(m.sys, m.original_order(), m.bc, t_next);

    if (m.fast) {
        for (const auto& in : m.inflow) {
            const double v = m.bc.dirichlet_value(in.node, t_next);
            nonneg = nonneg && v >= 0.0;
            m.x[in.pos] += in.weight * v;
        }
        if (m.bc.source) {
            for (std::size_t k = 0; k < m.edge_pos.size(); ++k) {
                const double f = m.bc.source(k, t_next);
                nonneg = nonneg && f >= 0.0;
                m.x[m.edge_pos[k]] += m.source_weight[k] * f;
            }
        }
        m.kernel();
    } else {
        for (const BoundaryTerm& b : m.sys.boundary) nonneg = nonneg && m.bc.dirichlet_value(b.node, t_next) >= 0.0;
        if (m.bc.source)
            for (std::size_t k = 0; k < m.sys.layout.n_e; ++k) nonneg = nonneg && m.bc.source(k, t_next) >= 0.0;
        const auto rhs = build_rhs(m.sys, m.x, m.bc, t_next);
        const auto prow = m.lu->row_order();
        const auto q = m.lu->col_order();
        std::vector<double> y(m.n);
        for (std::size_t k = 0; k < m.n; ++k) y[k] = rhs[prow[k]];
        m.lu->solve_factor_space(y);
        m.cur_min = std::numeric_limits<double>::infinity();
        m.cur_max = -m.cur_min;
        for (std::size_t k = 0; k < m.n; ++k) {
            m.x[q[k]] = y[k];
            m.cur_min = std::min(m.cur_min, y[k]);
            m.cur_max = std::max(m.cur_max, y[k]);
        }
    }
    m.t = t_next;
    ++m.count;

    if (!std::isfinite(m.cur_min) || !std::isfinite(m.cur_max))
        throw SingularMatrixError(m.n, "non-finite values in time step");
    if (!m.checked) {
        const double r = relative_residual(m.sys.matrix, m.original_order(), check_rhs);
        if (r > m.opts.lu.residual_tolerance)
            throw SingularMatrixError(m.n, "residual check failed: relative residual " + std::to_string(r));
        m.checked = true;
    }
    m.run_min = std::min(m.run_min, m.cur_min);
    m.run_max = std::max(m.run_max, m.cur_max);
    m.check_positivity(nonneg);
}

void TimeStepper::advance(std::size_t count) {
    Impl& m = *impl_;
    while (count > 0) {
        if (m.fast && m.chain && m.checked && !m.bc.source && m.opts.temporal_blocking) {
            const std::size_t k = std::min<std::size_t>(count, 8);
            m.chain_steps(k);
            count -= k;
        } else {
            advance();
            --count;
        }
    }
}

SolutionState TimeStepper::state() const {
    const Impl& m = *impl_;
    const auto u = m.original_order();
    SolutionState s;
    s.time = m.t;
    const auto n_e = static_cast<std::ptrdiff_t>(m.sys.layout.n_e);
    s.u_edges.assign(u.begin(), u.begin() + n_e);
    s.u_bif.assign(u.begin() + n_e, u.end());
    return s;
}

double TimeStepper::time() const noexcept { return impl_->t; }
const LinearSystem& TimeStepper::system() const noexcept { return impl_->sys; }
bool TimeStepper::positivity_violated() const noexcept { return impl_->violated; }
double TimeStepper::current_min() const noexcept { return impl_->cur_min; }
double TimeStepper::current_max() const noexcept { return impl_->cur_max; }
double TimeStepper::running_min() const noexcept { return impl_->run_min; }
double TimeStepper::running_max() const noexcept { return impl_->run_max; }
bool TimeStepper::uses_fast_path() const noexcept { return impl_->fast; }

SolutionState step(const SolutionState& state, const LinearSystem& sys, const Graph& g, const BoundaryData& bc,
                   StepOptions opts) {
    TimeStepper ts(g, sys, bc, opts);
    ts.reset(state);
    ts.advance();
    return ts.state();
}

RunResult run(const Graph& g, ProblemKind kind, const BoundaryData& bc, const SolutionState& initial,
              const TimeGrid& grid, const RunOptions& opts) {
    TimeStepper ts(g, assemble(g, kind, grid.dt), bc, opts.step);
    SolutionState start = initial;
    start.time = grid.t0;
    ts.reset(start);

    RunResult r;
    auto keep = [&](SolutionState s) {
        if (opts.on_snapshot) opts.on_snapshot(s);
        r.snapshots.push_back(std::move(s));
    };
    keep(start);
    r.min_u = start.min_value();
    r.max_u = start.max_value();
    const std::size_t stride = opts.snapshot_every > 0 ? opts.snapshot_every : grid.steps;
    for (std::size_t l = 0; l < grid.steps;) {
        const std::size_t k = std::min(stride - l % stride, grid.steps - l);
        ts.advance(k);
        l += k;
        r.min_u = std::min(r.min_u, ts.running_min());
        r.max_u = std::max(r.max_u, ts.running_max());
        SolutionState s = ts.state();
        if (l == grid.steps) s.time = grid.t_end;
        keep(std::move(s));
    }
    r.final_state = r.snapshots.back();
    r.steps = grid.steps;
    r.positivity_violation = ts.positivity_violated();
    return r;
}

}  // namespace graphfv
