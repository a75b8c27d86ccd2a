#include "graphfv/assembly.hpp"

#include "graphfv/errors.hpp"

#include <string>

namespace graphfv {

std::string_view to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::transport: return "transport";
        case ProblemKind::diffusion: return "diffusion";
        case ProblemKind::drift_diffusion: return "drift-diffusion";
    }
    return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view text) {
    if (text == "transport") return ProblemKind::transport;
    if (text == "diffusion") return ProblemKind::diffusion;
    if (text == "drift-diffusion" || text == "drift_diffusion") return ProblemKind::drift_diffusion;
    return std::nullopt;
}

std::optional<std::size_t> UnknownLayout::slot(NodeId v) const {
    const auto it = bif_index.find(v);
    if (it == bif_index.end()) return std::nullopt;
    return it->second;
}

UnknownLayout UnknownLayout::edges_only(const Graph& g) {
    UnknownLayout l;
    l.n_e = g.num_edges();
    return l;
}

UnknownLayout UnknownLayout::with_bifurcations(const Graph& g) {
    UnknownLayout l = edges_only(g);
    for (const Node& n : g.nodes())
        if (n.role == NodeRole::bifurcation) {
            l.bif_index[n.id] = l.n_e + l.bif_nodes.size();
            l.bif_nodes.push_back(n.id);
        }
    l.n_bif = l.bif_nodes.size();
    return l;
}

double BoundaryData::dirichlet_value(NodeId v, double t) const {
    const auto it = dirichlet.find(v);
    return it == dirichlet.end() || !it->second ? 0.0 : it->second(t);
}

BoundaryData BoundaryData::constant(const Graph& g, double value) {
    BoundaryData bc;
    for (NodeId v : g.nodes_with_role(NodeRole::dirichlet_source)) bc.dirichlet[v] = [value](double) { return value; };
    return bc;
}

void check_boundary(const Graph& g, const BoundaryData& bc) {
    for (const auto& [v, f] : bc.dirichlet)
        if (v >= g.num_nodes() || !g.is_dirichlet(v))
            throw GraphError("dirichlet data given for node " + std::to_string(v) + " which is not a dirichlet node");
}

std::map<EdgeId, double> upwind_weights(const Graph& g, NodeId v) {
    if (!g.is_internal(v)) throw GraphError("upwind weights requested at boundary node " + std::to_string(v));
    double c_out = 0.0, c_in = 0.0;
    for (EdgeId e : g.outgoing(v)) c_out += g.edge(e).coeff.c;
    for (EdgeId e : g.incoming(v)) c_in += g.edge(e).coeff.c;
    std::map<EdgeId, double> w;
    if (c_out <= 0.0) {
        if (c_in > 0.0)
            throw StagnantJunctionError(v, "stagnant junction at node " + std::to_string(v));
        for (EdgeId e : g.incoming(v)) w[e] = 0.0;
        return w;
    }
    for (EdgeId e : g.incoming(v)) w[e] = g.edge(e).coeff.c / c_out;
    return w;
}

namespace {

void require_dt(double dt) {
    if (!(dt > 0.0)) throw Error("dt must be positive");
}

/// Upwind rows: diagonal c_k, coupling -c_k w_i, Dirichlet inflow c_k.
void add_transport(const Graph& g, std::vector<Triplet>& t, std::vector<BoundaryTerm>& bnd) {
    std::vector<std::map<EdgeId, double>> weights(g.num_nodes());
    std::vector<char> have(g.num_nodes(), 0);
    for (const Edge& e : g.edges()) {
        const double c = e.coeff.c;
        t.push_back({e.id, e.id, c});
        const NodeId v = e.upstream;
        if (g.is_dirichlet(v)) {
            if (c > 0.0) bnd.push_back({e.id, v, c});
            continue;
        }
        if (!g.is_internal(v)) continue;
        if (!have[v]) {
            weights[v] = upwind_weights(g, v);
            have[v] = 1;
        }
        if (c == 0.0) continue;
        for (const auto& [i, w] : weights[v])
            if (w != 0.0) t.push_back({e.id, i, -c * w});
    }
}

double face_coefficient(const Edge& a, const Edge& b) {
    return 1.0 / (0.5 * a.length / a.coeff.nu + 0.5 * b.length / b.coeff.nu);
}

/// Two-point fluxes; bifurcation rows appended after the edge rows.
void add_diffusion(const Graph& g, const UnknownLayout& layout, std::vector<Triplet>& t,
                   std::vector<BoundaryTerm>& bnd) {
    for (const Edge& e : g.edges())
        if (!(e.coeff.nu > 0.0))
            throw GraphError("edge " + std::to_string(e.id) + ": diffusion requires nu > 0");
    if (g.nodes_with_role(NodeRole::dirichlet_source).empty())
        throw GraphError("singular diffusion system: no dirichlet node");

    for (const Edge& e : g.edges()) {
        double diag = 0.0;
        for (NodeId v : {e.upstream, e.downstream}) {
            const double end_coeff = 2.0 * e.coeff.nu / e.length;
            switch (g.role(v)) {
                case NodeRole::dirichlet_source:
                    diag += end_coeff;
                    bnd.push_back({e.id, v, end_coeff});
                    break;
                case NodeRole::bifurcation: {
                    const std::size_t j = *layout.slot(v);
                    diag += end_coeff;
                    t.push_back({e.id, j, -end_coeff});
                    t.push_back({j, e.id, -end_coeff});
                    t.push_back({j, j, end_coeff});
                    break;
                }
                case NodeRole::junction:
                    for (auto list : {g.incoming(v), g.outgoing(v)})
                        for (EdgeId other : list) {
                            if (other == e.id) continue;
                            const double tau = face_coefficient(e, g.edge(other));
                            diag += tau;
                            t.push_back({e.id, other, -tau});
                        }
                    break;
                case NodeRole::neumann_end:
                case NodeRole::outflow_sink:
                    break;
            }
        }
        t.push_back({e.id, e.id, diag});
    }
}

LinearSystem make_system(const Graph& g, ProblemKind kind, double dt, UnknownLayout layout,
                         std::vector<Triplet>& t, std::vector<BoundaryTerm> bnd) {
    LinearSystem s;
    s.kind = kind;
    s.dt = dt;
    s.layout = std::move(layout);
    const std::size_t n = s.layout.dimension();
    s.mass.assign(n, 0.0);
    s.cell_length.assign(s.layout.n_e, 0.0);
    for (const Edge& e : g.edges()) {
        s.cell_length[e.id] = e.length;
        if (dt > 0.0) {
            s.mass[e.id] = e.length / dt;
            t.push_back({e.id, e.id, e.length / dt});
        }
    }
    s.matrix = SparseMatrix::from_triplets(n, t);
    s.boundary = std::move(bnd);
    return s;
}

}  // namespace

LinearSystem assemble_transport(const Graph& g, double dt) {
    require_dt(dt);
    require_valid(g);
    std::vector<Triplet> t;
    std::vector<BoundaryTerm> bnd;
    add_transport(g, t, bnd);
    return make_system(g, ProblemKind::transport, dt, UnknownLayout::edges_only(g), t, std::move(bnd));
}

LinearSystem assemble_diffusion(const Graph& g) {
    require_valid(g);
    auto layout = UnknownLayout::with_bifurcations(g);
    std::vector<Triplet> t;
    std::vector<BoundaryTerm> bnd;
    add_diffusion(g, layout, t, bnd);
    return make_system(g, ProblemKind::diffusion, 0.0, std::move(layout), t, std::move(bnd));
}

LinearSystem assemble_diffusion_step(const Graph& g, double dt) {
    require_dt(dt);
    require_valid(g);
    auto layout = UnknownLayout::with_bifurcations(g);
    std::vector<Triplet> t;
    std::vector<BoundaryTerm> bnd;
    add_diffusion(g, layout, t, bnd);
    return make_system(g, ProblemKind::diffusion, dt, std::move(layout), t, std::move(bnd));
}

LinearSystem assemble_drift_diffusion(const Graph& g, double dt) {
    require_dt(dt);
    require_valid(g);
    auto layout = UnknownLayout::with_bifurcations(g);
    std::vector<Triplet> t;
    std::vector<BoundaryTerm> bnd;
    add_transport(g, t, bnd);
    add_diffusion(g, layout, t, bnd);
    return make_system(g, ProblemKind::drift_diffusion, dt, std::move(layout), t, std::move(bnd));
}

LinearSystem assemble(const Graph& g, ProblemKind kind, double dt) {
    switch (kind) {
        case ProblemKind::transport: return assemble_transport(g, dt);
        case ProblemKind::diffusion: return assemble_diffusion_step(g, dt);
        case ProblemKind::drift_diffusion: return assemble_drift_diffusion(g, dt);
    }
    throw Error("unknown problem kind");
}

std::vector<double> build_rhs(const LinearSystem& sys, std::span<const double> u_prev, const BoundaryData& bc,
                              double t_next) {
    const std::size_t n = sys.layout.dimension();
    if (u_prev.size() != n && !(u_prev.size() == sys.layout.n_e && sys.layout.n_bif == 0))
        throw Error("dimension mismatch: state has " + std::to_string(u_prev.size()) + " entries, system " +
                    std::to_string(n));
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = sys.mass[i] * u_prev[i];
    if (bc.source)
        for (std::size_t k = 0; k < sys.layout.n_e; ++k) rhs[k] += sys.cell_length[k] * bc.source(k, t_next);
    for (const BoundaryTerm& b : sys.boundary) rhs[b.row] += b.coeff * bc.dirichlet_value(b.node, t_next);
    return rhs;
}

std::vector<double> transport_rhs(const LinearSystem& sys, const Graph& g, std::span<const double> u_prev,
                                  const BoundaryData& bc, double t_next) {
    if (sys.layout.n_e != g.num_edges()) throw Error("dimension mismatch: system was assembled for another graph");
    if (u_prev.size() != sys.layout.n_e) throw Error("dimension mismatch in transport rhs");
    return build_rhs(sys, u_prev, bc, t_next);
}

std::vector<double> SchurReduction::reduce_rhs(std::span<const double> full_rhs) const {
    const std::size_t n_e = reduced_.layout.n_e;
    if (full_rhs.size() != n_e + n_bif()) throw Error("dimension mismatch in reduce_rhs");
    std::vector<double> out(full_rhs.begin(), full_rhs.begin() + static_cast<std::ptrdiff_t>(n_e));
    for (std::size_t j = 0; j < n_bif(); ++j) {
        const double rb = full_rhs[n_e + j] * d_inv_[j];
        if (rb == 0.0) continue;
        for (const Entry& c : upper_[j]) out[c.edge_row] -= c.value * rb;
    }
    return out;
}

std::vector<double> SchurReduction::recover(std::span<const double> u_edges, std::span<const double> rhs_bif) const {
    if (u_edges.size() != reduced_.layout.n_e) throw Error("dimension mismatch in recover");
    if (!rhs_bif.empty() && rhs_bif.size() != n_bif()) throw Error("dimension mismatch in recover");
    std::vector<double> ub(n_bif(), 0.0);
    for (std::size_t j = 0; j < n_bif(); ++j) {
        double s = rhs_bif.empty() ? 0.0 : rhs_bif[j];
        for (const Entry& c : lower_[j]) s -= c.value * u_edges[c.edge_row];
        ub[j] = s * d_inv_[j];
    }
    return ub;
}

SchurReduction schur_reduce(const LinearSystem& sys) {
    SchurReduction r;
    const std::size_t n_e = sys.layout.n_e;
    const std::size_t n_b = sys.layout.n_bif;
    const auto ptr = sys.matrix.row_ptr();
    const auto col = sys.matrix.col_idx();
    const auto val = sys.matrix.values();

    r.upper_.resize(n_b);
    r.lower_.resize(n_b);
    r.d_inv_.assign(n_b, 0.0);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n_e; ++i)
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
            if (col[p] < n_e) t.push_back({i, col[p], val[p]});
            else r.upper_[col[p] - n_e].push_back({i, val[p]});
        }
    for (std::size_t j = 0; j < n_b; ++j) {
        const std::size_t row = n_e + j;
        double d = 0.0;
        for (std::size_t p = ptr[row]; p < ptr[row + 1]; ++p) {
            if (col[p] < n_e) {
                r.lower_[j].push_back({col[p], val[p]});
            } else if (col[p] == row) {
                d = val[p];
            } else if (val[p] != 0.0) {
                throw Error("schur reduction requires a diagonal bifurcation block");
            }
        }
        if (!(d > 0.0)) throw Error("schur reduction requires a positive bifurcation diagonal");
        r.d_inv_[j] = 1.0 / d;
        for (const auto& up : r.upper_[j])
            for (const auto& lo : r.lower_[j]) t.push_back({up.edge_row, lo.edge_row, -up.value * r.d_inv_[j] * lo.value});
    }

    LinearSystem& red = r.reduced_;
    red.kind = sys.kind;
    red.dt = sys.dt;
    red.layout.n_e = n_e;
    red.mass.assign(sys.mass.begin(), sys.mass.begin() + static_cast<std::ptrdiff_t>(n_e));
    red.cell_length = sys.cell_length;
    for (const BoundaryTerm& b : sys.boundary)
        if (b.row < n_e) red.boundary.push_back(b);
    red.matrix = SparseMatrix::from_triplets(n_e, t);
    return r;
}

}  // namespace graphfv
