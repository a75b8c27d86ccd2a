#include "graphfv/graph.hpp"

#include "graphfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

namespace graphfv {

std::string_view to_string(NodeRole role) {
    switch (role) {
        case NodeRole::dirichlet_source: return "dirichlet";
        case NodeRole::neumann_end: return "neumann";
        case NodeRole::outflow_sink: return "outflow";
        case NodeRole::junction: return "junction";
        case NodeRole::bifurcation: return "bifurcation";
    }
    return "unknown";
}

std::string_view to_string(DeclaredRole role) {
    switch (role) {
        case DeclaredRole::automatic: return "auto";
        case DeclaredRole::dirichlet: return "dirichlet";
        case DeclaredRole::neumann: return "neumann";
        case DeclaredRole::outflow: return "outflow";
    }
    return "unknown";
}

std::optional<DeclaredRole> parse_declared_role(std::string_view text) {
    if (text == "auto") return DeclaredRole::automatic;
    if (text == "dirichlet") return DeclaredRole::dirichlet;
    if (text == "neumann") return DeclaredRole::neumann;
    if (text == "outflow") return DeclaredRole::outflow;
    return std::nullopt;
}

namespace {

void build_csr(std::size_t n, const std::vector<std::pair<NodeId, EdgeId>>& pairs,
               std::vector<std::size_t>& ptr, std::vector<EdgeId>& idx) {
    ptr.assign(n + 1, 0);
    for (const auto& [v, e] : pairs) ++ptr[v + 1];
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    idx.resize(pairs.size());
    std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
    for (const auto& [v, e] : pairs) idx[fill[v]++] = e;
}

NodeRole derive_role(DeclaredRole declared, std::size_t n_in, std::size_t n_out, double nu_in) {
    switch (declared) {
        case DeclaredRole::dirichlet: return NodeRole::dirichlet_source;
        case DeclaredRole::neumann: return NodeRole::neumann_end;
        case DeclaredRole::outflow: return NodeRole::outflow_sink;
        case DeclaredRole::automatic: break;
    }
    if (n_in == 0) return NodeRole::dirichlet_source;
    if (n_out == 0 && n_in == 1) return nu_in > 0.0 ? NodeRole::neumann_end : NodeRole::outflow_sink;
    return n_in + n_out >= 3 ? NodeRole::bifurcation : NodeRole::junction;
}

}  // namespace

Graph Graph::build(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges) {
    Graph g;
    const std::size_t nv = nodes.size();
    std::set<std::pair<NodeId, NodeId>> seen;
    g.edges_.reserve(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const EdgeSpec& s = edges[k];
        const std::string tag = "edge " + std::to_string(k) + ": ";
        if (s.upstream >= nv || s.downstream >= nv) throw GraphError(tag + "dangling node reference");
        if (s.upstream == s.downstream) throw GraphError(tag + "self-loop");
        if (!(s.length > 0.0) || !std::isfinite(s.length)) throw GraphError(tag + "length must be positive");
        if (!(s.coeff.c >= 0.0) || !(s.coeff.nu >= 0.0)) throw GraphError(tag + "coefficients must be nonnegative");
        if (!seen.emplace(s.upstream, s.downstream).second) throw GraphError(tag + "duplicate edge");
        g.edges_.push_back(Edge{k, s.upstream, s.downstream, s.length, s.coeff});
    }

    std::vector<std::pair<NodeId, EdgeId>> in_pairs, out_pairs;
    for (const Edge& e : g.edges_) {
        in_pairs.emplace_back(e.downstream, e.id);
        out_pairs.emplace_back(e.upstream, e.id);
    }
    build_csr(nv, in_pairs, g.in_ptr_, g.in_idx_);
    build_csr(nv, out_pairs, g.out_ptr_, g.out_idx_);

    g.nodes_.reserve(nv);
    for (NodeId v = 0; v < nv; ++v) {
        const auto in = g.incoming(v);
        const auto out = g.outgoing(v);
        const double nu_in = in.empty() ? 0.0 : g.edges_[in.front()].coeff.nu;
        g.nodes_.push_back(Node{v, nodes[v].position, nodes[v].role,
                                derive_role(nodes[v].role, in.size(), out.size(), nu_in)});
    }
    return g;
}

std::span<const EdgeId> Graph::incoming(NodeId v) const {
    return {in_idx_.data() + in_ptr_.at(v), in_ptr_.at(v + 1) - in_ptr_[v]};
}

std::span<const EdgeId> Graph::outgoing(NodeId v) const {
    return {out_idx_.data() + out_ptr_.at(v), out_ptr_.at(v + 1) - out_ptr_[v]};
}

bool Graph::is_internal(NodeId v) const {
    const NodeRole r = role(v);
    return r == NodeRole::junction || r == NodeRole::bifurcation;
}

std::vector<NodeId> Graph::nodes_with_role(NodeRole r) const {
    std::vector<NodeId> out;
    for (const Node& n : nodes_)
        if (n.role == r) out.push_back(n.id);
    return out;
}

double Graph::total_length() const {
    double s = 0.0;
    for (const Edge& e : edges_) s += e.length;
    return s;
}

double Graph::max_speed() const {
    double s = 0.0;
    for (const Edge& e : edges_) s = std::max(s, e.coeff.c);
    return s;
}

Graph Graph::with_coefficients(std::span<const EdgeCoefficients> coeff) const {
    if (coeff.size() != edges_.size()) throw GraphError("coefficient count does not match edge count");
    auto specs = edge_specs();
    for (std::size_t k = 0; k < specs.size(); ++k) specs[k].coeff = coeff[k];
    return build(node_specs(), std::move(specs));
}

std::vector<NodeSpec> Graph::node_specs() const {
    std::vector<NodeSpec> out;
    out.reserve(nodes_.size());
    for (const Node& n : nodes_) out.push_back(NodeSpec{n.position, n.declared});
    return out;
}

std::vector<EdgeSpec> Graph::edge_specs() const {
    std::vector<EdgeSpec> out;
    out.reserve(edges_.size());
    for (const Edge& e : edges_) out.push_back(EdgeSpec{e.upstream, e.downstream, e.length, e.coeff});
    return out;
}

std::vector<Violation> validate(const Graph& g) {
    std::vector<Violation> out;
    const std::size_t nv = g.num_nodes();

    if (nv > 0) {
        std::vector<char> seen(nv, 0);
        std::vector<NodeId> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            auto visit = [&](NodeId w) {
                if (!seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
            };
            for (EdgeId e : g.incoming(v)) visit(g.edge(e).upstream);
            for (EdgeId e : g.outgoing(v)) visit(g.edge(e).downstream);
        }
        if (reached != nv) out.push_back({"disconnected", "graph not connected", std::nullopt});
    }

    bool has_source = false;
    for (const Node& n : g.nodes()) {
        const auto in = g.incoming(n.id);
        const auto out_edges = g.outgoing(n.id);
        const std::string where = "node " + std::to_string(n.id) + ": ";
        switch (n.role) {
            case NodeRole::dirichlet_source:
                has_source = true;
                for (EdgeId e : in)
                    if (g.edge(e).coeff.c > 0.0) {
                        out.push_back({"dirichlet_inflow", where + "dirichlet node with incoming flux", n.id});
                        break;
                    }
                if (!in.empty() && !out_edges.empty())
                    out.push_back({"declared_internal", where + "boundary condition declared on internal node", n.id});
                break;
            case NodeRole::neumann_end:
            case NodeRole::outflow_sink:
                if (!out_edges.empty())
                    out.push_back({"sink_outgoing", where + "sink with outgoing edge", n.id});
                if (in.size() > 1)
                    out.push_back({"declared_internal", where + "boundary condition declared on internal node", n.id});
                if (n.role == NodeRole::outflow_sink) {
                    for (EdgeId e : in)
                        if (g.edge(e).coeff.nu > 0.0) {
                            out.push_back({"outflow_diffusive", where + "outflow sink on a diffusive edge", n.id});
                            break;
                        }
                }
                break;
            case NodeRole::junction:
            case NodeRole::bifurcation:
                if (in.empty() || out_edges.empty())
                    out.push_back({"mass_accumulation", where + "mass accumulation node", n.id});
                break;
        }
    }
    if (!has_source) out.push_back({"no_source", "no dirichlet source", std::nullopt});
    return out;
}

void require_valid(const Graph& g) {
    const auto violations = validate(g);
    if (violations.empty()) return;
    std::string msg = "invalid graph:";
    for (const auto& v : violations) msg += " [" + v.message + "]";
    throw GraphError(msg);
}

namespace {

EdgePlace place_of_node(const Graph& g, NodeId v) {
    if (!g.outgoing(v).empty()) return {g.outgoing(v).front(), 0.0};
    if (!g.incoming(v).empty()) {
        const EdgeId e = g.incoming(v).front();
        return {e, g.edge(e).length};
    }
    return {0, 0.0};
}

}  // namespace

Refinement refine(const Graph& g, double target_h) {
    if (!(target_h > 0.0)) throw GraphError("refinement length must be positive");
    Refinement r;
    auto nodes = g.node_specs();
    std::vector<EdgeSpec> edges;
    r.edge_map.resize(g.num_edges());
    for (NodeId v = 0; v < g.num_nodes(); ++v) r.node_places.push_back(place_of_node(g, v));

    for (const Edge& e : g.edges()) {
        const auto m = static_cast<std::size_t>(
            std::max(1.0, std::ceil(e.length / target_h * (1.0 - 1e-12))));
        const double h = e.length / static_cast<double>(m);
        const Vec3 a = g.node(e.upstream).position;
        const Vec3 b = g.node(e.downstream).position;
        NodeId prev = e.upstream;
        for (std::size_t j = 0; j < m; ++j) {
            NodeId next = e.downstream;
            if (j + 1 < m) {
                const double t = static_cast<double>(j + 1) / static_cast<double>(m);
                nodes.push_back(NodeSpec{{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)},
                                         DeclaredRole::automatic});
                next = nodes.size() - 1;
                r.node_places.push_back({e.id, h * static_cast<double>(j + 1)});
            }
            r.edge_map[e.id].push_back(edges.size());
            r.cell_midpoints.push_back({e.id, h * (static_cast<double>(j) + 0.5)});
            edges.push_back(EdgeSpec{prev, next, h, e.coeff});
            prev = next;
        }
    }
    r.graph = Graph::build(std::move(nodes), std::move(edges));
    return r;
}

Refinement identity_refinement(const Graph& g) {
    Refinement r;
    r.graph = g;
    r.edge_map.resize(g.num_edges());
    for (const Edge& e : g.edges()) {
        r.edge_map[e.id] = {e.id};
        r.cell_midpoints.push_back({e.id, 0.5 * e.length});
    }
    for (NodeId v = 0; v < g.num_nodes(); ++v) r.node_places.push_back(place_of_node(g, v));
    return r;
}

double node_velocity(const Graph& g, NodeId v) {
    if (!g.is_internal(v)) throw GraphError("node " + std::to_string(v) + " is not internal");
    double s = 0.0;
    for (EdgeId e : g.outgoing(v)) s += g.edge(e).coeff.c;
    return s;
}

}  // namespace graphfv
