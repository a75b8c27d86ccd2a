#include "graphfv/io.hpp"

#include "graphfv/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace graphfv {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
bool parse_number(const std::string& tok, T& out) {
    std::istringstream ss(tok);
    ss >> out;
    return ss && ss.eof();
}

}  // namespace

Graph parse_graph(std::istream& is, ReadOptions opts) {
    enum class Section { none, nodes, edges } section = Section::none;
    std::map<std::size_t, NodeSpec> nodes;
    std::map<std::size_t, std::pair<EdgeSpec, std::size_t>> edges;
    std::map<std::pair<NodeId, NodeId>, std::size_t> pairs;
    std::string line;
    std::size_t lineno = 0;
    bool saw_edges = false;

    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok.size() == 1 && tok[0] == "[nodes]") {
            section = Section::nodes;
            continue;
        }
        if (tok.size() == 1 && tok[0] == "[edges]") {
            section = Section::edges;
            saw_edges = true;
            continue;
        }
        if (tok[0].front() == '[') throw ParseError(lineno, "unknown section " + tok[0]);

        if (section == Section::nodes) {
            if (tok.size() != 5) throw ParseError(lineno, "node line must be `id x y z role`");
            std::size_t id = 0;
            NodeSpec n;
            if (!parse_number(tok[0], id)) throw ParseError(lineno, "bad node id");
            if (!parse_number(tok[1], n.position.x) || !parse_number(tok[2], n.position.y) ||
                !parse_number(tok[3], n.position.z))
                throw ParseError(lineno, "bad node position");
            const auto role = parse_declared_role(tok[4]);
            if (!role) throw ParseError(lineno, "unknown role " + tok[4]);
            n.role = *role;
            if (!nodes.emplace(id, n).second) throw ParseError(lineno, "duplicate node " + tok[0]);
        } else if (section == Section::edges) {
            if (tok.size() != 6) throw ParseError(lineno, "edge line must be `id upstream downstream length c nu`");
            std::size_t id = 0;
            EdgeSpec e;
            if (!parse_number(tok[0], id)) throw ParseError(lineno, "bad edge id");
            if (!parse_number(tok[1], e.upstream) || !parse_number(tok[2], e.downstream))
                throw ParseError(lineno, "bad node reference");
            if (!parse_number(tok[3], e.length) || !parse_number(tok[4], e.coeff.c) ||
                !parse_number(tok[5], e.coeff.nu))
                throw ParseError(lineno, "bad edge value");
            if (e.upstream == e.downstream) throw ParseError(lineno, "self-loop");
            if (!(e.length > 0.0)) throw ParseError(lineno, "length must be positive");
            if (!(e.coeff.c >= 0.0) || !(e.coeff.nu >= 0.0)) throw ParseError(lineno, "coefficients must be nonnegative");
            if (const auto it = pairs.find({e.upstream, e.downstream}); it != pairs.end())
                throw ParseError(lineno, "duplicate edge (first defined on line " + std::to_string(it->second) + ")");
            pairs[{e.upstream, e.downstream}] = lineno;
            if (!edges.emplace(id, std::pair{e, lineno}).second) throw ParseError(lineno, "duplicate edge id " + tok[0]);
        } else {
            throw ParseError(lineno, "data outside a section");
        }
    }
    if (!saw_edges || edges.empty()) throw ParseError(0, "no edges");

    std::vector<NodeSpec> node_list;
    for (const auto& [id, n] : nodes) {
        if (id != node_list.size()) throw ParseError(0, "node ids must be 0..n-1, missing " + std::to_string(node_list.size()));
        node_list.push_back(n);
    }
    std::vector<EdgeSpec> edge_list;
    for (const auto& [id, e] : edges) {
        if (id != edge_list.size()) throw ParseError(0, "edge ids must be 0..m-1, missing " + std::to_string(edge_list.size()));
        if (e.first.upstream >= node_list.size() || e.first.downstream >= node_list.size())
            throw ParseError(e.second, "dangling node reference");
        edge_list.push_back(e.first);
    }
    Graph g = Graph::build(std::move(node_list), std::move(edge_list));
    if (opts.strict) require_valid(g);
    return g;
}

Graph read_graph(const std::filesystem::path& path, ReadOptions opts) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path.string());
    return parse_graph(is, opts);
}

void write_graph(std::ostream& os, const Graph& g) {
    os << "[nodes]\n# id x y z role\n";
    for (const Node& n : g.nodes())
        os << n.id << ' ' << fmt(n.position.x) << ' ' << fmt(n.position.y) << ' ' << fmt(n.position.z) << ' '
           << to_string(n.declared) << '\n';
    os << "[edges]\n# id upstream downstream length c nu\n";
    for (const Edge& e : g.edges())
        os << e.id << ' ' << e.upstream << ' ' << e.downstream << ' ' << fmt(e.length) << ' ' << fmt(e.coeff.c) << ' '
           << fmt(e.coeff.nu) << '\n';
}

void write_graph(const std::filesystem::path& path, const Graph& g) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    write_graph(os, g);
}

Graph generate_tree(const TreeingConfig& cfg) {
    if (cfg.depth < 1 || cfg.branching < 1) throw Error("tree depth and branching factor must be at least 1");
    if (!(cfg.length_min > 0.0) || cfg.length_max < cfg.length_min) throw Error("invalid edge length range");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> length(cfg.length_min, cfg.length_max);
    std::uniform_real_distribution<double> angle(-0.6, 0.6);
    std::uniform_real_distribution<double> turn(0.0, 2.0 * std::numbers::pi);

    std::vector<NodeSpec> nodes{{{0.0, 0.0, 0.0}, DeclaredRole::automatic}};
    std::vector<EdgeSpec> edges;
    struct Tip {
        NodeId node;
        Vec3 dir;
    };
    auto grow = [&](const Tip& from, const Vec3& dir) {
        const double len = length(rng);
        const Vec3 p = nodes[from.node].position;
        nodes.push_back({{p.x + len * dir.x, p.y + len * dir.y, p.z + len * dir.z}, DeclaredRole::automatic});
        edges.push_back({from.node, nodes.size() - 1, len, {}});
        return Tip{nodes.size() - 1, dir};
    };
    auto deflect = [&](const Vec3& d) {
        // Tilt the direction by a random polar angle around a random axis.
        const double a = angle(rng), b = turn(rng);
        Vec3 u = std::abs(d.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 n1{d.y * u.z - d.z * u.y, d.z * u.x - d.x * u.z, d.x * u.y - d.y * u.x};
        const double l1 = std::sqrt(n1.x * n1.x + n1.y * n1.y + n1.z * n1.z);
        n1 = {n1.x / l1, n1.y / l1, n1.z / l1};
        const Vec3 n2{d.y * n1.z - d.z * n1.y, d.z * n1.x - d.x * n1.z, d.x * n1.y - d.y * n1.x};
        const double s = std::sin(a), c = std::cos(a);
        return Vec3{c * d.x + s * (std::cos(b) * n1.x + std::sin(b) * n2.x),
                    c * d.y + s * (std::cos(b) * n1.y + std::sin(b) * n2.y),
                    c * d.z + s * (std::cos(b) * n1.z + std::sin(b) * n2.z)};
    };

    std::vector<Tip> tips{{0, {0.0, 0.0, 1.0}}};
    if (cfg.trunk) tips = {grow(tips.front(), tips.front().dir)};
    for (unsigned d = 0; d < cfg.depth; ++d) {
        std::vector<Tip> next;
        for (const Tip& t : tips)
            for (unsigned b = 0; b < cfg.branching; ++b) next.push_back(grow(t, deflect(t.dir)));
        tips = std::move(next);
    }
    return Graph::build(std::move(nodes), std::move(edges));
}

std::vector<double> treeing_field(const Graph& g, double root_field) {
    const auto sources = g.nodes_with_role(NodeRole::dirichlet_source);
    if (sources.size() != 1) throw GraphError("treeing fields need exactly one source node");
    if (g.num_edges() + 1 != g.num_nodes()) throw GraphError("treeing fields need a tree");
    for (const Node& n : g.nodes())
        if (g.incoming(n.id).size() > 1) throw GraphError("treeing fields need a tree: node " + std::to_string(n.id) + " has two parents");

    std::vector<double> field(g.num_edges(), -1.0);
    std::vector<NodeId> stack{sources.front()};
    for (EdgeId e : g.outgoing(sources.front())) field[e] = root_field;
    std::size_t assigned = g.outgoing(sources.front()).size();
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        const auto out = g.outgoing(v);
        if (v != sources.front()) {
            const double parent = field[g.incoming(v).front()];
            for (EdgeId e : out) field[e] = parent / static_cast<double>(out.size());
            assigned += out.size();
        }
        for (EdgeId e : out) stack.push_back(g.edge(e).downstream);
    }
    if (assigned != g.num_edges()) throw GraphError("treeing fields need a connected tree");
    return field;
}

Graph derive_treeing_fields(const Graph& g, const TreeingConfig& cfg) {
    if (!(cfg.mobility > 0.0) || !(cfg.root_field > 0.0) || !(cfg.diffusivity > 0.0))
        throw Error("treeing parameters must be positive");
    const auto field = treeing_field(g, cfg.root_field);
    std::vector<EdgeCoefficients> coeff(g.num_edges());
    for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = {cfg.mobility * field[k], cfg.diffusivity};
    return g.with_coefficients(coeff);
}

TestCase treeing_case(const TreeingConfig& cfg, double t_end) {
    if (!(cfg.inflow > 0.0)) throw Error("treeing inflow must be positive");
    TestCase tc;
    tc.label = "TC5-synth";
    tc.kind = ProblemKind::drift_diffusion;
    tc.graph = derive_treeing_fields(generate_tree(cfg), cfg);
    tc.bc = BoundaryData::constant(tc.graph, cfg.inflow);
    tc.u0 = [](const EdgePlace&) { return 0.0; };
    tc.t_end = t_end;
    return tc;
}

void write_snapshots(std::span<const SolutionState> states, const Graph& g, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    std::ofstream index(dir / "times.csv");
    if (!index) throw Error("cannot write " + (dir / "times.csv").string());
    index << "index,time,file\n";
    char name[64];
    for (std::size_t s = 0; s < states.size(); ++s) {
        const SolutionState& st = states[s];
        if (st.u_edges.size() != g.num_edges()) throw Error("snapshot does not match the graph");
        std::snprintf(name, sizeof name, "snapshot_%05zu.csv", s);
        std::ofstream os(dir / name);
        if (!os) throw Error("cannot write " + (dir / name).string());
        os << "edge_id,x0,y0,z0,x1,y1,z1,u\n";
        for (const Edge& e : g.edges()) {
            const Vec3 a = g.node(e.upstream).position;
            const Vec3 b = g.node(e.downstream).position;
            os << e.id << ',' << fmt(a.x) << ',' << fmt(a.y) << ',' << fmt(a.z) << ',' << fmt(b.x) << ',' << fmt(b.y)
               << ',' << fmt(b.z) << ',' << fmt(st.u_edges[e.id]) << '\n';
        }
        index << s << ',' << fmt(st.time) << ',' << name << '\n';
    }
}

}  // namespace graphfv
