#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graphfv {

using NodeId = std::size_t;
using EdgeId = std::size_t;

enum class NodeRole { dirichlet_source, neumann_end, outflow_sink, junction, bifurcation };

/// Role requested by the input; `automatic` derives it from adjacency.
enum class DeclaredRole { automatic, dirichlet, neumann, outflow };

std::string_view to_string(NodeRole role);
std::string_view to_string(DeclaredRole role);
std::optional<DeclaredRole> parse_declared_role(std::string_view text);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct EdgeCoefficients {
    double c = 0.0;   ///< advection speed, length/time
    double nu = 0.0;  ///< diffusivity, length^2/time
};

struct NodeSpec {
    Vec3 position;
    DeclaredRole role = DeclaredRole::automatic;
};

struct EdgeSpec {
    NodeId upstream = 0;
    NodeId downstream = 0;
    double length = 0.0;
    EdgeCoefficients coeff;
};

struct Node {
    NodeId id = 0;
    Vec3 position;
    DeclaredRole declared = DeclaredRole::automatic;
    NodeRole role = NodeRole::junction;
};

/// Flux runs from `upstream` to `downstream`.
struct Edge {
    EdgeId id = 0;
    NodeId upstream = 0;
    NodeId downstream = 0;
    double length = 0.0;
    EdgeCoefficients coeff;
};

struct Violation {
    std::string kind;
    std::string message;
    std::optional<NodeId> node;
};

/// Immutable directed metric graph.
class Graph {
public:
    Graph() = default;

    /// Throws GraphError on duplicate edges, self-loops, dangling
    /// references, non-positive lengths or negative coefficients.
    static Graph build(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges);

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    const Node& node(NodeId v) const { return nodes_.at(v); }
    const Edge& edge(EdgeId e) const { return edges_.at(e); }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    std::span<const Edge> edges() const noexcept { return edges_; }

    /// Edges whose downstream node is v.
    std::span<const EdgeId> incoming(NodeId v) const;
    /// Edges whose upstream node is v.
    std::span<const EdgeId> outgoing(NodeId v) const;

    std::size_t degree(NodeId v) const { return incoming(v).size() + outgoing(v).size(); }
    NodeRole role(NodeId v) const { return nodes_.at(v).role; }
    bool is_internal(NodeId v) const;
    bool is_dirichlet(NodeId v) const { return role(v) == NodeRole::dirichlet_source; }

    std::vector<NodeId> nodes_with_role(NodeRole r) const;
    double total_length() const;
    double max_speed() const;

    /// Same topology with replaced per-edge coefficients.
    Graph with_coefficients(std::span<const EdgeCoefficients> coeff) const;

    std::vector<NodeSpec> node_specs() const;
    std::vector<EdgeSpec> edge_specs() const;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> in_ptr_, out_ptr_;
    std::vector<EdgeId> in_idx_, out_idx_;
};

/// Structural hypotheses that fail on g; empty means valid.
std::vector<Violation> validate(const Graph& g);

/// Throws GraphError listing every violation.
void require_valid(const Graph& g);

/// Location of a point as a distance from the upstream end of a base edge.
struct EdgePlace {
    EdgeId base_edge = 0;
    double s = 0.0;
};

struct Refinement {
    Graph graph;
    std::vector<std::vector<EdgeId>> edge_map;  ///< base edge -> cells, upstream first
    std::vector<EdgePlace> cell_midpoints;      ///< per refined edge
    std::vector<EdgePlace> node_places;         ///< per refined node
};

/// Splits each edge into ceil(L / target_h) equal cells.
Refinement refine(const Graph& g, double target_h);

/// Refinement that leaves every edge as a single cell.
Refinement identity_refinement(const Graph& g);

/// Sum of outgoing speeds at an internal node.
double node_velocity(const Graph& g, NodeId v);

}  // namespace graphfv
