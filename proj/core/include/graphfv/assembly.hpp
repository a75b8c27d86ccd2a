#pragma once

#include "graphfv/graph.hpp"
#include "graphfv/sparse_matrix.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace graphfv {

enum class ProblemKind { transport, diffusion, drift_diffusion };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view text);

/// Edge unknowns first, then one slot per bifurcation node.
struct UnknownLayout {
    std::size_t n_e = 0;
    std::size_t n_bif = 0;
    std::vector<NodeId> bif_nodes;           ///< slot - n_e -> node
    std::map<NodeId, std::size_t> bif_index;  ///< node -> slot in [n_e, n_e + n_bif)

    std::size_t dimension() const noexcept { return n_e + n_bif; }
    std::optional<std::size_t> slot(NodeId v) const;

    static UnknownLayout edges_only(const Graph& g);
    static UnknownLayout with_bifurcations(const Graph& g);
};

/// rhs[row] += coeff * dirichlet(node, t).
struct BoundaryTerm {
    std::size_t row = 0;
    NodeId node = 0;
    double coeff = 0.0;
};

struct LinearSystem {
    SparseMatrix matrix;
    UnknownLayout layout;
    double dt = 0.0;  ///< zero for steady systems
    ProblemKind kind = ProblemKind::transport;
    std::vector<double> mass;  ///< per row, multiplies u_prev in the rhs
    std::vector<double> cell_length;  ///< per edge row, multiplies the source
    std::vector<BoundaryTerm> boundary;
};

using TimeFunction = std::function<double(double)>;
using SourceFunction = std::function<double(EdgeId, double)>;

struct BoundaryData {
    std::map<NodeId, TimeFunction> dirichlet;
    SourceFunction source;

    /// Zero for Dirichlet nodes without data.
    double dirichlet_value(NodeId v, double t) const;
    double source_value(EdgeId e, double t) const { return source ? source(e, t) : 0.0; }

    static BoundaryData constant(const Graph& g, double value);
};

/// Throws GraphError if a Dirichlet key is not a Dirichlet node.
void check_boundary(const Graph& g, const BoundaryData& bc);

/// w_j = c_j / sum of outgoing speeds, for each incoming edge of v.
std::map<EdgeId, double> upwind_weights(const Graph& g, NodeId v);

LinearSystem assemble_transport(const Graph& g, double dt);

/// Steady operator [[B, C], [C^T, D]] in flux form.
LinearSystem assemble_diffusion(const Graph& g);

/// Implicit Euler diffusion: mass / dt plus the steady operator.
LinearSystem assemble_diffusion_step(const Graph& g, double dt);

LinearSystem assemble_drift_diffusion(const Graph& g, double dt);

/// Dispatches on kind; diffusion maps to assemble_diffusion_step.
LinearSystem assemble(const Graph& g, ProblemKind kind, double dt);

/// mass * u_prev + cell length * f(t_next) + boundary inflow.
std::vector<double> build_rhs(const LinearSystem& sys, std::span<const double> u_prev,
                              const BoundaryData& bc, double t_next);

std::vector<double> transport_rhs(const LinearSystem& sys, const Graph& g, std::span<const double> u_prev,
                                  const BoundaryData& bc, double t_next);

/// Elimination of bifurcation unknowns: reduced = B - C D^-1 C^T.
class SchurReduction {
public:
    const LinearSystem& reduced() const noexcept { return reduced_; }
    std::size_t n_bif() const noexcept { return d_inv_.size(); }

    /// Edge part of the reduced right-hand side.
    std::vector<double> reduce_rhs(std::span<const double> full_rhs) const;
    /// u_B = D^-1 (rhs_B - C^T u_e); rhs_B defaults to zero.
    std::vector<double> recover(std::span<const double> u_edges, std::span<const double> rhs_bif = {}) const;

    friend SchurReduction schur_reduce(const LinearSystem& sys);

private:
    struct Entry {
        std::size_t edge_row;
        double value;
    };
    LinearSystem reduced_;
    std::vector<std::vector<Entry>> upper_;  ///< C column j
    std::vector<std::vector<Entry>> lower_;  ///< C^T row j
    std::vector<double> d_inv_;
};

SchurReduction schur_reduce(const LinearSystem& sys);

}  // namespace graphfv
