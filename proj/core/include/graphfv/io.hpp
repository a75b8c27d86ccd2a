#pragma once

#include "graphfv/cases.hpp"
#include "graphfv/graph.hpp"
#include "graphfv/timestepping.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace graphfv {

struct ReadOptions {
    /// Reject graphs with structural violations.
    bool strict = true;
};

/// Sections `[nodes]` (`id x y z role`) and `[edges]`
/// (`id upstream downstream length c nu`); `#` starts a comment.
Graph parse_graph(std::istream& is, ReadOptions opts = {});
Graph read_graph(const std::filesystem::path& path, ReadOptions opts = {});

void write_graph(std::ostream& os, const Graph& g);
void write_graph(const std::filesystem::path& path, const Graph& g);

/// Physical values in seconds, metres and kilovolts.
struct TreeingConfig {
    double mobility = 10.0;       ///< m^2 / (kV s)
    double root_field = 50.0;     ///< kV
    double diffusivity = 0.5;     ///< m^2 / s
    double inflow = 100.0;        ///< 1 / m^2
    unsigned depth = 9;
    unsigned branching = 2;
    bool trunk = false;           ///< single edge between the root and the first split
    double length_min = 1e-4;     ///< m
    double length_max = 1e-3;     ///< m
    std::uint64_t seed = 42;
};

/// Rooted tree: `depth` levels of `branching` children below the root (or
/// below the trunk). Edge count is sum of branching^d for d = 1..depth, plus
/// one for the trunk.
Graph generate_tree(const TreeingConfig& cfg);

/// Root edges get root_field; every other edge gets its parent's field over
/// the parent's number of outgoing edges. c = mobility * field, nu uniform.
Graph derive_treeing_fields(const Graph& g, const TreeingConfig& cfg);

/// Per-edge field magnitudes used by derive_treeing_fields.
std::vector<double> treeing_field(const Graph& g, double root_field);

/// Drift-diffusion on the generated tree with constant inflow at the root.
TestCase treeing_case(const TreeingConfig& cfg, double t_end = 500.0);

/// One `snapshot_NNNNN.csv` per state plus `times.csv`.
void write_snapshots(std::span<const SolutionState> states, const Graph& g, const std::filesystem::path& dir);

}  // namespace graphfv
