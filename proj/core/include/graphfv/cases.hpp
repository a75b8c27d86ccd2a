#pragma once

#include "graphfv/assembly.hpp"
#include "graphfv/graph.hpp"
#include "graphfv/timestepping.hpp"
#include "graphfv/verification.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graphfv {

/// A problem on a base graph with its data and, when known, exact solution.
struct TestCase {
    std::string label;
    ProblemKind kind = ProblemKind::transport;
    Graph graph;
    BoundaryData bc;
    PlaceFunction u0;
    std::optional<ExactSolution> exact;
    double t_end = 1.0;
    ErrorNorm norm = ErrorNorm::absolute;
};

/// TC1A, TC1B, TC2, TC3, TC4.
std::vector<std::string> builtin_case_labels();
bool is_builtin_case(std::string_view label);
TestCase builtin_case(std::string_view label);

/// Edge 0 = e1 (I -> A), edge 1 = e2 (B -> I), edge 2 = e3 (I -> C).
Graph tc3_graph(const Tc3Parameters& p = {});

struct CaseRun {
    Refinement mesh;
    RunResult result;
    std::optional<double> error;
    double wall_seconds = 0.0;
};

/// Refines to cell size h (kept as is when absent), runs to t_end and
/// measures the error against the exact solution.
CaseRun run_case(const TestCase& tc, std::optional<double> h, double dt, const RunOptions& opts = {},
                 std::optional<ErrorNorm> norm = std::nullopt);

}  // namespace graphfv
