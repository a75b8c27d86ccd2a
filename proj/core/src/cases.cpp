#include "graphfv/cases.hpp"

#include "graphfv/errors.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace graphfv {

namespace {

Graph unit_line(EdgeCoefficients coeff, DeclaredRole outlet) {
    return Graph::build({{{0.0, 0.0, 0.0}, DeclaredRole::automatic}, {{1.0, 0.0, 0.0}, outlet}},
                        {{0, 1, 1.0, coeff}});
}

TestCase tc1a() {
    TestCase tc;
    tc.label = "TC1A";
    tc.kind = ProblemKind::transport;
    tc.graph = unit_line({0.5, 0.0}, DeclaredRole::automatic);
    tc.bc.dirichlet[0] = [](double) { return 1.0; };
    tc.u0 = [](const EdgePlace&) { return 0.0; };
    tc.exact = ExactSolution{"TC1A", [](const EdgePlace& p, double t) { return exact_tc1a(p.s, t); }};
    return tc;
}

TestCase tc1b() {
    TestCase tc;
    tc.label = "TC1B";
    tc.kind = ProblemKind::transport;
    tc.graph = unit_line({0.5, 0.0}, DeclaredRole::automatic);
    tc.bc.dirichlet[0] = [](double t) { return exact_tc1b(0.0, t); };
    tc.u0 = [](const EdgePlace& p) { return exact_tc1b(p.s, 0.0); };
    tc.exact = ExactSolution{"TC1B", [](const EdgePlace& p, double t) { return exact_tc1b(p.s, t); }};
    return tc;
}

TestCase tc2() {
    TestCase tc;
    tc.label = "TC2";
    tc.kind = ProblemKind::diffusion;
    tc.graph = unit_line({0.0, 2.0}, DeclaredRole::dirichlet);
    tc.bc.dirichlet[0] = [](double) { return 0.0; };
    tc.bc.dirichlet[1] = [](double) { return 0.0; };
    tc.u0 = [](const EdgePlace& p) { return exact_tc2(p.s, 0.0); };
    tc.exact = ExactSolution{"TC2", [](const EdgePlace& p, double t) { return exact_tc2(p.s, t); }};
    tc.t_end = 0.1;
    return tc;
}

TestCase tc3() {
    const Tc3Parameters par;
    TestCase tc;
    tc.label = "TC3";
    tc.kind = ProblemKind::transport;
    tc.graph = tc3_graph(par);
    tc.bc.dirichlet[2] = [v = par.inflow](double) { return v; };
    tc.u0 = [](const EdgePlace&) { return 0.0; };
    tc.exact = ExactSolution{"TC3", [par](const EdgePlace& p, double t) {
                                 static constexpr Tc3Edge names[] = {Tc3Edge::e1, Tc3Edge::e2, Tc3Edge::e3};
                                 return exact_tc3(names[p.base_edge], p.s, t, par);
                             }};
    return tc;
}

Graph star_graph() {
    const EdgeCoefficients k{0.0, 4.0};
    return Graph::build(
        {
            {{0.0, 0.0, 0.0}, DeclaredRole::automatic},
            {{1.0, 0.0, 0.0}, DeclaredRole::dirichlet},
            {{-1.0, 0.0, 0.0}, DeclaredRole::automatic},
            {{0.0, 1.0, 0.0}, DeclaredRole::dirichlet},
            {{0.0, -1.0, 0.0}, DeclaredRole::dirichlet},
        },
        {{0, 1, 1.0, k}, {2, 0, 1.0, k}, {0, 3, 1.0, k}, {0, 4, 1.0, k}});
}

TestCase tc4() {
    TestCase tc;
    tc.label = "TC4";
    tc.kind = ProblemKind::diffusion;
    tc.graph = star_graph();
    for (NodeId v : {1, 2, 3, 4}) tc.bc.dirichlet[v] = [](double) { return 0.0; };
    // Edge 1 points towards the centre, the others away from it.
    auto centre_distance = [](const EdgePlace& p) { return p.base_edge == 1 ? 1.0 - p.s : p.s; };
    tc.u0 = [centre_distance](const EdgePlace& p) { return exact_tc4(centre_distance(p), 0.0); };
    tc.exact = ExactSolution{"TC4", [centre_distance](const EdgePlace& p, double t) {
                                 return exact_tc4(centre_distance(p), t);
                             }};
    return tc;
}

}  // namespace

std::vector<std::string> builtin_case_labels() { return {"TC1A", "TC1B", "TC2", "TC3", "TC4"}; }

bool is_builtin_case(std::string_view label) {
    for (const auto& l : builtin_case_labels())
        if (l == label) return true;
    return false;
}

TestCase builtin_case(std::string_view label) {
    if (label == "TC1A") return tc1a();
    if (label == "TC1B") return tc1b();
    if (label == "TC2") return tc2();
    if (label == "TC3") return tc3();
    if (label == "TC4") return tc4();
    throw Error("unknown builtin case " + std::string(label));
}

Graph tc3_graph(const Tc3Parameters& p) {
    const double L = p.length;
    const double cx = L * std::cos(std::numbers::pi / 6.0);
    const double cy = L * std::sin(std::numbers::pi / 6.0);
    return Graph::build(
        {
            {{0.0, 0.0, 0.0}, DeclaredRole::automatic},
            {{cx, cy, 0.0}, DeclaredRole::automatic},
            {{-L, 0.0, 0.0}, DeclaredRole::automatic},
            {{cx, -cy, 0.0}, DeclaredRole::automatic},
        },
        {{0, 1, L, {p.c1, 0.0}}, {2, 0, L, {p.c2, 0.0}}, {0, 3, L, {p.c3, 0.0}}});
}

CaseRun run_case(const TestCase& tc, std::optional<double> h, double dt, const RunOptions& opts,
                 std::optional<ErrorNorm> norm) {
    const auto start = std::chrono::steady_clock::now();
    CaseRun out;
    out.mesh = h ? refine(tc.graph, *h) : identity_refinement(tc.graph);
    const Graph& g = out.mesh.graph;
    const UnknownLayout layout =
        tc.kind == ProblemKind::transport ? UnknownLayout::edges_only(g) : UnknownLayout::with_bifurcations(g);
    const SolutionState init = initialize(out.mesh, layout, tc.u0, 0.0);
    const TimeGrid grid = TimeGrid::make(0.0, tc.t_end, dt);
    out.result = run(g, tc.kind, tc.bc, init, grid, opts);
    if (tc.exact) out.error = l1_error(out.result.final_state, *tc.exact, out.mesh, norm.value_or(tc.norm));
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace graphfv
