#include <graphfv/assembly.hpp>
#include <graphfv/cases.hpp>
#include <graphfv/certificates.hpp>
#include <graphfv/errors.hpp>
#include <graphfv/sparse_lu.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <random>

using namespace graphfv;

namespace {

Graph line(std::size_t cells, double len, double c, double nu = 0.0) {
    std::vector<NodeSpec> n;
    std::vector<EdgeSpec> e;
    for (std::size_t i = 0; i <= cells; ++i) n.push_back({{len * static_cast<double>(i), 0, 0}, DeclaredRole::automatic});
    for (std::size_t i = 0; i < cells; ++i) e.push_back({i, i + 1, len, {c, nu}});
    return Graph::build(n, e);
}

// A -> I, I -> B, I -> C with uniform coefficients.
Graph branch(double c, double nu) {
    return Graph::build({{{-1, 0, 0}, DeclaredRole::automatic},
                         {{0, 0, 0}, DeclaredRole::automatic},
                         {{1, 1, 0}, DeclaredRole::automatic},
                         {{1, -1, 0}, DeclaredRole::automatic}},
                        {{0, 1, 1.0, {c, nu}}, {1, 2, 1.0, {c, nu}}, {1, 3, 1.0, {c, nu}}});
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

std::vector<double> row_sums(const SparseMatrix& m) {
    std::vector<double> s(m.size(), 0.0);
    for (const Triplet& t : m.triplets()) s[t.row] += t.value;
    return s;
}

std::vector<double> column_sums(const SparseMatrix& m) {
    std::vector<double> s(m.size(), 0.0);
    for (const Triplet& t : m.triplets()) s[t.col] += t.value;
    return s;
}

}  // namespace

TEST(Layout, Dimensions) {
    const Graph g = tc3_graph();
    EXPECT_EQ(assemble_transport(g, 0.1).layout.dimension(), 3u);
    const LinearSystem d = assemble_diffusion(branch(0.0, 1.0));
    EXPECT_EQ(d.layout.dimension(), 4u);
    EXPECT_EQ(d.layout.slot(1), std::optional<std::size_t>(3));
    EXPECT_FALSE(d.layout.slot(0));
}

TEST(UpwindWeights, Tc3Bifurcation) {
    const auto w = upwind_weights(tc3_graph(), 0);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_DOUBLE_EQ(w.at(1), 1.0);
    EXPECT_DOUBLE_EQ(Tc3Parameters{}.downstream_amplitude(), 1.0);
}

TEST(UpwindWeights, CollinearChain) {
    const auto w = upwind_weights(line(2, 0.5, 0.5), 1);
    EXPECT_DOUBLE_EQ(w.at(0), 1.0);
}

TEST(UpwindWeights, TwoIntoOneFluxIdentity) {
    const Graph g = Graph::build({{{-1, 1, 0}, DeclaredRole::automatic},
                                  {{-1, -1, 0}, DeclaredRole::automatic},
                                  {{0, 0, 0}, DeclaredRole::automatic},
                                  {{1, 0, 0}, DeclaredRole::automatic}},
                                 {{0, 2, 1.0, {1.0, 0.0}}, {1, 2, 1.0, {2.0, 0.0}}, {2, 3, 1.0, {3.0, 0.0}}});
    const auto w = upwind_weights(g, 2);
    EXPECT_DOUBLE_EQ(w.at(0), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(w.at(1), 2.0 / 3.0);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        const auto u = random_vector(rng, 2);
        const double node = w.at(0) * u[0] + w.at(1) * u[1];
        EXPECT_NEAR(3.0 * node, 1.0 * u[0] + 2.0 * u[1], 1e-14);
    }
}

TEST(UpwindWeights, StagnantJunction) {
    const Graph g = Graph::build({{{0, 0, 0}, DeclaredRole::automatic},
                                  {{1, 0, 0}, DeclaredRole::automatic},
                                  {{2, 0, 0}, DeclaredRole::automatic}},
                                 {{0, 1, 1.0, {1.0, 0.0}}, {1, 2, 1.0, {0.0, 0.0}}});
    try {
        upwind_weights(g, 1);
        FAIL() << "expected a stagnant junction";
    } catch (const StagnantJunctionError& e) {
        EXPECT_EQ(e.node(), 1u);
    }
    EXPECT_THROW(assemble_transport(g, 0.1), StagnantJunctionError);
    EXPECT_THROW(upwind_weights(g, 0), Error);
}

TEST(Transport, TwoCellHandAssembly) {
    const LinearSystem sys = assemble_transport(line(2, 0.5, 0.5), 0.1);
    EXPECT_DOUBLE_EQ(sys.matrix.at(0, 0), 5.5);
    EXPECT_DOUBLE_EQ(sys.matrix.at(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(sys.matrix.at(1, 0), -0.5);
    EXPECT_DOUBLE_EQ(sys.matrix.at(1, 1), 5.5);
}

TEST(Transport, ZeroSpeedIsMassMatrix) {
    const Graph g = line(3, 0.25, 0.0);
    const LinearSystem sys = assemble_transport(g, 0.5);
    EXPECT_EQ(sys.matrix.nnz(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(sys.matrix.at(k, k), 0.5);
}

TEST(Transport, ColumnSums) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Graph g = oracle::random_graph(rng);
        const double dt = 0.01 + static_cast<double>(trial);
        const LinearSystem sys = assemble_transport(g, dt);
        const auto cs = column_sums(sys.matrix);
        for (const Edge& e : g.edges()) {
            const double mass = e.length / dt;
            if (g.is_internal(e.downstream))
                EXPECT_NEAR(cs[e.id], mass, 1e-12 * (mass + e.coeff.c));
            else
                EXPECT_GE(cs[e.id], mass * (1 - 1e-12));
        }
    }
}

TEST(Transport, RejectsBadStep) {
    EXPECT_THROW(assemble_transport(line(2, 0.5, 0.5), 0.0), Error);
    EXPECT_THROW(assemble_transport(line(2, 0.5, 0.5), -1.0), Error);
}

TEST(TransportRhs, Examples) {
    const Graph g = line(4, 0.25, 0.5);
    const LinearSystem sys = assemble_transport(g, 0.1);
    const std::vector<double> zero(4, 0.0);
    EXPECT_EQ(build_rhs(sys, zero, BoundaryData{}, 0.1), zero);

    BoundaryData inflow;
    inflow.dirichlet[0] = [](double) { return 1.0; };
    const auto first = build_rhs(sys, zero, inflow, 0.1);
    EXPECT_DOUBLE_EQ(first[0], 0.5);
    for (std::size_t k = 1; k < 4; ++k) EXPECT_EQ(first[k], 0.0);

    const auto ones = build_rhs(sys, std::vector<double>(4, 1.0), BoundaryData{}, 0.1);
    for (double v : ones) EXPECT_DOUBLE_EQ(v, 2.5);

    EXPECT_THROW(build_rhs(sys, std::vector<double>(3, 0.0), inflow, 0.1), Error);
    BoundaryData wrong;
    wrong.dirichlet[2] = [](double) { return 1.0; };
    EXPECT_THROW(check_boundary(g, wrong), GraphError);
}

TEST(TransportRhs, SourceScaledByLength) {
    const Graph g = line(2, 0.5, 0.5);
    const LinearSystem sys = assemble_transport(g, 0.1);
    BoundaryData bc;
    bc.source = [](EdgeId, double t) { return 2.0 * t; };
    const auto rhs = build_rhs(sys, std::vector<double>(2, 0.0), bc, 0.5);
    EXPECT_DOUBLE_EQ(rhs[0], 0.5);
    EXPECT_DOUBLE_EQ(rhs[1], 0.5);
}

TEST(Diffusion, BranchBlocks) {
    const LinearSystem sys = assemble_diffusion(branch(0.0, 1.0));
    ASSERT_EQ(sys.matrix.size(), 4u);
    EXPECT_DOUBLE_EQ(sys.matrix.at(3, 3), 6.0);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_DOUBLE_EQ(sys.matrix.at(k, 3), -2.0);
        EXPECT_DOUBLE_EQ(sys.matrix.at(3, k), -2.0);
    }
    EXPECT_DOUBLE_EQ(row_sums(sys.matrix)[3], 0.0);
}

TEST(Diffusion, SymmetricZeroRowSums) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const Graph g = oracle::random_graph(rng);
        const LinearSystem sys = assemble_diffusion(g);
        const SparseMatrix& m = sys.matrix;
        const auto rs = row_sums(m);
        for (const Triplet& t : m.triplets()) {
            EXPECT_DOUBLE_EQ(t.value, m.at(t.col, t.row));
            if (t.row != t.col) {
                EXPECT_LE(t.value, 0.0);
            }
        }
        for (const Edge& e : g.edges()) {
            const bool touches = g.is_dirichlet(e.upstream) || g.is_dirichlet(e.downstream);
            if (touches)
                EXPECT_GT(rs[e.id], 0.0);
            else
                EXPECT_NEAR(rs[e.id], 0.0, 1e-12 * m.at(e.id, e.id));
        }
        for (std::size_t j = g.num_edges(); j < m.size(); ++j) EXPECT_NEAR(rs[j], 0.0, 1e-12 * m.at(j, j));
        EXPECT_TRUE(pattern_connected(m));
    }
}

TEST(Diffusion, SourceWithSeveralEdgesSplitsPattern) {
    // Cells meeting only at a Dirichlet node are not coupled.
    const Graph g = Graph::build({{{0, 0, 0}, DeclaredRole::automatic},
                                  {{1, 0, 0}, DeclaredRole::automatic},
                                  {{-1, 0, 0}, DeclaredRole::automatic}},
                                 {{0, 1, 1.0, {1.0, 1.0}}, {0, 2, 1.0, {1.0, 1.0}}});
    EXPECT_EQ(g.role(0), NodeRole::dirichlet_source);
    const LinearSystem sys = assemble_diffusion(g);
    EXPECT_EQ(sys.matrix.at(0, 1), 0.0);
    EXPECT_FALSE(pattern_connected(sys.matrix));
    EXPECT_TRUE(verify_certificates(sys.matrix).passes());
}

TEST(Diffusion, DirichletRhs) {
    const Graph g = Graph::build({{{0, 0, 0}, DeclaredRole::automatic}, {{1, 0, 0}, DeclaredRole::dirichlet}},
                                 {{0, 1, 0.5, {0.0, 3.0}}});
    const LinearSystem sys = assemble_diffusion_step(g, 0.25);
    EXPECT_DOUBLE_EQ(sys.matrix.at(0, 0), 0.5 / 0.25 + 2 * 12.0);
    BoundaryData bc;
    bc.dirichlet[0] = [](double) { return 1.0; };
    bc.dirichlet[1] = [](double) { return 2.0; };
    const auto rhs = build_rhs(sys, std::vector<double>{0.0}, bc, 0.25);
    EXPECT_DOUBLE_EQ(rhs[0], 12.0 * 1.0 + 12.0 * 2.0);
}

TEST(Diffusion, Preconditions) {
    EXPECT_THROW(assemble_diffusion(line(2, 0.5, 0.0, 0.0)), Error);
    // Neumann at both ends never pins the level.
    const Graph free = Graph::build({{{0, 0, 0}, DeclaredRole::neumann}, {{1, 0, 0}, DeclaredRole::automatic}},
                                    {{0, 1, 1.0, {0.0, 1.0}}});
    EXPECT_THROW(assemble_diffusion(free), Error);
}

TEST(DriftDiffusion, VanishingDiffusionIsTransport) {
    const Graph g = line(4, 0.25, 0.7, 1e-200);
    const LinearSystem dd = assemble_drift_diffusion(g, 0.2);
    const LinearSystem tr = assemble_transport(g, 0.2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(dd.matrix.at(i, j), tr.matrix.at(i, j), 1e-150);
}

TEST(DriftDiffusion, ZeroSpeedIsDiffusionStep) {
    const Graph g = branch(0.0, 0.7);
    const LinearSystem dd = assemble_drift_diffusion(g, 0.3);
    const LinearSystem ds = assemble_diffusion_step(g, 0.3);
    const LinearSystem a = assemble_diffusion(g);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_NEAR(dd.matrix.at(i, j), ds.matrix.at(i, j), 1e-14);
            const double mass = (i == j && i < 3) ? 1.0 / 0.3 : 0.0;
            EXPECT_NEAR(dd.matrix.at(i, j), mass + a.matrix.at(i, j), 1e-14);
        }
}

TEST(DriftDiffusion, BranchStructure) {
    const LinearSystem sys = assemble_drift_diffusion(branch(1.0, 1.0), 1.0);
    const CertificateReport r = verify_certificates(sys.matrix);
    EXPECT_TRUE(r.is_z_matrix);
    for (double s : r.column_sums) EXPECT_GE(s, -1e-14);
    EXPECT_TRUE(r.passes());
}

TEST(Oracle, TransportMatchesFluxEvaluation) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const Graph g = oracle::random_graph(rng);
        const double dt = 0.05 * (1 + trial % 7);
        const LinearSystem sys = assemble_transport(g, dt);
        const auto u = random_vector(rng, g.num_edges());
        EXPECT_LT(oracle::rel_diff(sys.matrix.multiply(u), oracle::apply_transport(g, dt, u)), 1e-13);
    }
}

TEST(Oracle, DiffusionMatchesFluxEvaluation) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        const Graph g = oracle::random_graph(rng);
        const double dt = 0.05 * (1 + trial % 7);
        const LinearSystem steady = assemble_diffusion(g);
        const LinearSystem stepped = assemble_diffusion_step(g, dt);
        const LinearSystem drift = assemble_drift_diffusion(g, dt);
        ASSERT_EQ(steady.layout.bif_nodes, oracle::bifurcation_nodes(g));
        const auto x = random_vector(rng, steady.layout.dimension());
        EXPECT_LT(oracle::rel_diff(steady.matrix.multiply(x), oracle::apply_diffusion(g, x)), 1e-13);
        EXPECT_LT(oracle::rel_diff(stepped.matrix.multiply(x), oracle::apply_diffusion_step(g, dt, x)), 1e-13);
        EXPECT_LT(oracle::rel_diff(drift.matrix.multiply(x), oracle::apply_drift_diffusion(g, dt, x)), 1e-13);
    }
}

TEST(Pattern, OnlyNeighbouringCouplings) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 40; ++trial) {
        const Graph g = oracle::random_graph(rng);
        const LinearSystem sys = assemble_drift_diffusion(g, 0.1);
        auto shares_plain_node = [&](EdgeId a, EdgeId b) {
            for (NodeId v : {g.edge(a).upstream, g.edge(a).downstream})
                if (g.role(v) != NodeRole::bifurcation && (v == g.edge(b).upstream || v == g.edge(b).downstream))
                    return true;
            return false;
        };
        auto touches = [&](EdgeId a, NodeId v) { return g.edge(a).upstream == v || g.edge(a).downstream == v; };
        const std::size_t ne = g.num_edges();
        for (const Triplet& t : sys.matrix.triplets()) {
            if (t.row == t.col) continue;
            if (t.row < ne && t.col < ne) {
                // Advective coupling through a bifurcation also links edges.
                const bool via_bif = [&] {
                    for (NodeId v : sys.layout.bif_nodes)
                        if (touches(t.row, v) && touches(t.col, v)) return true;
                    return false;
                }();
                EXPECT_TRUE(shares_plain_node(t.row, t.col) || via_bif) << t.row << "," << t.col;
            } else if (t.row < ne) {
                EXPECT_TRUE(touches(t.row, sys.layout.bif_nodes[t.col - ne]));
            } else if (t.col < ne) {
                EXPECT_TRUE(touches(t.col, sys.layout.bif_nodes[t.row - ne]));
            } else {
                ADD_FAILURE() << "bifurcation slots coupled directly";
            }
        }
    }
}

TEST(Schur, NoBifurcationsIsIdentity) {
    const LinearSystem sys = assemble_diffusion(line(3, 0.5, 0.0, 1.0));
    const SchurReduction s = schur_reduce(sys);
    EXPECT_EQ(s.n_bif(), 0u);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(s.reduced().matrix.at(i, j), sys.matrix.at(i, j));
}

TEST(Schur, BranchReducedSolveAgrees) {
    const LinearSystem sys = assemble_diffusion(branch(0.0, 1.0));
    const SchurReduction s = schur_reduce(sys);
    const CertificateReport r = verify_certificates(s.reduced().matrix);
    EXPECT_TRUE(r.is_z_matrix);
    EXPECT_TRUE(r.positive_diagonal);
    std::mt19937_64 rng(41);
    for (int i = 0; i < 10; ++i) {
        const auto b = random_vector(rng, 4);
        const auto full = solve(sys.matrix, b);
        const auto ue = solve(s.reduced().matrix, s.reduce_rhs(b));
        const auto ub = s.recover(ue, std::vector<double>(b.begin() + 3, b.end()));
        std::vector<double> stacked(ue);
        stacked.insert(stacked.end(), ub.begin(), ub.end());
        EXPECT_LT(oracle::rel_diff(stacked, full), 1e-10);
    }
}

TEST(Schur, RejectsNonPositiveBlock) {
    LinearSystem sys = assemble_diffusion(branch(0.0, 1.0));
    auto t = sys.matrix.triplets();
    for (Triplet& x : t)
        if (x.row == 3 && x.col == 3) x.value = -1.0;
    sys.matrix = SparseMatrix::from_triplets(4, t);
    EXPECT_THROW(schur_reduce(sys), Error);
}
