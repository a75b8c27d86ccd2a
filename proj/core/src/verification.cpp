#include "graphfv/verification.hpp"

#include "graphfv/cases.hpp"
#include "graphfv/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

namespace graphfv {

namespace {

constexpr double domain_slack = 1e-12;

void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error("exact solution evaluated at negative time");
}

void check_range(double x, double lo, double hi) {
    if (!(x >= lo - domain_slack && x <= hi + domain_slack)) throw Error("exact solution evaluated outside its domain");
}

}  // namespace

double l1_error_absolute(const SolutionState& state, const ExactSolution& exact, const Refinement& mesh) {
    const Graph& g = mesh.graph;
    if (state.u_edges.size() != g.num_edges()) throw Error("dimension mismatch in l1_error");
    double num = 0.0;
    for (const Edge& e : g.edges())
        num += e.length * std::abs(state.u_edges[e.id] - exact.value(mesh.cell_midpoints[e.id], state.time));
    return num;
}

double l1_error(const SolutionState& state, const ExactSolution& exact, const Refinement& mesh) {
    const Graph& g = mesh.graph;
    if (state.u_edges.size() != g.num_edges()) throw Error("dimension mismatch in l1_error");
    double num = 0.0, den = 0.0;
    for (const Edge& e : g.edges()) {
        const double ue = exact.value(mesh.cell_midpoints[e.id], state.time);
        num += e.length * std::abs(state.u_edges[e.id] - ue);
        den += e.length * std::abs(ue);
    }
    if (!(den > 0.0)) throw Error("exact solution has zero norm");
    return num / den;
}

double l1_error(const SolutionState& state, const ExactSolution& exact, const Refinement& mesh, ErrorNorm norm) {
    return norm == ErrorNorm::absolute ? l1_error_absolute(state, exact, mesh) : l1_error(state, exact, mesh);
}

double exact_tc1a(double x, double t, double c) {
    check_time(t);
    check_range(x, 0.0, 1.0);
    return x <= c * t ? 1.0 : 0.0;
}

double exact_tc1b(double x, double t, double c) {
    check_time(t);
    check_range(x, 0.0, 1.0);
    const double xi = x - c * t;
    return xi >= 0.0 ? std::sin(std::numbers::pi * xi) : 0.0;
}

double exact_tc2(double x, double t, double nu) {
    check_time(t);
    check_range(x, 0.0, 1.0);
    return std::sin(std::numbers::pi * x) * std::exp(-nu * std::numbers::pi * std::numbers::pi * t);
}

double exact_tc3(Tc3Edge edge, double x, double t, const Tc3Parameters& p) {
    check_time(t);
    check_range(x, 0.0, p.length);
    if (edge == Tc3Edge::e2) return x <= p.c2 * t ? p.inflow : 0.0;
    const double c = edge == Tc3Edge::e1 ? p.c1 : p.c3;
    const double tau = t - p.arrival_time();
    return tau > 0.0 && x <= c * tau ? p.downstream_amplitude() : 0.0;
}

double exact_tc4(double s, double t, double nu) {
    check_time(t);
    check_range(s, 0.0, 1.0);
    const double k = 0.5 * std::numbers::pi;
    return std::cos(k * s) * std::exp(-nu * k * k * t);
}

std::optional<OrderFit> fit_order(std::vector<std::pair<double, double>> points, double saturation_ratio) {
    std::erase_if(points, [](const auto& p) { return !(p.first > 0.0) || !(p.second > 0.0); });
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::pair<double, double>> kept;
    for (const auto& p : points) {
        if (!kept.empty() && kept.back().second / p.second < saturation_ratio) continue;
        kept.push_back(p);
    }
    if (kept.size() < 2) return std::nullopt;
    const double n = static_cast<double>(kept.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [h, e] : kept) {
        const double x = std::log(h), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0)) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / denom;
    const double icpt = (sy - slope * sx) / n;
    double ss = 0.0;
    for (const auto& [h, e] : kept) {
        const double r = std::log(e) - (icpt + slope * std::log(h));
        ss += r * r;
    }
    return OrderFit{slope, std::sqrt(ss / n), kept.size()};
}

std::optional<double> ConvergenceReport::error_at(double h, double dt) const {
    for (const auto& r : rows)
        if (std::abs(r.h - h) <= 1e-12 * h && std::abs(r.dt - dt) <= 1e-12 * dt) return r.error;
    return std::nullopt;
}

void write_csv(std::ostream& os, const ConvergenceReport& report) {
    char buf[128];
    os << "case,h,dt,error\n";
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g", r.h, r.dt, r.error);
        os << report.label << ',' << buf << '\n';
    }
}

ConvergenceReport convergence_study(const TestCase& tc, std::span<const double> h_list,
                                    std::span<const double> dt_list, const StudyOptions& opts) {
    if (h_list.empty() || dt_list.empty()) throw Error("convergence study needs nonempty h and dt lists");
    if (!tc.exact) throw Error("case " + tc.label + " has no exact solution");
    std::vector<ConvergenceRow> rows;
    for (double h : h_list)
        for (double dt : dt_list) rows.push_back({h, dt, 0.0});

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            try {
                rows[i].error = *run_case(tc, rows[i].h, rows[i].dt, opts.run, opts.norm).error;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::clamp<std::size_t>(opts.threads, 1, rows.size());
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ConvergenceReport report;
    report.label = tc.label;
    report.rows = rows;
    const double h_min = *std::min_element(h_list.begin(), h_list.end());
    const double dt_min = *std::min_element(dt_list.begin(), dt_list.end());
    std::vector<std::pair<double, double>> sp, tp;
    for (const auto& r : rows) {
        if (r.dt == dt_min) sp.emplace_back(r.h, r.error);
        if (r.h == h_min) tp.emplace_back(r.dt, r.error);
    }
    report.space = fit_order(sp);
    report.time = fit_order(tp);
    return report;
}

std::map<NodeId, double> junction_residuals(const SolutionState& state, const Graph& g, ProblemKind kind) {
    if (state.u_edges.size() != g.num_edges()) throw Error("dimension mismatch in junction_residuals");
    std::map<NodeId, double> out;
    const bool advective = kind != ProblemKind::diffusion;
    const bool diffusive = kind != ProblemKind::transport;
    std::size_t slot = 0;
    for (const Node& n : g.nodes()) {
        const bool bif = n.role == NodeRole::bifurcation;
        if (!g.is_internal(n.id)) continue;
        double r = 0.0;
        if (advective) {
            const auto w = upwind_weights(g, n.id);
            double u_node = 0.0, inflow = 0.0, c_out = 0.0;
            for (const auto& [e, wj] : w) u_node += wj * state.u_edges[e];
            for (EdgeId e : g.incoming(n.id)) inflow += g.edge(e).coeff.c * state.u_edges[e];
            for (EdgeId e : g.outgoing(n.id)) c_out += g.edge(e).coeff.c;
            r += std::abs(inflow - c_out * u_node);
        }
        if (diffusive && bif) {
            if (slot >= state.u_bif.size()) throw Error("state has fewer bifurcation values than the graph");
            const double ub = state.u_bif[slot];
            double flux = 0.0;
            for (auto list : {g.incoming(n.id), g.outgoing(n.id)})
                for (EdgeId e : list) {
                    const Edge& ed = g.edge(e);
                    flux += 2.0 * ed.coeff.nu / ed.length * (state.u_edges[e] - ub);
                }
            r += std::abs(flux);
        }
        if (bif) ++slot;
        out[n.id] = r;
    }
    return out;
}

}  // namespace graphfv
