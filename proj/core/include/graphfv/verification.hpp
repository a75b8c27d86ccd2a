#pragma once

#include "graphfv/assembly.hpp"
#include "graphfv/graph.hpp"
#include "graphfv/timestepping.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphfv {

struct ExactSolution {
    std::string label;
    /// Value at a point of the base graph at time t.
    std::function<double(const EdgePlace&, double)> value;
};

enum class ErrorNorm { absolute, normalized };

/// Sum of |e_k| |u_k - u_ex(midpoint_k, t)| divided by sum of |e_k| |u_ex(midpoint_k, t)|.
double l1_error(const SolutionState& state, const ExactSolution& exact, const Refinement& mesh);

/// Numerator of l1_error alone.
double l1_error_absolute(const SolutionState& state, const ExactSolution& exact, const Refinement& mesh);

double l1_error(const SolutionState& state, const ExactSolution& exact, const Refinement& mesh, ErrorNorm norm);

// Closed-form solutions. Positions are distances along the unit line, or
// along an edge from its upstream end for the bifurcation cases.

/// Rectangular front entering [0, 1] with speed c.
double exact_tc1a(double x, double t, double c = 0.5);
/// sin(pi (x - c t)), zero behind the inflow.
double exact_tc1b(double x, double t, double c = 0.5);
/// sin(pi x) exp(-nu pi^2 t).
double exact_tc2(double x, double t, double nu = 2.0);

enum class Tc3Edge { e1, e2, e3 };

struct Tc3Parameters {
    double length = 2.0;
    double c1 = 5.0;
    double c2 = 10.0;
    double c3 = 5.0;
    double inflow = 1.0;

    /// Time at which the front on e2 reaches the bifurcation.
    double arrival_time() const { return length / c2; }
    /// Amplitude leaving the bifurcation: c2 / (c1 + c3) * inflow.
    double downstream_amplitude() const { return c2 / (c1 + c3) * inflow; }
};

double exact_tc3(Tc3Edge edge, double x, double t, const Tc3Parameters& p = {});

/// cos(pi s / 2) exp(-nu pi^2 t / 4), s measured from the centre of the star.
double exact_tc4(double s, double t, double nu = 4.0);

/// Least-squares slope of log(error) against log(parameter).
struct OrderFit {
    double order = 0.0;
    double residual = 0.0;
    std::size_t points_used = 0;
};

/// Points are (parameter, error). Scanning from coarse to fine, a point whose
/// error is less than saturation_ratio times smaller than the last kept point
/// is dropped. Returns nothing when fewer than two points remain.
std::optional<OrderFit> fit_order(std::vector<std::pair<double, double>> points, double saturation_ratio = 1.2);

struct ConvergenceRow {
    double h = 0.0;
    double dt = 0.0;
    double error = 0.0;
};

struct ConvergenceReport {
    std::string label;
    std::vector<ConvergenceRow> rows;
    std::optional<OrderFit> space;  ///< over h at the finest dt
    std::optional<OrderFit> time;   ///< over dt at the finest h

    std::optional<double> error_at(double h, double dt) const;
};

void write_csv(std::ostream& os, const ConvergenceReport& report);

struct TestCase;

struct StudyOptions {
    std::size_t threads = 1;
    std::optional<ErrorNorm> norm;  ///< defaults to the case's norm
    RunOptions run;
};

/// Runs every (h, dt) pair of the two lists and fits orders.
ConvergenceReport convergence_study(const TestCase& tc, std::span<const double> h_list,
                                    std::span<const double> dt_list, const StudyOptions& opts = {});

/// Imbalance of the scheme's numerical fluxes at internal nodes.
std::map<NodeId, double> junction_residuals(const SolutionState& state, const Graph& g, ProblemKind kind);

}  // namespace graphfv
