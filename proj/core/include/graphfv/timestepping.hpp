#pragma once

#include "graphfv/assembly.hpp"
#include "graphfv/graph.hpp"
#include "graphfv/sparse_lu.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace graphfv {

struct TimeGrid {
    double t0 = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;

    /// steps = round((t_end - t0) / dt); throws unless steps * dt matches to 1e-9.
    static TimeGrid make(double t0, double t_end, double dt);
    double time(std::size_t l) const { return t0 + static_cast<double>(l) * dt; }
};

struct SolutionState {
    double time = 0.0;
    std::vector<double> u_edges;
    std::vector<double> u_bif;

    double min_value() const;
    double max_value() const;
    double max_abs() const;
    /// Sum of length * value over edge unknowns.
    double mass(const Graph& g) const;
    /// Edge values followed by bifurcation values.
    std::vector<double> stacked() const;
};

using PlaceFunction = std::function<double(const EdgePlace&)>;
using PositionFunction = std::function<double(const Vec3&)>;

/// Samples u0 at cell midpoints and at bifurcation nodes.
SolutionState initialize(const Refinement& mesh, const UnknownLayout& layout, const PlaceFunction& u0,
                         double t0 = 0.0);

/// Position-based sampling using node coordinates.
SolutionState initialize(const Graph& g, const UnknownLayout& layout, const PositionFunction& u0, double t0 = 0.0);

enum class PositivityMode { warn, strict };

struct StepOptions {
    PositivityMode positivity = PositivityMode::warn;
    double positivity_tol = 1e-12;
    /// Several steps per sweep when the factor is a single chain.
    bool temporal_blocking = true;
    LuOptions lu;
};

/// Implicit Euler integrator holding one factorization of the system.
class TimeStepper {
public:
    TimeStepper(const Graph& g, LinearSystem sys, BoundaryData bc, StepOptions opts = {});
    ~TimeStepper();
    TimeStepper(TimeStepper&&) noexcept;
    TimeStepper& operator=(TimeStepper&&) noexcept;

    void reset(const SolutionState& s);
    /// Advances one step of size dt.
    void advance();
    void advance(std::size_t n);

    SolutionState state() const;
    double time() const noexcept;
    const LinearSystem& system() const noexcept;
    bool positivity_violated() const noexcept;
    /// Extrema of the latest step, or of the latest block of steps.
    double current_min() const noexcept;
    double current_max() const noexcept;
    /// Extrema over every state since reset().
    double running_min() const noexcept;
    double running_max() const noexcept;
    /// True when the permutation-free in-place kernel is used.
    bool uses_fast_path() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One implicit Euler step; factors the system on every call.
SolutionState step(const SolutionState& state, const LinearSystem& sys, const Graph& g, const BoundaryData& bc,
                   StepOptions opts = {});

struct RunOptions {
    /// Keep every n-th state; 0 keeps only the initial and final states.
    std::size_t snapshot_every = 0;
    StepOptions step;
    std::function<void(const SolutionState&)> on_snapshot;
};

struct RunResult {
    std::vector<SolutionState> snapshots;
    SolutionState final_state;
    std::size_t steps = 0;
    bool positivity_violation = false;
    double min_u = 0.0;
    double max_u = 0.0;
};

/// Assembles and factors once, then advances over grid.
RunResult run(const Graph& g, ProblemKind kind, const BoundaryData& bc, const SolutionState& initial,
              const TimeGrid& grid, const RunOptions& opts = {});

}  // namespace graphfv
