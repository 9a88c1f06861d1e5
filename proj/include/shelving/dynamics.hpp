#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shelving/core_state.hpp"

namespace shelving
{

inline constexpr double kDefaultDtMax = 0.01;

//! Transition rates in units of the inverse strong lifetime.
struct RateSet
{
    double strong_absorb = 1.0;
    double strong_emit = 1.0;
    double weak_absorb = 1e-3;
    double weak_emit = 1e-3;

    double for_kind(EdgeKind kind) const;
    double max_rate() const;
    //! Mean duration of one absorb + emit cycle on the strong transition.
    double strong_cycle_time() const { return 1.0 / strong_absorb + 1.0 / strong_emit; }
    double weak_cycle_time() const { return 1.0 / weak_absorb + 1.0 / weak_emit; }

    //! Throws InvalidEdge unless every rate is positive and finite.
    void validate() const;

    bool operator==(RateSet const&) const = default;
};

/*!
 * Probability currents over one call to `step`.
 *
 * Edges are listed in the order of `ChainState::edges()` followed by any
 * active edges the state did not already hold. Edges that were not active
 * (blocked) carry exactly zero transport.
 */
struct CurrentReport
{
    double time = 0.0;  // end of the step
    double dt = 0.0;
    std::vector<FlowEdge> edges;
    std::vector<double> transported;  // mass moved across each edge during dt
    std::vector<ComponentLabel> labels;
    std::vector<double> inflow;   // time-averaged, per component
    std::vector<double> outflow;  // time-averaged, per component

    //! Time-averaged current J_e = transported / dt.
    double current(std::size_t edge) const { return transported[edge] / dt; }
    double net_inflow(std::size_t component) const
    {
        return inflow[component] - outflow[component];
    }
};

struct StepResult
{
    ChainState state;
    CurrentReport report;
};

struct IndexedEdge
{
    std::size_t from = 0;
    std::size_t to = 0;
    double rate = 0.0;
};

/*!
 * Exact one-step transport operator for first-order kinetics on a fixed
 * edge set: P = exp(K h) and its time integral Q = int_0^h exp(K s) ds.
 *
 * Both are built by uniformization, so every term of the series is
 * nonnegative: masses never go negative and components that cannot be
 * reached stay at exactly zero. Components without outflow keep a unit
 * diagonal exactly.
 */
class Propagator
{
  public:
    Propagator() = default;
    Propagator(std::size_t n, std::span<IndexedEdge const> edges, double h);

    std::size_t size() const { return n_; }
    double step_size() const { return h_; }

    //! out = P * in
    void advance(std::span<double const> in, std::span<double> out) const;
    //! out = Q * in, the time integral of the mass over the step
    void integrate(std::span<double const> in, std::span<double> out) const;
    double integrate_row(std::size_t row, std::span<double const> in) const;
    //! out = row * P (adjoint propagation of an importance row vector)
    void pull_back(std::span<double const> row, std::span<double> out) const;

    double transition(std::size_t row, std::size_t col) const;

  private:
    struct Sparse
    {
        std::vector<std::size_t> row_start;
        std::vector<std::size_t> cols;
        std::vector<double> vals;
    };

    static Sparse compress(std::vector<double> const& dense, std::size_t n);
    static void multiply(Sparse const& m, std::span<double const> in, std::span<double> out);

    std::size_t n_ = 0;
    double h_ = 0.0;
    Sparse p_;
    Sparse q_;
    std::vector<double> p_dense_;
};

/*!
 * Transports mass across the active edges for a time dt.
 *
 * dm_j/dt = sum_in rate * m_src - sum_out rate * m_j. Steps longer than
 * dt_max are split into equal sub-steps; currents are accumulated over all
 * sub-steps. Throws InvalidStep for dt <= 0 and UnknownComponent for edges
 * whose endpoints the state does not hold.
 */
StepResult step(ChainState const& state,
                std::span<FlowEdge const> active,
                double dt,
                double dt_max = kDefaultDtMax);

//! Net positive inflow max(0, in - out) into `target`; UnknownComponent if absent.
double currents_into(CurrentReport const& report, ComponentLabel const& target);

/*!
 * Brute-force reference solution: classical RK4 on the edge list with a
 * fixed step of 1e-4 of the fastest timescale. Only acyclic edge sets are
 * supported (OracleUnsupported otherwise). Intended for tests.
 */
ChainState integrate_exact_oracle(ChainState const& state,
                                  std::span<FlowEdge const> edges,
                                  double t);

}  // namespace shelving
