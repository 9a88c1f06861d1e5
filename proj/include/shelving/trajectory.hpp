#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "shelving/configurations.hpp"
#include "shelving/dynamics.hpp"
#include "shelving/event_log.hpp"
#include "shelving/rng.hpp"
#include "shelving/rules.hpp"

namespace shelving
{

struct Scenario
{
    ConfigKind kind;
    RateSet rates;
    Mode mode = Mode::NuRules;
    double dt_max = kDefaultDtMax;
    int depth = 2;
    //! Unmarked frontier nodes are grown once they hold more mass than this.
    double extension_threshold = 1e-9;
    //! Width of the time bins used for WeakEdgeCrossing records.
    double crossing_bin = 0.25;
    //! Largest tolerated |total mass - 1| between collapses.
    double mass_tolerance = 1e-7;
};

struct TrajectoryStats
{
    std::uint64_t steps = 0;
    std::uint64_t hits = 0;
    std::uint64_t collapse_checks = 0;  // collapses whose postconditions held
    std::uint64_t extensions = 0;
    double max_mass_drift = 0.0;
    double end_time = 0.0;
    bool stalled = false;  // an epoch outlived max_epoch_duration
};

struct TrajectoryResult
{
    EventLog log;
    TrajectoryStats stats;
    ChainState final_state;  // state at end_time, absolute labels
};

struct RunLimits
{
    double duration = 0.0;
    //! Stop (and flag `stalled`) if one epoch lasts longer than this.
    std::optional<double> max_epoch_duration;
    //! Called after every hit with the hit and its epoch's start time;
    //! returning true ends the run.
    std::function<bool(HitEvent const&, double)> stop_after_hit;
};

/*!
 * Single seeded trajectory of the driven atom.
 *
 * Each epoch starts from the realized label of the previous collapse and
 * transports mass over the epoch graph with a cached exact propagator.
 * The J+ trigger picks the hit; the hit is applied through `collapse` and
 * its postconditions are verified. Runs without any possible ready
 * component (no observer, or weak laser only) evolve the count-free atomic
 * graph instead and never collapse.
 */
class Trajectory
{
  public:
    Trajectory(Scenario scenario, std::uint64_t seed);
    ~Trajectory();
    Trajectory(Trajectory&&) noexcept;
    Trajectory& operator=(Trajectory&&) noexcept;

    TrajectoryResult run(RunLimits const& limits);
    TrajectoryResult run(double duration) { return run(RunLimits{duration, {}, {}}); }

  private:
    struct Compiled;

    Compiled const& compiled_for(AtomLevel root_atom);
    Compiled const& extended(Compiled const& from, ComponentLabel const& label);
    std::unique_ptr<Compiled> compile(EpochGraph graph) const;

    TrajectoryResult run_chain(RunLimits const& limits);
    TrajectoryResult run_lumped(RunLimits const& limits);

    Scenario scenario_;
    RuleSet rules_;
    RandomStream rng_;
    std::vector<std::unique_ptr<Compiled>> store_;
    std::map<AtomLevel, Compiled const*> roots_;
};

}  // namespace shelving
