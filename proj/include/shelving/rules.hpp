#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shelving/core_state.hpp"
#include "shelving/dynamics.hpp"
#include "shelving/rng.hpp"

namespace shelving
{

//! Which collapse rules are live. Derived from the operating mode.
struct RuleSet
{
    bool ready_marking = true;
    bool edge_blocking = true;
    bool stochastic_hits = true;

    bool operator==(RuleSet const&) const = default;
};

RuleSet apply_mode(Mode mode);
RuleSet apply_mode(ChainState const& state);

//! A new component is decoherent with its parent iff the detector recorded
//! a different number of clicks.
bool is_decoherent(ComponentLabel const& parent, ComponentLabel const& child);

/*!
 * Returns `child` with ready marks on the atom and detector when it was born
 * decoherent, or when its parent is already ready (every component in the
 * detector-entangled sector is itself a new, incoherent component).
 */
ComponentLabel mark_ready(ComponentLabel const& parent, ComponentLabel child, bool decoherent);

//! An edge is blocked when both endpoints carry a ready mark on the same object.
bool is_blocked(FlowEdge const& edge);
std::vector<FlowEdge> blocked_edges(ChainState const& state);
std::vector<FlowEdge> active_edges(ChainState const& state, RuleSet const& rules);
std::vector<ComponentLabel> ready_targets(ChainState const& state);

struct HitEvent
{
    double time = 0.0;
    ComponentLabel target;
    std::uint64_t epoch = 0;
    double delivered_mass_at_hit = 0.0;
};

//! A ready component that holds mass but currently receives no current.
struct PhantomRecord
{
    ComponentLabel label;
    double mass_frozen = 0.0;
    double dormant_since = 0.0;
};

std::vector<PhantomRecord> find_phantoms(ChainState const& state, CurrentReport const& report);

/*!
 * Stochastic trigger whose hit time has probability density equal to the
 * net positive current J+ into the ready components.
 *
 * At the start of each epoch a threshold u ~ U[0,1) is drawn; the hit
 * lands where the mass delivered into ready components since the epoch
 * began first reaches u. A target that receives a total mass m is therefore
 * hit with probability exactly m, a target with zero inflow is never hit,
 * and an epoch that delivers all of its mass is certain to end in a hit.
 * Within one step the targets' deliveries are laid end to end in the order
 * given, which yields at most one hit per step.
 */
class HitTrigger
{
  public:
    struct Crossing
    {
        std::size_t target = 0;  // index into the deliveries passed to feed()
        double fraction = 0.0;   // position of the hit within the step, in [0, 1]
    };

    explicit HitTrigger(RandomStream& rng) : rng_(&rng) {}

    //! Begins a new epoch: draws a fresh threshold and clears the tally.
    void arm();

    double threshold() const { return threshold_; }
    double delivered() const { return delivered_; }

    //! Adds one step's deliveries (mass per target); reports the crossing if any.
    std::optional<Crossing> feed(std::span<double const> deliveries);

    /*!
     * Consumes a step report. Each target's delivery is J+ * dt. Returns the
     * hit, timed by linear interpolation within the step, or nothing.
     */
    std::optional<HitEvent> observe(CurrentReport const& report,
                                    std::span<ComponentLabel const> targets,
                                    std::uint64_t epoch);

  private:
    RandomStream* rng_;
    double threshold_ = 0.0;
    double delivered_ = 0.0;
    std::vector<std::pair<ComponentLabel, double>> per_target_;
};

/*!
 * Reduces the state onto the hit component: a single component carrying the
 * realized label (marks cleared) with mass exactly 1, no edges, epoch + 1.
 * Throws IllegalHit if the target is absent or not ready.
 */
ChainState collapse(ChainState const& state, HitEvent const& hit);

}  // namespace shelving
