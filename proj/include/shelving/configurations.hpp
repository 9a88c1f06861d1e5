#pragma once

#include <optional>
#include <vector>

#include "shelving/core_state.hpp"
#include "shelving/dynamics.hpp"

namespace shelving
{

enum class LevelScheme : std::uint8_t
{
    V,                //!< both excited levels above ground
    Lambda,           //!< both levels below the pumped level
    CascadeWeakUp,    //!< weak level above ground, strong level below
    CascadeWeakDown,  //!< weak level below ground, strong level above
};

enum class Lasers : std::uint8_t
{
    StrongOnly,
    WeakOnly,
    Both,
};

struct ConfigKind
{
    LevelScheme scheme = LevelScheme::V;
    Lasers lasers = Lasers::Both;

    bool strong_on() const { return lasers != Lasers::WeakOnly; }
    bool weak_on() const { return lasers != Lasers::StrongOnly; }

    bool operator==(ConfigKind const&) const = default;
};

char const* to_string(LevelScheme scheme);
char const* to_string(Lasers lasers);

//! True when the strong cycle starts with the detected emission (A0 -> A1 + photon).
bool strong_emits_first(LevelScheme scheme);
//! True when the weak cycle starts with the weak-photon emission.
bool weak_emits_first(LevelScheme scheme);

enum class WeakEdgePosition : std::uint8_t
{
    TerminalInWeakCycle,
    InitialInWeakCycle,
};

WeakEdgePosition weak_edge_position(ConfigKind kind);

//! A node whose continuation was truncated and can be grown on demand.
struct FrontierNode
{
    ComponentLabel label;
    bool needs_strong = false;
    bool needs_weak = false;
};

/*!
 * Component graph of one epoch, rooted at the realized label of the last
 * collapse.
 *
 * Every ground-level node that is not ready spawns a strong cycle and a
 * weak cycle (for the active lasers). Ready nodes only continue along the
 * strong chain; those continuations are rule-4 blocked and never carry
 * flow. `depth` bounds the number of strong cycles along each strong chain
 * and the number of weak cycles along any path.
 */
struct EpochGraph
{
    ConfigKind kind;
    RateSet rates;
    int depth = 1;
    bool ready_marking = true;
    ComponentLabel root;
    std::vector<ComponentLabel> components;
    std::vector<FlowEdge> edges;
    std::vector<FrontierNode> frontier;

    std::optional<std::size_t> find(ComponentLabel const& label) const;
    bool in_frontier(ComponentLabel const& label) const;
    std::vector<ComponentLabel> frontier_labels() const;

    //! State with unit mass on the root and zero elsewhere.
    ChainState to_state(Mode mode, double time = 0.0, std::uint64_t epoch = 0) const;
};

/*!
 * Builds the epoch graph for `kind` rooted at `root`. A root above ground
 * first returns to ground along the second half of its own cycle. Throws
 * InvalidDepth for depth < 1.
 */
EpochGraph build_epoch(ConfigKind kind,
                       ComponentLabel const& root,
                       RateSet const& rates,
                       int depth,
                       bool ready_marking = true);

/*!
 * Grows the graph past a frontier node: one more strong cycle where the
 * strong chain was cut, and one more weak cycle (with a strong chain of the
 * graph's depth hanging off its end) where the weak branch was cut.
 * Throws NotExtensible when `label` is not on the frontier.
 */
EpochGraph extend_frontier(EpochGraph graph, ComponentLabel const& label);

/*!
 * The same dynamics with detector and photon counts projected out: one node
 * per atomic level, cyclic edges. Exact for the atomic populations whenever
 * no rule looks at the counts, i.e. when nothing is ever marked ready.
 */
EpochGraph lumped_atom_graph(ConfigKind kind, RateSet const& rates);

//! Adds the given offsets to every count of the label.
ComponentLabel shift_label(ComponentLabel label,
                           std::uint32_t clicks,
                           std::uint32_t strong,
                           std::uint32_t weak);

}  // namespace shelving
