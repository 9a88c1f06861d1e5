#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shelving/error.hpp"

namespace shelving
{

enum class AtomLevel : std::uint8_t
{
    Ground0 = 0,
    Strong1 = 1,
    Weak2 = 2,
};

char const* to_string(AtomLevel level);

// Photons emitted since the start of the run. Strong photons are always
// absorbed by the detector; weak (primed) photons are never detected.
struct PhotonLedger
{
    std::uint32_t strong_count = 0;
    std::uint32_t weak_count = 0;

    auto operator<=>(PhotonLedger const&) const = default;
};

struct ReadyMarks
{
    bool atom_ready = false;
    bool detector_ready = false;

    static constexpr ReadyMarks none() { return {}; }
    static constexpr ReadyMarks both() { return {true, true}; }

    bool any() const { return atom_ready || detector_ready; }

    auto operator<=>(ReadyMarks const&) const = default;
};

/*!
 * One additive term of the atom/detector/radiation state: atomic level,
 * detector click count, photon ledger and the ready marks on the atom and
 * detector states. Labels have value semantics and a total order.
 */
struct ComponentLabel
{
    AtomLevel atom = AtomLevel::Ground0;
    std::uint32_t clicks = 0;
    PhotonLedger photons;
    ReadyMarks ready;

    bool is_ready() const { return ready.any(); }

    //! Same label with all ready marks cleared.
    ComponentLabel realized() const
    {
        ComponentLabel out = *this;
        out.ready = ReadyMarks::none();
        return out;
    }

    auto operator<=>(ComponentLabel const&) const = default;
};

std::string to_string(ComponentLabel const& label);

ComponentLabel make_label(AtomLevel atom,
                          long long clicks,
                          long long strong,
                          long long weak,
                          ReadyMarks ready = ReadyMarks::none());

struct ComponentLabelHash
{
    std::size_t operator()(ComponentLabel const& label) const noexcept;
};

struct Component
{
    ComponentLabel label;
    double mass = 0.0;  // square modulus
};

enum class EdgeKind : std::uint8_t
{
    StrongAbsorb,
    StrongEmit,
    WeakAbsorb,
    WeakEmit,
    CoherentSector,
};

char const* to_string(EdgeKind kind);

struct FlowEdge
{
    ComponentLabel from;
    ComponentLabel to;
    double rate = 0.0;
    EdgeKind kind = EdgeKind::StrongAbsorb;

    bool operator==(FlowEdge const&) const = default;
};

//! Checks the count bookkeeping an edge kind implies (emission edges add one
//! photon, absorb edges only move the atom). Throws InvalidEdge.
void check_edge_ledger(FlowEdge const& edge);

enum class Mode : std::uint8_t
{
    NuRules,
    OriginalWithObserver,
    OriginalNoObserver,
};

char const* to_string(Mode mode);

/*!
 * The full system state between two collapses: components with their masses
 * plus the flow edges connecting them.
 *
 * Labels are unique; inserting a duplicate is an error rather than a merge.
 * Every edge endpoint must already exist as a component.
 */
class ChainState
{
  public:
    ChainState() = default;
    explicit ChainState(Mode mode) : mode_(mode) {}

    std::size_t add_component(ComponentLabel const& label, double mass = 0.0);
    void add_edge(FlowEdge const& edge);

    std::optional<std::size_t> find(ComponentLabel const& label) const;
    std::size_t index_of(ComponentLabel const& label) const;

    std::span<Component const> components() const { return components_; }
    std::span<FlowEdge const> edges() const { return edges_; }
    std::size_t size() const { return components_.size(); }

    double mass(std::size_t i) const { return components_[i].mass; }
    double mass_of(ComponentLabel const& label) const { return mass(index_of(label)); }
    void set_mass(std::size_t i, double m) { components_[i].mass = m; }

    double time() const { return time_; }
    void set_time(double t) { time_ = t; }
    std::uint64_t epoch() const { return epoch_; }
    void set_epoch(std::uint64_t e) { epoch_ = e; }
    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }

  private:
    std::vector<Component> components_;
    std::vector<FlowEdge> edges_;
    double time_ = 0.0;
    std::uint64_t epoch_ = 0;
    Mode mode_ = Mode::NuRules;
};

double total_mass(ChainState const& state);

//! Label of the sole surviving component right after a collapse, marks cleared.
ComponentLabel label_of_realized(ChainState const& state);

//! Human-readable dump used in diagnostics.
std::string describe(ChainState const& state);

}  // namespace shelving
