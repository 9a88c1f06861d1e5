#include "shelving/core_state.hpp"

#include <cmath>
#include <sstream>

namespace shelving
{

char const* to_string(ErrorCode code)
{
    switch (code)
    {
        case ErrorCode::InvalidLabel: return "InvalidLabel";
        case ErrorCode::DuplicateLabel: return "DuplicateLabel";
        case ErrorCode::UnknownComponent: return "UnknownComponent";
        case ErrorCode::InvalidEdge: return "InvalidEdge";
        case ErrorCode::NotCollapsed: return "NotCollapsed";
        case ErrorCode::InvalidStep: return "InvalidStep";
        case ErrorCode::OracleUnsupported: return "OracleUnsupported";
        case ErrorCode::IllegalHit: return "IllegalHit";
        case ErrorCode::InvalidDepth: return "InvalidDepth";
        case ErrorCode::NotExtensible: return "NotExtensible";
        case ErrorCode::EmptyLog: return "EmptyLog";
        case ErrorCode::NoWeakBranch: return "NoWeakBranch";
        case ErrorCode::LogFormat: return "LogFormat";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::InvariantBreach: return "InvariantBreach";
    }
    return "Unknown";
}

char const* to_string(AtomLevel level)
{
    switch (level)
    {
        case AtomLevel::Ground0: return "A0";
        case AtomLevel::Strong1: return "A1";
        case AtomLevel::Weak2: return "A2";
    }
    return "A?";
}

char const* to_string(EdgeKind kind)
{
    switch (kind)
    {
        case EdgeKind::StrongAbsorb: return "StrongAbsorb";
        case EdgeKind::StrongEmit: return "StrongEmit";
        case EdgeKind::WeakAbsorb: return "WeakAbsorb";
        case EdgeKind::WeakEmit: return "WeakEmit";
        case EdgeKind::CoherentSector: return "CoherentSector";
    }
    return "?";
}

char const* to_string(Mode mode)
{
    switch (mode)
    {
        case Mode::NuRules: return "nurules";
        case Mode::OriginalWithObserver: return "original_with_observer";
        case Mode::OriginalNoObserver: return "original_no_observer";
    }
    return "?";
}

std::string to_string(ComponentLabel const& label)
{
    // e.g. "_A0 _D1 s1 w0" where '_' marks a ready state
    std::ostringstream os;
    os << (label.ready.atom_ready ? "_" : "") << to_string(label.atom) << ' '
       << (label.ready.detector_ready ? "_" : "") << 'D' << label.clicks << " s"
       << label.photons.strong_count << " w" << label.photons.weak_count;
    return os.str();
}

ComponentLabel make_label(AtomLevel atom, long long clicks, long long strong, long long weak,
                          ReadyMarks ready)
{
    if (clicks < 0 || strong < 0 || weak < 0)
    {
        throw Error(ErrorCode::InvalidLabel, "photon and click counts must be nonnegative");
    }
    ComponentLabel out;
    out.atom = atom;
    out.clicks = static_cast<std::uint32_t>(clicks);
    out.photons.strong_count = static_cast<std::uint32_t>(strong);
    out.photons.weak_count = static_cast<std::uint32_t>(weak);
    out.ready = ready;
    return out;
}

std::size_t ComponentLabelHash::operator()(ComponentLabel const& label) const noexcept
{
    std::uint64_t h = static_cast<std::uint64_t>(label.atom);
    h = h * 0x100000001b3ull ^ label.clicks;
    h = h * 0x100000001b3ull ^ label.photons.strong_count;
    h = h * 0x100000001b3ull ^ label.photons.weak_count;
    h = h * 4 + (label.ready.atom_ready ? 2 : 0) + (label.ready.detector_ready ? 1 : 0);
    return static_cast<std::size_t>(h ^ (h >> 29));
}

void check_edge_ledger(FlowEdge const& edge)
{
    auto const& a = edge.from;
    auto const& b = edge.to;
    bool ok = false;
    switch (edge.kind)
    {
        case EdgeKind::StrongEmit:
            ok = b.photons.strong_count == a.photons.strong_count + 1
                 && b.clicks == a.clicks + 1 && b.photons.weak_count == a.photons.weak_count;
            break;
        case EdgeKind::WeakEmit:
            ok = b.photons.weak_count == a.photons.weak_count + 1
                 && b.photons.strong_count == a.photons.strong_count && b.clicks == a.clicks;
            break;
        case EdgeKind::StrongAbsorb:
        case EdgeKind::WeakAbsorb:
        case EdgeKind::CoherentSector:
            ok = a.photons == b.photons && a.clicks == b.clicks && a.atom != b.atom;
            break;
    }
    if (!ok)
    {
        throw Error(ErrorCode::InvalidEdge, std::string(to_string(edge.kind)) + " edge "
                                                + to_string(a) + " -> " + to_string(b)
                                                + " has inconsistent photon bookkeeping");
    }
}

std::size_t ChainState::add_component(ComponentLabel const& label, double mass)
{
    if (find(label))
    {
        throw Error(ErrorCode::DuplicateLabel, to_string(label));
    }
    if (!(mass >= 0.0))
    {
        throw Error(ErrorCode::InvalidLabel, "component mass must be nonnegative");
    }
    components_.push_back({label, mass});
    return components_.size() - 1;
}

void ChainState::add_edge(FlowEdge const& edge)
{
    if (!(edge.rate > 0.0) || !std::isfinite(edge.rate))
    {
        throw Error(ErrorCode::InvalidEdge, "edge rate must be positive and finite");
    }
    if (edge.from == edge.to)
    {
        throw Error(ErrorCode::InvalidEdge, "self-loop on " + to_string(edge.from));
    }
    if (!find(edge.from) || !find(edge.to))
    {
        throw Error(ErrorCode::UnknownComponent,
                    "edge endpoint " + to_string(find(edge.from) ? edge.to : edge.from));
    }
    edges_.push_back(edge);
}

std::optional<std::size_t> ChainState::find(ComponentLabel const& label) const
{
    for (std::size_t i = 0; i < components_.size(); ++i)
    {
        if (components_[i].label == label)
        {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t ChainState::index_of(ComponentLabel const& label) const
{
    if (auto i = find(label))
    {
        return *i;
    }
    throw Error(ErrorCode::UnknownComponent, to_string(label));
}

double total_mass(ChainState const& state)
{
    double sum = 0.0;
    for (auto const& c : state.components())
    {
        sum += c.mass;
    }
    return sum;
}

ComponentLabel label_of_realized(ChainState const& state)
{
    std::optional<std::size_t> survivor;
    for (std::size_t i = 0; i < state.size(); ++i)
    {
        if (state.mass(i) > 0.0)
        {
            if (survivor)
            {
                throw Error(ErrorCode::NotCollapsed, "more than one component carries mass");
            }
            survivor = i;
        }
    }
    if (!survivor || std::abs(state.mass(*survivor) - 1.0) > 1e-12)
    {
        throw Error(ErrorCode::NotCollapsed, "no component with unit mass");
    }
    return state.components()[*survivor].label.realized();
}

std::string describe(ChainState const& state)
{
    std::ostringstream os;
    os.precision(17);
    os << "ChainState epoch=" << state.epoch() << " time=" << state.time()
       << " mode=" << to_string(state.mode()) << " total_mass=" << total_mass(state) << '\n';
    for (auto const& c : state.components())
    {
        os << "  [" << to_string(c.label) << "] mass=" << c.mass << '\n';
    }
    for (auto const& e : state.edges())
    {
        os << "  " << to_string(e.from) << " -> " << to_string(e.to) << ' ' << to_string(e.kind)
           << " rate=" << e.rate << '\n';
    }
    return os.str();
}

}  // namespace shelving
