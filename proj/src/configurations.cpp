#include "shelving/configurations.hpp"

#include <algorithm>

#include "shelving/rules.hpp"

namespace shelving
{

char const* to_string(LevelScheme scheme)
{
    switch (scheme)
    {
        case LevelScheme::V: return "v";
        case LevelScheme::Lambda: return "lambda";
        case LevelScheme::CascadeWeakUp: return "cascade_weak_up";
        case LevelScheme::CascadeWeakDown: return "cascade_weak_down";
    }
    return "?";
}

char const* to_string(Lasers lasers)
{
    switch (lasers)
    {
        case Lasers::StrongOnly: return "strong_only";
        case Lasers::WeakOnly: return "weak_only";
        case Lasers::Both: return "both";
    }
    return "?";
}

bool strong_emits_first(LevelScheme scheme)
{
    return scheme == LevelScheme::Lambda || scheme == LevelScheme::CascadeWeakUp;
}

bool weak_emits_first(LevelScheme scheme)
{
    return scheme == LevelScheme::Lambda || scheme == LevelScheme::CascadeWeakDown;
}

WeakEdgePosition weak_edge_position(ConfigKind kind)
{
    return weak_emits_first(kind.scheme) ? WeakEdgePosition::InitialInWeakCycle
                                         : WeakEdgePosition::TerminalInWeakCycle;
}

std::optional<std::size_t> EpochGraph::find(ComponentLabel const& label) const
{
    auto it = std::find(components.begin(), components.end(), label);
    if (it == components.end())
    {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - components.begin());
}

bool EpochGraph::in_frontier(ComponentLabel const& label) const
{
    return std::any_of(frontier.begin(), frontier.end(),
                       [&](FrontierNode const& f) { return f.label == label; });
}

std::vector<ComponentLabel> EpochGraph::frontier_labels() const
{
    std::vector<ComponentLabel> out;
    for (auto const& f : frontier)
    {
        out.push_back(f.label);
    }
    return out;
}

ChainState EpochGraph::to_state(Mode mode, double time, std::uint64_t epoch) const
{
    ChainState state(mode);
    for (auto const& c : components)
    {
        state.add_component(c, c == root ? 1.0 : 0.0);
    }
    for (auto const& e : edges)
    {
        state.add_edge(e);
    }
    state.set_time(time);
    state.set_epoch(epoch);
    return state;
}

ComponentLabel shift_label(ComponentLabel label, std::uint32_t clicks, std::uint32_t strong,
                           std::uint32_t weak)
{
    label.clicks += clicks;
    label.photons.strong_count += strong;
    label.photons.weak_count += weak;
    return label;
}

namespace
{

class Builder
{
  public:
    explicit Builder(EpochGraph& g) : g_(g) {}

    // Adds the node if new; returns whether it was added.
    bool add_node(ComponentLabel const& label)
    {
        if (g_.find(label))
        {
            return false;
        }
        g_.components.push_back(label);
        return true;
    }

    void add_edge(ComponentLabel const& from, ComponentLabel const& to, EdgeKind kind)
    {
        g_.edges.push_back({from, to, g_.rates.for_kind(kind), kind});
    }

    ComponentLabel child(ComponentLabel const& parent, AtomLevel atom, std::uint32_t dclicks,
                         std::uint32_t dstrong, std::uint32_t dweak) const
    {
        ComponentLabel c = shift_label(parent.realized(), dclicks, dstrong, dweak);
        c.atom = atom;
        if (!g_.ready_marking)
        {
            return c;
        }
        return mark_ready(parent, c, is_decoherent(parent, c));
    }

    // Moves one step along an edge; returns the new node and whether it is fresh.
    std::pair<ComponentLabel, bool> hop(ComponentLabel const& from, AtomLevel atom,
                                        EdgeKind kind)
    {
        std::uint32_t const emit_strong = kind == EdgeKind::StrongEmit ? 1 : 0;
        std::uint32_t const emit_weak = kind == EdgeKind::WeakEmit ? 1 : 0;
        ComponentLabel const to = child(from, atom, emit_strong, emit_strong, emit_weak);
        bool const fresh = add_node(to);
        add_edge(from, to, kind);
        return {to, fresh};
    }

    // Ground -> ground along the strong transition.
    std::pair<ComponentLabel, bool> strong_cycle(ComponentLabel const& ground)
    {
        bool const emit_first = strong_emits_first(g_.kind.scheme);
        auto [mid, fresh_mid] = hop(ground, AtomLevel::Strong1,
                                    emit_first ? EdgeKind::StrongEmit : EdgeKind::StrongAbsorb);
        if (!fresh_mid)
        {
            return {mid, false};
        }
        return hop(mid, AtomLevel::Ground0,
                   emit_first ? EdgeKind::StrongAbsorb : EdgeKind::StrongEmit);
    }

    std::pair<ComponentLabel, bool> weak_cycle(ComponentLabel const& ground)
    {
        bool const emit_first = weak_emits_first(g_.kind.scheme);
        auto [mid, fresh_mid] = hop(ground, AtomLevel::Weak2,
                                    emit_first ? EdgeKind::WeakEmit : EdgeKind::WeakAbsorb);
        if (!fresh_mid)
        {
            return {mid, false};
        }
        return hop(mid, AtomLevel::Ground0,
                   emit_first ? EdgeKind::WeakAbsorb : EdgeKind::WeakEmit);
    }

    void mark_frontier(ComponentLabel const& node, bool strong, bool weak)
    {
        if (!strong && !weak)
        {
            return;
        }
        for (auto& f : g_.frontier)
        {
            if (f.label == node)
            {
                f.needs_strong = f.needs_strong || strong;
                f.needs_weak = f.needs_weak || weak;
                return;
            }
        }
        g_.frontier.push_back({node, strong, weak});
    }

    // Grows a ground node with `strong_left` strong cycles along its strong
    // chain and `weak_left` weak cycles along its weak branch.
    void grow(ComponentLabel const& node, int strong_left, int weak_left)
    {
        bool cut_strong = false;
        bool cut_weak = false;
        if (g_.kind.strong_on())
        {
            if (strong_left > 0)
            {
                auto [end, fresh] = strong_cycle(node);
                if (fresh)
                {
                    grow(end, strong_left - 1, end.is_ready() ? 0 : weak_left);
                }
            }
            else
            {
                cut_strong = true;
            }
        }
        if (g_.kind.weak_on() && !node.is_ready())
        {
            if (weak_left > 0)
            {
                auto [end, fresh] = weak_cycle(node);
                if (fresh)
                {
                    grow(end, g_.depth, weak_left - 1);
                }
            }
            else
            {
                cut_weak = true;
            }
        }
        mark_frontier(node, cut_strong, cut_weak);
    }

    // Brings a root above ground back down along the second half of its cycle.
    ComponentLabel descend(ComponentLabel const& root)
    {
        switch (root.atom)
        {
            case AtomLevel::Ground0:
                return root;
            case AtomLevel::Strong1:
            {
                bool const emit_first = strong_emits_first(g_.kind.scheme);
                return hop(root, AtomLevel::Ground0,
                           emit_first ? EdgeKind::StrongAbsorb : EdgeKind::StrongEmit)
                    .first;
            }
            case AtomLevel::Weak2:
            {
                bool const emit_first = weak_emits_first(g_.kind.scheme);
                return hop(root, AtomLevel::Ground0,
                           emit_first ? EdgeKind::WeakAbsorb : EdgeKind::WeakEmit)
                    .first;
            }
        }
        return root;
    }

  private:
    EpochGraph& g_;
};

}  // namespace

EpochGraph build_epoch(ConfigKind kind, ComponentLabel const& root, RateSet const& rates,
                       int depth, bool ready_marking)
{
    if (depth < 1)
    {
        throw Error(ErrorCode::InvalidDepth, "depth must be at least 1");
    }
    rates.validate();
    EpochGraph g;
    g.kind = kind;
    g.rates = rates;
    g.depth = depth;
    g.ready_marking = ready_marking;
    g.root = root;
    Builder b(g);
    b.add_node(root);
    ComponentLabel const ground = b.descend(root);
    b.grow(ground, depth, ground.is_ready() ? 0 : depth);
    return g;
}

EpochGraph extend_frontier(EpochGraph graph, ComponentLabel const& label)
{
    auto it = std::find_if(graph.frontier.begin(), graph.frontier.end(),
                           [&](FrontierNode const& f) { return f.label == label; });
    if (it == graph.frontier.end())
    {
        throw Error(ErrorCode::NotExtensible, to_string(label) + " is not on the frontier");
    }
    FrontierNode const node = *it;
    graph.frontier.erase(it);

    Builder b(graph);
    if (node.needs_strong)
    {
        auto [end, fresh] = b.strong_cycle(node.label);
        if (fresh)
        {
            bool const weak = graph.kind.weak_on() && !end.is_ready();
            b.mark_frontier(end, true, weak);
        }
    }
    if (node.needs_weak)
    {
        auto [end, fresh] = b.weak_cycle(node.label);
        if (fresh)
        {
            b.grow(end, graph.depth, 0);
        }
    }
    return graph;
}

EpochGraph lumped_atom_graph(ConfigKind kind, RateSet const& rates)
{
    rates.validate();
    EpochGraph g;
    g.kind = kind;
    g.rates = rates;
    g.depth = 1;
    g.ready_marking = false;
    auto const a0 = make_label(AtomLevel::Ground0, 0, 0, 0);
    auto const a1 = make_label(AtomLevel::Strong1, 0, 0, 0);
    auto const a2 = make_label(AtomLevel::Weak2, 0, 0, 0);
    g.root = a0;
    g.components.push_back(a0);
    auto link = [&](ComponentLabel const& from, ComponentLabel const& to, EdgeKind k) {
        g.edges.push_back({from, to, rates.for_kind(k), k});
    };
    if (kind.strong_on())
    {
        g.components.push_back(a1);
        bool const emit_first = strong_emits_first(kind.scheme);
        link(a0, a1, emit_first ? EdgeKind::StrongEmit : EdgeKind::StrongAbsorb);
        link(a1, a0, emit_first ? EdgeKind::StrongAbsorb : EdgeKind::StrongEmit);
    }
    if (kind.weak_on())
    {
        g.components.push_back(a2);
        bool const emit_first = weak_emits_first(kind.scheme);
        link(a0, a2, emit_first ? EdgeKind::WeakEmit : EdgeKind::WeakAbsorb);
        link(a2, a0, emit_first ? EdgeKind::WeakAbsorb : EdgeKind::WeakEmit);
    }
    return g;
}

}  // namespace shelving
