#include "shelving/rules.hpp"

#include <algorithm>

namespace shelving
{

RuleSet apply_mode(Mode mode)
{
    switch (mode)
    {
        case Mode::NuRules:
        case Mode::OriginalWithObserver:
            return RuleSet{true, true, true};
        case Mode::OriginalNoObserver:
            return RuleSet{false, false, false};
    }
    return RuleSet{};
}

RuleSet apply_mode(ChainState const& state)
{
    return apply_mode(state.mode());
}

bool is_decoherent(ComponentLabel const& parent, ComponentLabel const& child)
{
    return parent.clicks != child.clicks;
}

ComponentLabel mark_ready(ComponentLabel const& parent, ComponentLabel child, bool decoherent)
{
    if (decoherent || parent.is_ready())
    {
        child.ready = ReadyMarks::both();
    }
    else
    {
        child.ready = ReadyMarks::none();
    }
    return child;
}

bool is_blocked(FlowEdge const& edge)
{
    return (edge.from.ready.atom_ready && edge.to.ready.atom_ready)
           || (edge.from.ready.detector_ready && edge.to.ready.detector_ready);
}

std::vector<FlowEdge> blocked_edges(ChainState const& state)
{
    std::vector<FlowEdge> out;
    for (auto const& e : state.edges())
    {
        if (is_blocked(e))
        {
            out.push_back(e);
        }
    }
    return out;
}

std::vector<FlowEdge> active_edges(ChainState const& state, RuleSet const& rules)
{
    std::vector<FlowEdge> out;
    for (auto const& e : state.edges())
    {
        if (!rules.edge_blocking || !is_blocked(e))
        {
            out.push_back(e);
        }
    }
    return out;
}

std::vector<ComponentLabel> ready_targets(ChainState const& state)
{
    std::vector<ComponentLabel> out;
    for (auto const& c : state.components())
    {
        if (c.label.is_ready())
        {
            out.push_back(c.label);
        }
    }
    return out;
}

std::vector<PhantomRecord> find_phantoms(ChainState const& state, CurrentReport const& report)
{
    std::vector<PhantomRecord> out;
    for (auto const& c : state.components())
    {
        if (c.label.is_ready() && c.mass > 0.0 && currents_into(report, c.label) == 0.0)
        {
            out.push_back({c.label, c.mass, report.time});
        }
    }
    return out;
}

void HitTrigger::arm()
{
    threshold_ = rng_->uniform();
    delivered_ = 0.0;
    per_target_.clear();
}

std::optional<HitTrigger::Crossing> HitTrigger::feed(std::span<double const> deliveries)
{
    double step_total = 0.0;
    for (double d : deliveries)
    {
        step_total += d;
    }
    if (step_total <= 0.0 || delivered_ + step_total < threshold_)
    {
        delivered_ += step_total;
        return std::nullopt;
    }
    double const need = threshold_ - delivered_;
    double running = 0.0;
    std::size_t target = deliveries.size() - 1;
    for (std::size_t i = 0; i < deliveries.size(); ++i)
    {
        if (deliveries[i] > 0.0 && running + deliveries[i] >= need)
        {
            target = i;
            break;
        }
        running += deliveries[i];
    }
    double const fraction = std::clamp(need / step_total, 0.0, 1.0);
    delivered_ = threshold_;
    return Crossing{target, fraction};
}

std::optional<HitEvent> HitTrigger::observe(CurrentReport const& report,
                                            std::span<ComponentLabel const> targets,
                                            std::uint64_t epoch)
{
    std::vector<double> deliveries;
    deliveries.reserve(targets.size());
    for (auto const& t : targets)
    {
        deliveries.push_back(currents_into(report, t) * report.dt);
    }
    // Track how much each target has received so far in this epoch.
    auto cumulative = [&](ComponentLabel const& label) -> double& {
        for (auto& [l, m] : per_target_)
        {
            if (l == label)
            {
                return m;
            }
        }
        per_target_.emplace_back(label, 0.0);
        return per_target_.back().second;
    };

    auto crossing = feed(deliveries);
    if (!crossing)
    {
        for (std::size_t i = 0; i < targets.size(); ++i)
        {
            cumulative(targets[i]) += deliveries[i];
        }
        return std::nullopt;
    }
    auto const& target = targets[crossing->target];
    HitEvent hit;
    hit.time = report.time - report.dt + crossing->fraction * report.dt;
    hit.target = target;
    hit.epoch = epoch;
    hit.delivered_mass_at_hit = cumulative(target) + crossing->fraction * deliveries[crossing->target];
    return hit;
}

ChainState collapse(ChainState const& state, HitEvent const& hit)
{
    auto idx = state.find(hit.target);
    if (!idx)
    {
        throw Error(ErrorCode::IllegalHit, "hit target absent: " + to_string(hit.target));
    }
    if (!hit.target.is_ready())
    {
        throw Error(ErrorCode::IllegalHit, "hit target is not ready: " + to_string(hit.target));
    }
    ChainState out(state.mode());
    out.add_component(hit.target.realized(), 1.0);
    out.set_time(hit.time);
    out.set_epoch(state.epoch() + 1);
    return out;
}

}  // namespace shelving
