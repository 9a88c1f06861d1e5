#include "shelving/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

namespace shelving
{

namespace
{
// Masses below this are flushed to zero to keep the arithmetic out of the
// subnormal range during long dark epochs.
constexpr double kUnderflow = 1e-250;
// Crossing bins carrying less than this share are not logged.
constexpr double kMinCrossingShare = 1e-6;
}  // namespace

// One epoch graph prepared for fast stepping. Labels are canonical: the root
// has zero counts, and absolute labels are recovered by shifting.
struct Trajectory::Compiled
{
    struct InEdge
    {
        std::size_t src;
        double rate;
    };
    struct WeakEdge
    {
        std::size_t src;
        std::size_t dst;
        double rate;
    };
    struct Extendable
    {
        std::size_t slot;
        ComponentLabel label;
    };

    EpochGraph graph;
    std::vector<ComponentLabel> labels;  // per live slot
    std::size_t root = 0;
    Propagator prop;
    std::vector<std::size_t> targets;
    std::vector<std::vector<InEdge>> target_in;
    std::vector<WeakEdge> weak_edges;
    std::vector<std::size_t> rows;  // slots whose integrated mass is needed
    std::vector<std::ptrdiff_t> row_of;
    std::vector<bool> ready;
    std::vector<Extendable> extendable;
    mutable std::map<ComponentLabel, Compiled const*> extensions;

    std::optional<std::size_t> slot_of(ComponentLabel const& label) const
    {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end())
        {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - labels.begin());
    }
};

Trajectory::Trajectory(Scenario scenario, std::uint64_t seed)
    : scenario_(scenario), rules_(apply_mode(scenario.mode)), rng_(seed)
{
    scenario_.rates.validate();
    if (!(scenario_.dt_max > 0.0))
    {
        throw Error(ErrorCode::InvalidStep, "dt_max must be positive");
    }
}

Trajectory::~Trajectory() = default;
Trajectory::Trajectory(Trajectory&&) noexcept = default;
Trajectory& Trajectory::operator=(Trajectory&&) noexcept = default;

std::unique_ptr<Trajectory::Compiled> Trajectory::compile(EpochGraph graph) const
{
    auto c = std::make_unique<Compiled>();
    c->graph = std::move(graph);
    auto const& g = c->graph;

    std::vector<FlowEdge> active;
    for (auto const& e : g.edges)
    {
        if (!rules_.edge_blocking || !is_blocked(e))
        {
            active.push_back(e);
        }
    }

    // Live slots: everything reachable from the root along active edges,
    // kept in graph order so slot numbering is deterministic.
    std::vector<bool> reach(g.components.size(), false);
    reach[*g.find(g.root)] = true;
    for (bool grew = true; grew;)
    {
        grew = false;
        for (auto const& e : active)
        {
            auto const from = *g.find(e.from);
            auto const to = *g.find(e.to);
            if (reach[from] && !reach[to])
            {
                reach[to] = true;
                grew = true;
            }
        }
    }
    for (std::size_t i = 0; i < g.components.size(); ++i)
    {
        if (reach[i])
        {
            c->labels.push_back(g.components[i]);
        }
    }
    std::size_t const n = c->labels.size();
    c->root = *c->slot_of(g.root);
    c->ready.resize(n);
    for (std::size_t s = 0; s < n; ++s)
    {
        c->ready[s] = c->labels[s].is_ready();
    }

    std::vector<IndexedEdge> indexed;
    for (auto const& e : active)
    {
        auto const from = c->slot_of(e.from);
        auto const to = c->slot_of(e.to);
        if (!from || !to)
        {
            continue;
        }
        indexed.push_back({*from, *to, e.rate});
        if (e.kind == EdgeKind::WeakEmit)
        {
            c->weak_edges.push_back({*from, *to, e.rate});
        }
    }
    c->prop = Propagator(n, indexed, scenario_.dt_max);

    for (std::size_t s = 0; s < n; ++s)
    {
        if (!c->ready[s])
        {
            continue;
        }
        c->targets.push_back(s);
        c->target_in.emplace_back();
        for (auto const& e : indexed)
        {
            if (e.to == s)
            {
                c->target_in.back().push_back({e.from, e.rate});
            }
        }
    }

    c->row_of.assign(n, -1);
    auto need_row = [&](std::size_t s) {
        if (c->row_of[s] < 0)
        {
            c->row_of[s] = static_cast<std::ptrdiff_t>(c->rows.size());
            c->rows.push_back(s);
        }
    };
    for (auto const& in : c->target_in)
    {
        for (auto const& e : in)
        {
            need_row(e.src);
        }
    }
    for (auto const& w : c->weak_edges)
    {
        need_row(w.src);
    }

    for (auto const& f : g.frontier)
    {
        if (f.needs_weak && !f.label.is_ready())
        {
            if (auto s = c->slot_of(f.label))
            {
                c->extendable.push_back({*s, f.label});
            }
        }
    }
    return c;
}

Trajectory::Compiled const& Trajectory::compiled_for(AtomLevel root_atom)
{
    auto it = roots_.find(root_atom);
    if (it != roots_.end())
    {
        return *it->second;
    }
    auto graph = build_epoch(scenario_.kind, make_label(root_atom, 0, 0, 0), scenario_.rates,
                             scenario_.depth, rules_.ready_marking);
    store_.push_back(compile(std::move(graph)));
    roots_[root_atom] = store_.back().get();
    return *store_.back();
}

Trajectory::Compiled const& Trajectory::extended(Compiled const& from,
                                                 ComponentLabel const& label)
{
    auto it = from.extensions.find(label);
    if (it != from.extensions.end())
    {
        return *it->second;
    }
    store_.push_back(compile(extend_frontier(from.graph, label)));
    from.extensions[label] = store_.back().get();
    return *store_.back();
}

TrajectoryResult Trajectory::run(RunLimits const& limits)
{
    if (!(limits.duration >= 0.0))
    {
        throw Error(ErrorCode::InvalidStep, "duration must be nonnegative");
    }
    if (!rules_.stochastic_hits || !scenario_.kind.strong_on())
    {
        return run_lumped(limits);
    }
    return run_chain(limits);
}

namespace
{

struct Offsets
{
    std::uint32_t clicks = 0;
    std::uint32_t strong = 0;
    std::uint32_t weak = 0;

    ComponentLabel apply(ComponentLabel const& l) const
    {
        return shift_label(l, clicks, strong, weak);
    }
};

double flush_and_sum(std::vector<double>& m)
{
    double sum = 0.0;
    for (double& x : m)
    {
        if (x < kUnderflow)
        {
            x = 0.0;
        }
        sum += x;
    }
    return sum;
}

}  // namespace

TrajectoryResult Trajectory::run_chain(RunLimits const& limits)
{
    TrajectoryResult res;
    auto& log = res.log.records;
    auto& st = res.stats;
    double const h = scenario_.dt_max;
    auto const steps_per_bin = static_cast<std::size_t>(
        std::max(1.0, std::round(scenario_.crossing_bin / h)));

    HitTrigger trigger(rng_);
    ComponentLabel root = make_label(AtomLevel::Ground0, 0, 0, 0);
    double t = 0.0;
    std::uint64_t epoch = 0;
    log.push_back(make_record(t, EventKind::EpochStart, epoch, root, 1.0));

    std::vector<double> m, next, integ, deliveries;
    std::vector<std::vector<double>> history;
    Compiled const* c = nullptr;
    Offsets off;

    auto snapshot = [&](std::vector<double> const& masses, double time) {
        ChainState s(scenario_.mode);
        for (std::size_t i = 0; i < c->labels.size(); ++i)
        {
            s.add_component(off.apply(c->labels[i]), masses[i]);
        }
        s.set_time(time);
        s.set_epoch(epoch);
        return s;
    };
    auto breach = [&](std::string const& what, std::vector<double> const& masses, double time) {
        throw Error(ErrorCode::InvariantBreach, what + "\n" + describe(snapshot(masses, time)));
    };

    bool running = true;
    while (running)
    {
        c = &compiled_for(root.atom);
        off = {root.clicks, root.photons.strong_count, root.photons.weak_count};
        m.assign(c->labels.size(), 0.0);
        m[c->root] = 1.0;
        next.assign(m.size(), 0.0);
        history.assign(c->weak_edges.size(), {});
        trigger.arm();
        double const epoch_start = t;
        std::size_t k = 0;

        while (true)
        {
            if (t + h > limits.duration)
            {
                running = false;
                break;
            }
            if (limits.max_epoch_duration && t - epoch_start > *limits.max_epoch_duration)
            {
                st.stalled = true;
                running = false;
                break;
            }

            integ.resize(c->rows.size());
            for (std::size_t r = 0; r < c->rows.size(); ++r)
            {
                integ[r] = c->prop.integrate_row(c->rows[r], m);
            }
            deliveries.assign(c->targets.size(), 0.0);
            for (std::size_t j = 0; j < c->targets.size(); ++j)
            {
                for (auto const& e : c->target_in[j])
                {
                    deliveries[j] += e.rate * integ[static_cast<std::size_t>(c->row_of[e.src])];
                }
            }
            for (std::size_t w = 0; w < c->weak_edges.size(); ++w)
            {
                auto const& e = c->weak_edges[w];
                history[w].push_back(e.rate * integ[static_cast<std::size_t>(c->row_of[e.src])]);
            }

            c->prop.advance(m, next);
            double const total = flush_and_sum(next);
            double const drift = std::abs(total - 1.0);
            st.max_mass_drift = std::max(st.max_mass_drift, drift);
            if (!(drift <= scenario_.mass_tolerance))
            {
                breach("mass conservation violated", next, t + h);
            }
            ++st.steps;
            ++k;

            auto crossing = trigger.feed(deliveries);
            if (!crossing)
            {
                // All mass sits in ready components but rounding kept the
                // tally just short of the threshold: the epoch must still end.
                double loose = 0.0;
                for (std::size_t s = 0; s < next.size(); ++s)
                {
                    if (!c->ready[s])
                    {
                        loose += next[s];
                    }
                }
                if (loose < 1e-14 && !c->targets.empty())
                {
                    double held = 0.0;
                    for (std::size_t s : c->targets)
                    {
                        held += next[s];
                    }
                    double const goal = trigger.threshold() * held;
                    double acc = 0.0;
                    std::size_t pick = c->targets.size() - 1;
                    for (std::size_t j = 0; j < c->targets.size(); ++j)
                    {
                        acc += next[c->targets[j]];
                        if (acc >= goal && next[c->targets[j]] > 0.0)
                        {
                            pick = j;
                            break;
                        }
                    }
                    crossing = HitTrigger::Crossing{pick, 1.0};
                }
            }

            if (crossing)
            {
                double const hit_time = t + crossing->fraction * h;
                std::size_t const slot = c->targets[crossing->target];
                ComponentLabel const& rel = c->labels[slot];
                double const mass_at_hit =
                    m[slot] + crossing->fraction * deliveries[crossing->target];
                ComponentLabel const target = off.apply(rel);

                if (rel.photons.weak_count > 0 && !c->weak_edges.empty())
                {
                    // Retrodict when the realized component's weak photon was
                    // emitted: weight every step's weak-edge flux by the
                    // importance of its landing component for the inflow into
                    // the target at the hit time.
                    std::size_t const n = c->labels.size();
                    std::vector<double> a(n, 0.0), tmp(n, 0.0);
                    for (auto const& e : c->target_in[crossing->target])
                    {
                        a[e.src] += e.rate;
                    }
                    std::size_t const nbins = k / steps_per_bin + 1;
                    std::size_t const ne = c->weak_edges.size();
                    std::vector<double> wsum(ne * nbins, 0.0), tsum(ne * nbins, 0.0);
                    for (std::size_t i = k; i-- > 0;)
                    {
                        double const tc = epoch_start + (static_cast<double>(i) + 0.5) * h;
                        for (std::size_t w = 0; w < ne; ++w)
                        {
                            double const wt = history[w][i] * a[c->weak_edges[w].dst];
                            if (wt > 0.0)
                            {
                                std::size_t const b = w * nbins + i / steps_per_bin;
                                wsum[b] += wt;
                                tsum[b] += wt * tc;
                            }
                        }
                        if (i > 0)
                        {
                            c->prop.pull_back(a, tmp);
                            for (double& x : tmp)
                            {
                                if (x < kUnderflow)
                                {
                                    x = 0.0;
                                }
                            }
                            std::swap(a, tmp);
                        }
                    }
                    std::vector<EventRecord> crossings;
                    for (std::size_t w = 0; w < ne; ++w)
                    {
                        double total_w = 0.0;
                        for (std::size_t b = 0; b < nbins; ++b)
                        {
                            total_w += wsum[w * nbins + b];
                        }
                        if (!(total_w > 0.0))
                        {
                            continue;
                        }
                        ComponentLabel const dst = off.apply(c->labels[c->weak_edges[w].dst]);
                        for (std::size_t b = 0; b < nbins; ++b)
                        {
                            double const share = wsum[w * nbins + b] / total_w;
                            if (share >= kMinCrossingShare)
                            {
                                double const when = std::clamp(
                                    tsum[w * nbins + b] / wsum[w * nbins + b], epoch_start,
                                    hit_time);
                                crossings.push_back(make_record(
                                    when, EventKind::WeakEdgeCrossing, epoch, dst, share));
                            }
                        }
                    }
                    std::stable_sort(crossings.begin(), crossings.end(),
                                     [](EventRecord const& x, EventRecord const& y) {
                                         return x.time < y.time;
                                     });
                    log.insert(log.end(), crossings.begin(), crossings.end());
                }

                HitEvent hit{hit_time, target, epoch, mass_at_hit};
                log.push_back(
                    make_record(hit_time, EventKind::Hit, epoch, target.realized(), mass_at_hit));
                ++st.hits;

                ChainState const post = collapse(snapshot(next, t + h), hit);
                if (post.size() != 1 || post.mass(0) != 1.0
                    || post.components()[0].label.is_ready())
                {
                    throw Error(ErrorCode::InvariantBreach,
                                "collapse postcondition failed\n" + describe(post));
                }
                ++st.collapse_checks;
                root = label_of_realized(post);
                ++epoch;
                t = hit_time;
                log.push_back(make_record(t, EventKind::EpochStart, epoch, root, 1.0));
                if (limits.stop_after_hit && limits.stop_after_hit(hit, epoch_start))
                {
                    running = false;
                }
                break;
            }

            std::swap(m, next);
            t += h;

            for (bool grown = true; grown;)
            {
                grown = false;
                for (auto const& x : c->extendable)
                {
                    if (m[x.slot] <= scenario_.extension_threshold)
                    {
                        continue;
                    }
                    Compiled const& bigger = extended(*c, x.label);
                    std::vector<double> moved(bigger.labels.size(), 0.0);
                    for (std::size_t s = 0; s < c->labels.size(); ++s)
                    {
                        moved[*bigger.slot_of(c->labels[s])] = m[s];
                    }
                    std::vector<std::vector<double>> hist(bigger.weak_edges.size());
                    for (std::size_t w = 0; w < bigger.weak_edges.size(); ++w)
                    {
                        auto const& be = bigger.weak_edges[w];
                        hist[w].assign(k, 0.0);
                        for (std::size_t v = 0; v < c->weak_edges.size(); ++v)
                        {
                            auto const& ce = c->weak_edges[v];
                            if (c->labels[ce.src] == bigger.labels[be.src]
                                && c->labels[ce.dst] == bigger.labels[be.dst])
                            {
                                hist[w] = std::move(history[v]);
                                break;
                            }
                        }
                    }
                    history = std::move(hist);
                    m = std::move(moved);
                    next.assign(m.size(), 0.0);
                    c = &bigger;
                    ++st.extensions;
                    grown = true;
                    break;
                }
            }
        }
    }
    st.end_time = t;
    res.final_state = snapshot(m, t);
    return res;
}

TrajectoryResult Trajectory::run_lumped(RunLimits const& limits)
{
    TrajectoryResult res;
    auto& st = res.stats;
    double const h = scenario_.dt_max;
    EpochGraph const g = lumped_atom_graph(scenario_.kind, scenario_.rates);

    std::vector<IndexedEdge> indexed;
    for (auto const& e : g.edges)
    {
        indexed.push_back({*g.find(e.from), *g.find(e.to), e.rate});
    }
    Propagator prop(g.components.size(), indexed, h);
    std::vector<double> m(g.components.size(), 0.0), next(m.size(), 0.0);
    m[*g.find(g.root)] = 1.0;
    res.log.records.push_back(make_record(0.0, EventKind::EpochStart, 0, g.root, 1.0));

    double t = 0.0;
    while (t + h <= limits.duration)
    {
        prop.advance(m, next);
        double const total = flush_and_sum(next);
        double const drift = std::abs(total - 1.0);
        st.max_mass_drift = std::max(st.max_mass_drift, drift);
        if (!(drift <= scenario_.mass_tolerance))
        {
            throw Error(ErrorCode::InvariantBreach, "mass conservation violated in lumped flow");
        }
        std::swap(m, next);
        t += h;
        ++st.steps;
    }
    st.end_time = t;
    ChainState s(scenario_.mode);
    for (std::size_t i = 0; i < g.components.size(); ++i)
    {
        s.add_component(g.components[i], m[i]);
    }
    for (auto const& e : g.edges)
    {
        s.add_edge(e);
    }
    s.set_time(t);
    res.final_state = std::move(s);
    return res;
}

}  // namespace shelving
