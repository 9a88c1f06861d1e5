#include "shelving/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace shelving
{

std::size_t TelegraphSegmentation::count(Phase phase) const
{
    return static_cast<std::size_t>(std::count_if(
        intervals.begin(), intervals.end(), [&](Interval const& i) { return i.phase == phase; }));
}

double default_threshold_gap(RateSet const& rates)
{
    return 20.0 * rates.strong_cycle_time();
}

TelegraphSegmentation segment_telegraph(EventLog const& log, double threshold_gap)
{
    if (log.records.empty())
    {
        throw Error(ErrorCode::EmptyLog, "no records to segment");
    }
    TelegraphSegmentation seg;
    seg.threshold_gap = threshold_gap;

    std::vector<double> hits;
    for (auto const& r : log.records)
    {
        if (r.kind == EventKind::Hit)
        {
            hits.push_back(r.time);
        }
    }
    if (hits.empty())
    {
        return seg;
    }
    double bright_start = hits.front();
    for (std::size_t i = 0; i + 1 < hits.size(); ++i)
    {
        if (hits[i + 1] - hits[i] > threshold_gap)
        {
            seg.intervals.push_back({bright_start, hits[i], Phase::Bright});
            seg.intervals.push_back({hits[i], hits[i + 1], Phase::Dark});
            bright_start = hits[i + 1];
        }
    }
    seg.intervals.push_back({bright_start, hits.back(), Phase::Bright});
    return seg;
}

char const* to_string(TimingClass c)
{
    switch (c)
    {
        case TimingClass::AtStart: return "AtStart";
        case TimingClass::AtEnd: return "AtEnd";
        case TimingClass::Ambiguous: return "Ambiguous";
    }
    return "?";
}

std::size_t TimingReport::count(TimingClass c) const
{
    return static_cast<std::size_t>(
        std::count_if(intervals.begin(), intervals.end(),
                      [&](DarkTiming const& d) { return d.classification == c; }));
}

namespace
{

std::optional<double> weighted_median(std::vector<EventRecord const*> records)
{
    double total = 0.0;
    for (auto const* r : records)
    {
        total += r->aux;
    }
    if (records.empty() || !(total > 0.0))
    {
        return std::nullopt;
    }
    std::stable_sort(records.begin(), records.end(),
                     [](EventRecord const* a, EventRecord const* b) { return a->time < b->time; });
    double acc = 0.0;
    for (auto const* r : records)
    {
        acc += r->aux;
        if (acc >= 0.5 * total)
        {
            return r->time;
        }
    }
    return records.back()->time;
}

}  // namespace

TimingReport classify_weak_timing(EventLog const& log, TelegraphSegmentation const& seg,
                                  ConfigKind kind, RateSet const& rates)
{
    if (!kind.weak_on())
    {
        throw Error(ErrorCode::NoWeakBranch, "strong-only runs have no weak photon");
    }
    double const end_window = rates.strong_cycle_time();
    double const start_window = 1.0 / rates.weak_absorb;

    std::map<std::uint64_t, std::vector<EventRecord const*>> crossings;
    std::map<double, std::uint64_t> hit_epoch;
    for (auto const& r : log.records)
    {
        if (r.kind == EventKind::WeakEdgeCrossing)
        {
            crossings[r.epoch].push_back(&r);
        }
        else if (r.kind == EventKind::Hit)
        {
            hit_epoch.emplace(r.time, r.epoch);
        }
    }

    TimingReport report;
    for (auto const& interval : seg.intervals)
    {
        if (interval.phase != Phase::Dark)
        {
            continue;
        }
        DarkTiming d;
        d.dark_start = interval.start;
        d.dark_end = interval.end;
        auto hit = hit_epoch.find(interval.end);
        if (hit != hit_epoch.end())
        {
            auto c = crossings.find(hit->second);
            if (c != crossings.end())
            {
                d.weak_crossing_time = weighted_median(c->second);
            }
        }
        if (d.weak_crossing_time)
        {
            double const t = *d.weak_crossing_time;
            if (std::abs(t - d.dark_end) <= end_window)
            {
                d.classification = TimingClass::AtEnd;
            }
            else if (std::abs(t - d.dark_start) <= start_window)
            {
                d.classification = TimingClass::AtStart;
            }
        }
        report.intervals.push_back(d);
    }
    return report;
}

double DurationStats::cdf(double x) const
{
    if (sorted.empty())
    {
        return 0.0;
    }
    auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

namespace
{

DurationStats describe_durations(std::vector<double> durations)
{
    DurationStats s;
    s.count = durations.size();
    if (durations.empty())
    {
        return s;
    }
    double sum = 0.0;
    for (double d : durations)
    {
        sum += d;
    }
    s.mean = sum / static_cast<double>(s.count);
    double var = 0.0;
    for (double d : durations)
    {
        var += (d - s.mean) * (d - s.mean);
    }
    s.stddev = std::sqrt(var / static_cast<double>(s.count));
    std::sort(durations.begin(), durations.end());
    s.sorted = std::move(durations);
    return s;
}

}  // namespace

IntervalStats interval_stats(TelegraphSegmentation const& seg)
{
    std::vector<double> bright, dark;
    for (auto const& i : seg.intervals)
    {
        (i.phase == Phase::Bright ? bright : dark).push_back(i.duration());
    }
    IntervalStats out;
    out.bright = describe_durations(std::move(bright));
    out.dark = describe_durations(std::move(dark));
    if (out.dark.count > 0)
    {
        // Dark intervals are only recognized past the threshold; the excess
        // over it is exponential with the same rate when durations are.
        double excess = 0.0;
        for (double d : out.dark.sorted)
        {
            excess += d - seg.threshold_gap;
        }
        if (excess > 0.0)
        {
            out.dark_rate = static_cast<double>(out.dark.count) / excess;
        }
    }
    return out;
}

}  // namespace shelving
