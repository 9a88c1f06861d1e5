#pragma once

#include <optional>
#include <vector>

#include "shelving/configurations.hpp"
#include "shelving/dynamics.hpp"
#include "shelving/event_log.hpp"

namespace shelving
{

enum class Phase : std::uint8_t
{
    Bright,
    Dark,
};

struct Interval
{
    double start = 0.0;
    double end = 0.0;
    Phase phase = Phase::Bright;

    double duration() const { return end - start; }
};

/*!
 * Bright/dark tiling of the span from the first to the last hit. A gap
 * between consecutive hits longer than `threshold_gap` is a dark interval;
 * everything else is bright.
 */
struct TelegraphSegmentation
{
    std::vector<Interval> intervals;
    double threshold_gap = 0.0;

    std::size_t count(Phase phase) const;
};

//! Default dark-gap threshold: twenty mean strong-cycle times.
double default_threshold_gap(RateSet const& rates);

//! Throws EmptyLog when the log holds no records at all.
TelegraphSegmentation segment_telegraph(EventLog const& log, double threshold_gap);

enum class TimingClass : std::uint8_t
{
    AtStart,
    AtEnd,
    Ambiguous,
};

char const* to_string(TimingClass c);

struct DarkTiming
{
    std::optional<double> weak_crossing_time;
    double dark_start = 0.0;
    double dark_end = 0.0;
    TimingClass classification = TimingClass::Ambiguous;
};

struct TimingReport
{
    std::vector<DarkTiming> intervals;

    std::size_t count(TimingClass c) const;
};

/*!
 * Places the weak photon of every dark interval.
 *
 * The crossing time is the weighted median of the WeakEdgeCrossing records
 * logged in the epoch that the dark interval's closing hit ended. It is
 * AtEnd when within one strong-cycle time of the dark end, otherwise AtStart
 * when within one weak-absorption time of the dark start, otherwise
 * Ambiguous (also when no crossing was logged). Throws NoWeakBranch for a
 * strong-only configuration.
 */
TimingReport classify_weak_timing(EventLog const& log,
                                  TelegraphSegmentation const& seg,
                                  ConfigKind kind,
                                  RateSet const& rates);

struct DurationStats
{
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::vector<double> sorted;  // empirical CDF support, ascending

    //! Fraction of durations <= x.
    double cdf(double x) const;
};

struct IntervalStats
{
    DurationStats bright;
    DurationStats dark;
    //! Maximum-likelihood exponential rate of (dark duration - threshold_gap).
    std::optional<double> dark_rate;
};

IntervalStats interval_stats(TelegraphSegmentation const& seg);

}  // namespace shelving
