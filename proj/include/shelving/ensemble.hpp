#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shelving/analysis.hpp"
#include "shelving/configurations.hpp"
#include "shelving/dynamics.hpp"
#include "shelving/trajectory.hpp"

namespace shelving
{

struct RunConfig
{
    ConfigKind kind;
    RateSet rates;
    Mode mode = Mode::NuRules;
    double duration = 2e6;
    double dt_max = kDefaultDtMax;
    std::uint64_t master_seed = 0;
    std::uint64_t trajectories = 1;
    std::optional<double> threshold_gap;  // empty means auto
    std::filesystem::path out_dir = "out";

    double effective_threshold_gap() const;
    Scenario scenario() const;
    //! Throws ConfigError on a violated invariant.
    void validate() const;
};

/*!
 * Applies one `key = value` setting. `line` is only used in error messages
 * (0 for command-line flags). Throws ConfigError for unknown keys and
 * malformed or out-of-range values.
 */
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   std::size_t line = 0);

/*!
 * Parses a key = value document with `#` comments. Omitted keys keep their
 * defaults.
 *
 *   kind            v | lambda | cascade_weak_up | cascade_weak_down
 *   lasers          both | strong_only | weak_only
 *   k_strong_absorb, k_strong_emit, k_weak_absorb, k_weak_emit   positive
 *   mode            nurules | original_with_observer | original_no_observer
 *   duration, dt_max                                             positive
 *   master_seed     unsigned 64-bit
 *   trajectories    >= 1
 *   threshold_gap   auto | positive number
 *   out_dir         path
 */
RunConfig parse_config(std::string_view text);
RunConfig load_config(std::filesystem::path const& path);

std::string describe_config(RunConfig const& config);

struct TrajectorySummary
{
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    TrajectoryStats stats;
    std::size_t records = 0;
    std::size_t bright_intervals = 0;
    std::size_t dark_intervals = 0;
    std::optional<std::size_t> at_start, at_end, ambiguous;
    bool log_valid = false;
};

struct EnsembleReport
{
    RunConfig config;
    std::vector<TrajectorySummary> trajectories;
    IntervalStats stats;  // pooled over all trajectories
    std::optional<TimingReport> timing;
    std::string text;   // human-readable report
    std::string jsonl;  // one JSON object per line
};

std::filesystem::path log_path(RunConfig const& config, std::uint64_t index);

/*!
 * Runs every trajectory, writes `trajectory_<index>.tsv` per trajectory and
 * `report.txt` / `report.jsonl` into `out_dir`. Trajectories run on up to
 * `threads` worker threads (0 picks the hardware concurrency); the outputs
 * do not depend on the thread count.
 */
EnsembleReport run_ensemble(RunConfig const& config, unsigned threads = 0);

}  // namespace shelving
