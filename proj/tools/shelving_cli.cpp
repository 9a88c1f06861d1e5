// Command-line front end: run seeded ensembles and analyze event logs.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "shelving/analysis.hpp"
#include "shelving/ensemble.hpp"
#include "shelving/event_log.hpp"

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitIo = 3;

int report_error(std::exception const& e)
{
    if (auto const* err = dynamic_cast<shelving::Error const*>(&e))
    {
        std::cerr << "error: " << err->what() << '\n';
        switch (err->code())
        {
            case shelving::ErrorCode::ConfigError: return kExitConfig;
            case shelving::ErrorCode::InvariantBreach: return kExitInvariant;
            default: return kExitIo;
        }
    }
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Driven three-level atom under stochastic collapse dynamics"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a seeded ensemble and write logs and report");
    std::string config_path;
    std::map<std::string, std::string> flags;
    unsigned threads = 0;
    run->add_option("--config", config_path, "key = value config file");
    auto flag = [&](char const* name, char const* key, char const* help) {
        run->add_option_function<std::string>(
            name, [&flags, key](std::string const& v) { flags[key] = v; }, help);
    };
    flag("--kind", "kind", "v | lambda | cascade_weak_up | cascade_weak_down");
    flag("--lasers", "lasers", "both | strong_only | weak_only");
    flag("--mode", "mode", "nurules | original_with_observer | original_no_observer");
    flag("--seed", "master_seed", "master seed");
    flag("--duration", "duration", "trajectory duration in strong lifetimes");
    flag("--dt-max", "dt_max", "integration step");
    flag("--trajectories", "trajectories", "number of trajectories");
    flag("--threshold-gap", "threshold_gap", "dark-gap threshold or 'auto'");
    flag("--out", "out_dir", "output directory");
    flag("--k-strong-absorb", "k_strong_absorb", "strong absorption rate");
    flag("--k-strong-emit", "k_strong_emit", "strong emission rate");
    flag("--k-weak-absorb", "k_weak_absorb", "weak absorption rate");
    flag("--k-weak-emit", "k_weak_emit", "weak emission rate");
    run->add_option("--threads", threads, "worker threads (0 = all cores)");

    auto* analyze = app.add_subcommand("analyze", "Segment an event log and classify dark periods");
    std::string log_file;
    std::string kind = "v";
    std::string lasers = "both";
    std::string gap = "auto";
    analyze->add_option("log", log_file, "event log (TSV)")->required();
    analyze->add_option("--kind", kind, "level scheme the log was produced with");
    analyze->add_option("--lasers", lasers, "active lasers");
    analyze->add_option("--threshold-gap", gap, "dark-gap threshold or 'auto'");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
        {
            shelving::RunConfig config =
                config_path.empty() ? shelving::RunConfig{} : shelving::load_config(config_path);
            for (auto const& [key, value] : flags)
            {
                shelving::apply_setting(config, key, value);
            }
            config.validate();
            auto const report = shelving::run_ensemble(config, threads);
            std::cout << report.text;
            return kExitOk;
        }

        shelving::RunConfig config;
        shelving::apply_setting(config, "kind", kind);
        shelving::apply_setting(config, "lasers", lasers);
        shelving::apply_setting(config, "threshold_gap", gap);
        auto const log = shelving::read_log(log_file);
        shelving::validate_log(log);
        auto const seg = shelving::segment_telegraph(log, config.effective_threshold_gap());
        auto const stats = shelving::interval_stats(seg);
        std::cout << "bright intervals = " << stats.bright.count
                  << ", mean = " << shelving::format_double(stats.bright.mean) << '\n'
                  << "dark intervals = " << stats.dark.count
                  << ", mean = " << shelving::format_double(stats.dark.mean) << '\n';
        if (stats.dark_rate)
        {
            std::cout << "dark exponential rate = " << shelving::format_double(*stats.dark_rate)
                      << '\n';
        }
        if (config.kind.weak_on())
        {
            auto const timing =
                shelving::classify_weak_timing(log, seg, config.kind, config.rates);
            for (auto const& d : timing.intervals)
            {
                std::cout << shelving::format_double(d.dark_start) << '\t'
                          << shelving::format_double(d.dark_end) << '\t'
                          << (d.weak_crossing_time ? shelving::format_double(*d.weak_crossing_time)
                                                   : std::string("-"))
                          << '\t' << shelving::to_string(d.classification) << '\n';
            }
        }
        return kExitOk;
    }
    catch (std::exception const& e)
    {
        return report_error(e);
    }
}
