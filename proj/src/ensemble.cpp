#include "shelving/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "shelving/event_log.hpp"
#include "shelving/rng.hpp"

namespace shelving
{

namespace
{

[[noreturn]] void config_error(std::size_t line, std::string const& why)
{
    if (line == 0)
    {
        throw Error(ErrorCode::ConfigError, why);
    }
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + why);
}

std::string_view trim(std::string_view s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
    {
        return {};
    }
    auto const last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Lower-cases and drops '_' and '-' so that "CascadeWeakUp", "cascade_weak_up"
// and "cascade-weak-up" all compare equal.
std::string fold(std::string_view s)
{
    std::string out;
    for (char ch : s)
    {
        if (ch != '_' && ch != '-')
        {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
    }
    return out;
}

double parse_real(std::string_view key, std::string_view value, std::size_t line)
{
    double v = 0.0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size())
    {
        config_error(line, "malformed number for " + std::string(key) + ": '" + std::string(value)
                               + "'");
    }
    return v;
}

double parse_positive(std::string_view key, std::string_view value, std::size_t line)
{
    double const v = parse_real(key, value, line);
    if (!(v > 0.0) || !std::isfinite(v))
    {
        config_error(line, std::string(key) + " must be a positive number");
    }
    return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value, std::size_t line)
{
    std::uint64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size())
    {
        config_error(line, "malformed unsigned integer for " + std::string(key) + ": '"
                               + std::string(value) + "'");
    }
    return v;
}

}  // namespace

double RunConfig::effective_threshold_gap() const
{
    return threshold_gap ? *threshold_gap : default_threshold_gap(rates);
}

Scenario RunConfig::scenario() const
{
    Scenario s;
    s.kind = kind;
    s.rates = rates;
    s.mode = mode;
    s.dt_max = dt_max;
    return s;
}

void RunConfig::validate() const
{
    if (!(duration > 0.0))
    {
        config_error(0, "duration must be positive");
    }
    if (!(dt_max > 0.0))
    {
        config_error(0, "dt_max must be positive");
    }
    if (trajectories < 1)
    {
        config_error(0, "trajectories must be at least 1");
    }
    if (threshold_gap && !(*threshold_gap > 0.0))
    {
        config_error(0, "threshold_gap must be positive");
    }
    for (double r : {rates.strong_absorb, rates.strong_emit, rates.weak_absorb, rates.weak_emit})
    {
        if (!(r > 0.0))
        {
            config_error(0, "rates must be positive");
        }
    }
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value, std::size_t line)
{
    value = trim(value);
    std::string const v = fold(value);
    if (key == "kind")
    {
        if (v == "v")
            c.kind.scheme = LevelScheme::V;
        else if (v == "lambda")
            c.kind.scheme = LevelScheme::Lambda;
        else if (v == "cascadeweakup")
            c.kind.scheme = LevelScheme::CascadeWeakUp;
        else if (v == "cascadeweakdown")
            c.kind.scheme = LevelScheme::CascadeWeakDown;
        else
            config_error(line, "unknown kind '" + std::string(value) + "'");
    }
    else if (key == "lasers")
    {
        if (v == "both")
            c.kind.lasers = Lasers::Both;
        else if (v == "strongonly")
            c.kind.lasers = Lasers::StrongOnly;
        else if (v == "weakonly")
            c.kind.lasers = Lasers::WeakOnly;
        else
            config_error(line, "unknown lasers '" + std::string(value) + "'");
    }
    else if (key == "mode")
    {
        if (v == "nurules")
            c.mode = Mode::NuRules;
        else if (v == "originalwithobserver")
            c.mode = Mode::OriginalWithObserver;
        else if (v == "originalnoobserver")
            c.mode = Mode::OriginalNoObserver;
        else
            config_error(line, "unknown mode '" + std::string(value) + "'");
    }
    else if (key == "k_strong_absorb")
        c.rates.strong_absorb = parse_positive(key, value, line);
    else if (key == "k_strong_emit")
        c.rates.strong_emit = parse_positive(key, value, line);
    else if (key == "k_weak_absorb")
        c.rates.weak_absorb = parse_positive(key, value, line);
    else if (key == "k_weak_emit")
        c.rates.weak_emit = parse_positive(key, value, line);
    else if (key == "duration")
        c.duration = parse_positive(key, value, line);
    else if (key == "dt_max")
        c.dt_max = parse_positive(key, value, line);
    else if (key == "master_seed")
        c.master_seed = parse_unsigned(key, value, line);
    else if (key == "trajectories")
    {
        c.trajectories = parse_unsigned(key, value, line);
        if (c.trajectories < 1)
        {
            config_error(line, "trajectories must be at least 1");
        }
    }
    else if (key == "threshold_gap")
    {
        if (v == "auto")
            c.threshold_gap.reset();
        else
            c.threshold_gap = parse_positive(key, value, line);
    }
    else if (key == "out_dir")
    {
        if (value.empty())
        {
            config_error(line, "out_dir must not be empty");
        }
        c.out_dir = std::filesystem::path(std::string(value));
    }
    else
    {
        config_error(line, "unknown key '" + std::string(key) + "'");
    }
}

RunConfig parse_config(std::string_view text)
{
    RunConfig c;
    std::size_t line_no = 0;
    while (!text.empty())
    {
        auto const nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
        {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty())
        {
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string_view::npos)
        {
            config_error(line_no, "expected 'key = value'");
        }
        auto const key = trim(line.substr(0, eq));
        if (key.empty())
        {
            config_error(line_no, "missing key");
        }
        apply_setting(c, key, line.substr(eq + 1), line_no);
    }
    c.validate();
    return c;
}

RunConfig load_config(std::filesystem::path const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
    {
        throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string describe_config(RunConfig const& c)
{
    std::ostringstream os;
    os << "kind = " << to_string(c.kind.scheme) << '\n'
       << "lasers = " << to_string(c.kind.lasers) << '\n'
       << "mode = " << to_string(c.mode) << '\n'
       << "k_strong_absorb = " << format_double(c.rates.strong_absorb) << '\n'
       << "k_strong_emit = " << format_double(c.rates.strong_emit) << '\n'
       << "k_weak_absorb = " << format_double(c.rates.weak_absorb) << '\n'
       << "k_weak_emit = " << format_double(c.rates.weak_emit) << '\n'
       << "duration = " << format_double(c.duration) << '\n'
       << "dt_max = " << format_double(c.dt_max) << '\n'
       << "master_seed = " << c.master_seed << '\n'
       << "trajectories = " << c.trajectories << '\n'
       << "threshold_gap = "
       << (c.threshold_gap ? format_double(*c.threshold_gap) : std::string("auto")) << '\n';
    return os.str();
}

std::filesystem::path log_path(RunConfig const& config, std::uint64_t index)
{
    char name[48];
    std::snprintf(name, sizeof(name), "trajectory_%04llu.tsv",
                  static_cast<unsigned long long>(index));
    return config.out_dir / name;
}

namespace
{

struct Outcome
{
    TrajectorySummary summary;
    std::vector<Interval> intervals;
    std::optional<TimingReport> timing;
};

Outcome run_one(RunConfig const& config, std::uint64_t index)
{
    Outcome out;
    auto& s = out.summary;
    s.index = index;
    s.seed = trajectory_seed(config.master_seed, index);

    Trajectory trajectory(config.scenario(), s.seed);
    TrajectoryResult result = trajectory.run(config.duration);
    s.stats = result.stats;
    s.records = result.log.records.size();
    validate_log(result.log);
    s.log_valid = true;

    auto const seg = segment_telegraph(result.log, config.effective_threshold_gap());
    s.bright_intervals = seg.count(Phase::Bright);
    s.dark_intervals = seg.count(Phase::Dark);
    if (config.kind.weak_on())
    {
        out.timing = classify_weak_timing(result.log, seg, config.kind, config.rates);
        s.at_start = out.timing->count(TimingClass::AtStart);
        s.at_end = out.timing->count(TimingClass::AtEnd);
        s.ambiguous = out.timing->count(TimingClass::Ambiguous);
    }
    out.intervals = seg.intervals;
    write_log(result.log, log_path(config, index));
    return out;
}

using json = nlohmann::ordered_json;

json duration_json(DurationStats const& d)
{
    return json{{"count", d.count}, {"mean", d.mean}, {"stddev", d.stddev}};
}

void render(EnsembleReport& r)
{
    auto const& c = r.config;
    std::ostringstream os;
    os << "# shelving ensemble report\n" << describe_config(c);
    os << "effective_threshold_gap = " << format_double(c.effective_threshold_gap()) << "\n\n";

    os << "trajectory\tseed\tsteps\thits\tbright\tdark\tat_start\tat_end\tambiguous"
          "\tmax_mass_drift\tcollapse_checks\tlog_valid\n";
    auto opt = [](std::optional<std::size_t> v) { return v ? std::to_string(*v) : "-"; };
    for (auto const& t : r.trajectories)
    {
        os << t.index << '\t' << t.seed << '\t' << t.stats.steps << '\t' << t.stats.hits << '\t'
           << t.bright_intervals << '\t' << t.dark_intervals << '\t' << opt(t.at_start) << '\t'
           << opt(t.at_end) << '\t' << opt(t.ambiguous) << '\t'
           << format_double(t.stats.max_mass_drift) << '\t' << t.stats.collapse_checks << '\t'
           << (t.log_valid ? "yes" : "no") << '\n';
    }

    os << "\n[intervals]\n";
    os << "bright count = " << r.stats.bright.count
       << ", mean = " << format_double(r.stats.bright.mean)
       << ", stddev = " << format_double(r.stats.bright.stddev) << '\n';
    os << "dark count = " << r.stats.dark.count << ", mean = " << format_double(r.stats.dark.mean)
       << ", stddev = " << format_double(r.stats.dark.stddev) << '\n';
    os << "dark exponential rate = "
       << (r.stats.dark_rate ? format_double(*r.stats.dark_rate) : std::string("n/a")) << '\n';

    os << "\n[timing]\n";
    if (r.timing)
    {
        os << "AtStart = " << r.timing->count(TimingClass::AtStart) << '\n'
           << "AtEnd = " << r.timing->count(TimingClass::AtEnd) << '\n'
           << "Ambiguous = " << r.timing->count(TimingClass::Ambiguous) << '\n';
    }
    else
    {
        os << "not applicable (weak laser off)\n";
    }

    double drift = 0.0;
    std::uint64_t hits = 0, checks = 0;
    bool logs_ok = true, stalled = false;
    for (auto const& t : r.trajectories)
    {
        drift = std::max(drift, t.stats.max_mass_drift);
        hits += t.stats.hits;
        checks += t.stats.collapse_checks;
        logs_ok = logs_ok && t.log_valid;
        stalled = stalled || t.stats.stalled;
    }
    os << "\n[invariants]\n"
       << "max_mass_drift = " << format_double(drift) << '\n'
       << "collapses_checked = " << checks << " of " << hits << '\n'
       << "logs_valid = " << (logs_ok ? "yes" : "no") << '\n';
    r.text = os.str();

    std::string jl;
    json header{{"type", "config"},
                {"kind", to_string(c.kind.scheme)},
                {"lasers", to_string(c.kind.lasers)},
                {"mode", to_string(c.mode)},
                {"k_strong_absorb", c.rates.strong_absorb},
                {"k_strong_emit", c.rates.strong_emit},
                {"k_weak_absorb", c.rates.weak_absorb},
                {"k_weak_emit", c.rates.weak_emit},
                {"duration", c.duration},
                {"dt_max", c.dt_max},
                {"master_seed", c.master_seed},
                {"trajectories", c.trajectories},
                {"threshold_gap", c.effective_threshold_gap()}};
    jl += header.dump() + '\n';
    for (auto const& t : r.trajectories)
    {
        json j{{"type", "trajectory"},
               {"index", t.index},
               {"seed", t.seed},
               {"steps", t.stats.steps},
               {"hits", t.stats.hits},
               {"records", t.records},
               {"bright", t.bright_intervals},
               {"dark", t.dark_intervals},
               {"max_mass_drift", t.stats.max_mass_drift},
               {"collapse_checks", t.stats.collapse_checks},
               {"log_valid", t.log_valid}};
        if (t.at_start)
        {
            j["at_start"] = *t.at_start;
            j["at_end"] = *t.at_end;
            j["ambiguous"] = *t.ambiguous;
        }
        jl += j.dump() + '\n';
    }
    json agg{{"type", "aggregate"},
             {"bright", duration_json(r.stats.bright)},
             {"dark", duration_json(r.stats.dark)},
             {"dark_rate", r.stats.dark_rate ? json(*r.stats.dark_rate) : json(nullptr)}};
    if (r.timing)
    {
        agg["timing"] = json{{"at_start", r.timing->count(TimingClass::AtStart)},
                             {"at_end", r.timing->count(TimingClass::AtEnd)},
                             {"ambiguous", r.timing->count(TimingClass::Ambiguous)}};
    }
    agg["invariants"] = json{{"max_mass_drift", drift},
                             {"collapses_checked", checks},
                             {"hits", hits},
                             {"logs_valid", logs_ok}};
    jl += agg.dump() + '\n';
    r.jsonl = std::move(jl);
}

void write_text(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os)
    {
        throw std::runtime_error("failed writing " + path.string());
    }
}

}  // namespace

EnsembleReport run_ensemble(RunConfig const& config, unsigned threads)
{
    config.validate();
    std::filesystem::create_directories(config.out_dir);

    auto const n = static_cast<std::size_t>(config.trajectories);
    if (threads == 0)
    {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

    std::vector<Outcome> outcomes(n);
    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            try
            {
                outcomes[i] = run_one(config, i);
            }
            catch (...)
            {
                failures[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t)
    {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool)
    {
        th.join();
    }
    for (auto const& f : failures)
    {
        if (f)
        {
            std::rethrow_exception(f);
        }
    }

    EnsembleReport report;
    report.config = config;
    TelegraphSegmentation pooled;
    pooled.threshold_gap = config.effective_threshold_gap();
    for (auto& o : outcomes)
    {
        report.trajectories.push_back(o.summary);
        pooled.intervals.insert(pooled.intervals.end(), o.intervals.begin(), o.intervals.end());
        if (o.timing)
        {
            if (!report.timing)
            {
                report.timing.emplace();
            }
            report.timing->intervals.insert(report.timing->intervals.end(),
                                            o.timing->intervals.begin(),
                                            o.timing->intervals.end());
        }
    }
    report.stats = interval_stats(pooled);
    render(report);
    write_text(config.out_dir / "report.txt", report.text);
    write_text(config.out_dir / "report.jsonl", report.jsonl);
    return report;
}

}  // namespace shelving
