#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "shelving/ensemble.hpp"
#include "shelving/event_log.hpp"

using namespace shelving;

namespace
{

std::string slurp(std::filesystem::path const& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string config_error_of(std::string const& text)
{
    try
    {
        parse_config(text);
    }
    catch (Error const& e)
    {
        CHECK(e.code() == ErrorCode::ConfigError);
        return e.what();
    }
    FAIL("expected ConfigError");
    return {};
}

std::filesystem::path scratch(std::string const& name)
{
    auto const p = std::filesystem::temp_directory_path() / ("shelving_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("empty config gives the defaults")
{
    auto const c = parse_config("");
    CHECK(c.kind.scheme == LevelScheme::V);
    CHECK(c.kind.lasers == Lasers::Both);
    CHECK(c.rates == RateSet{1.0, 1.0, 0.001, 0.001});
    CHECK(c.mode == Mode::NuRules);
    CHECK(c.duration == 2e6);
    CHECK(c.dt_max == 0.01);
    CHECK(c.trajectories == 1);
    CHECK_FALSE(c.threshold_gap.has_value());
    CHECK(c.effective_threshold_gap() == 40.0);
}

TEST_CASE("config keys map directly")
{
    auto const c = parse_config("kind = lambda\nmode = original_no_observer");
    CHECK(c.kind.scheme == LevelScheme::Lambda);
    CHECK(c.mode == Mode::OriginalNoObserver);

    auto const d = parse_config("# comment\n\nkind = cascade_weak_down  # trailing\n"
                                "lasers = strong_only\nmaster_seed = 18446744073709551615\n"
                                "trajectories = 3\nthreshold_gap = 55.5\nduration = 1e4\n"
                                "k_strong_emit = 2\nout_dir = results\n");
    CHECK(d.kind.scheme == LevelScheme::CascadeWeakDown);
    CHECK(d.kind.lasers == Lasers::StrongOnly);
    CHECK(d.master_seed == 18446744073709551615ull);
    CHECK(d.trajectories == 3);
    CHECK(*d.threshold_gap == 55.5);
    CHECK(d.duration == 1e4);
    CHECK(d.rates.strong_emit == 2.0);
    CHECK(d.out_dir == std::filesystem::path("results"));
}

TEST_CASE("config errors name the line")
{
    CHECK(config_error_of("k_weak_absorb = -1").find("line 1") != std::string::npos);
    CHECK(config_error_of("kind = v\nbogus = 1").find("line 2") != std::string::npos);
    CHECK(config_error_of("\n\nduration = abc").find("line 3") != std::string::npos);
    CHECK(config_error_of("kind = hexagon").find("line 1") != std::string::npos);
    CHECK(config_error_of("trajectories = 0").find("line 1") != std::string::npos);
    CHECK(config_error_of("dt_max = 0").find("line 1") != std::string::npos);
    CHECK(config_error_of("just words").find("line 1") != std::string::npos);
}

TEST_CASE("two trajectories: distinct streams, reproducible outputs")
{
    RunConfig c;
    c.duration = 3000.0;
    c.trajectories = 2;
    c.master_seed = 42;
    c.out_dir = scratch("pair_a");
    auto const a = run_ensemble(c, 2);
    auto const log0 = slurp(log_path(c, 0));
    auto const log1 = slurp(log_path(c, 1));
    CHECK(log0 != log1);
    CHECK(a.trajectories[0].seed != a.trajectories[1].seed);
    CHECK(parse_log(log0).records.size() == a.trajectories[0].records);

    RunConfig c2 = c;
    c2.out_dir = scratch("pair_b");
    auto const b = run_ensemble(c2, 1);
    CHECK(slurp(log_path(c2, 0)) == log0);
    CHECK(slurp(log_path(c2, 1)) == log1);
    CHECK(b.text == a.text);
    CHECK(b.jsonl == a.jsonl);
    CHECK(slurp(c.out_dir / "report.txt") == a.text);
    CHECK(slurp(c2.out_dir / "report.jsonl") == a.jsonl);
    std::filesystem::remove_all(c.out_dir);
    std::filesystem::remove_all(c2.out_dir);
}

TEST_CASE("no-observer run logs no hits")
{
    RunConfig c = parse_config("mode = original_no_observer\nduration = 1000");
    c.out_dir = scratch("noobs");
    auto const r = run_ensemble(c);
    auto const log = read_log(log_path(c, 0));
    for (auto const& rec : log.records)
    {
        CHECK(rec.kind != EventKind::Hit);
    }
    CHECK(r.trajectories[0].stats.hits == 0);
    std::filesystem::remove_all(c.out_dir);
}
