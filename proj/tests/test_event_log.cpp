#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "shelving/event_log.hpp"

using namespace shelving;

namespace
{

EventLog random_log(std::uint64_t seed, std::size_t n)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EventLog log;
    double t = 0.0;
    std::uint64_t epoch = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        t += -std::log1p(-u(gen)) * 3.0;
        EventRecord r;
        r.time = t;
        r.kind = static_cast<EventKind>(gen() % 3);
        r.epoch = epoch;
        r.atom = static_cast<AtomLevel>(gen() % 3);
        r.clicks = static_cast<std::uint32_t>(gen() % 100000);
        r.strong = r.clicks;
        r.weak = static_cast<std::uint32_t>(gen() % 4);
        r.aux = u(gen) * std::pow(10.0, -static_cast<double>(gen() % 300));
        log.records.push_back(r);
        epoch += gen() % 2;
    }
    return log;
}

}  // namespace

TEST_CASE("serialize then parse is the identity")
{
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
    {
        auto const log = random_log(seed, 200);
        auto const text = serialize_log(log);
        auto const back = parse_log(text);
        REQUIRE(back.records.size() == log.records.size());
        CHECK(back.records == log.records);
        CHECK(serialize_log(back) == text);
    }
}

TEST_CASE("format")
{
    EventLog log;
    log.records.push_back(
        make_record(0.1, EventKind::Hit, 3, make_label(AtomLevel::Ground0, 2, 2, 1), 0.25));
    auto const text = serialize_log(log);
    CHECK(text == std::string(kLogHeader) + "\n0.1\tHit\t3\tA0\t2\t2\t1\t0.25\n");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(2e6) == "2e+06");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("parse errors name the line")
{
    auto expect_error = [](std::string const& text) {
        try
        {
            parse_log(text);
            FAIL("expected LogFormat");
        }
        catch (Error const& e)
        {
            CHECK(e.code() == ErrorCode::LogFormat);
            return std::string(e.what());
        }
        return std::string();
    };
    expect_error("");
    expect_error("not a header\n");
    auto const h = std::string(kLogHeader) + "\n";
    CHECK(expect_error(h + "0.1\tHit\t0\tA0\t0\t0\t0\n").find("line 2") != std::string::npos);
    CHECK(expect_error(h + "x\tHit\t0\tA0\t0\t0\t0\t1\n").find("line 2") != std::string::npos);
    expect_error(h + "0\tBoom\t0\tA0\t0\t0\t0\t1\n");
    expect_error(h + "0\tHit\t0\tA7\t0\t0\t0\t1\n");
    expect_error(h + "0\tHit\t-1\tA0\t0\t0\t0\t1\n");
}

TEST_CASE("validate_log")
{
    auto const a = make_label(AtomLevel::Ground0, 0, 0, 0);
    EventLog ok;
    ok.records = {make_record(0, EventKind::EpochStart, 0, a, 1), make_record(1, EventKind::Hit, 0, a, 1),
                  make_record(1, EventKind::EpochStart, 1, a, 1)};
    CHECK_NOTHROW(validate_log(ok));

    EventLog backwards = ok;
    backwards.records[1].time = -1.0;
    CHECK_THROWS_AS(validate_log(backwards), Error);

    EventLog twice = ok;
    twice.records[2].epoch = 0;
    CHECK_THROWS_AS(validate_log(twice), Error);
}

TEST_CASE("write and read a log file")
{
    auto const path = std::filesystem::temp_directory_path() / "shelving_roundtrip.tsv";
    auto const log = random_log(99, 500);
    write_log(log, path);
    CHECK(read_log(path).records == log.records);
    std::filesystem::remove(path);
}
