#include <doctest.h>

#include <cmath>

#include "shelving/configurations.hpp"
#include "shelving/dynamics.hpp"
#include "shelving/rules.hpp"

using namespace shelving;

namespace
{

ComponentLabel const kG = make_label(AtomLevel::Ground0, 0, 0, 0);
ComponentLabel const kE = make_label(AtomLevel::Strong1, 0, 0, 0);
ComponentLabel const kW = make_label(AtomLevel::Weak2, 0, 0, 0);

ChainState two_node(double src_mass = 1.0, double dst_mass = 0.0)
{
    ChainState s;
    s.add_component(kG, src_mass);
    s.add_component(kE, dst_mass);
    s.add_edge({kG, kE, 1.0, EdgeKind::StrongAbsorb});
    return s;
}

ChainState branch_point(double k1, double k2)
{
    ChainState s;
    s.add_component(kG, 1.0);
    s.add_component(kE);
    s.add_component(kW);
    s.add_edge({kG, kE, k1, EdgeKind::StrongAbsorb});
    s.add_edge({kG, kW, k2, EdgeKind::WeakAbsorb});
    return s;
}

}  // namespace

TEST_CASE("single edge drain matches the closed form")
{
    auto const s = two_node();
    auto const r = step(s, s.edges(), 0.1);
    double const expected = 1.0 - std::exp(-0.1);
    CHECK(r.state.mass(1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.09516).epsilon(1e-4));
    CHECK(r.state.mass(0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
    CHECK(r.state.time() == doctest::Approx(0.1));
}

TEST_CASE("long step drains everything into the sink")
{
    auto const s = two_node();
    auto const r = step(s, s.edges(), 60.0);
    CHECK(r.state.mass(0) < 1e-20);
    CHECK(r.state.mass(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("branch point splits mass in proportion to the rates")
{
    double const k1 = 1.0, k2 = 0.001;
    auto const s = branch_point(k1, k2);
    auto const r = step(s, s.edges(), 50.0);
    double const total = 1.0 - std::exp(-(k1 + k2) * 50.0);
    CHECK(r.state.mass(1) == doctest::Approx(k1 / (k1 + k2) * total).epsilon(1e-10));
    CHECK(r.state.mass(2) == doctest::Approx(k2 / (k1 + k2) * total).epsilon(1e-10));
    CHECK(r.state.mass(1) == doctest::Approx(0.999000999).epsilon(1e-8));
    CHECK(r.state.mass(2) == doctest::Approx(0.000999001).epsilon(1e-6));

    auto const o = integrate_exact_oracle(s, s.edges(), 50.0);
    CHECK(std::abs(o.mass(1) - r.state.mass(1)) < 1e-6);
    CHECK(std::abs(o.mass(2) - r.state.mass(2)) < 1e-6);
}

TEST_CASE("step rejects nonpositive dt")
{
    auto const s = two_node();
    for (double dt : {0.0, -1.0})
    {
        try
        {
            step(s, s.edges(), dt);
            FAIL("expected InvalidStep");
        }
        catch (Error const& e)
        {
            CHECK(e.code() == ErrorCode::InvalidStep);
        }
    }
}

TEST_CASE("reported transport is the rate times the integrated source mass")
{
    auto const s = two_node();
    double const dt = 0.01;
    auto const r = step(s, s.edges(), dt);
    REQUIRE(r.report.edges.size() == 1);
    double const integral = 1.0 - std::exp(-dt);  // int_0^dt e^-t
    CHECK(r.report.transported[0] == doctest::Approx(integral).epsilon(1e-12));
    CHECK(r.report.current(0) == doctest::Approx(integral / dt).epsilon(1e-12));
}

TEST_CASE("currents_into")
{
    SUBCASE("single inflow from half the mass")
    {
        auto const s = two_node(0.5, 0.5);
        auto const r = step(s, s.edges(), 1e-7);
        CHECK(currents_into(r.report, kE) == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(currents_into(r.report, kG) == 0.0);
    }
    SUBCASE("unknown label")
    {
        auto const s = two_node();
        auto const r = step(s, s.edges(), 0.01);
        try
        {
            currents_into(r.report, kW);
            FAIL("expected UnknownComponent");
        }
        catch (Error const& e)
        {
            CHECK(e.code() == ErrorCode::UnknownComponent);
        }
    }
    SUBCASE("phantom with no inflow")
    {
        // A ready component whose only feeding edge is blocked.
        auto const a = make_label(AtomLevel::Ground0, 1, 1, 0, ReadyMarks::both());
        auto const b = make_label(AtomLevel::Strong1, 1, 1, 0, ReadyMarks::both());
        ChainState s;
        s.add_component(a, 0.7);
        s.add_component(b, 0.3);
        s.add_edge({a, b, 1.0, EdgeKind::StrongAbsorb});
        auto const active = active_edges(s, apply_mode(Mode::NuRules));
        CHECK(active.empty());
        auto const r = step(s, active, 0.01);
        CHECK(currents_into(r.report, b) == 0.0);
        CHECK(r.state.mass(1) == 0.3);
    }
}

TEST_CASE("the weak-branch ready target regains inflow after a weak cycle")
{
    RateSet rates;
    auto const g = build_epoch({}, kG, rates, 1);
    auto const s = g.to_state(Mode::NuRules);
    auto const active = active_edges(s, apply_mode(Mode::NuRules));
    auto const later = integrate_exact_oracle(s, active, rates.weak_cycle_time());
    auto const target = make_label(AtomLevel::Ground0, 1, 1, 1, ReadyMarks::both());
    auto const r = step(later, active, 0.01);
    CHECK(currents_into(r.report, target) > 0.0);

    // Right after the start the weak branch has carried next to nothing.
    auto const early = step(s, active, 0.01);
    CHECK(currents_into(early.report, target) < 1e-12);
}

TEST_CASE("oracle")
{
    auto const s = two_node();
    SUBCASE("closed form")
    {
        auto const o = integrate_exact_oracle(s, s.edges(), 0.1);
        CHECK(std::abs(o.mass(1) - (1.0 - std::exp(-0.1))) < 1e-6);
    }
    SUBCASE("identity at t = 0")
    {
        auto const o = integrate_exact_oracle(s, s.edges(), 0.0);
        CHECK(o.mass(0) == 1.0);
        CHECK(o.mass(1) == 0.0);
    }
    SUBCASE("cycles are unsupported")
    {
        ChainState c = two_node();
        std::vector<FlowEdge> edges(c.edges().begin(), c.edges().end());
        edges.push_back({kE, kG, 1.0, EdgeKind::StrongEmit});
        try
        {
            integrate_exact_oracle(c, edges, 1.0);
            FAIL("expected OracleUnsupported");
        }
        catch (Error const& e)
        {
            CHECK(e.code() == ErrorCode::OracleUnsupported);
        }
    }
    SUBCASE("branch graph at t = 10 agrees with coarse steps")
    {
        RateSet rates;
        auto const g = build_epoch({}, kG, rates, 2);
        auto state = g.to_state(Mode::NuRules);
        auto const active = active_edges(state, apply_mode(Mode::NuRules));
        auto const o = integrate_exact_oracle(state, active, 10.0);
        for (int i = 0; i < 10; ++i)
        {
            state = step(state, active, 1.0).state;
        }
        for (std::size_t i = 0; i < state.size(); ++i)
        {
            CHECK(std::abs(state.mass(i) - o.mass(i)) < 1e-6);
        }
    }
}

TEST_CASE("propagator conserves mass, keeps signs and drains sources monotonically")
{
    RateSet rates;
    auto const g = build_epoch({}, kG, rates, 2);
    auto const s = g.to_state(Mode::NuRules);
    auto const active = active_edges(s, apply_mode(Mode::NuRules));
    std::vector<IndexedEdge> idx;
    for (auto const& e : active)
    {
        idx.push_back({s.index_of(e.from), s.index_of(e.to), e.rate});
    }
    Propagator p(s.size(), idx, 0.01);
    std::vector<double> m(s.size()), next(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        m[i] = s.mass(i);
    }
    std::size_t const root = s.index_of(g.root);
    double worst = 0.0;
    bool negative = false, root_grew = false;
    for (int k = 0; k < 100000; ++k)
    {
        p.advance(m, next);
        root_grew = root_grew || next[root] > m[root];
        double total = 0.0;
        for (double x : next)
        {
            negative = negative || x < 0.0;
            total += x;
        }
        worst = std::max(worst, std::abs(total - 1.0));
        std::swap(m, next);
    }
    CHECK(worst < 1e-9);
    CHECK_FALSE(negative);
    CHECK_FALSE(root_grew);
}

TEST_CASE("rate set")
{
    RateSet r;
    CHECK(r.strong_cycle_time() == 2.0);
    CHECK(r.weak_cycle_time() == doctest::Approx(2000.0));
    CHECK(r.max_rate() == 1.0);
    RateSet bad;
    bad.weak_emit = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
