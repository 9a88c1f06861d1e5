#include <doctest.h>

#include <cmath>

#include "shelving/configurations.hpp"
#include "shelving/rules.hpp"

using namespace shelving;

namespace
{

constexpr auto G = AtomLevel::Ground0;
constexpr auto S = AtomLevel::Strong1;
constexpr auto W = AtomLevel::Weak2;

ComponentLabel L(AtomLevel a, int clicks, int strong, int weak, bool ready = false)
{
    return make_label(a, clicks, strong, weak, ready ? ReadyMarks::both() : ReadyMarks::none());
}

}  // namespace

TEST_CASE("mark_ready")
{
    auto const emitted = L(G, 1, 1, 0);
    auto const m = mark_ready(L(S, 0, 0, 0), emitted, is_decoherent(L(S, 0, 0, 0), emitted));
    CHECK(m.ready.atom_ready);
    CHECK(m.ready.detector_ready);

    auto const weak = L(W, 0, 0, 0);
    CHECK_FALSE(is_decoherent(L(G, 0, 0, 0), weak));
    CHECK_FALSE(mark_ready(L(G, 0, 0, 0), weak, false).is_ready());

    auto const up = L(S, 0, 0, 0);
    CHECK_FALSE(mark_ready(L(G, 0, 0, 0), up, is_decoherent(L(G, 0, 0, 0), up)).is_ready());

    // Children of a ready component are ready too.
    CHECK(mark_ready(L(G, 1, 1, 0, true), L(S, 1, 1, 0), false).is_ready());
}

TEST_CASE("blocked_edges")
{
    FlowEdge const both_ready{L(G, 1, 1, 0, true), L(S, 1, 1, 0, true), 1.0,
                              EdgeKind::StrongAbsorb};
    CHECK(is_blocked(both_ready));
    FlowEdge const row2{L(S, 1, 1, 0), L(G, 2, 2, 0, true), 1.0, EdgeKind::StrongEmit};
    CHECK_FALSE(is_blocked(row2));
    FlowEdge const continuation{L(G, 2, 2, 0, true), L(S, 2, 2, 0, true), 1.0,
                                EdgeKind::StrongAbsorb};
    CHECK(is_blocked(continuation));

    CHECK(blocked_edges(ChainState{}).empty());

    ChainState s;
    s.add_component(L(S, 1, 1, 0), 1.0);
    s.add_component(L(G, 2, 2, 0, true));
    s.add_component(L(S, 2, 2, 0, true));
    s.add_edge(row2);
    s.add_edge(continuation);
    auto const blocked = blocked_edges(s);
    REQUIRE(blocked.size() == 1);
    CHECK(blocked[0] == continuation);
    CHECK(active_edges(s, apply_mode(Mode::NuRules)).size() == 1);
    CHECK(active_edges(s, apply_mode(Mode::OriginalNoObserver)).size() == 2);
}

TEST_CASE("apply_mode")
{
    CHECK(apply_mode(Mode::NuRules) == RuleSet{true, true, true});
    CHECK(apply_mode(Mode::OriginalWithObserver) == apply_mode(Mode::NuRules));
    CHECK(apply_mode(Mode::OriginalNoObserver) == RuleSet{false, false, false});
    CHECK(apply_mode(ChainState(Mode::OriginalNoObserver)) == RuleSet{false, false, false});
}

TEST_CASE("trigger: zero inflow never hits")
{
    RandomStream rng(7);
    HitTrigger t(rng);
    for (int trial = 0; trial < 1000; ++trial)
    {
        t.arm();
        std::vector<double> const none{0.0, 0.0};
        for (int k = 0; k < 100; ++k)
        {
            REQUIRE_FALSE(t.feed(none).has_value());
        }
    }
}

TEST_CASE("trigger: full delivery always hits")
{
    RandomStream rng(11);
    HitTrigger t(rng);
    for (int trial = 0; trial < 10000; ++trial)
    {
        t.arm();
        std::optional<HitTrigger::Crossing> hit;
        // Unit mass delivered in 1000 small slices.
        for (int k = 0; k < 1000 && !hit; ++k)
        {
            std::vector<double> const slice{1e-3};
            hit = t.feed(slice);
        }
        REQUIRE(hit.has_value());
        CHECK(hit->fraction >= 0.0);
        CHECK(hit->fraction <= 1.0);
    }
}

TEST_CASE("trigger: two-branch split is calibrated")
{
    // Deliveries of the branch point: k1/(k1+k2) and k2/(k1+k2).
    double const k1 = 1.0, k2 = 0.001;
    double const m1 = k1 / (k1 + k2);
    double const m2 = k2 / (k1 + k2);
    RandomStream rng(2024);
    HitTrigger t(rng);
    int const n = 10000;
    int first = 0, second = 0;
    for (int trial = 0; trial < n; ++trial)
    {
        t.arm();
        std::vector<double> const d{m1, m2};
        auto const hit = t.feed(d);
        REQUIRE(hit.has_value());
        (hit->target == 0 ? first : second)++;
    }
    double const sigma = std::sqrt(m2 * (1.0 - m2) / n);
    CHECK(std::abs(static_cast<double>(second) / n - m2) < 3.0 * sigma);
    CHECK(first + second == n);
}

TEST_CASE("trigger: observe on a step report")
{
    ChainState s;
    auto const src = L(S, 0, 0, 0);
    auto const dst = L(G, 1, 1, 0, true);
    s.add_component(src, 1.0);
    s.add_component(dst);
    s.add_edge({src, dst, 1.0, EdgeKind::StrongEmit});
    auto const targets = ready_targets(s);
    REQUIRE(targets.size() == 1);
    CHECK(targets[0] == dst);

    RandomStream rng(5);
    HitTrigger t(rng);
    t.arm();
    std::optional<HitEvent> hit;
    ChainState cur = s;
    while (!hit)
    {
        auto r = step(cur, cur.edges(), 0.01);
        hit = t.observe(r.report, targets, 0);
        cur = r.state;
        REQUIRE(cur.time() < 100.0);
    }
    CHECK(hit->target == dst);
    CHECK(hit->time <= cur.time());
    CHECK(hit->time >= cur.time() - 0.01);
    // The threshold is the delivered mass, which for this edge is 1 - e^-t.
    CHECK(1.0 - std::exp(-hit->time) == doctest::Approx(t.threshold()).epsilon(1e-4));
}

TEST_CASE("find_phantoms")
{
    ChainState s;
    auto const a = L(G, 1, 1, 0, true);
    auto const b = L(S, 1, 1, 0, true);
    s.add_component(a, 0.4);
    s.add_component(b, 0.6);
    s.add_edge({a, b, 1.0, EdgeKind::StrongAbsorb});
    auto const r = step(s, active_edges(s, apply_mode(Mode::NuRules)), 0.01);
    auto const ph = find_phantoms(r.state, r.report);
    CHECK(ph.size() == 2);
    CHECK(ph[0].mass_frozen == 0.4);
}

TEST_CASE("collapse")
{
    SUBCASE("strong click realizes the detector record")
    {
        auto const g = build_epoch({ConfigKind{LevelScheme::V, Lasers::StrongOnly}},
                                   L(G, 0, 0, 0), RateSet{}, 2);
        auto s = g.to_state(Mode::NuRules);
        s.set_mass(0, 0.2);
        s.set_mass(s.index_of(L(G, 1, 1, 0, true)), 0.8);
        HitEvent const hit{3.0, L(G, 1, 1, 0, true), 0, 0.8};
        auto const post = collapse(s, hit);
        REQUIRE(post.size() == 1);
        CHECK(post.mass(0) == 1.0);
        CHECK(post.epoch() == 1);
        CHECK(post.time() == 3.0);
        CHECK(label_of_realized(post) == L(G, 1, 1, 0));
        CHECK(post.edges().empty());
    }
    SUBCASE("weak photon survives the collapse")
    {
        ChainState s;
        s.add_component(L(G, 2, 2, 0, true), 0.5);
        s.add_component(L(G, 2, 2, 1, true), 0.5);
        auto const post = collapse(s, {10.0, L(G, 2, 2, 1, true), 0, 0.5});
        CHECK(label_of_realized(post).photons.weak_count == 1);
    }
    SUBCASE("renormalizes to one")
    {
        ChainState s;
        s.add_component(L(G, 1, 1, 0, true), 0.3);
        s.add_component(L(S, 0, 0, 0), 0.7);
        auto const post = collapse(s, {1.0, L(G, 1, 1, 0, true), 0, 0.3});
        REQUIRE(post.size() == 1);
        CHECK(post.mass(0) == 1.0);
        CHECK_FALSE(post.components()[0].label.is_ready());
    }
    SUBCASE("illegal targets")
    {
        ChainState s;
        s.add_component(L(S, 0, 0, 0), 1.0);
        for (auto const& target : {L(S, 0, 0, 0), L(G, 1, 1, 0, true)})
        {
            try
            {
                collapse(s, {1.0, target, 0, 0.0});
                FAIL("expected IllegalHit");
            }
            catch (Error const& e)
            {
                CHECK(e.code() == ErrorCode::IllegalHit);
            }
        }
    }
}
