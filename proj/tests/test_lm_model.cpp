#include <doctest.h>

#include "lmg/errors.hpp"
#include "lmg/lm_model.hpp"
#include "lmg/separation.hpp"
#include "support.hpp"

using namespace lmg;
using lmg::testing::load_lm;

namespace {

std::set<std::pair<NodeId, NodeId>> label_set(const LmGraph& lm) {
    std::set<std::pair<NodeId, NodeId>> out;
    for (const auto& l : lm.labels())
        out.insert({l.from, l.to});
    return out;
}

} // namespace

TEST_CASE("labels follow the shift spec") {
    LmGraph b = load_lm("fig2b");
    CHECK(b.graph().has_directed("R_X", "Z"));
    CHECK(b.graph().has_directed("R_Z", "Y"));
    CHECK(label_set(b) == std::set<std::pair<NodeId, NodeId>>{{"X", "Z"}});

    LmGraph c = load_lm("fig1c");
    CHECK(label_set(c) == std::set<std::pair<NodeId, NodeId>>{{"Y0", "A"}, {"Y0", "Y1"}});
    CHECK(c.shifted_indicators() == NodeSet{"R_Y0"});
    CHECK(c.shifted_variables() == NodeSet{"Y0"});

    LmGraph plain = build_lm_graph(c.base(), {});
    CHECK(plain.graph() == c.base());
    CHECK(plain.labels().empty());
    CHECK(build_lm_graph(c.base(), c.shifts()).graph() == c.graph());
}

TEST_CASE("shift spec validation") {
    Admg base = load_lm("fig1b").graph();
    CHECK_THROWS_AS(build_lm_graph(base, {{{"W", {"A"}}}}), InvalidShiftSet);
    CHECK_THROWS_AS(build_lm_graph(base, {{{"Y0", {}}}}), InvalidShiftSet);
    CHECK_THROWS_AS(build_lm_graph(base, {{{"Y0", {"W"}}}}), InvalidShiftSet);
    CHECK_THROWS_AS(build_lm_graph(base, {{{"Y0", {"Q"}}}}), NodeNotFound);

    // A shifted child that already causes the indicator would close a loop.
    Admg loop = base;
    loop.add_directed("A", "R_Y0");
    CHECK_THROWS_AS(build_lm_graph(loop, {{{"Y0", {"A"}}}}), FeedbackRisk);

    Admg bad = base;
    bad.add_directed("R_Y0", "A");
    CHECK_THROWS_AS(build_lm_graph(bad, {}), InvalidGraph);
}

TEST_CASE("regularity and maximality") {
    CHECK(check_regular_maximal(load_lm("fig1c")));
    CHECK(check_regular_maximal(load_lm("fig2b")));

    LmGraph c = load_lm("fig1c");
    Admg g = c.graph();
    g.remove_directed("R_Y0", "A");
    CHECK_FALSE(check_regular_maximal(LmGraph::assemble(g, c.base(), c.shifts(), c.labels())));

    auto twice = c.labels();
    twice.push_back(twice.front());
    CHECK_FALSE(check_regular_maximal(LmGraph::assemble(c.graph(), c.base(), c.shifts(), twice)));
}

TEST_CASE("context graphs") {
    LmGraph c = load_lm("fig1c");
    Admg g0 = context_graph(c, {{"R_Y0", 0}});
    std::set<Edge> expected = c.graph().directed();
    expected.erase({"Y0", "A"});
    expected.erase({"Y0", "Y1"});
    CHECK(g0.directed() == expected);
    CHECK(context_graph(c, {{"R_Y0", 1}}) == c.graph());
    CHECK(context_graph(c, {}) == c.graph());
    CHECK_THROWS_AS(context_graph(c, {{"R_Y0", 2}}), InvalidQuery);
    CHECK_THROWS_AS(context_graph(c, {{"W", 0}}), NodeNotFound);

    LmGraph b = load_lm("fig2b");
    Admg both = context_graph(b, {{"R_X", 0}, {"R_Z", 0}});
    Admg one = context_graph(b, {{"R_X", 0}, {"R_Z", 1}});
    CHECK(std::includes(one.directed().begin(), one.directed().end(), both.directed().begin(),
                        both.directed().end()));
    CHECK(both.has_directed("Z", "Y"));
    CHECK_FALSE(both.has_directed("X", "Z"));
}

TEST_CASE("graphical CSI") {
    LmGraph c = load_lm("fig1c");
    CHECK(csi_holds_graphically(c, {"Y0", "A"}, {"W"}));
    CHECK(csi_holds_graphically(c, {"Y0", "Y1"}, {"W", "A"}));

    bool holds = csi_holds_graphically(c, {"Y0", "Y1"}, {});
    Admg cut = c.graph();
    cut.remove_directed("Y0", "Y1");
    CHECK(holds == m_separated_bruteforce(cut, {{"Y1"}, {"Y0"}, {"R_Y0"}}));
    CHECK_FALSE(holds);
    auto path = find_open_path(cut, {{"Y1"}, {"Y0"}, {"R_Y0"}});
    REQUIRE(path);
    CHECK(std::count(path->nodes.begin(), path->nodes.end(), "W") == 1);

    CHECK_THROWS_AS(csi_holds_graphically(c, {"W", "A"}, {}), InvalidQuery);
}

TEST_CASE("json round trip") {
    for (auto name : {"fig1b", "fig1c", "fig2a", "fig2b", "fig3a", "fig3b"}) {
        LmGraph lm = load_lm(name);
        LmGraph back = lm_graph_from_json(to_json(lm));
        CHECK(back.graph() == lm.graph());
        CHECK(back.labels() == lm.labels());
        CHECK(back.shifts().shifted_children == lm.shifts().shifted_children);
    }
}

TEST_CASE("random shift specs") {
    std::mt19937_64 rng(5);
    std::size_t built = 0, attempts = 0;
    while (built < 1000) {
        REQUIRE(++attempts < 20000);
        Admg base = lmg::testing::random_m_graph(rng, 2 + attempts % 9);
        ShiftSpec spec;
        for (const auto& x : base.nodes_with(NodeKind::Role::MissingAffected))
            for (const auto& z : children(base, {x}))
                if (base.kind(z).substantive() && rng() % 2)
                    spec.shifted_children[x].insert(z);
        if (spec.empty())
            continue;
        LmGraph lm;
        try {
            lm = build_lm_graph(base, spec);
        } catch (const FeedbackRisk&) {
            continue;
        } catch (const CycleDetected&) {
            continue;
        }
        ++built;
        CHECK(lmg::testing::forward_edges(lm.graph(), topological_order(lm.graph())));
        CHECK(check_regular_maximal(lm));
        ContextPattern ones, zeros;
        for (const auto& r : lm.shifted_indicators()) {
            ones[r] = 1;
            zeros[r] = 0;
        }
        CHECK(context_graph(lm, ones) == lm.graph());
        Admg g0 = context_graph(lm, zeros);
        CHECK(std::includes(lm.graph().directed().begin(), lm.graph().directed().end(),
                            g0.directed().begin(), g0.directed().end()));
    }
}
