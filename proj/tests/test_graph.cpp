#include <doctest.h>

#include "lmg/errors.hpp"
#include "lmg/graph.hpp"
#include "support.hpp"

using namespace lmg;
using lmg::testing::load_lm;

namespace {

// Transitive closure by repeated relaxation over the raw edge list.
NodeSet closure_oracle(const Admg& g, const NodeSet& start, bool upward) {
    NodeSet out = start;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [a, b] : g.directed()) {
            const NodeId& from = upward ? b : a;
            const NodeId& to = upward ? a : b;
            if (out.count(from) && !out.count(to)) {
                out.insert(to);
                grew = true;
            }
        }
    }
    return out;
}

Admg chain() {
    Admg g;
    for (auto v : {"Y", "A", "W"})
        g.add_node(v, NodeKind::observed());
    g.add_directed("W", "A");
    g.add_directed("A", "Y");
    return g;
}

} // namespace

TEST_CASE("closures on the bundled graphs") {
    Admg g1c = load_lm("fig1c").graph();
    CHECK(descendants(g1c, {"A"}) == NodeSet{"A", "Y1"});
    CHECK(ancestors(g1c, {}).empty());

    Admg g2a = load_lm("fig2a").graph();
    NodeSet expected = closure_oracle(g2a, {"R_Z"}, true);
    CHECK(expected == NodeSet{"R_Z", "X", "W", "R_X"});
    CHECK(ancestors(g2a, {"R_Z"}) == expected);
}

TEST_CASE("mutilation") {
    Admg g = load_lm("fig1c").graph();
    CHECK(mutilate_over(g, {}) == g);

    Admg over = mutilate_over(g, {"A", "R_Y0"});
    CHECK(parents(over, {"A"}).empty());
    CHECK(parents(over, {"R_Y0"}).empty());

    Admg under = mutilate_under(g, {"A", "R_Y0"});
    std::set<Edge> expected;
    for (const auto& e : g.directed())
        if (e.first != "A" && e.first != "R_Y0")
            expected.insert(e);
    CHECK(under.directed() == expected);
    CHECK_FALSE(under.has_directed("A", "Y1"));
    CHECK_FALSE(under.has_directed("R_Y0", "A"));
    CHECK_FALSE(under.has_directed("R_Y0", "Y1"));
    CHECK(under.nodes() == g.nodes());
}

TEST_CASE("topological order") {
    Admg single;
    single.add_node("A", NodeKind::observed());
    CHECK(topological_order(single) == std::vector<NodeId>{"A"});
    CHECK(topological_order(chain()) == std::vector<NodeId>{"W", "A", "Y"});

    Admg g2a = load_lm("fig2a").graph();
    CHECK(lmg::testing::forward_edges(g2a, topological_order(g2a)));
}

TEST_CASE("edge validation") {
    Admg g = chain();
    CHECK_THROWS_AS(g.add_directed("Y", "W"), CycleDetected);
    CHECK_THROWS_AS(g.add_directed("W", "Q"), NodeNotFound);
    CHECK_THROWS_AS(g.add_directed("W", "W"), InvalidGraph);
    CHECK_THROWS_AS(g.add_bidirected("A", "A"), InvalidGraph);
    g.add_bidirected("Y", "W");
    CHECK(g.has_bidirected("W", "Y"));
    CHECK(g.has_bidirected("Y", "W"));
    CHECK(g.bidirected().begin()->first == "W");

    auto path = directed_path(g, "W", "Y");
    REQUIRE(path);
    CHECK(*path == std::vector<NodeId>{"W", "A", "Y"});
    CHECK_FALSE(directed_path(g, "Y", "W"));
}

TEST_CASE("m-graph invariants") {
    Admg g;
    g.add_node("X", NodeKind::missing());
    g.add_node("R_X", NodeKind::indicator("X"));
    g.add_node("Y", NodeKind::observed());
    g.add_directed("X", "Y");
    g.validate();
    CHECK(g.indicator_of("X") == std::optional<NodeId>("R_X"));

    Admg orphan;
    orphan.add_node("R_Q", NodeKind::indicator("Q"));
    CHECK_THROWS_AS(orphan.validate(), InvalidGraph);
}

TEST_CASE("json round trip") {
    for (auto name : {"fig1b", "fig1c", "fig2a", "fig2b", "fig3a", "fig3b"}) {
        Admg g = load_lm(name).base();
        CHECK(admg_from_json(to_json(g)) == g);
        CHECK(admg_from_json(nlohmann::json::parse(to_json(g).dump())) == g);
    }
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        Admg g = lmg::testing::random_admg(rng, 2 + i % 10, 0.3, 0.1);
        CHECK(admg_from_json(to_json(g)) == g);
    }
    CHECK_THROWS_AS(admg_from_json(nlohmann::json::parse(R"({"nodes":[{"name":"A"}],"directed":[["A","B"]]})")),
                    NodeNotFound);
}

TEST_CASE("random graph properties") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> density(0.1, 0.5);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + trial % 12;
        Admg g = lmg::testing::random_shuffled_dag(rng, n, density(rng));
        REQUIRE(lmg::testing::forward_edges(g, topological_order(g)));

        NodeSet s;
        for (const auto& [v, k] : g.nodes())
            if (rng() % 3 == 0)
                s.insert(v);
        CHECK(mutilate_over(mutilate_over(g, s), s) == mutilate_over(g, s));
        CHECK(mutilate_under(mutilate_under(g, s), s) == mutilate_under(g, s));

        NodeSet de = descendants(g, s), nd = nondescendants(g, s);
        CHECK(de == closure_oracle(g, s, false));
        CHECK(ancestors(g, s) == closure_oracle(g, s, true));
        NodeSet both;
        std::set_intersection(de.begin(), de.end(), nd.begin(), nd.end(), std::inserter(both, both.end()));
        CHECK(both.empty());
        NodeSet all = de;
        all.insert(nd.begin(), nd.end());
        CHECK(all == g.node_set());
    }
}
