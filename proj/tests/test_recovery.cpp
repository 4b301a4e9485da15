#include <doctest.h>

#include "lmg/errors.hpp"
#include "lmg/recovery.hpp"
#include "support.hpp"

using namespace lmg;
using lmg::testing::load_json;
using lmg::testing::load_lm;

namespace {

// Directed-path search over the raw edge list of G with edges into `cut` removed.
bool reaches(const Admg& g, const NodeSet& cut, const NodeId& from, const NodeId& to) {
    std::vector<NodeId> stack{from};
    NodeSet seen{from};
    while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        if (v == to)
            return true;
        for (const auto& [a, b] : g.directed())
            if (a == v && !cut.count(b) && seen.insert(b).second)
                stack.push_back(b);
    }
    return false;
}

NodeSet r_phi_oracle(const LmGraph& lm, const QuerySpec& q) {
    NodeSet cut = lm.shifted_indicators();
    cut.insert(q.exposure);
    NodeSet out;
    for (const auto& r : lm.shifted_indicators())
        if (reaches(lm.graph(), cut, r, q.outcome))
            out.insert(r);
    return out;
}

Admg backdoor_graph() {
    Admg g;
    for (auto v : {"W", "A", "Y"})
        g.add_node(v, NodeKind::observed());
    g.add_directed("W", "A");
    g.add_directed("W", "Y");
    g.add_directed("A", "Y");
    return g;
}

void check_failure(const ConditionFailure& f) {
    if (f.index == 2) {
        CHECK(f.descendant_path.size() >= 2);
        for (std::size_t i = 0; i + 1 < f.descendant_path.size(); ++i)
            CHECK(f.graph.has_directed(f.descendant_path[i], f.descendant_path[i + 1]));
        return;
    }
    REQUIRE(f.open_path);
    CHECK(path_is_open(f.graph, *f.open_path, f.conditioning));
    NodeSet x{f.open_path->nodes.front()}, y{f.open_path->nodes.back()};
    CHECK_FALSE(m_separated_bruteforce(f.graph, {x, y, f.conditioning}));
}

} // namespace

TEST_CASE("golden verdict corpus") {
    struct Case {
        const char* graph;
        const char* golden;
        QuerySpec q;
    };
    const Case cases[] = {
        {"fig1c", "fig1c_fate", {"A", "Y1", Target::Fate}},
        {"fig1c", "fig1c_nate", {"A", "Y1", Target::Nate}},
        {"fig1b", "fig1b_fate", {"A", "Y1", Target::Fate}},
        {"fig1b", "fig1b_nate", {"A", "Y1", Target::Nate}},
        {"fig3a", "fig3a_fate", {"A", "Y", Target::Fate}},
        {"fig3a", "fig3a_nate", {"A", "Y", Target::Nate}},
        {"fig3b", "fig3b_fate", {"A", "Y", Target::Fate}},
        {"fig3b", "fig3b_nate", {"A", "Y", Target::Nate}},
        {"fig2a", "fig2a_fate", {"X", "Y", Target::Fate}},
        {"fig2b", "fig2b_fate", {"X", "Y", Target::Fate}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.golden);
        CHECK(recovery_report(load_lm(c.graph), c.q) == load_json(std::string("golden/") + c.golden + ".json"));
    }
}

TEST_CASE("shifted indicators with a route to the outcome") {
    LmGraph c = load_lm("fig1c");
    CHECK(compute_r_phi(c, {"A", "Y1"}) == NodeSet{"R_Y0"});

    LmGraph b = load_lm("fig2b");
    QuerySpec q{"X", "Y"};
    CHECK(r_phi_oracle(b, q) == NodeSet{"R_X", "R_Z"});
    CHECK(compute_r_phi(b, q) == r_phi_oracle(b, q));
    CHECK(compute_r_phi(load_lm("fig1b"), {"A", "Y1"}).empty());
}

TEST_CASE("full-effect criterion") {
    auto v = check_fate_recovery(load_lm("fig1c"), {"A", "Y1", Target::Fate});
    REQUIRE(v.recoverable);
    CHECK(v.adjustment == NodeSet{"W", "Y0"});
    CHECK(v.indicators == NodeSet{"R_Y0"});
    CHECK(render_estimand(*v.estimand, RenderFormat::Text) ==
          "E_W E_{Y0|W,R_Y0=1} \xCE\x94_a E[Y1|W,Y0,A=a,R_Y0=1]");

    auto f3 = check_fate_recovery(load_lm("fig3a"), {"A", "Y", Target::Fate});
    CHECK_FALSE(f3.recoverable);
    CHECK(f3.r_phi == NodeSet{"R_Z"});

    LmGraph plain = build_lm_graph(backdoor_graph(), {});
    auto bd = check_fate_recovery(plain, {"A", "Y", Target::Fate});
    REQUIRE(bd.recoverable);
    CHECK(bd.adjustment == NodeSet{"W"});
    CHECK(render_estimand(*bd.estimand, RenderFormat::Text) == "E_W \xCE\x94_a E[Y|W,A=a]");
}

TEST_CASE("natural-effect criterion with given witnesses") {
    LmGraph c = load_lm("fig1c");
    NateWitness w{{"Y0"}, {}, {{{0}, {"W"}}, {{1}, {"W", "Y0"}}}};
    auto v = check_nate_recovery(c, {"A", "Y1"}, w);
    REQUIRE(v.recoverable);
    CHECK(render_estimand(*v.estimand, RenderFormat::Text) ==
          "P(R_Y0=0) E_{W|R_Y0=0} \xCE\x94_a E[Y1|W,A=a,R_Y0=0] + "
          "P(R_Y0=1) E_{W,Y0|R_Y0=1} \xCE\x94_a E[Y1|W,Y0,A=a,R_Y0=1]");

    auto b3 = check_nate_recovery(load_lm("fig3b"), {"A", "Y"}, {{}, {"W"}, {{{}, {}}}});
    REQUIRE(b3.recoverable);
    CHECK(render_estimand(*b3.estimand, RenderFormat::Text) == "\xCE\x94_a E[Y|A=a,R_W=0]");

    auto a3 = check_nate_recovery(load_lm("fig3a"), {"A", "Y"}, {{}, {}, {{{}, {}}}});
    CHECK_FALSE(a3.recoverable);
    REQUIRE(a3.failure);
    CHECK(a3.failure->index == 5);
    check_failure(*a3.failure);
    const auto& nodes = a3.failure->open_path->nodes;
    CHECK(NodeSet{nodes.front(), nodes.back()} == NodeSet{"A", "Y"});
}

TEST_CASE("witness validation") {
    LmGraph c = load_lm("fig1c");
    QuerySpec q{"A", "Y1"};
    CHECK_THROWS_AS(check_nate_recovery(c, q, {{"W"}, {}, {}}), InvalidWitness);
    CHECK_THROWS_AS(check_nate_recovery(c, q, {{"Y0"}, {"Y0"}, {}}), InvalidWitness);
    CHECK_THROWS_AS(check_nate_recovery(c, q, {{"Y0"}, {}, {{{0, 1}, {}}}}), InvalidWitness);
    // L_0 may not use Y0 when R_Y0 = 0.
    CHECK_THROWS_AS(check_nate_recovery(c, q, {{"Y0"}, {}, {{{0}, {"Y0"}}, {{1}, {}}}}), InvalidWitness);
    CHECK_THROWS_AS(nate_witness_from_json(nlohmann::json::parse(R"({"K":["Y0"],"L":{"x":[]}})")),
                    InvalidWitness);

    NateWitness w{{"Y0"}, {}, {{{0}, {"W"}}, {{1}, {"W", "Y0"}}}};
    CHECK(nate_witness_from_json(to_json(w)) == w);
    CHECK(w.size() == 4);

    CHECK_THROWS_AS(validate_query(c, {"A", "A"}), InvalidQuery);
    CHECK_THROWS_AS(validate_query(c, {"Y1", "A"}), InvalidQuery);
    CHECK_THROWS_AS(validate_query(c, {"A", "R_Y0"}), InvalidQuery);
    CHECK_THROWS_AS(validate_query(c, {"A", "Q"}), InvalidQuery);
}

TEST_CASE("witness search") {
    auto w = search_nate_witness(load_lm("fig1c"), {"A", "Y1"});
    REQUIRE(w);
    CHECK(w->k == std::vector<NodeId>{"Y0"});
    CHECK(w->h.empty());
    CHECK(w->size() == 4);

    auto b = search_nate_witness(load_lm("fig3b"), {"A", "Y"});
    REQUIRE(b);
    CHECK(b->k.empty());
    CHECK(b->h == NodeSet{"W"});

    LmGraph plain = build_lm_graph(backdoor_graph(), {});
    auto bd = search_nate_witness(plain, {"A", "Y"});
    REQUIRE(bd);
    CHECK(bd->k.empty());
    CHECK(bd->h.empty());
    CHECK(bd->l.at({}) == NodeSet{"W"});

    CHECK(all_patterns(2) == std::vector<Pattern>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(all_patterns(0) == std::vector<Pattern>{{}});
}

TEST_CASE("random lm-graphs") {
    std::mt19937_64 rng(17);
    std::size_t found = 0, failures = 0;
    for (int trial = 0; trial < 300; ++trial) {
        LmGraph lm = lmg::testing::random_lm_graph(rng, 3 + trial % 5);
        NodeSet subs = lm.graph().nodes_with(NodeKind::Role::Observed);
        for (const auto& v : lm.graph().nodes_with(NodeKind::Role::MissingAffected))
            subs.insert(v);
        std::vector<NodeId> order;
        for (const auto& v : topological_order(lm.graph()))
            if (subs.count(v))
                order.push_back(v);
        QuerySpec q{order.front(), order.back()};
        if (q.exposure == q.outcome)
            continue;
        try {
            validate_query(lm, q);
        } catch (const InvalidQuery&) {
            continue;
        }

        NodeSet r_phi = compute_r_phi(lm, q);
        CHECK(r_phi == r_phi_oracle(lm, q));
        NodeSet r_sh = lm.shifted_indicators();
        CHECK(std::includes(r_sh.begin(), r_sh.end(), r_phi.begin(), r_phi.end()));

        if (auto w = search_nate_witness(lm, q, {1, 1, 3})) {
            ++found;
            CHECK(check_nate_recovery(lm, q, *w).recoverable);
        }
        if (lm.graph().nodes_with(NodeKind::Role::MissingAffected).empty()) {
            // All-empty witness reduces to the plain backdoor check with L = ∅.
            NateWitness empty{{}, {}, {{{}, {}}}};
            bool backdoor = m_separated(mutilate_under(lm.graph(), {q.exposure}), {{q.outcome}, {q.exposure}, {}});
            CHECK(check_nate_recovery(lm, q, empty).recoverable == backdoor);
        }
        // Every failure of a witness made of the observed parents of A carries a real path.
        NodeSet l;
        for (const auto& p : parents(lm.graph(), {q.exposure}))
            if (lm.graph().kind(p).role == NodeKind::Role::Observed)
                l.insert(p);
        NateWitness pa{{}, {}, {{{}, l}}};
        try {
            auto v = check_nate_recovery(lm, q, pa);
            if (!v.recoverable) {
                ++failures;
                REQUIRE(v.failure);
                check_failure(*v.failure);
            }
        } catch (const InvalidWitness&) {
        }
    }
    CHECK(found > 10);
    CHECK(failures > 10);
}
