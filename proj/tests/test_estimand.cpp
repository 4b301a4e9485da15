#include <doctest.h>

#include "lmg/errors.hpp"
#include "lmg/estimand.hpp"
#include "lmg/recovery.hpp"
#include "support.hpp"

using namespace lmg;

namespace {

const std::string kD = "\xCE\x94_a ";

Estimand eq11() {
    Estimand q0 = Estimand::cond_exp("Y1", {"W"}, "A", {{"R_Y0", 0}});
    Estimand q1 = Estimand::cond_exp("Y1", {"W", "Y0"}, "A", {{"R_Y0", 1}});
    return Estimand::sum({{{"R_Y0", 0}}, {{"R_Y0", 1}}},
                         {Estimand::integrate({"W"}, {}, {{"R_Y0", 0}}, Estimand::delta("A", q0)),
                          Estimand::integrate({"W", "Y0"}, {}, {{"R_Y0", 1}}, Estimand::delta("A", q1))});
}

} // namespace

TEST_CASE("text rendering") {
    Estimand fate = Estimand::integrate(
        {"W"}, {}, {},
        Estimand::integrate({"Y0"}, {"W"}, {{"R_Y0", 1}},
                            Estimand::delta("A", Estimand::cond_exp("Y1", {"W", "Y0"}, "A", {{"R_Y0", 1}}))));
    CHECK(render_estimand(fate, RenderFormat::Text) == "E_W E_{Y0|W,R_Y0=1} " + kD + "E[Y1|W,Y0,A=a,R_Y0=1]");

    CHECK(render_estimand(eq11(), RenderFormat::Text) ==
          "P(R_Y0=0) E_{W|R_Y0=0} " + kD + "E[Y1|W,A=a,R_Y0=0] + P(R_Y0=1) E_{W,Y0|R_Y0=1} " + kD +
              "E[Y1|W,Y0,A=a,R_Y0=1]");

    Estimand backdoor = Estimand::integrate({"W"}, {}, {}, Estimand::delta("A", Estimand::cond_exp("Y", {"W"}, "A", {})));
    CHECK(render_estimand(backdoor, RenderFormat::Text) == "E_W " + kD + "E[Y|W,A=a]");

    CHECK(Estimand::integrate({}, {"W"}, {}, backdoor) == backdoor);
}

TEST_CASE("latex rendering") {
    CHECK(latex_name("Y0") == "Y_{0}");
    CHECK(latex_name("R_Y0") == "R_{Y_{0}}");
    CHECK(latex_name("W") == "W");
    CHECK(render_estimand(eq11(), RenderFormat::Latex).rfind("\\mathbb{P}(R_{Y_{0}}=0) \\mathbb{E}_{W\\mid R_{Y_{0}}=0}", 0) == 0);
}

TEST_CASE("parse inverts the text rendering") {
    CHECK(parse_estimand(render_estimand(eq11(), RenderFormat::Text)) == eq11());

    for (auto name : {"fig1c", "fig3a", "fig3b"}) {
        LmGraph lm = lmg::testing::load_lm(name);
        NodeId y = std::string(name) == "fig1c" ? "Y1" : "Y";
        auto w = search_nate_witness(lm, {"A", y});
        REQUIRE(w);
        auto v = check_nate_recovery(lm, {"A", y}, *w);
        REQUIRE(v.estimand);
        std::string text = render_estimand(*v.estimand, RenderFormat::Text);
        CHECK(parse_estimand(text) == *v.estimand);
        CHECK(render_estimand(parse_estimand(text), RenderFormat::Text) == text);
    }
    auto f = check_fate_recovery(lmg::testing::load_lm("fig1c"), {"A", "Y1", Target::Fate});
    CHECK(parse_estimand(render_estimand(*f.estimand, RenderFormat::Text)) == *f.estimand);

    CHECK_THROWS_AS(parse_estimand("E[Y|W]"), ParseError);
    CHECK_THROWS_AS(parse_estimand("E_W"), ParseError);
    CHECK_THROWS_AS(parse_estimand("E[Y|A=a] extra"), ParseError);
    CHECK_THROWS_AS(parse_estimand("E[Y|A=a,R=2]"), ParseError);
}

TEST_CASE("json form") {
    auto j = to_json(eq11());
    REQUIRE(j.contains("sum"));
    CHECK(j["sum"].size() == 2);
    CHECK(j["sum"][0]["weight"]["R_Y0"] == 0);
    CHECK(j["sum"][1]["term"]["integrate"]["vars"] == nlohmann::json{"W", "Y0"});
}
