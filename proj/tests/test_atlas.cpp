// Atlas model: DSL loading, builtins, jacobians, pullbacks, consistency.
#include <catch2/catch_amalgamated.hpp>

#include <opal/atlas.hpp>

using namespace opal;

namespace {

// Three charts related by polynomial shears; chart C2 carries a nontrivial
// density so pullback functoriality is not implied by density consistency.
constexpr std::string_view kShearAtlas = R"(
# comment line
atlas shear
params
timevar t
chart C0 vars a0 b0 denom 1 order 0
chart C1 vars a1 b1 denom 1 order 0
chart C2 vars a2 b2 denom a2 + b2^2 + 1 order 2
transition C0 -> C1 { a1 = a0 + b0^2 ; b1 = b0 }
transition C1 -> C0 { a0 = a1 - b1^2 ; b0 = b1 }
transition C1 -> C2 { a2 = a1 ; b2 = b1 + a1^3 }
transition C2 -> C1 { a1 = a2 ; b1 = b2 - a2^3 }
transition C0 -> C2 { a2 = a0 + b0^2 ; b2 = b0 + (a0 + b0^2)^3 }
transition C2 -> C0 { a0 = a2 - (b2 - a2^3)^2 ; b0 = b2 - a2^3 }
)";

}  // namespace

TEST_CASE("builtin atlases load with the documented shape") {
  Atlas e7 = builtin_atlas("E7");
  REQUIRE(e7.charts.size() == 3);
  REQUIRE(e7.params == std::vector<std::string>{"alpha"});
  REQUIRE(e7.timevar == "t");
  const Transition& t10 = e7.transition(e7.chart_index("U1"),
                                        e7.chart_index("U0"));
  REQUIRE(rf_equal(t10.x_expr, parse_expr("1/x1", e7.vars)));
  for (int i = 0; i < 3; ++i)
    REQUIRE(rf_equal(e7.density(i), RatFunc::constant(e7.vars, 1)));
  REQUIRE(e7.coboundary.size() == 3);

  Atlas d8 = builtin_atlas("d8");  // case-insensitive
  REQUIRE(d8.charts.size() == 3);
  REQUIRE(d8.params.empty());
  const Chart& u2 = d8.chart("U2");
  REQUIRE(Poly(u2.denom) ==
          parse_expr("t - t*y2 + x2*y2^2", d8.vars).num());
  REQUIRE(u2.pole_order == 1);
  REQUIRE(rf_equal(d8.density(d8.chart_index("U0")),
                   parse_expr("1/y0", d8.vars)));
  REQUIRE(rf_equal(d8.density(d8.chart_index("U1")),
                   parse_expr("1/(1 + x1*y1^2)^2", d8.vars)));
  REQUIRE(rf_equal(d8.density(d8.chart_index("U2")),
                   parse_expr("1/(t - t*y2 + x2*y2^2)", d8.vars)));

  REQUIRE_THROWS_AS(builtin_atlas("Q5"), error);
}

TEST_CASE("jacobians and determinants") {
  Atlas shear = parse_atlas(kShearAtlas);
  SECTION("shear transitions are unimodular") {
    for (const auto& [key, tr] : shear.transitions) {
      (void)key;
      Jacobian2 j = jacobian(shear, tr);
      REQUIRE(rf_equal(j.det, RatFunc::constant(shear.vars, 1)));
    }
    Jacobian2 j01 = jacobian(shear, shear.transition(0, 1));
    REQUIRE(rf_equal(j01.dxx, RatFunc::constant(shear.vars, 1)));
    REQUIRE(rf_equal(j01.dyx, RatFunc::zero(shear.vars)));
    REQUIRE(rf_equal(j01.dyy, RatFunc::constant(shear.vars, 1)));
  }
  SECTION("all six transitions of the first builtin have det 1") {
    Atlas e7 = builtin_atlas("E7");
    for (const auto& [key, tr] : e7.transitions) {
      (void)key;
      REQUIRE(rf_equal(jacobian(e7, tr).det,
                       RatFunc::constant(e7.vars, 1)));
    }
  }
  SECTION("localized builtin has the expected non-unit determinant") {
    Atlas d8 = builtin_atlas("D8");
    const Transition& t20 = d8.transition(d8.chart_index("U2"),
                                          d8.chart_index("U0"));
    REQUIRE(rf_equal(jacobian(d8, t20).det, parse_expr("y2^2", d8.vars)));
  }
}

TEST_CASE("density pullbacks") {
  SECTION("identity-like pullback through a unimodular transition") {
    Atlas e7 = builtin_atlas("E7");
    const Transition& t10 = e7.transition(1, 0);
    REQUIRE(rf_equal(pullback_density(e7, t10),
                     RatFunc::constant(e7.vars, 1)));
  }
  SECTION("pullback reproduces the source density on the localized atlas") {
    Atlas d8 = builtin_atlas("D8");
    const Transition& t20 = d8.transition(d8.chart_index("U2"),
                                          d8.chart_index("U0"));
    REQUIRE(rf_equal(pullback_density(d8, t20),
                     d8.density(d8.chart_index("U2"))));
  }
  SECTION("contravariant functoriality with an arbitrary density") {
    Atlas shear = parse_atlas(kShearAtlas);
    RatFunc direct = pullback_density(shear, shear.transition(0, 2));
    const Transition& t01 = shear.transition(0, 1);
    RatFunc step = pullback_density(shear, shear.transition(1, 2));
    RatFunc composed = subst(step, transition_images(shear, t01), shear.vars) *
                       jacobian(shear, t01).det;
    REQUIRE(rf_equal(direct, composed));
  }
}

TEST_CASE("consistency checks pass on builtins and catch defects") {
  SECTION("full sweep is green for both builtins") {
    for (auto name : {"E7", "D8"}) {
      Atlas a = builtin_atlas(name);
      Report rep = check_atlas(a);
      INFO(rep.to_text());
      REQUIRE(rep.all_pass());
      REQUIRE(rep.items.size() == 30);  // 12 pair + 12 triple + 6 density
    }
  }
  SECTION("perturbed transition fails its inverse-pair check") {
    Atlas e7 = builtin_atlas("E7");
    Transition& t01 = e7.transitions.at({0, 1});
    t01.y_expr = t01.y_expr + RatFunc::constant(e7.vars, 1);
    Report rep;
    check_inverse_pair(e7, 0, 1, rep);
    REQUIRE(!rep.all_pass());
    bool saw_residual = false;
    for (const auto& item : rep.items)
      if (!item.pass && item.detail.find("residual") != std::string::npos)
        saw_residual = true;
    REQUIRE(saw_residual);
  }
  SECTION("inconsistent third transition fails the triple check") {
    Atlas shear = parse_atlas(kShearAtlas);
    Transition& t02 = shear.transitions.at({0, 2});
    t02.x_expr = t02.x_expr * RatFunc::constant(shear.vars, 2);
    Report rep;
    check_triple_compat(shear, 0, 1, 2, rep);
    REQUIRE(!rep.all_pass());
  }
  SECTION("density mismatch is reported") {
    Atlas d8 = builtin_atlas("D8");
    d8.charts[0].pole_order = 2;  // density becomes 1/y0^2
    Report rep;
    check_density_compat(d8, d8.transition(2, 0), rep);
    REQUIRE(!rep.all_pass());
  }
}

TEST_CASE("atlas text errors carry line numbers") {
  auto line_of = [](std::string_view text) -> long {
    try {
      parse_atlas(text);
    } catch (const parse_error& e) {
      return static_cast<long>(e.position);
    }
    return -1;
  };
  REQUIRE(line_of("atlas A\ntimevar t\nfrobnicate x\n") == 3);
  REQUIRE(line_of("atlas A\ntimevar t\nchart U vars x y denom 1\n") == 3);
  REQUIRE(line_of("atlas A\ntimevar t\n"
                  "chart U vars x y denom 1 order 0\n"
                  "chart V vars u v denom 1/u order 0\n") == 4);
  REQUIRE(line_of("atlas A\ntimevar t\n"
                  "chart U vars x y denom 1 order 0\n"
                  "chart V vars u v denom 1 order 0\n"
                  "transition U -> V { u = x ; w = y }\n") == 5);
  // expression errors bubble up with the line number
  REQUIRE(line_of("atlas A\ntimevar t\n"
                  "chart U vars x y denom 1 order 0\n"
                  "chart V vars u v denom 1 order 0\n"
                  "transition U -> V { u = x + ; v = y }\n") == 5);
  // transitions may only use source-chart variables plus globals
  REQUIRE(line_of("atlas A\ntimevar t\n"
                  "chart U vars x y denom 1 order 0\n"
                  "chart V vars u v denom 1 order 0\n"
                  "transition U -> V { u = v ; v = y }\n") == 5);

  SECTION("structural failures") {
    REQUIRE_THROWS_AS(parse_atlas("timevar t\n"
                                  "chart U vars x y denom 1 order 0\n"),
                      parse_error);
    // missing reverse direction
    REQUIRE_THROWS_AS(
        parse_atlas("atlas A\ntimevar t\n"
                    "chart U vars x y denom 1 order 0\n"
                    "chart V vars u v denom 1 order 0\n"
                    "transition U -> V { u = x ; v = y }\n"),
        parse_error);
    // disconnected transition graph
    REQUIRE_THROWS_AS(
        parse_atlas("atlas A\ntimevar t\n"
                    "chart U vars x y denom 1 order 0\n"
                    "chart V vars u v denom 1 order 0\n"),
        parse_error);
    // duplicate chart variable names across charts
    REQUIRE_THROWS_AS(
        parse_atlas("atlas A\ntimevar t\n"
                    "chart U vars x y denom 1 order 0\n"
                    "chart V vars x y denom 1 order 0\n"
                    "transition U -> V { x = x ; y = y }\n"
                    "transition V -> U { x = x ; y = y }\n"),
        parse_error);
  }
}

TEST_CASE("builtin expressions print and re-parse to a fixed point") {
  for (auto name : {"E7", "D8"}) {
    Atlas a = builtin_atlas(name);
    std::vector<RatFunc> exprs;
    for (const auto& [key, tr] : a.transitions) {
      (void)key;
      exprs.push_back(tr.x_expr);
      exprs.push_back(tr.y_expr);
    }
    for (const auto& [ci, vf] : a.coboundary) {
      (void)ci;
      exprs.push_back(vf.eta);
      exprs.push_back(vf.zeta);
    }
    for (const auto& c : a.charts) exprs.push_back(RatFunc(c.denom));
    for (const auto& f : exprs) {
      std::string s1 = to_string(f);
      RatFunc f2 = parse_expr(s1, a.vars);
      REQUIRE(to_string(f2) == s1);
      REQUIRE(rf_equal(f, f2));
    }
  }
}
