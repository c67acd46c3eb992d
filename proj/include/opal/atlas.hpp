#pragma once

// Data model for a family of surfaces given as a finite set of affine charts
// with rational coordinate transitions and per-chart symplectic densities
// omega = dx ∧ dy / f^m, plus the geometric consistency checks (inverse
// pairs, triple compatibility, density pullbacks) and an atlas description
// language for loading chart data from text.

#include <opal/builtin_data.hpp>
#include <opal/ratfunc.hpp>
#include <opal/report.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opal {

// ----------------------------------------------------------------- types

struct Chart {
  std::string id;
  int x_var = -1;           // index into the atlas variable table
  int y_var = -1;
  Poly denom;               // localization polynomial f_i
  unsigned pole_order = 0;  // m_i; density is 1/f_i^{m_i}
};

struct Transition {
  int source = -1;  // chart indices into Atlas::charts
  int target = -1;
  RatFunc x_expr;   // target x as a function of source coordinates
  RatFunc y_expr;   // target y as a function of source coordinates
};

// A chartwise vector field eta ∂/∂x + zeta ∂/∂y.
struct VectorField {
  RatFunc eta;
  RatFunc zeta;
};

class Atlas {
 public:
  std::string name;
  std::vector<std::string> params;  // parameter names, e.g. {"alpha"}
  std::string timevar;
  VarTablePtr vars;                 // chart vars + timevar + params
  std::vector<Chart> charts;
  std::map<std::pair<int, int>, Transition> transitions;
  std::map<int, VectorField> coboundary;  // declared splitting fields

  int t_index() const { return vars->index_of(timevar); }
  std::vector<int> param_indices() const {
    std::vector<int> out;
    for (const auto& p : params) out.push_back(vars->index_of(p));
    return out;
  }

  int chart_index(std::string_view id) const {
    for (std::size_t i = 0; i < charts.size(); ++i)
      if (charts[i].id == id) return static_cast<int>(i);
    throw error("unknown chart id '" + std::string(id) + "'");
  }
  const Chart& chart(std::string_view id) const {
    return charts[static_cast<std::size_t>(chart_index(id))];
  }

  bool has_transition(int i, int j) const {
    return transitions.count({i, j}) > 0;
  }
  const Transition& transition(int i, int j) const {
    auto it = transitions.find({i, j});
    if (it == transitions.end())
      throw error("atlas '" + name + "' has no transition " +
                  charts[static_cast<std::size_t>(i)].id + " -> " +
                  charts[static_cast<std::size_t>(j)].id);
    return it->second;
  }

  // Density coefficient g_i = 1/f_i^{m_i} of omega on chart i.
  RatFunc density(int i) const {
    const Chart& c = charts.at(static_cast<std::size_t>(i));
    return RatFunc::constant(vars, 1) / RatFunc(c.denom).pow(c.pole_order);
  }
};

// ----------------------------------------------------------------- DSL

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] inline void dsl_fail(std::size_t line_no, const std::string& msg) {
  throw parse_error::verbatim(
      "atlas line " + std::to_string(line_no) + ": " + msg, line_no);
}

// Two 'name = expr' assignments separated by ';' inside braces.
inline std::array<std::pair<std::string, std::string>, 2> parse_body(
    std::string_view body, std::size_t line_no) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ';') {
      parts.push_back(trim(body.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (parts.size() != 2)
    dsl_fail(line_no, "expected exactly two ';'-separated assignments");
  std::array<std::pair<std::string, std::string>, 2> out;
  for (std::size_t k = 0; k < 2; ++k) {
    const std::string& a = parts[k];
    auto eq = a.find('=');
    if (eq == std::string::npos)
      dsl_fail(line_no, "assignment lacks '='");
    out[k] = {trim(a.substr(0, eq)), trim(a.substr(eq + 1))};
    if (!is_identifier(out[k].first))
      dsl_fail(line_no, "assignment target '" + out[k].first +
                            "' is not an identifier");
    if (out[k].second.empty()) dsl_fail(line_no, "empty right-hand side");
  }
  return out;
}

}  // namespace detail

// Parses the atlas description language:
//   atlas NAME
//   params IDENT*
//   timevar IDENT
//   chart ID vars IDENT IDENT denom EXPR order UINT
//   transition ID -> ID { IDENT = EXPR ; IDENT = EXPR }
//   coboundary ID { eta = EXPR ; zeta = EXPR }
// Lines are independent; '#' starts a comment. Errors carry line numbers.
inline Atlas parse_atlas(std::string_view text) {
  using detail::dsl_fail;

  struct RawChart {
    std::string id, xv, yv, denom;
    unsigned long order = 0;
    std::size_t line;
  };
  struct RawAssign {
    std::string a_name, a_expr, b_name, b_expr;
    std::size_t line;
  };
  struct RawTransition : RawAssign {
    std::string src, dst;
  };
  struct RawCoboundary : RawAssign {
    std::string id;
  };

  std::optional<std::string> name, timevar;
  std::optional<std::vector<std::string>> params;
  std::vector<RawChart> raw_charts;
  std::vector<RawTransition> raw_transitions;
  std::vector<RawCoboundary> raw_coboundaries;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line_v =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                        : nl - start);
    start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line_v.find('#'); hash != std::string_view::npos)
      line_v = line_v.substr(0, hash);
    std::string line = detail::trim(line_v);
    if (line.empty()) continue;

    std::istringstream head(line);
    std::string kw;
    head >> kw;

    if (kw == "atlas") {
      std::string n, extra;
      if (!(head >> n) || (head >> extra))
        dsl_fail(line_no, "expected 'atlas NAME'");
      if (name) dsl_fail(line_no, "duplicate 'atlas' line");
      name = n;
    } else if (kw == "params") {
      if (params) dsl_fail(line_no, "duplicate 'params' line");
      std::vector<std::string> ps;
      std::string p;
      while (head >> p) ps.push_back(p);
      params = std::move(ps);
    } else if (kw == "timevar") {
      std::string n, extra;
      if (!(head >> n) || (head >> extra))
        dsl_fail(line_no, "expected 'timevar IDENT'");
      if (timevar) dsl_fail(line_no, "duplicate 'timevar' line");
      timevar = n;
    } else if (kw == "chart") {
      auto toks = detail::split_ws(line);
      // chart ID vars X Y denom EXPR... order N —— the expression may
      // contain spaces, so it spans everything between 'denom' and the
      // trailing 'order N'.
      if (toks.size() < 9 || toks[2] != "vars" || toks[5] != "denom" ||
          toks[toks.size() - 2] != "order")
        dsl_fail(line_no,
                 "expected 'chart ID vars X Y denom EXPR order UINT'");
      RawChart rc;
      rc.id = toks[1];
      rc.xv = toks[3];
      rc.yv = toks[4];
      for (std::size_t i = 6; i + 2 < toks.size(); ++i) {
        if (!rc.denom.empty()) rc.denom += " ";
        rc.denom += toks[i];
      }
      const std::string& ord = toks.back();
      if (ord.empty() || !std::all_of(ord.begin(), ord.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c));
          }))
        dsl_fail(line_no, "pole order must be a nonnegative integer");
      rc.order = std::stoul(ord);
      rc.line = line_no;
      raw_charts.push_back(std::move(rc));
    } else if (kw == "transition" || kw == "coboundary") {
      auto open = line.find('{');
      auto close = line.rfind('}');
      if (open == std::string::npos || close == std::string::npos ||
          close < open)
        dsl_fail(line_no, "expected '{ ... }' body");
      auto body = detail::parse_body(
          std::string_view(line).substr(open + 1, close - open - 1), line_no);
      auto head_toks = detail::split_ws(line.substr(0, open));
      if (kw == "transition") {
        if (head_toks.size() != 4 || head_toks[2] != "->")
          dsl_fail(line_no, "expected 'transition ID -> ID { ... }'");
        RawTransition rt;
        rt.src = head_toks[1];
        rt.dst = head_toks[3];
        rt.a_name = body[0].first;
        rt.a_expr = body[0].second;
        rt.b_name = body[1].first;
        rt.b_expr = body[1].second;
        rt.line = line_no;
        raw_transitions.push_back(std::move(rt));
      } else {
        if (head_toks.size() != 2)
          dsl_fail(line_no, "expected 'coboundary ID { ... }'");
        RawCoboundary rc;
        rc.id = head_toks[1];
        rc.a_name = body[0].first;
        rc.a_expr = body[0].second;
        rc.b_name = body[1].first;
        rc.b_expr = body[1].second;
        rc.line = line_no;
        raw_coboundaries.push_back(std::move(rc));
      }
    } else {
      dsl_fail(line_no, "unknown keyword '" + kw + "'");
    }
  }

  if (!name) throw parse_error("atlas text lacks an 'atlas NAME' line", 0);
  if (!timevar) throw parse_error("atlas text lacks a 'timevar' line", 0);
  if (!params) params = std::vector<std::string>{};
  if (raw_charts.empty())
    throw parse_error("atlas text declares no charts", 0);

  Atlas atlas;
  atlas.name = *name;
  atlas.timevar = *timevar;
  atlas.params = *params;

  std::vector<std::string> var_names;
  for (const auto& rc : raw_charts) {
    var_names.push_back(rc.xv);
    var_names.push_back(rc.yv);
  }
  var_names.push_back(atlas.timevar);
  for (const auto& p : atlas.params) var_names.push_back(p);
  try {
    atlas.vars = make_vars(var_names);
  } catch (const error& e) {
    throw parse_error(std::string("invalid variable set: ") + e.what(), 0);
  }

  auto parse_in = [&](const std::string& text_expr,
                      std::size_t line) -> RatFunc {
    try {
      return parse_expr(text_expr, atlas.vars);
    } catch (const parse_error& e) {
      dsl_fail(line, std::string("in expression '") + text_expr +
                         "': " + e.what());
    } catch (const error& e) {
      dsl_fail(line, std::string("in expression '") + text_expr +
                         "': " + e.what());
    }
  };

  // Restrict an expression to an allowed variable set.
  auto restrict_vars = [&](const RatFunc& f, const std::set<int>& allowed,
                           std::size_t line, const std::string& what) {
    for (int v : vars_used(f))
      if (!allowed.count(v))
        dsl_fail(line, what + " may not involve variable '" +
                           atlas.vars->name(v) + "'");
  };

  std::set<int> globals;  // timevar + params
  globals.insert(atlas.vars->index_of(atlas.timevar));
  for (const auto& p : atlas.params) globals.insert(atlas.vars->index_of(p));

  std::set<std::string> chart_ids;
  for (const auto& rc : raw_charts) {
    if (!chart_ids.insert(rc.id).second)
      dsl_fail(rc.line, "duplicate chart id '" + rc.id + "'");
    Chart c;
    c.id = rc.id;
    c.x_var = atlas.vars->index_of(rc.xv);
    c.y_var = atlas.vars->index_of(rc.yv);
    if (c.x_var == c.y_var)
      dsl_fail(rc.line, "chart variables must be distinct");
    RatFunc d = parse_in(rc.denom, rc.line);
    if (!d.is_polynomial())
      dsl_fail(rc.line, "chart denominator must be polynomial");
    if (d.is_zero()) dsl_fail(rc.line, "chart denominator is zero");
    c.denom = d.num();
    c.pole_order = static_cast<unsigned>(rc.order);
    std::set<int> allowed = globals;
    allowed.insert(c.x_var);
    allowed.insert(c.y_var);
    restrict_vars(d, allowed, rc.line, "chart denominator");
    atlas.charts.push_back(std::move(c));
  }

  for (const auto& rt : raw_transitions) {
    if (!chart_ids.count(rt.src) || !chart_ids.count(rt.dst))
      dsl_fail(rt.line, "transition references unknown chart");
    int si = atlas.chart_index(rt.src), di = atlas.chart_index(rt.dst);
    if (si == di) dsl_fail(rt.line, "transition source equals target");
    if (atlas.transitions.count({si, di}))
      dsl_fail(rt.line, "duplicate transition " + rt.src + " -> " + rt.dst);
    const Chart& src = atlas.charts[static_cast<std::size_t>(si)];
    const Chart& dst = atlas.charts[static_cast<std::size_t>(di)];
    Transition tr;
    tr.source = si;
    tr.target = di;
    const std::string xname = atlas.vars->name(dst.x_var);
    const std::string yname = atlas.vars->name(dst.y_var);
    for (auto& [lhs, rhs] :
         {std::pair(rt.a_name, rt.a_expr), std::pair(rt.b_name, rt.b_expr)}) {
      RatFunc f = parse_in(rhs, rt.line);
      std::set<int> allowed = globals;
      allowed.insert(src.x_var);
      allowed.insert(src.y_var);
      restrict_vars(f, allowed, rt.line, "transition expression");
      if (lhs == xname) tr.x_expr = f;
      else if (lhs == yname) tr.y_expr = f;
      else
        dsl_fail(rt.line, "assignment target '" + lhs +
                              "' is not a variable of chart " + rt.dst);
    }
    if (tr.x_expr.table() == nullptr || tr.y_expr.table() == nullptr ||
        rt.a_name == rt.b_name)
      dsl_fail(rt.line, "transition must assign both target variables");
    atlas.transitions.emplace(std::make_pair(si, di), std::move(tr));
  }

  for (const auto& rc : raw_coboundaries) {
    if (!chart_ids.count(rc.id))
      dsl_fail(rc.line, "coboundary references unknown chart");
    int ci = atlas.chart_index(rc.id);
    if (atlas.coboundary.count(ci))
      dsl_fail(rc.line, "duplicate coboundary for chart " + rc.id);
    const Chart& c = atlas.charts[static_cast<std::size_t>(ci)];
    VectorField vf;
    bool have_eta = false, have_zeta = false;
    for (auto& [lhs, rhs] :
         {std::pair(rc.a_name, rc.a_expr), std::pair(rc.b_name, rc.b_expr)}) {
      RatFunc f = parse_in(rhs, rc.line);
      std::set<int> allowed = globals;
      allowed.insert(c.x_var);
      allowed.insert(c.y_var);
      restrict_vars(f, allowed, rc.line, "coboundary expression");
      if (lhs == "eta") { vf.eta = f; have_eta = true; }
      else if (lhs == "zeta") { vf.zeta = f; have_zeta = true; }
      else dsl_fail(rc.line, "coboundary assigns 'eta' and 'zeta' only");
    }
    if (!have_eta || !have_zeta)
      dsl_fail(rc.line, "coboundary must assign both eta and zeta");
    atlas.coboundary.emplace(ci, std::move(vf));
  }

  // Structural invariants: reverse pairs present, graph connected.
  for (const auto& [key, tr] : atlas.transitions) {
    (void)tr;
    if (!atlas.transitions.count({key.second, key.first}))
      throw parse_error(
          "transition " + atlas.charts[(std::size_t)key.first].id + " -> " +
              atlas.charts[(std::size_t)key.second].id +
              " lacks its reverse direction",
          0);
  }
  if (atlas.charts.size() > 1) {
    std::set<int> seen{0};
    std::queue<int> work;
    work.push(0);
    while (!work.empty()) {
      int i = work.front();
      work.pop();
      for (const auto& [key, tr] : atlas.transitions) {
        (void)tr;
        if (key.first == i && !seen.count(key.second)) {
          seen.insert(key.second);
          work.push(key.second);
        }
      }
    }
    if (seen.size() != atlas.charts.size())
      throw parse_error("transition graph is not connected", 0);
  }
  return atlas;
}

// ----------------------------------------------------------------- builtins

inline Atlas builtin_atlas(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
    return static_cast<char>(std::toupper(c));
  });
  if (key == "E7") {
    static const Atlas a = parse_atlas(data::e7_atlas_dsl);
    return a;
  }
  if (key == "D8") {
    static const Atlas a = parse_atlas(data::d8_atlas_dsl);
    return a;
  }
  throw error("unknown builtin atlas '" + std::string(name) +
              "' (available: E7, D8)");
}

// ----------------------------------------------------------------- geometry

struct Jacobian2 {
  // Rows differentiate (x_expr, y_expr); columns are (d/dx_src, d/dy_src).
  RatFunc dxx, dxy, dyx, dyy;
  RatFunc det;
};

inline Jacobian2 jacobian(const Atlas& atlas, const Transition& tr) {
  const Chart& s = atlas.charts[static_cast<std::size_t>(tr.source)];
  Jacobian2 j;
  j.dxx = tr.x_expr.diff(s.x_var);
  j.dxy = tr.x_expr.diff(s.y_var);
  j.dyx = tr.y_expr.diff(s.x_var);
  j.dyy = tr.y_expr.diff(s.y_var);
  j.det = j.dxx * j.dyy - j.dxy * j.dyx;
  return j;
}

// Substitution map sending the TARGET chart's variables to the transition's
// expressions (everything else passes through). Applying it to a function of
// target coordinates rewrites it in source coordinates.
inline std::map<int, RatFunc> transition_images(const Atlas& atlas,
                                                const Transition& tr) {
  const Chart& d = atlas.charts[static_cast<std::size_t>(tr.target)];
  return {{d.x_var, tr.x_expr}, {d.y_var, tr.y_expr}};
}

// Coefficient of the pullback through tr of the target chart's two-form,
// written in source coordinates: (g_target ∘ tr) · det J.
inline RatFunc pullback_density(const Atlas& atlas, const Transition& tr) {
  RatFunc g = atlas.density(tr.target);
  return subst(g, transition_images(atlas, tr), atlas.vars) *
         jacobian(atlas, tr).det;
}

// Coordinates of the composite map i -> j -> k as functions of chart i.
inline std::pair<RatFunc, RatFunc> compose_transitions(const Atlas& atlas,
                                                       int i, int j, int k) {
  const Transition& first = atlas.transition(i, j);
  const Transition& second = atlas.transition(j, k);
  // second's expressions are functions of chart-j coordinates; substituting
  // chart-j variables by first's expressions lands in chart-i coordinates.
  const Chart& cj = atlas.charts[static_cast<std::size_t>(j)];
  std::map<int, RatFunc> sub = {{cj.x_var, first.x_expr},
                                {cj.y_var, first.y_expr}};
  return {subst(second.x_expr, sub, atlas.vars),
          subst(second.y_expr, sub, atlas.vars)};
}

// --------------------------------------------------------------- checks

inline void check_inverse_pair(const Atlas& atlas, int i, int j, Report& rep) {
  const std::string tag = "inverse pair (" +
                          atlas.charts[(std::size_t)i].id + ", " +
                          atlas.charts[(std::size_t)j].id + ")";
  for (auto [a, b] : {std::pair(i, j), std::pair(j, i)}) {
    auto [cx, cy] = compose_transitions(atlas, a, b, a);
    const Chart& ca = atlas.charts[static_cast<std::size_t>(a)];
    RatFunc rx = cx - RatFunc::variable(atlas.vars, ca.x_var);
    RatFunc ry = cy - RatFunc::variable(atlas.vars, ca.y_var);
    const std::string dir =
        atlas.charts[(std::size_t)a].id + "->" +
        atlas.charts[(std::size_t)b].id + "->" +
        atlas.charts[(std::size_t)a].id;
    rep.add(tag + " x via " + dir, rf_is_zero(rx),
            rf_is_zero(rx) ? "" : "residual " + to_string(rx));
    rep.add(tag + " y via " + dir, rf_is_zero(ry),
            rf_is_zero(ry) ? "" : "residual " + to_string(ry));
  }
}

inline void check_triple_compat(const Atlas& atlas, int i, int j, int k,
                                Report& rep) {
  const auto& cs = atlas.charts;
  const std::string tag = "triple (" + cs[(std::size_t)i].id + ", " +
                          cs[(std::size_t)j].id + ", " +
                          cs[(std::size_t)k].id + ")";
  auto [cx, cy] = compose_transitions(atlas, i, j, k);
  const Transition& direct = atlas.transition(i, k);
  RatFunc rx = cx - direct.x_expr;
  RatFunc ry = cy - direct.y_expr;
  rep.add(tag + " x", rf_is_zero(rx),
          rf_is_zero(rx) ? "" : "residual " + to_string(rx));
  rep.add(tag + " y", rf_is_zero(ry),
          rf_is_zero(ry) ? "" : "residual " + to_string(ry));
}

inline void check_density_compat(const Atlas& atlas, const Transition& tr,
                                 Report& rep) {
  RatFunc pulled = pullback_density(atlas, tr);
  RatFunc src = atlas.density(tr.source);
  RatFunc resid = pulled - src;
  const std::string tag = "density pullback " +
                          atlas.charts[(std::size_t)tr.source].id + " <- " +
                          atlas.charts[(std::size_t)tr.target].id;
  rep.add(tag, rf_is_zero(resid),
          rf_is_zero(resid) ? "" : "residual " + to_string(resid));
}

// Full geometric consistency sweep: every inverse pair, every ordered
// triple with all transitions present, every density pullback.
inline Report check_atlas(const Atlas& atlas) {
  Report rep;
  const int n = static_cast<int>(atlas.charts.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (atlas.has_transition(i, j)) check_inverse_pair(atlas, i, j, rep);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        if (atlas.has_transition(i, j) && atlas.has_transition(j, k) &&
            atlas.has_transition(i, k))
          check_triple_compat(atlas, i, j, k, rep);
      }
  for (const auto& [key, tr] : atlas.transitions) {
    (void)key;
    check_density_compat(atlas, tr, rep);
  }
  return rep;
}

}  // namespace opal
