#pragma once

// Catalog of the six classical second-order equations, their quadratic
// Hamiltonians, the parameter correspondences between the two presentations,
// and exact symbolic elimination of the momentum variable.
//
// Conventions:
//   * A scalar equation is stored as x'' = rhs(x, p, t, params) with p = x'.
//   * A Hamiltonian is stored via its y-coefficients: H = A*y^2 + B*y + C,
//     where A, B, C depend on (x, t, params) only and A is nonzero.
//   * Elimination proceeds along trajectories of the canonical system
//     x' = dH/dy, y' = -dH/dx.  Writing u = dH/dy = 2*A*y + B, the second
//     derivative expands as
//         x'' = d/dt u = u_t + u_x * p + u_y * y'
//             = u_t + u_x * p + (2*A) * (-(A_x*y^2 + B_x*y + C_x)),
//     after which y is replaced by its solution y = (p - B)/(2*A) from
//     p = u.  The total-derivative bookkeeping is spelled out term by term
//     because it is easy to drop the u_y * y' contribution.
//
// All arithmetic is exact over the rationals; comparisons never clear
// denominators approximately.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "builtin_data.hpp"
#include "ratfunc.hpp"

namespace opal {

// Shared variable table for everything in this catalog.  One fixed table
// (positions plus every parameter any entry uses) keeps expressions from
// different systems directly comparable.
inline VarTablePtr painleve_vars() {
  static const VarTablePtr vt =
      make_vars({"x", "y", "p", "t", "alpha", "beta", "gamma", "delta", "a",
                 "kappa0", "kappa1", "kappat", "kappainf", "eta0", "etainf",
                 "eta"});
  return vt;
}

// x'' = rhs(x, p, t, params) with p denoting x'.
struct ScalarODE {
  RatFunc rhs;
};

// H = A*y^2 + B*y + C with coefficients free of y and p.
struct QuadraticHamiltonian {
  RatFunc A, B, C;
};

// Partial map from the classical constants (alpha, beta, gamma, delta) to
// expressions in the kappa/eta parameters.  Absent entries leave the
// constant untouched.
struct ParamMap {
  std::map<std::string, RatFunc> images;
};

struct PainleveSystem {
  std::string tag;
  std::optional<QuadraticHamiltonian> hamiltonian;  // absent for III_D7/III_D8
  ScalarODE scalar;
  std::optional<ParamMap> params;  // absent when no constants need renaming
};

inline std::vector<std::string> painleve_tags() {
  std::vector<std::string> out;
  for (const data::PainleveRecord& rec : data::painleve_records)
    out.emplace_back(rec.tag);
  return out;
}

inline PainleveSystem builtin_system(std::string_view tag) {
  const VarTablePtr vt = painleve_vars();
  for (const data::PainleveRecord& rec : data::painleve_records) {
    if (rec.tag != tag) continue;
    PainleveSystem sys;
    sys.tag = std::string(rec.tag);
    sys.scalar.rhs = parse_expr(rec.scalar_rhs, vt);
    if (rec.has_hamiltonian) {
      QuadraticHamiltonian h{parse_expr(rec.A, vt), parse_expr(rec.B, vt),
                             parse_expr(rec.C, vt)};
      if (rf_is_zero(h.A))
        throw error("builtin system '" + sys.tag +
                    "' has a vanishing leading coefficient");
      sys.hamiltonian = std::move(h);
    }
    ParamMap pm;
    auto add = [&](const char* name, std::string_view txt) {
      if (!txt.empty()) pm.images.emplace(name, parse_expr(txt, vt));
    };
    add("alpha", rec.map_alpha);
    add("beta", rec.map_beta);
    add("gamma", rec.map_gamma);
    add("delta", rec.map_delta);
    if (!pm.images.empty()) sys.params = std::move(pm);
    return sys;
  }
  throw error("unknown builtin system '" + std::string(tag) + "'");
}

// Reduce the planar system  u' = f(u, w, t),  w' = g(u, w, t)  to a scalar
// second-order equation  w'' = rhs(w, p, t)  with p = w', by eliminating u.
// Requires g linear in u with nonzero u-coefficient, so p = g solves for u
// exactly.  Along trajectories,
//     w'' = g_t + g_u * u' + g_w * w' = g_t + g_u * f + g_w * p,
// after which u is replaced by its solution of p = g.
inline ScalarODE eliminate_linear(const RatFunc& f, const RatFunc& g,
                                  int u_var, int w_var, int p_var, int t_var) {
  const VarTablePtr& vt = g.table();
  require_same_table(vt, f.table());
  const RatFunc a = g.diff(u_var);  // u-coefficient of g when linear
  if (!rf_is_zero(a.diff(u_var)))
    throw error("eliminate_linear: w' is not linear in the variable to drop");
  if (rf_is_zero(a))
    throw error("eliminate_linear: w' does not involve the variable to drop");
  const RatFunc u = RatFunc::variable(vt, u_var);
  const RatFunc p = RatFunc::variable(vt, p_var);
  const RatFunc b = g - a * u;
  const RatFunc wpp = g.diff(t_var) + a * f + g.diff(w_var) * p;
  const std::map<int, RatFunc> img{{u_var, (p - b) / a}};
  return ScalarODE{subst(wpp, img, vt)};
}

// Eliminate the momentum variable from a Hamiltonian quadratic in y.
// Requires A semantically nonzero (so p = 2*A*y + B solves uniquely for y).
// This is eliminate_linear applied to the canonical system
//     x' = dH/dy = 2*A*y + B,   y' = -dH/dx,
// i.e.  x'' = (2*A*y + B)_t + (2*A*y + B)_x * p + (2*A) * (-dH/dx),
// followed by the back-substitution y = (p - B)/(2*A).
inline ScalarODE eliminate_y(const QuadraticHamiltonian& h) {
  const VarTablePtr& vt = h.A.table();
  require_same_table(vt, h.B.table());
  require_same_table(vt, h.C.table());
  if (rf_is_zero(h.A))
    throw error("eliminate_y: leading coefficient A is zero");
  const int ix = vt->index_of("x");
  const int iy = vt->index_of("y");
  const RatFunc y = RatFunc::variable(vt, iy);
  const RatFunc two = RatFunc::constant(vt, 2);
  const RatFunc g = two * h.A * y + h.B;  // x' = dH/dy
  const RatFunc f =
      -(h.A.diff(ix) * y * y + h.B.diff(ix) * y + h.C.diff(ix));  // y' = -dH/dx
  return eliminate_linear(f, g, iy, ix, vt->index_of("p"),
                          vt->index_of("t"));
}

// Semantic comparison of two scalar equations, optionally after rewriting
// the second one's constants through `map`.  Never hides a mismatch: the
// exact difference a.rhs - mapped(b.rhs) is always returned.
struct CompareResult {
  bool match;
  RatFunc residual;
};

inline CompareResult compare(const ScalarODE& a, const ScalarODE& b,
                             const std::optional<ParamMap>& map = std::nullopt) {
  require_same_table(a.rhs.table(), b.rhs.table());
  const VarTablePtr& vt = a.rhs.table();
  RatFunc mapped = b.rhs;
  if (map) {
    std::map<int, RatFunc> images;
    for (const auto& [name, expr] : map->images) {
      require_same_table(vt, expr.table());
      images.emplace(vt->index_of(name), expr);
    }
    mapped = subst(b.rhs, images, vt);
  }
  RatFunc residual = a.rhs - mapped;
  const bool ok = rf_is_zero(residual);
  return CompareResult{ok, std::move(residual)};
}

}  // namespace opal
