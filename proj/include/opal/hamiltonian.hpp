#pragma once

// Relative differential-form calculus on a chart: contraction of a vector
// field with the symplectic density, the relative exterior derivative d_pi,
// the fundamental equation check, and Hamiltonian recovery/verification.

#include <opal/atlas.hpp>
#include <opal/kodaira_spencer.hpp>

#include <string>
#include <utility>

namespace opal {

// One-form a·dx + b·dy on a chart.
struct OneForm {
  RatFunc a;
  RatFunc b;
};

// theta ⌟ (g dx∧dy) = g·(eta dy − zeta dx).
inline OneForm contract(const Atlas& atlas, int chart, const VectorField& vf) {
  RatFunc g = atlas.density(chart);
  return {-(g * vf.zeta), g * vf.eta};
}

// Coefficient of dx∧dy in the relative exterior derivative (t, params held
// fixed): d_pi(a dx + b dy) = (∂b/∂x − ∂a/∂y) dx∧dy.
inline RatFunc d_pi(const Atlas& atlas, int chart, const OneForm& w) {
  const Chart& c = atlas.charts.at(static_cast<std::size_t>(chart));
  return w.b.diff(c.x_var) - w.a.diff(c.y_var);
}

// Fundamental equation on one chart: ∂g/∂t − d_pi(theta ⌟ omega) = 0.
inline void fundamental_check(const Atlas& atlas, int chart,
                              const VectorField& vf, Report& rep) {
  RatFunc g = atlas.density(chart);
  RatFunc resid = g.diff(atlas.t_index()) - d_pi(atlas, chart, contract(atlas, chart, vf));
  const bool ok = rf_is_zero(resid);
  rep.add("fundamental equation on chart " +
              atlas.charts[(std::size_t)chart].id,
          ok, ok ? "" : "residual " + to_string(resid));
}

// Recovers H with ∂H/∂x = zeta, ∂H/∂y = −eta and H(0,0) = 0 by the explicit
// path integral H(x,y) = ∫₀^x zeta(s,0) ds − ∫₀^y eta(x,s) ds. Only defined
// on density-1 charts with polynomial coefficients and closed contraction.
inline RatFunc recover_hamiltonian(const Atlas& atlas, int chart,
                                   const VectorField& vf) {
  const Chart& c = atlas.charts.at(static_cast<std::size_t>(chart));
  if (c.pole_order != 0)
    throw error("Hamiltonian recovery requires a density-1 chart (chart " +
                c.id + " has pole order " + std::to_string(c.pole_order) +
                ")");
  if (!vf.eta.is_polynomial() || !vf.zeta.is_polynomial())
    throw error("Hamiltonian recovery requires polynomial coefficients");
  RatFunc closed = d_pi(atlas, chart, contract(atlas, chart, vf));
  if (!rf_is_zero(closed))
    throw error("contraction is not closed; no Hamiltonian exists (d_pi = " +
                to_string(closed) + ")");
  std::map<int, RatFunc> y_to_zero = {{c.y_var, RatFunc::zero(atlas.vars)}};
  Poly zeta_at0 = subst(vf.zeta, y_to_zero, atlas.vars).num();
  Poly part1 = zeta_at0.antiderivative(c.x_var);
  Poly part2 = vf.eta.num().antiderivative(c.y_var);
  return RatFunc(part1 - part2);
}

struct SignResolution {
  bool minus_holds = false;  // d_pi H = −(theta ⌟ omega)
  bool plus_holds = false;   // d_pi H = +(theta ⌟ omega)
};

// Tests both sign conventions of the Hamiltonian identity and reports the
// one(s) that hold semantically; the check passes if either sign works.
inline SignResolution verify_hamiltonian(const Atlas& atlas, int chart,
                                         const RatFunc& H,
                                         const VectorField& vf, Report& rep) {
  const Chart& c = atlas.charts.at(static_cast<std::size_t>(chart));
  OneForm w = contract(atlas, chart, vf);
  RatFunc hx = H.diff(c.x_var), hy = H.diff(c.y_var);
  SignResolution r;
  r.minus_holds = rf_is_zero(hx + w.a) && rf_is_zero(hy + w.b);
  r.plus_holds = rf_is_zero(hx - w.a) && rf_is_zero(hy - w.b);
  std::string detail;
  if (r.minus_holds && r.plus_holds) detail = "holds with both signs";
  else if (r.minus_holds) detail = "resolved sign -1";
  else if (r.plus_holds) detail = "resolved sign +1";
  else detail = "fails both signs; residual at sign -1: (" +
                to_string(hx + w.a) + ") dx + (" + to_string(hy + w.b) +
                ") dy";
  rep.add("Hamiltonian identity on chart " + c.id,
          r.minus_holds || r.plus_holds, detail);
  return r;
}

// True when f involves no chart coordinates (only t and parameters).
inline bool is_base_function(const Atlas& atlas, const RatFunc& f) {
  std::set<int> base;
  base.insert(atlas.t_index());
  for (int p : atlas.param_indices()) base.insert(p);
  for (int v : vars_used(f))
    if (!base.count(v)) return false;
  return true;
}

}  // namespace opal
