#pragma once

// Adaptive embedded Runge-Kutta integration of the per-chart flows over
// complex phase space with automatic chart switching, so trajectories can
// pass through points where a single chart's coordinates blow up.
//
// The symbolic modules fix what the flow IS; everything numerical here is
// implementation policy, chosen as follows and validated by the test suite:
//   * embedded Dormand-Prince 5(4) pair, PI step-size controller with
//     safety 0.9 and growth clamp [0.2, 5];
//   * chart preference by the health score |f_i(x,y,t)| / (1 + |x|^2 + |y|^2)
//     (f_i the chart's localization polynomial), switching when the current
//     chart falls below 0.1 of the best alternative (hysteresis), with a
//     hard floor of 1e-12 below which no chart counts as usable;
//   * every switch validates its round trip: mapping to the new chart and
//     back must reproduce (x, y) to 1e-12 relative error;
//   * complex time contours are user-chosen polylines; poles in t are the
//     caller's problem, poles in phase space are what switching solves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kodaira_spencer.hpp"
#include "painleve_db.hpp"

namespace opal {

using Complex = std::complex<double>;
using ParamValues = std::map<std::string, Complex>;

// ----------------------------------------------------------------- state

struct PhaseState {
  int chart = 0;
  Complex x{};
  Complex y{};
  Complex t{};
};

// Complex time contour (polyline) plus numeric parameter values.
struct TPath {
  std::vector<Complex> waypoints;
  ParamValues params;

  void validate() const {
    if (waypoints.size() < 2)
      throw error("a time path needs at least two waypoints");
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i)
      if (waypoints[i] == waypoints[i + 1])
        throw error("consecutive path waypoints must be distinct");
  }
  double length() const {
    double L = 0.0;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i)
      L += std::abs(waypoints[i + 1] - waypoints[i]);
    return L;
  }
  TPath reversed() const {
    TPath r{waypoints, params};
    std::reverse(r.waypoints.begin(), r.waypoints.end());
    return r;
  }
};

inline TPath segment_path(Complex t0, Complex t1, ParamValues params = {}) {
  return TPath{{t0, t1}, std::move(params)};
}

struct Sample {
  Complex t{};
  int chart = 0;
  Complex x{};
  Complex y{};
  double h = 0.0;    // arclength of the accepted step (0 for snapshots)
  double err = 0.0;  // embedded error estimate of the step
};

struct SwitchEvent {
  Complex t{};
  int from = 0;
  int to = 0;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<SwitchEvent> switches;
  std::size_t accepted = 0;
  std::size_t rejected = 0;

  const Sample& back() const {
    if (samples.empty()) throw error("empty trajectory");
    return samples.back();
  }
  PhaseState final_state() const {
    const Sample& s = back();
    return PhaseState{s.chart, s.x, s.y, s.t};
  }
};

// ----------------------------------------------------------------- numeric
// Compiled (double-precision) form of the exact rational data.

namespace detail {

inline Complex ipow(Complex z, unsigned e) {
  Complex acc{1.0, 0.0};
  while (e) {
    if (e & 1u) acc *= z;
    z *= z;
    e >>= 1u;
  }
  return acc;
}

struct CompiledPoly {
  struct Term {
    Complex c;
    std::vector<std::pair<int, unsigned>> pows;  // (variable, exponent)
  };
  std::vector<Term> terms;

  static CompiledPoly from(const Poly& p) {
    CompiledPoly out;
    for (const auto& [mono, coef] : p.terms()) {
      Term t;
      t.c = Complex(coef.get_d(), 0.0);
      for (std::size_t v = 0; v < mono.size(); ++v)
        if (mono[v]) t.pows.emplace_back(static_cast<int>(v), mono[v]);
      out.terms.push_back(std::move(t));
    }
    return out;
  }

  Complex eval(const std::vector<Complex>& vals) const {
    Complex acc{0.0, 0.0};
    for (const Term& t : terms) {
      Complex m = t.c;
      for (const auto& [v, e] : t.pows)
        m *= ipow(vals[static_cast<std::size_t>(v)], e);
      acc += m;
    }
    return acc;
  }
};

inline bool finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

struct CompiledRat {
  CompiledPoly num, den;

  static CompiledRat from(const RatFunc& f) {
    return CompiledRat{CompiledPoly::from(f.num()), CompiledPoly::from(f.den())};
  }

  // nullopt when the denominator vanishes or the quotient overflows: the
  // caller treats that as "this chart cannot represent the point".
  std::optional<Complex> eval(const std::vector<Complex>& vals) const {
    const Complex d = den.eval(vals);
    if (d == Complex{0.0, 0.0}) return std::nullopt;
    const Complex q = num.eval(vals) / d;
    if (!finite(q)) return std::nullopt;
    return q;
  }
};

}  // namespace detail

// Per-chart numeric evaluators for the flow (-eta_i, -zeta_i), the chart
// transition maps, and the localization polynomials.  Immutable after
// construction and shareable across concurrent integrations.
class CompiledSystem {
 public:
  CompiledSystem(const Atlas& atlas, const Coboundary& b) {
    nvars_ = atlas.vars->size();
    t_idx_ = atlas.t_index();
    param_names_ = atlas.params;
    param_idx_ = atlas.param_indices();
    atlas_name_ = atlas.name;
    const auto odes = ode_system(atlas, b);
    for (std::size_t i = 0; i < atlas.charts.size(); ++i) {
      const Chart& c = atlas.charts[i];
      const auto& [fx, fy] = odes.at(static_cast<int>(i));
      check_scope_(fx, c);
      check_scope_(fy, c);
      ChartProgram cp;
      cp.id = c.id;
      cp.x_var = c.x_var;
      cp.y_var = c.y_var;
      cp.fx = detail::CompiledRat::from(fx);
      cp.fy = detail::CompiledRat::from(fy);
      cp.denom = detail::CompiledPoly::from(c.denom);
      charts_.push_back(std::move(cp));
    }
    for (const auto& [key, tr] : atlas.transitions) {
      const Chart& src = atlas.charts[static_cast<std::size_t>(key.first)];
      check_scope_(tr.x_expr, src);
      check_scope_(tr.y_expr, src);
      transitions_.emplace(key,
                           std::pair{detail::CompiledRat::from(tr.x_expr),
                                     detail::CompiledRat::from(tr.y_expr)});
    }
  }

  std::size_t chart_count() const { return charts_.size(); }
  const std::string& chart_id(int i) const {
    return charts_.at(static_cast<std::size_t>(i)).id;
  }
  int chart_index(std::string_view id) const {
    for (std::size_t i = 0; i < charts_.size(); ++i)
      if (charts_[i].id == id) return static_cast<int>(i);
    throw error("unknown chart id '" + std::string(id) + "'");
  }
  const std::string& atlas_name() const { return atlas_name_; }
  const std::vector<std::string>& param_names() const { return param_names_; }

  // Numeric parameter vector in declaration order; rejects missing and
  // unknown names so typos never silently integrate with a zero parameter.
  std::vector<Complex> params_for(const ParamValues& pv) const {
    std::vector<Complex> out(param_names_.size());
    for (std::size_t i = 0; i < param_names_.size(); ++i) {
      auto it = pv.find(param_names_[i]);
      if (it == pv.end())
        throw error("missing numeric value for parameter '" +
                    param_names_[i] + "'");
      out[i] = it->second;
    }
    for (const auto& [k, v] : pv)
      if (std::find(param_names_.begin(), param_names_.end(), k) ==
          param_names_.end())
        throw error("unknown parameter '" + k + "' for atlas '" +
                    atlas_name_ + "'");
    return out;
  }

  struct Derivs {
    Complex dx, dy;
  };

  std::optional<Derivs> rhs(int chart, Complex x, Complex y, Complex t,
                            const std::vector<Complex>& pvals) const {
    const ChartProgram& cp = charts_.at(static_cast<std::size_t>(chart));
    const std::vector<Complex> vals = assemble_(cp, x, y, t, pvals);
    const auto dx = cp.fx.eval(vals);
    if (!dx) return std::nullopt;
    const auto dy = cp.fy.eval(vals);
    if (!dy) return std::nullopt;
    return Derivs{*dx, *dy};
  }

  bool has_transition(int i, int j) const {
    return transitions_.count({i, j}) > 0;
  }

  // Map a point from chart `from` to chart `to`; identity when equal.
  std::optional<std::pair<Complex, Complex>> transform(
      int from, int to, Complex x, Complex y, Complex t,
      const std::vector<Complex>& pvals) const {
    if (from == to) return std::pair{x, y};
    auto it = transitions_.find({from, to});
    if (it == transitions_.end()) return std::nullopt;
    const ChartProgram& cp = charts_.at(static_cast<std::size_t>(from));
    const std::vector<Complex> vals = assemble_(cp, x, y, t, pvals);
    const auto nx = it->second.first.eval(vals);
    if (!nx) return std::nullopt;
    const auto ny = it->second.second.eval(vals);
    if (!ny) return std::nullopt;
    return std::pair{*nx, *ny};
  }

  // Health score of every chart as seen from `current`: transform the
  // point, then |f_j| / (1 + |x_j|^2 + |y_j|^2); zero for unreachable or
  // unrepresentable charts.
  std::vector<double> health(int current, Complex x, Complex y, Complex t,
                             const std::vector<Complex>& pvals) const {
    std::vector<double> scores(charts_.size(), 0.0);
    for (std::size_t j = 0; j < charts_.size(); ++j) {
      const auto moved =
          transform(current, static_cast<int>(j), x, y, t, pvals);
      if (!moved) continue;
      const ChartProgram& cp = charts_[j];
      const std::vector<Complex> vals =
          assemble_(cp, moved->first, moved->second, t, pvals);
      const double f = std::abs(cp.denom.eval(vals));
      const double s =
          f / (1.0 + std::norm(moved->first) + std::norm(moved->second));
      scores[j] = std::isfinite(s) ? s : 0.0;
    }
    return scores;
  }

 private:
  struct ChartProgram {
    std::string id;
    int x_var = -1, y_var = -1;
    detail::CompiledRat fx, fy;
    detail::CompiledPoly denom;
  };

  void check_scope_(const RatFunc& f, const Chart& c) const {
    for (int v : vars_used(f)) {
      if (v == c.x_var || v == c.y_var || v == t_idx_) continue;
      if (std::find(param_idx_.begin(), param_idx_.end(), v) !=
          param_idx_.end())
        continue;
      throw error("chart '" + c.id +
                  "' expression references a variable outside its chart");
    }
  }

  std::vector<Complex> assemble_(const ChartProgram& cp, Complex x, Complex y,
                                 Complex t,
                                 const std::vector<Complex>& pvals) const {
    std::vector<Complex> vals(nvars_, Complex{0.0, 0.0});
    vals[static_cast<std::size_t>(cp.x_var)] = x;
    vals[static_cast<std::size_t>(cp.y_var)] = y;
    vals[static_cast<std::size_t>(t_idx_)] = t;
    for (std::size_t k = 0; k < param_idx_.size(); ++k)
      vals[static_cast<std::size_t>(param_idx_[k])] = pvals[k];
    return vals;
  }

  std::size_t nvars_ = 0;
  int t_idx_ = -1;
  std::vector<std::string> param_names_;
  std::vector<int> param_idx_;
  std::string atlas_name_;
  std::vector<ChartProgram> charts_;
  std::map<std::pair<int, int>, std::pair<detail::CompiledRat,
                                          detail::CompiledRat>> transitions_;
};

inline CompiledSystem compile_rhs(const Atlas& atlas, const Coboundary& b) {
  return CompiledSystem(atlas, b);
}

// Health of every chart at a state (spec'd convenience wrapper).
inline std::vector<double> chart_health(const CompiledSystem& sys,
                                        const PhaseState& s,
                                        const ParamValues& params) {
  return sys.health(s.chart, s.x, s.y, s.t, sys.params_for(params));
}

// ----------------------------------------------------------------- stepping

namespace detail {

// Dormand-Prince 5(4) coefficients.  Stage times are not taken from the
// abscissae c_i but accumulated through the same weighted sums as the state
// (time enters as an integrated quantity with unit derivative).  The two
// agree to machine precision, and the accumulated form preserves affine
// relations between the state and time bitwise: an exact solution such as
// y = t/2 never picks up a spurious ulp-level seed from mismatched rounding
// of `t + c_i h` versus `y + h sum(a_ij k_j)`.  That matters because such
// seeds can be amplified exponentially by unstable variational flow.
inline constexpr double DP_A[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
     -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
inline constexpr double DP_B5[7] = {35.0 / 384,    0.0,        500.0 / 1113,
                                    125.0 / 192,   -2187.0 / 6784,
                                    11.0 / 84,     0.0};
// Difference between the 5th- and 4th-order weights (error estimator).
inline constexpr double DP_E[7] = {71.0 / 57600,      0.0,
                                   -71.0 / 16695,     71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525,
                                   -1.0 / 40};

}  // namespace detail

struct StepResult {
  bool ok = false;       // false: a pole interrupted a stage (reject, retry)
  PhaseState state{};    // state after the step (when ok)
  double err = 0.0;      // max-norm embedded error estimate over (x, y)
  double err_x = 0.0;    // per-component estimates (controller scaling)
  double err_y = 0.0;
};

inline StepResult step(const CompiledSystem& sys, const PhaseState& s,
                       const std::vector<Complex>& pvals, Complex h) {
  if (h == Complex{0.0, 0.0}) throw error("step: h must be nonzero");
  Complex kx[7], ky[7];
  for (int i = 0; i < 7; ++i) {
    Complex xs = s.x, ys = s.y, ts = s.t;
    for (int j = 0; j < i; ++j) {
      const Complex w = h * detail::DP_A[i][j];
      xs += w * kx[j];
      ys += w * ky[j];
      ts += w;
    }
    const auto d = sys.rhs(s.chart, xs, ys, ts, pvals);
    if (!d) return {};
    kx[i] = d->dx;
    ky[i] = d->dy;
  }
  Complex x5 = s.x, y5 = s.y, t5 = s.t, ex{}, ey{};
  for (int i = 0; i < 7; ++i) {
    const Complex w = h * detail::DP_B5[i];
    x5 += w * kx[i];
    y5 += w * ky[i];
    t5 += w;
    ex += h * detail::DP_E[i] * kx[i];
    ey += h * detail::DP_E[i] * ky[i];
  }
  if (!detail::finite(x5) || !detail::finite(y5)) return {};
  StepResult r;
  r.ok = true;
  r.state = PhaseState{s.chart, x5, y5, t5};
  r.err_x = std::abs(ex);
  r.err_y = std::abs(ey);
  r.err = std::max(r.err_x, r.err_y);
  return r;
}

// ----------------------------------------------------------------- driver

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  std::size_t max_steps = 1000000;  // accepted steps before giving up
  double h_max = 0.0;               // 0: no cap (arclength units)
  double h_init = 0.0;              // 0: auto
  int force_switch_every = 0;       // test hook: forced switch cadence
  bool allow_switching = true;
  double switch_floor = 1e-12;
  double hysteresis = 0.1;
  double roundtrip_tol = 1e-12;
  double h_min_factor = 1e-13;      // h_min = factor * total path length
};

namespace detail {

struct SwitchPolicy {
  const CompiledSystem& sys;
  const IntegrateOptions& opt;
  const std::vector<Complex>& pvals;
  Trajectory& traj;

  [[noreturn]] void inaccessible(const PhaseState& s) const {
    std::ostringstream os;
    os << "no usable chart at t = " << s.t
       << ": every health score is below the floor " << opt.switch_floor
       << " (base point or otherwise inaccessible state)";
    throw error(os.str());
  }

  // Returns true when the state changed chart.  `forced` switches to the
  // best alternative even if the current chart is still comfortable.
  bool consider(PhaseState& s, bool forced) const {
    const std::vector<double> scores =
        sys.health(s.chart, s.x, s.y, s.t, pvals);
    const std::size_t cur = static_cast<std::size_t>(s.chart);
    if (*std::max_element(scores.begin(), scores.end()) < opt.switch_floor)
      inaccessible(s);
    int best = -1;
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (j != cur && (best < 0 ||
                       scores[j] > scores[static_cast<std::size_t>(best)]))
        best = static_cast<int>(j);
    if (best < 0) return false;
    const double bs = scores[static_cast<std::size_t>(best)];
    if (bs < opt.switch_floor) return false;
    if (!forced && scores[cur] >= opt.hysteresis * bs) return false;
    // Validate the round trip before committing to the new chart.
    const auto fwd = sys.transform(s.chart, best, s.x, s.y, s.t, pvals);
    if (!fwd) return false;
    const auto back =
        sys.transform(best, s.chart, fwd->first, fwd->second, s.t, pvals);
    if (!back) return false;
    const double resid =
        std::max(std::abs(back->first - s.x) / (1.0 + std::abs(s.x)),
                 std::abs(back->second - s.y) / (1.0 + std::abs(s.y)));
    if (resid > opt.roundtrip_tol) return false;
    traj.switches.push_back(SwitchEvent{s.t, s.chart, best});
    s.chart = best;
    s.x = fwd->first;
    s.y = fwd->second;
    // Snapshot the state in the new chart (h = 0 marks it as a non-step).
    traj.samples.push_back(Sample{s.t, s.chart, s.x, s.y, 0.0, 0.0});
    return true;
  }
};

}  // namespace detail

inline Trajectory integrate(const Atlas& atlas, const Coboundary& b,
                            const TPath& path, const PhaseState& init,
                            const IntegrateOptions& opt = {}) {
  path.validate();
  if (opt.rtol <= 0.0 || opt.atol <= 0.0)
    throw error("tolerances must be positive");
  const CompiledSystem sys = compile_rhs(atlas, b);
  if (init.chart < 0 ||
      static_cast<std::size_t>(init.chart) >= sys.chart_count())
    throw error("initial chart index out of range");
  const std::vector<Complex> pvals = sys.params_for(path.params);

  const double L = path.length();
  const double h_min = opt.h_min_factor * L;
  constexpr double kSafety = 0.9;
  constexpr double kShrink = 0.2;
  constexpr double kGrow = 5.0;
  // PI controller exponents for an order-5 accept criterion.
  constexpr double kAlpha = 0.7 / 5.0;
  constexpr double kBeta = 0.4 / 5.0;

  Trajectory traj;
  PhaseState state = init;
  state.t = path.waypoints.front();
  detail::SwitchPolicy policy{sys, opt, pvals, traj};

  // The starting point must be representable somewhere.
  {
    const auto scores = sys.health(state.chart, state.x, state.y, state.t,
                                   pvals);
    if (*std::max_element(scores.begin(), scores.end()) < opt.switch_floor)
      policy.inaccessible(state);
  }
  traj.samples.push_back(
      Sample{state.t, state.chart, state.x, state.y, 0.0, 0.0});
  if (opt.allow_switching) policy.consider(state, false);

  double h = opt.h_init > 0.0 ? opt.h_init : 0.01 * L;
  if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
  double prev_err_norm = 1.0;

  for (std::size_t seg = 0; seg + 1 < path.waypoints.size(); ++seg) {
    const Complex a = path.waypoints[seg];
    const Complex z = path.waypoints[seg + 1];
    const double seg_len = std::abs(z - a);
    const Complex u = (z - a) / seg_len;
    double s = 0.0;
    while (s < seg_len) {
      const double hs = std::min(h, seg_len - s);
      const StepResult r = step(sys, state, pvals, u * hs);
      if (!r.ok) {
        // A pole interrupted the stages: prefer moving to a better chart,
        // otherwise shrink the step.
        if (opt.allow_switching && policy.consider(state, true)) continue;
        h = hs * 0.5;
        if (h < h_min) {
          std::ostringstream os;
          os << "step size underflow near t = " << state.t
             << " (pole not absorbable by any chart switch)";
          throw error(os.str());
        }
        continue;
      }
      const double sc_x =
          opt.atol +
          opt.rtol * std::max(std::abs(state.x), std::abs(r.state.x));
      const double sc_y =
          opt.atol +
          opt.rtol * std::max(std::abs(state.y), std::abs(r.state.y));
      const double err_norm = std::max(r.err_x / sc_x, r.err_y / sc_y);
      if (err_norm <= 1.0) {
        state = r.state;
        s += hs;
        // Time advances through the tableau (see the coefficient note); only
        // pin it to the waypoint when the segment is complete.
        if (seg_len - s <= 1e-14 * seg_len) {
          s = seg_len;
          state.t = z;
        }
        ++traj.accepted;
        traj.samples.push_back(
            Sample{state.t, state.chart, state.x, state.y, hs, r.err});
        const double e = std::max(err_norm, 1e-30);
        double fac = kSafety * std::pow(e, -kAlpha) *
                     std::pow(prev_err_norm, kBeta);
        fac = std::clamp(fac, kShrink, kGrow);
        h = hs * fac;
        if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
        prev_err_norm = e;
        if (opt.allow_switching) {
          const bool forced =
              opt.force_switch_every > 0 &&
              traj.accepted % static_cast<std::size_t>(
                                  opt.force_switch_every) == 0;
          policy.consider(state, forced);
        }
        if (traj.accepted >= opt.max_steps && s < seg_len)
          throw error("maximum step count exceeded before reaching the end "
                      "of the path");
      } else {
        ++traj.rejected;
        const double fac =
            std::clamp(kSafety * std::pow(err_norm, -kAlpha), kShrink, 1.0);
        h = hs * fac;
        if (h < h_min) {
          std::ostringstream os;
          os << "step size underflow at t = " << state.t
             << " (error control cannot meet the tolerance)";
          throw error(os.str());
        }
      }
    }
  }
  return traj;
}

inline Trajectory integrate(const Atlas& atlas, const Coboundary& b,
                            const TPath& path, const PhaseState& init,
                            double rtol, double atol) {
  IntegrateOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  return integrate(atlas, b, path, init, opt);
}

// Brute-force fixed-step classical RK4 endpoint, used as an independent
// cross-check of the adaptive driver.  Switches charts with the same policy
// after every step; throws if a stage lands on a pole.
inline PhaseState fixed_step_rk4(const Atlas& atlas, const Coboundary& b,
                                 const TPath& path, const PhaseState& init,
                                 double h_nominal,
                                 const IntegrateOptions& opt = {}) {
  path.validate();
  if (h_nominal <= 0.0) throw error("fixed-step size must be positive");
  const CompiledSystem sys = compile_rhs(atlas, b);
  const std::vector<Complex> pvals = sys.params_for(path.params);
  Trajectory scratch;
  detail::SwitchPolicy policy{sys, opt, pvals, scratch};
  PhaseState state = init;
  state.t = path.waypoints.front();

  auto eval = [&](Complex x, Complex y, Complex t) {
    const auto d = sys.rhs(state.chart, x, y, t, pvals);
    if (!d) {
      std::ostringstream os;
      os << "fixed-step integration hit a pole at t = " << t;
      throw error(os.str());
    }
    return *d;
  };

  for (std::size_t seg = 0; seg + 1 < path.waypoints.size(); ++seg) {
    const Complex a = path.waypoints[seg];
    const Complex z = path.waypoints[seg + 1];
    const double seg_len = std::abs(z - a);
    const Complex u = (z - a) / seg_len;
    const auto n = static_cast<std::size_t>(std::ceil(seg_len / h_nominal));
    const Complex h = u * (seg_len / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const Complex t0 = a + u * (seg_len * static_cast<double>(k) /
                                  static_cast<double>(n));
      const auto k1 = eval(state.x, state.y, t0);
      const auto k2 = eval(state.x + 0.5 * h * k1.dx,
                           state.y + 0.5 * h * k1.dy, t0 + 0.5 * h);
      const auto k3 = eval(state.x + 0.5 * h * k2.dx,
                           state.y + 0.5 * h * k2.dy, t0 + 0.5 * h);
      const auto k4 =
          eval(state.x + h * k3.dx, state.y + h * k3.dy, t0 + h);
      state.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      state.y += h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
      state.t = t0 + h;
      if (opt.allow_switching) policy.consider(state, false);
    }
    state.t = z;
  }
  return state;
}

// ---------------------------------------------------------- residual check

struct ResidualReport {
  double max_residual = 0.0;
  std::size_t points = 0;
};

// Finite-difference verification that the trajectory's x(t) solves the
// scalar equation x'' = rhs(x, x', t) in the coordinates of `chart`.
// Quadratic (three-point) Lagrange differentiation over consecutive
// same-chart sample triples; switch neighborhoods are excluded because a
// chart change shows up as a chart-label change between samples.
inline ResidualReport residual_check(const Trajectory& traj,
                                     const ScalarODE& ode,
                                     const ParamValues& params,
                                     int chart = 0) {
  if (traj.samples.size() < 3)
    throw error("residual check needs at least three samples");
  const VarTablePtr& vt = ode.rhs.table();
  const int ix = vt->index_of("x");
  const int ip = vt->index_of("p");
  const int it = vt->index_of("t");
  std::vector<Complex> vals(vt->size(), Complex{0.0, 0.0});
  for (int v : vars_used(ode.rhs)) {
    if (v == ix || v == ip || v == it) continue;
    auto found = params.find(vt->name(v));
    if (found == params.end())
      throw error("missing numeric value for parameter '" + vt->name(v) +
                  "'");
    vals[static_cast<std::size_t>(v)] = found->second;
  }
  const detail::CompiledRat rhs = detail::CompiledRat::from(ode.rhs);

  ResidualReport rep;
  for (std::size_t i = 1; i + 1 < traj.samples.size(); ++i) {
    const Sample& s0 = traj.samples[i - 1];
    const Sample& s1 = traj.samples[i];
    const Sample& s2 = traj.samples[i + 1];
    if (s0.chart != chart || s1.chart != chart || s2.chart != chart) continue;
    const Complex t0 = s0.t, t1 = s1.t, t2 = s2.t;
    if (t0 == t1 || t1 == t2 || t0 == t2) continue;  // switch snapshots
    const Complex d01 = t0 - t1, d02 = t0 - t2, d12 = t1 - t2;
    const Complex xp = s0.x * (d12 / (d01 * d02)) -
                       s1.x * ((d12 - d01) / (d01 * d12)) -
                       s2.x * (d01 / (d02 * d12));
    const Complex xpp =
        2.0 * (s0.x / (d01 * d02) - s1.x / (d01 * d12) + s2.x / (d02 * d12));
    vals[static_cast<std::size_t>(ix)] = s1.x;
    vals[static_cast<std::size_t>(ip)] = xp;
    vals[static_cast<std::size_t>(it)] = t1;
    const auto want = rhs.eval(vals);
    if (!want) continue;  // sample sits on a pole of the scalar form
    rep.max_residual = std::max(rep.max_residual, std::abs(xpp - *want));
    ++rep.points;
  }
  return rep;
}

// ----------------------------------------------------------------- output

inline nlohmann::json trajectory_to_json(const Atlas& atlas,
                                         const Trajectory& traj,
                                         const ParamValues& params) {
  nlohmann::json j;
  j["atlas"] = atlas.name;
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : params)
    j["params"][k] = nlohmann::json::array({v.real(), v.imag()});
  j["samples"] = nlohmann::json::array();
  for (const Sample& s : traj.samples) {
    nlohmann::json row;
    row["t"] = {s.t.real(), s.t.imag()};
    row["chart"] = atlas.charts.at(static_cast<std::size_t>(s.chart)).id;
    row["x"] = {s.x.real(), s.x.imag()};
    row["y"] = {s.y.real(), s.y.imag()};
    row["h"] = s.h;
    row["err"] = s.err;
    j["samples"].push_back(std::move(row));
  }
  j["switches"] = nlohmann::json::array();
  for (const SwitchEvent& e : traj.switches) {
    nlohmann::json row;
    row["t"] = {e.t.real(), e.t.imag()};
    row["from"] = atlas.charts.at(static_cast<std::size_t>(e.from)).id;
    row["to"] = atlas.charts.at(static_cast<std::size_t>(e.to)).id;
    j["switches"].push_back(std::move(row));
  }
  return j;
}

inline std::string trajectory_to_csv(const Atlas& atlas,
                                     const Trajectory& traj) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "t_re,t_im,chart,x_re,x_im,y_re,y_im,h,err\n";
  for (const Sample& s : traj.samples) {
    os << s.t.real() << ',' << s.t.imag() << ','
       << atlas.charts.at(static_cast<std::size_t>(s.chart)).id << ','
       << s.x.real() << ',' << s.x.imag() << ',' << s.y.real() << ','
       << s.y.imag() << ',' << s.h << ',' << s.err << '\n';
  }
  return os.str();
}

}  // namespace opal
