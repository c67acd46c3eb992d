#pragma once

#include <string_view>

namespace opal::data {

// Built-in atlas definitions in the atlas DSL.
inline constexpr std::string_view e7_atlas_dsl = R"raw(atlas E7
params alpha
timevar t
chart U0 vars x0 y0 denom 1 order 0
chart U1 vars x1 y1 denom 1 order 0
chart U2 vars x2 y2 denom 1 order 0
transition U0 -> U1 { x1 = (1)/(x0) ; y1 = -alpha*x0 - x0^2*y0 - x0/2 }
transition U0 -> U2 { x2 = (1)/(x0) ; y2 = alpha*x0 + t*x0^2 + 2*x0^4 - x0^2*y0 - x0/2 }
transition U1 -> U0 { x0 = (1)/(x1) ; y0 = -alpha*x1 - x1^2*y1 - x1/2 }
transition U1 -> U2 { x2 = x1 ; y2 = (2*alpha*x1^3 + t*x1^2 + x1^4*y1 + 2)/(x1^4) }
transition U2 -> U0 { x0 = (1)/(x2) ; y0 = (2*alpha*x2^3 + 2*t*x2^2 - 2*x2^4*y2 - x2^3 + 4)/(2*x2^2) }
transition U2 -> U1 { x1 = x2 ; y1 = (-2*alpha*x2^3 - t*x2^2 + x2^4*y2 - 2)/(x2^4) }
coboundary U0 { eta = t/2 + x0^2 - y0 ; zeta = -alpha - 2*x0*y0 - 1/2 }
coboundary U1 { eta = -alpha*x1^3 - t*x1^2/2 - x1^4*y1 - x1^3/2 - 1 ; zeta = alpha^2*x1 + alpha*t/2 + 3*alpha*x1^2*y1 + alpha*x1 + t*x1*y1 + t/4 + 2*x1^3*y1^2 + 3*x1^2*y1/2 + x1/4 }
coboundary U2 { eta = alpha*x2^3 + t*x2^2/2 - x2^4*y2 - x2^3/2 + 1 ; zeta = alpha^2*x2 + alpha*t/2 - 3*alpha*x2^2*y2 - alpha*x2 - t*x2*y2 - t/4 + 2*x2^3*y2^2 + 3*x2^2*y2/2 + x2/4 }
)raw";

inline constexpr std::string_view d8_atlas_dsl = R"raw(atlas D8
params
timevar t
chart U0 vars x0 y0 denom y0 order 1
chart U1 vars x1 y1 denom x1*y1^2+1 order 2
chart U2 vars x2 y2 denom -t*y2+t+x2*y2^2 order 1
transition U0 -> U1 { x1 = (-x0^2*y0^2 + y0^3)/(x0^4) ; y1 = (x0)/(y0) }
transition U0 -> U2 { x2 = -t*x0^2 + t*x0 + x0^4*y0 ; y2 = (1)/(x0) }
transition U1 -> U0 { x0 = (1)/(x1*y1^3 + y1) ; y0 = (1)/(x1*y1^4 + y1^2) }
transition U1 -> U2 { x2 = (t*x1^4*y1^13 + 4*t*x1^3*y1^11 - t*x1^3*y1^10 + 6*t*x1^2*y1^9 - 3*t*x1^2*y1^8 + 4*t*x1*y1^7 - 3*t*x1*y1^6 + t*y1^5 - t*y1^4 + 1)/(x1^5*y1^16 + 5*x1^4*y1^14 + 10*x1^3*y1^12 + 10*x1^2*y1^10 + 5*x1*y1^8 + y1^6) ; y2 = x1*y1^3 + y1 }
transition U2 -> U0 { x0 = (1)/(y2) ; y0 = -t*y2^3 + t*y2^2 + x2*y2^4 }
transition U2 -> U1 { x1 = -t^3*y2^13 + 3*t^3*y2^12 - 3*t^3*y2^11 + t^3*y2^10 + 3*t^2*x2*y2^14 - 6*t^2*x2*y2^13 + 3*t^2*x2*y2^12 - t^2*y2^8 + 2*t^2*y2^7 - t^2*y2^6 - 3*t*x2^2*y2^15 + 3*t*x2^2*y2^14 + 2*t*x2*y2^9 - 2*t*x2*y2^8 + x2^3*y2^16 - x2^2*y2^10 ; y1 = (1)/(-t*y2^4 + t*y2^3 + x2*y2^5) }
coboundary U0 { eta = (t - y0^2)/(t*y0) ; zeta = (-2*x0*y0)/(t) }
coboundary U1 { eta = (-4*t*x1^4*y1^9 - 14*t*x1^3*y1^7 - 18*t*x1^2*y1^5 - 10*t*x1*y1^3 - 2*t*y1 + 4*x1^2*y1)/(t*x1*y1^2 + t) ; zeta = (t*x1^3*y1^10 + 3*t*x1^2*y1^8 + 3*t*x1*y1^6 + t*y1^4 - x1*y1^2 + 1)/(t*x1*y1^2 + t) }
coboundary U2 { eta = (3*t^3*y2^6 - 8*t^3*y2^5 + 7*t^3*y2^4 - 2*t^3*y2^3 - 10*t^2*x2*y2^7 + 18*t^2*x2*y2^6 - 8*t^2*x2*y2^5 + t^2*y2^2 - 4*t^2*y2 + 2*t^2 + 11*t*x2^2*y2^8 - 10*t*x2^2*y2^7 - t*x2*y2^3 + 5*t*x2*y2^2 - 4*x2^3*y2^9 - 2*x2^2*y2^3)/(-t^2*y2^3 + t^2*y2^2 + t*x2*y2^4) ; zeta = (t^2*y2^6 - 2*t^2*y2^5 + t^2*y2^4 - 2*t*x2*y2^7 + 2*t*x2*y2^6 - t + x2^2*y2^8)/(-t^2*y2 + t^2 + t*x2*y2^2) }
)raw";

// Painleve catalog: Hamiltonians H = A*y^2 + B*y + C over (x, t, params),
// scalar right-hand sides over (x, p, t, params), and the parameter maps
// from the classical constants (alpha, beta, gamma, delta); an empty map
// string means the constant is absent for that equation.
struct PainleveRecord {
  std::string_view tag;
  bool has_hamiltonian;
  std::string_view A, B, C;
  std::string_view scalar_rhs;
  std::string_view map_alpha, map_beta, map_gamma, map_delta;
};

inline constexpr PainleveRecord painleve_records[] = {
  {"I", true,
   "(1)/(2)",
   "0",
   "-t*x - 2*x^3",
   "t + 6*x^2",
   "", "", "", ""},
  {"II", true,
   "(1)/(2)",
   "-t/2 - x^2",
   "-alpha*x - x/2",
   "alpha + t*x + 2*x^3",
   "", "", "", ""},
  {"III", true,
   "(2*x^2)/(t)",
   "(2*eta0*t - 2*etainf*t*x^2 - 2*kappa0*x - x)/(t)",
   "etainf*kappa0*x + etainf*kappainf*x",
   "(alpha*x^3 + beta*x + delta*t + gamma*t*x^4 + p^2*t - p*x)/(t*x)",
   "-4*etainf*kappainf", "4*etainf*kappa0 + 4*etainf", "4*etainf^2", "-4*eta0^2"},
  {"IV", true,
   "2*x",
   "-2*kappa0 - 2*t*x - x^2",
   "kappa0*x",
   "(-4*alpha*x^2 + 2*beta + p^2 + 4*t^2*x^2 + 8*t*x^3 + 3*x^4)/(2*x)",
   "-kappa0 + 2*kappainf + 1", "-2*kappa0^2", "", ""},
  {"V", true,
   "(x^3 - 2*x^2 + x)/(t)",
   "(eta*t*x - kappa0*x^2 + 2*kappa0*x - kappa0 - kappat*x^2 + kappat*x)/(t)",
   "(kappa0^2*x - kappa0^2 + 2*kappa0*kappat*x - 2*kappa0*kappat - kappainf^2*x + kappainf^2 + kappat^2*x - kappat^2)/(4*t)",
   "(2*alpha*x^5 - 6*alpha*x^4 + 6*alpha*x^3 - 2*alpha*x^2 + 2*beta*x^3 - 6*beta*x^2 + 6*beta*x - 2*beta + 2*delta*t^2*x^3 + 2*delta*t^2*x^2 + 2*gamma*t*x^3 - 2*gamma*t*x^2 + 3*p^2*t^2*x - p^2*t^2 - 2*p*t*x^2 + 2*p*t*x)/(2*t^2*x^2 - 2*t^2*x)",
   "(kappainf^2)/(2)", "(-kappa0^2)/(2)", "-eta*kappat - eta", "(-eta^2)/(4)"},
  {"VI", true,
   "(-t*x^2 + t*x + x^3 - x^2)/(t^2 - t)",
   "(kappa0*t*x - kappa0*t - kappa0*x^2 + kappa0*x + kappa1*t*x - kappa1*x^2 - kappat*x^2 + kappat*x + x^2 - x)/(t^2 - t)",
   "(-kappa0^2*t + kappa0^2*x - 2*kappa0*kappa1*t + 2*kappa0*kappa1*x - 2*kappa0*kappat*t + 2*kappa0*kappat*x + 2*kappa0*t - 2*kappa0*x - kappa1^2*t + kappa1^2*x - 2*kappa1*kappat*t + 2*kappa1*kappat*x + 2*kappa1*t - 2*kappa1*x + kappainf^2*t - kappainf^2*x - kappat^2*t + kappat^2*x + 2*kappat*t - 2*kappat*x - t + x)/(4*t^2 - 4*t)",
   "(2*alpha*t^2*x^4 - 4*alpha*t^2*x^3 + 2*alpha*t^2*x^2 - 4*alpha*t*x^5 + 8*alpha*t*x^4 - 4*alpha*t*x^3 + 2*alpha*x^6 - 4*alpha*x^5 + 2*alpha*x^4 - 2*beta*t^3*x^2 + 4*beta*t^3*x - 2*beta*t^3 + 4*beta*t^2*x^3 - 8*beta*t^2*x^2 + 4*beta*t^2*x - 2*beta*t*x^4 + 4*beta*t*x^3 - 2*beta*t*x^2 - 2*delta*t^2*x^4 + 4*delta*t^2*x^3 - 2*delta*t^2*x^2 + 2*delta*t*x^4 - 4*delta*t*x^3 + 2*delta*t*x^2 + 2*gamma*t^3*x^2 - 4*gamma*t^2*x^3 - 2*gamma*t^2*x^2 + 2*gamma*t*x^4 + 4*gamma*t*x^3 - 2*gamma*x^4 - 2*p^2*t^5*x + p^2*t^5 + 3*p^2*t^4*x^2 + 2*p^2*t^4*x - 2*p^2*t^4 - 6*p^2*t^3*x^2 + 2*p^2*t^3*x + p^2*t^3 + 3*p^2*t^2*x^2 - 2*p^2*t^2*x + 2*p*t^4*x^2 - 2*p*t^4*x - 4*p*t^3*x^3 + 2*p*t^3*x^2 + 2*p*t^3*x + 6*p*t^2*x^3 - 6*p*t^2*x^2 - 2*p*t*x^3 + 2*p*t*x^2 + t^2*x^4 - 2*t^2*x^3 + t^2*x^2 - t*x^4 + 2*t*x^3 - t*x^2)/(-2*t^5*x^2 + 2*t^5*x + 2*t^4*x^3 + 2*t^4*x^2 - 4*t^4*x - 4*t^3*x^3 + 2*t^3*x^2 + 2*t^3*x + 2*t^2*x^3 - 2*t^2*x^2)",
   "(kappainf^2)/(2)", "(kappa0^2)/(2)", "(kappa1^2)/(2)", "(kappat^2)/(2)"},
  {"III_D7", false,
   "",
   "",
   "",
   "(-2*a*t*x + p^2*t^2 - p*t*x - t*x - 4*x^3)/(t^2*x)",
   "", "", "", ""},
  {"III_D8", false,
   "",
   "",
   "",
   "(4*p^2*t^2 - 4*p*t*x - 16*t*x - x^3)/(4*t^2*x)",
   "", "", "", ""},
};

}  // namespace opal::data
