#pragma once

// Exact sparse multivariate polynomial and rational-function arithmetic over
// the rationals: differentiation, substitution, semantic equality, numeric
// evaluation, and a round-tripping expression parser/printer.
//
// Representation choices:
//   * coefficients are arbitrary-precision rationals (GMP mpq_class);
//   * a rational function is a numerator/denominator pair with NO automatic
//     GCD cancellation — equality is tested by cross-multiplication;
//   * monomials are ordered graded-lexicographically by the variable table's
//     declared order, giving canonical printing and deterministic iteration.

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opal {

// ----------------------------------------------------------------- errors

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax error carrying the byte offset into the parsed text.
class parse_error : public error {
 public:
  parse_error(const std::string& msg, std::size_t pos)
      : error(msg + " at position " + std::to_string(pos)), position(pos) {}
  // Message used verbatim; the caller has already embedded the location.
  static parse_error verbatim(std::string msg, std::size_t pos) {
    return parse_error(std::move(msg), pos, raw{});
  }
  std::size_t position;

 private:
  struct raw {};
  parse_error(std::string msg, std::size_t pos, raw)
      : error(std::move(msg)), position(pos) {}
};

class zero_division_error : public error {
 public:
  using error::error;
};

class degree_cap_error : public error {
 public:
  using error::error;
};

// Numeric evaluation hit an exact zero denominator or a non-finite value.
class pole_error : public error {
 public:
  using error::error;
};

// ----------------------------------------------------------------- config

// Total-degree guard for intermediate polynomials: exceeding the cap raises
// degree_cap_error instead of silently grinding.
inline unsigned& degree_cap() {
  static unsigned cap = 512;
  return cap;
}

// ----------------------------------------------------------------- VarTable

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
    return false;
  for (char c : s.substr(1))
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
      return false;
  return true;
}

// Ordered set of distinct variable names; indices are stable for the lifetime
// of every expression built over the table.
class VarTable {
 public:
  explicit VarTable(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!is_identifier(names_[i]))
        throw error("invalid variable name '" + names_[i] + "'");
      if (!index_.emplace(names_[i], static_cast<int>(i)).second)
        throw error("duplicate variable name '" + names_[i] + "'");
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(int i) const { return names_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<int> find(std::string_view n) const {
    auto it = index_.find(n);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  int index_of(std::string_view n) const {
    auto i = find(n);
    if (!i) throw error("unknown variable '" + std::string(n) + "'");
    return *i;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int, std::less<>> index_;
};

using VarTablePtr = std::shared_ptr<const VarTable>;

inline VarTablePtr make_vars(std::vector<std::string> names) {
  return std::make_shared<const VarTable>(std::move(names));
}

inline void require_same_table(const VarTablePtr& a, const VarTablePtr& b) {
  if (a == b) return;
  if (a && b && a->names() == b->names()) return;
  throw error("operands were built over different variable tables");
}

// ----------------------------------------------------------------- Poly

using Monomial = std::vector<std::uint32_t>;

inline unsigned mono_degree(const Monomial& m) {
  unsigned d = 0;
  for (auto e : m) d += e;
  return d;
}

// Graded-lexicographic order: total degree first, then lexicographic on the
// exponent vector in declared-variable order.
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    unsigned da = mono_degree(a), db = mono_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

class Poly {
 public:
  using TermMap = std::map<Monomial, mpq_class, GrlexLess>;

  Poly() = default;
  explicit Poly(VarTablePtr vt) : vt_(std::move(vt)) {}

  static Poly zero(VarTablePtr vt) { return Poly(std::move(vt)); }

  static Poly constant(VarTablePtr vt, mpq_class c) {
    Poly p(std::move(vt));
    c.canonicalize();
    if (c != 0) p.terms_.emplace(Monomial(p.vt_->size(), 0), std::move(c));
    return p;
  }

  static Poly variable(VarTablePtr vt, int idx) {
    Poly p(std::move(vt));
    if (idx < 0 || static_cast<std::size_t>(idx) >= p.vt_->size())
      throw error("variable index out of range");
    Monomial m(p.vt_->size(), 0);
    m[static_cast<std::size_t>(idx)] = 1;
    p.terms_.emplace(std::move(m), mpq_class(1));
    return p;
  }

  const VarTablePtr& table() const { return vt_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  bool is_constant() const {
    return terms_.empty() ||
           (terms_.size() == 1 && mono_degree(terms_.begin()->first) == 0);
  }
  mpq_class constant_value() const {
    if (terms_.empty()) return mpq_class(0);
    if (!is_constant()) throw error("polynomial is not constant");
    return terms_.begin()->second;
  }

  unsigned total_degree() const {
    return terms_.empty() ? 0u : mono_degree(terms_.rbegin()->first);
  }

  friend Poly operator-(const Poly& a) {
    Poly r(a.vt_);
    for (const auto& [m, c] : a.terms_) r.terms_.emplace(m, -c);
    return r;
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    require_same_table(a.vt_, b.vt_);
    Poly r = a;
    for (const auto& [m, c] : b.terms_) {
      auto [it, fresh] = r.terms_.emplace(m, c);
      if (!fresh) {
        it->second += c;
        if (it->second == 0) r.terms_.erase(it);
      }
    }
    return r;
  }

  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

  friend Poly operator*(const Poly& a, const Poly& b) {
    require_same_table(a.vt_, b.vt_);
    Poly r(a.vt_);
    const unsigned cap = degree_cap();
    Monomial m(a.vt_ ? a.vt_->size() : 0, 0);
    for (const auto& [ma, ca] : a.terms_) {
      const unsigned da = mono_degree(ma);
      for (const auto& [mb, cb] : b.terms_) {
        if (da + mono_degree(mb) > cap)
          throw degree_cap_error("total degree exceeds cap " + std::to_string(cap));
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
        auto [it, fresh] = r.terms_.emplace(m, 0);
        if (fresh) it->second = ca * cb;
        else it->second += ca * cb;
      }
    }
    for (auto it = r.terms_.begin(); it != r.terms_.end();) {
      if (it->second == 0) it = r.terms_.erase(it);
      else ++it;
    }
    return r;
  }

  friend Poly operator*(const Poly& a, const mpq_class& c) {
    Poly r(a.vt_);
    if (c == 0) return r;
    for (const auto& [m, q] : a.terms_) r.terms_.emplace(m, q * c);
    return r;
  }

  Poly pow(unsigned long e) const {
    Poly base = *this;
    Poly acc = Poly::constant(vt_, 1);
    while (e > 0) {
      if (e & 1) acc = acc * base;
      e >>= 1;
      if (e) base = base * base;
    }
    return acc;
  }

  Poly diff(int var) const {
    const auto v = static_cast<std::size_t>(var);
    if (!vt_ || v >= vt_->size()) throw error("differentiation variable out of range");
    Poly r(vt_);
    for (const auto& [m, c] : terms_) {
      if (m[v] == 0) continue;
      Monomial n = m;
      mpq_class nc = c * mpq_class(static_cast<unsigned long>(m[v]));
      n[v] -= 1;
      r.terms_.emplace(std::move(n), std::move(nc));
    }
    return r;
  }

  // Term-by-term antiderivative in `var` (constant of integration zero).
  Poly antiderivative(int var) const {
    const auto v = static_cast<std::size_t>(var);
    if (!vt_ || v >= vt_->size()) throw error("integration variable out of range");
    Poly r(vt_);
    for (const auto& [m, c] : terms_) {
      Monomial n = m;
      n[v] += 1;
      mpq_class nc = c / mpq_class(static_cast<unsigned long>(n[v]));
      nc.canonicalize();
      r.terms_.emplace(std::move(n), std::move(nc));
    }
    return r;
  }

  std::complex<double> eval(const std::vector<std::complex<double>>& point) const {
    if (vt_ && point.size() != vt_->size())
      throw error("evaluation point has wrong dimension");
    // Cache powers of each coordinate up to the largest exponent used.
    std::vector<std::vector<std::complex<double>>> pows(point.size());
    for (std::size_t v = 0; v < point.size(); ++v) {
      std::uint32_t maxe = 0;
      for (const auto& [m, c] : terms_) maxe = std::max(maxe, m[v]);
      auto& pv = pows[v];
      pv.resize(maxe + 1);
      pv[0] = 1.0;
      for (std::uint32_t e = 1; e <= maxe; ++e) pv[e] = pv[e - 1] * point[v];
    }
    std::complex<double> acc = 0.0;
    for (const auto& [m, c] : terms_) {
      std::complex<double> term = c.get_d();
      for (std::size_t v = 0; v < point.size(); ++v)
        if (m[v]) term *= pows[v][m[v]];
      acc += term;
    }
    return acc;
  }

  friend bool operator==(const Poly& a, const Poly& b) {
    return a.terms_ == b.terms_;
  }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  // Componentwise minimum of all exponent vectors (the monomial content).
  Monomial monomial_content() const {
    if (terms_.empty() || !vt_) return Monomial(vt_ ? vt_->size() : 0, 0);
    Monomial m = terms_.begin()->first;
    for (const auto& [mono, c] : terms_)
      for (std::size_t v = 0; v < m.size(); ++v)
        m[v] = std::min(m[v], mono[v]);
    return m;
  }

  // Exact division by a monomial that divides every term.
  Poly divide_monomial(const Monomial& m) const {
    Poly r(vt_);
    for (const auto& [mono, c] : terms_) {
      Monomial n = mono;
      for (std::size_t v = 0; v < n.size(); ++v) n[v] -= m[v];
      r.terms_.emplace(std::move(n), c);
    }
    return r;
  }

 private:
  VarTablePtr vt_;
  TermMap terms_;
};

// ----------------------------------------------------------------- RatFunc

class RatFunc {
 public:
  RatFunc() = default;

  RatFunc(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    require_same_table(num_.table(), den_.table());
    if (den_.is_zero()) throw zero_division_error("zero denominator");
    normalize_();
  }

  explicit RatFunc(Poly num)
      : RatFunc(num, Poly::constant(num.table(), 1)) {}

  static RatFunc zero(VarTablePtr vt) { return RatFunc(Poly::zero(vt)); }
  static RatFunc constant(VarTablePtr vt, mpq_class c) {
    return RatFunc(Poly::constant(std::move(vt), std::move(c)));
  }
  static RatFunc variable(VarTablePtr vt, int idx) {
    return RatFunc(Poly::variable(std::move(vt), idx));
  }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  const VarTablePtr& table() const { return num_.table(); }

  bool is_zero() const { return num_.is_zero(); }
  bool is_polynomial() const { return den_.is_constant(); }

  friend RatFunc operator-(const RatFunc& a) { return RatFunc(-a.num_, a.den_); }

  // Structurally equal denominators are combined without multiplying them
  // out; this keeps degrees proportional to the answer, not the term count.
  friend RatFunc operator+(const RatFunc& a, const RatFunc& b) {
    if (a.den_ == b.den_) return RatFunc(a.num_ + b.num_, a.den_);
    return RatFunc(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend RatFunc operator-(const RatFunc& a, const RatFunc& b) {
    if (a.den_ == b.den_) return RatFunc(a.num_ - b.num_, a.den_);
    return RatFunc(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend RatFunc operator*(const RatFunc& a, const RatFunc& b) {
    return RatFunc(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend RatFunc operator/(const RatFunc& a, const RatFunc& b) {
    if (b.is_zero()) throw zero_division_error("division by zero rational function");
    return RatFunc(a.num_ * b.den_, a.den_ * b.num_);
  }

  RatFunc pow(unsigned long e) const {
    return RatFunc(num_.pow(e), den_.pow(e));
  }

  // Quotient-rule partial derivative.
  RatFunc diff(int var) const {
    return RatFunc(num_.diff(var) * den_ - num_ * den_.diff(var), den_ * den_);
  }

  std::complex<double> eval(const std::vector<std::complex<double>>& point) const {
    const std::complex<double> d = den_.eval(point);
    if (d == std::complex<double>(0.0, 0.0))
      throw pole_error("denominator vanished at evaluation point" + point_str(point));
    const std::complex<double> n = num_.eval(point);
    const std::complex<double> r = n / d;
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag()))
      throw pole_error("non-finite value at evaluation point" + point_str(point));
    return r;
  }

 private:
  static std::string point_str(const std::vector<std::complex<double>>& p) {
    std::string s = " (";
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(p[i].real());
      if (p[i].imag() != 0.0) s += "+" + std::to_string(p[i].imag()) + "i";
    }
    return s + ")";
  }

  // Cheap canonicalizations that need no GCD: a zero numerator resets the
  // denominator, and a constant denominator is folded into the coefficients.
  void normalize_() {
    if (num_.is_zero()) {
      den_ = Poly::constant(num_.table(), 1);
      return;
    }
    // Cancel the shared monomial content of numerator and denominator.
    // This is plain exponent arithmetic, not a polynomial GCD, yet it
    // collapses the power-of-variable factors that substitution and
    // differentiation otherwise accumulate.
    if (!den_.is_constant()) {
      Monomial cn = num_.monomial_content();
      Monomial cd = den_.monomial_content();
      Monomial common(cn.size(), 0);
      bool any = false;
      for (std::size_t v = 0; v < cn.size(); ++v) {
        common[v] = std::min(cn[v], cd[v]);
        if (common[v] != 0) any = true;
      }
      if (any) {
        num_ = num_.divide_monomial(common);
        den_ = den_.divide_monomial(common);
      }
    }
    if (den_.is_constant()) {
      const mpq_class c = den_.constant_value();
      if (c != 1) {
        mpq_class inv = 1 / c;
        inv.canonicalize();
        num_ = num_ * inv;
        den_ = Poly::constant(num_.table(), 1);
      }
    }
  }

  Poly num_, den_;
};

// Semantic zero test: true iff the (already expanded) numerator is zero.
inline bool rf_is_zero(const RatFunc& f) { return f.is_zero(); }

// Semantic equality by cross-multiplication; never computes polynomial GCDs.
inline bool rf_equal(const RatFunc& a, const RatFunc& b) {
  require_same_table(a.table(), b.table());
  return (a.num() * b.den() - b.num() * a.den()).is_zero();
}

// ----------------------------------------------------------------- substitution

// Simultaneous substitution of variables by rational functions over a target
// table. Variables absent from `images` pass through by name: the target
// table must contain a variable of the same name.
inline RatFunc subst(const RatFunc& f, const std::map<int, RatFunc>& images,
                     const VarTablePtr& target) {
  const VarTablePtr& src = f.table();
  const std::size_t n = src->size();
  std::vector<Poly> img_num(n), img_den(n);
  std::vector<bool> den_is_one(n, true);
  for (std::size_t v = 0; v < n; ++v) {
    RatFunc image;
    auto it = images.find(static_cast<int>(v));
    if (it != images.end()) {
      require_same_table(it->second.table(), target);
      image = it->second;
    } else {
      auto tv = target->find(src->name(static_cast<int>(v)));
      if (!tv)
        throw error("variable '" + src->name(static_cast<int>(v)) +
                    "' has no image and is absent from the target table");
      image = RatFunc::variable(target, *tv);
    }
    img_num[v] = image.num();
    img_den[v] = image.den();
    den_is_one[v] =
        image.den().is_constant() && image.den().constant_value() == 1;
  }

  // Per-variable exponent maxima of the numerator and the denominator. The
  // image of each polynomial is written over the common denominator
  // Π_v D_v^{E_v} (E_v the largest exponent of v); the two common denominators
  // then cancel per variable by exponent arithmetic, so shared image
  // denominator powers never get multiplied into both sides of the quotient.
  std::vector<std::uint32_t> En(n, 0), Ed(n, 0);
  for (const auto& [m, c] : f.num().terms())
    for (std::size_t v = 0; v < n; ++v) En[v] = std::max(En[v], m[v]);
  for (const auto& [m, c] : f.den().terms())
    for (std::size_t v = 0; v < n; ++v) Ed[v] = std::max(Ed[v], m[v]);

  std::vector<std::vector<Poly>> npow(n), dpow(n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::uint32_t top = std::max(En[v], Ed[v]);
    if (top == 0) continue;
    npow[v].push_back(Poly::constant(target, 1));
    for (std::uint32_t e = 1; e <= top; ++e)
      npow[v].push_back(npow[v].back() * img_num[v]);
    if (!den_is_one[v]) {
      dpow[v].push_back(Poly::constant(target, 1));
      for (std::uint32_t e = 1; e <= top; ++e)
        dpow[v].push_back(dpow[v].back() * img_den[v]);
    }
  }

  auto poly_image = [&](const Poly& p,
                        const std::vector<std::uint32_t>& E) -> Poly {
    Poly acc = Poly::zero(target);
    for (const auto& [m, c] : p.terms()) {
      Poly term = Poly::constant(target, c);
      for (std::size_t v = 0; v < n; ++v) {
        if (E[v] == 0) continue;
        if (m[v]) term = term * npow[v][m[v]];
        if (!den_is_one[v] && E[v] != m[v]) term = term * dpow[v][E[v] - m[v]];
      }
      acc = acc + term;
    }
    return acc;
  };

  Poly pn = poly_image(f.num(), En);
  Poly qn = poly_image(f.den(), Ed);
  if (qn.is_zero())
    throw zero_division_error(
        "substitution makes the denominator semantically zero");
  // Residual common-denominator mismatch: multiply only the difference of the
  // exponents onto the side that is short of them.
  for (std::size_t v = 0; v < n; ++v) {
    if (den_is_one[v]) continue;
    if (Ed[v] > En[v])
      pn = pn * dpow[v][Ed[v] - En[v]];
    else if (En[v] > Ed[v])
      qn = qn * dpow[v][En[v] - Ed[v]];
  }
  return RatFunc(std::move(pn), std::move(qn));
}

// Rename variables (a special case of substitution where every image is a
// variable of the target table).
inline RatFunc rename_vars(const RatFunc& f,
                           const std::map<std::string, std::string>& names,
                           const VarTablePtr& target) {
  std::map<int, RatFunc> images;
  const VarTablePtr& src = f.table();
  for (std::size_t v = 0; v < src->size(); ++v) {
    auto it = names.find(src->name(static_cast<int>(v)));
    if (it != names.end())
      images.emplace(static_cast<int>(v),
                     RatFunc::variable(target, target->index_of(it->second)));
  }
  return subst(f, images, target);
}

// Set of variable indices that actually occur in f.
inline std::vector<int> vars_used(const RatFunc& f) {
  const std::size_t n = f.table()->size();
  std::vector<bool> used(n, false);
  auto scan = [&](const Poly& p) {
    for (const auto& [m, c] : p.terms())
      for (std::size_t v = 0; v < n; ++v)
        if (m[v]) used[v] = true;
  };
  scan(f.num());
  if (!f.den().is_constant()) scan(f.den());
  std::vector<int> out;
  for (std::size_t v = 0; v < n; ++v)
    if (used[v]) out.push_back(static_cast<int>(v));
  return out;
}

// ----------------------------------------------------------------- printing

inline std::string to_string(const mpq_class& q) { return q.get_str(); }

inline std::string to_string(const Poly& p) {
  if (p.is_zero()) return "0";
  const auto& vt = *p.table();
  // Factors inside a monomial print alphabetically by variable name.
  std::vector<std::size_t> order(vt.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return vt.name(static_cast<int>(a)) < vt.name(static_cast<int>(b));
  });
  std::string out;
  bool first = true;
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [m, c] = *it;
    const bool neg = c < 0;
    const mpq_class mag = neg ? mpq_class(-c) : c;
    if (first) {
      if (neg) out += "-";
      first = false;
    } else {
      out += neg ? " - " : " + ";
    }
    std::string vars;
    for (std::size_t v : order) {
      if (!m[v]) continue;
      if (!vars.empty()) vars += "*";
      vars += vt.name(static_cast<int>(v));
      if (m[v] > 1) vars += "^" + std::to_string(m[v]);
    }
    const mpz_class n = mag.get_num(), d = mag.get_den();
    if (vars.empty()) {
      out += n.get_str();
    } else if (n == 1) {
      out += vars;
    } else {
      out += n.get_str() + "*" + vars;
    }
    if (d != 1) out += "/" + d.get_str();
  }
  return out;
}

inline std::string to_string(const RatFunc& f) {
  if (f.is_polynomial()) return to_string(f.num());
  return "(" + to_string(f.num()) + ")/(" + to_string(f.den()) + ")";
}

// ----------------------------------------------------------------- parser

// Grammar (whitespace-insensitive):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := ("+"|"-")* atom ("^" uint)?
//   atom   := uint | ident | "(" expr ")"
// "^" binds tighter than the unary sign, so -x^2 parses as -(x^2); rational
// constants are quotients of integer literals, e.g. 1/2.
class ExprParser {
 public:
  ExprParser(std::string_view text, VarTablePtr vt)
      : text_(text), vt_(std::move(vt)) {}

  RatFunc parse() {
    RatFunc r = expr();
    skip_ws();
    if (pos_ != text_.size())
      throw parse_error("unexpected trailing input '" + pretty_here() + "'", pos_);
    return r;
  }

 private:
  static constexpr unsigned long kMaxExponent = 1u << 20;

  std::string_view text_;
  VarTablePtr vt_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  std::string pretty_here() const {
    if (pos_ >= text_.size()) return "<end of input>";
    return std::string(1, text_[pos_]);
  }

  RatFunc expr() {
    RatFunc acc = term();
    for (;;) {
      const char c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        RatFunc rhs = term();
        acc = (c == '+') ? acc + rhs : acc - rhs;
      } else {
        return acc;
      }
    }
  }

  RatFunc term() {
    RatFunc acc = factor();
    for (;;) {
      const char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        RatFunc rhs = factor();
        if (c == '/') {
          if (rhs.is_zero())
            throw zero_division_error("division by zero in expression");
          acc = acc / rhs;
        } else {
          acc = acc * rhs;
        }
      } else {
        return acc;
      }
    }
  }

  RatFunc factor() {
    bool negate = false;
    for (;;) {
      const char c = peek();
      if (c == '+') {
        ++pos_;
      } else if (c == '-') {
        negate = !negate;
        ++pos_;
      } else {
        break;
      }
    }
    RatFunc a = atom();
    if (peek() == '^') {
      ++pos_;
      a = a.pow(parse_uint());
    }
    return negate ? -a : a;
  }

  unsigned long parse_uint() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() ||
        !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      throw parse_error("expected nonnegative integer exponent, found '" +
                            pretty_here() + "'",
                        pos_);
    unsigned long v = 0;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(text_[pos_] - '0');
      if (v > kMaxExponent)
        throw parse_error("exponent too large", start);
      ++pos_;
    }
    return v;
  }

  RatFunc atom() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      RatFunc inner = expr();
      if (peek() != ')')
        throw parse_error("expected ')', found '" + pretty_here() + "'", pos_);
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      mpz_class z(std::string(text_.substr(start, pos_ - start)), 10);
      return RatFunc::constant(vt_, mpq_class(z));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      auto idx = vt_->find(name);
      if (!idx)
        throw parse_error("unknown identifier '" + std::string(name) + "'",
                          start);
      return RatFunc::variable(vt_, *idx);
    }
    throw parse_error(
        "expected one of: integer, identifier, '(', unary sign; found '" +
            pretty_here() + "'",
        pos_);
  }
};

inline RatFunc parse_expr(std::string_view text, VarTablePtr vt) {
  return ExprParser(text, std::move(vt)).parse();
}

}  // namespace opal
