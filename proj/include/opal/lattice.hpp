#pragma once

// Affine root-lattice computations: built-in intersection matrices for the
// degenerate-fiber configurations, exact rational kernel computation,
// Dynkin-type classification up to vertex permutation, and the
// deformation-dimension table.

#include <opal/ratfunc.hpp>

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace opal {

// ----------------------------------------------------------------- types

struct IntersectionMatrix {
  std::size_t n = 0;
  std::vector<std::vector<long long>> entries;

  long long at(std::size_t i, std::size_t j) const { return entries[i][j]; }

  bool symmetric() const {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (entries[i][j] != entries[j][i]) return false;
    return true;
  }

  friend bool operator==(const IntersectionMatrix& a,
                         const IntersectionMatrix& b) {
    return a.n == b.n && a.entries == b.entries;
  }
};

struct RootType {
  std::string label;       // e.g. "E7~", "D8~", "A3~", "A0~*"
  std::string kodaira;     // e.g. "III*", "I4*", "I_4"
  int r = 0;               // number of components
  std::vector<int> marks;  // multiplicities in the fixed vertex order
  std::string painleve;    // e.g. "P_II"; empty when none
};

// ----------------------------------------------------------------- catalog

namespace detail {

// Matrix with −2 diagonal and adjacency counts off the diagonal.
inline IntersectionMatrix adjacency_matrix(
    std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  IntersectionMatrix m;
  m.n = n;
  m.entries.assign(n, std::vector<long long>(n, 0));
  for (std::size_t i = 0; i < n; ++i) m.entries[i][i] = -2;
  for (const auto& [a, b] : edges) {
    m.entries[(std::size_t)a][(std::size_t)b] += 1;
    m.entries[(std::size_t)b][(std::size_t)a] += 1;
  }
  return m;
}

inline std::vector<std::pair<int, int>> chain_edges(int from, int to) {
  std::vector<std::pair<int, int>> e;
  for (int i = from; i < to; ++i) e.emplace_back(i, i + 1);
  return e;
}

}  // namespace detail

// Built-in configurations, in the catalog order of the classification table:
// E-/D-types by descending component count, then the A-cycles, then the two
// one-component types. Vertex order is fixed by the documented traversal of
// the configuration figures: the long chain first, then branches (E-types),
// or head forks, chain, tail forks (D-types); cycles in cyclic order.
inline const std::vector<std::pair<RootType, IntersectionMatrix>>&
builtin_catalog() {
  static const std::vector<std::pair<RootType, IntersectionMatrix>> cat = [] {
    using detail::adjacency_matrix;
    using detail::chain_edges;
    std::vector<std::pair<RootType, IntersectionMatrix>> c;

    auto add = [&](std::string label, std::string kodaira, std::string pv,
                   std::vector<int> marks, IntersectionMatrix m) {
      RootType t;
      t.label = std::move(label);
      t.kodaira = std::move(kodaira);
      t.r = static_cast<int>(m.n);
      t.marks = std::move(marks);
      t.painleve = std::move(pv);
      c.emplace_back(std::move(t), std::move(m));
    };

    {  // E8~: chain 0–7, branch vertex 8 on vertex 5
      auto e = chain_edges(0, 7);
      e.emplace_back(8, 5);
      add("E8~", "II*", "P_I", {1, 2, 3, 4, 5, 6, 4, 2, 3},
          adjacency_matrix(9, e));
    }
    {  // D8~: head forks 0,1 on 2; chain 2–6; tail forks 7,8 on 6
      std::vector<std::pair<int, int>> e = {{0, 2}, {1, 2}, {7, 6}, {8, 6}};
      auto ch = chain_edges(2, 6);
      e.insert(e.end(), ch.begin(), ch.end());
      add("D8~", "I4*", "P_III^{D8~}", {1, 1, 2, 2, 2, 2, 2, 1, 1},
          adjacency_matrix(9, e));
    }
    {  // E7~: chain 0–6, branch vertex 7 on vertex 3
      auto e = chain_edges(0, 6);
      e.emplace_back(7, 3);
      add("E7~", "III*", "P_II", {1, 2, 3, 4, 3, 2, 1, 2},
          adjacency_matrix(8, e));
    }
    {  // D7~: head forks 0,1 on 2; chain 2–5; tail forks 6,7 on 5
      std::vector<std::pair<int, int>> e = {{0, 2}, {1, 2}, {6, 5}, {7, 5}};
      auto ch = chain_edges(2, 5);
      e.insert(e.end(), ch.begin(), ch.end());
      add("D7~", "I3*", "P_III^{D7~}", {1, 1, 2, 2, 2, 2, 1, 1},
          adjacency_matrix(8, e));
    }
    {  // D6~: head forks 0,1 on 2; chain 2–4; tail forks 5,6 on 4
      std::vector<std::pair<int, int>> e = {{0, 2}, {1, 2}, {5, 4}, {6, 4}};
      auto ch = chain_edges(2, 4);
      e.insert(e.end(), ch.begin(), ch.end());
      add("D6~", "I2*", "P_III^{D6~}", {1, 1, 2, 2, 2, 1, 1},
          adjacency_matrix(7, e));
    }
    {  // E6~: chain 0–4, branch 5 on the centre 2, leaf 6 on 5
      auto e = chain_edges(0, 4);
      e.emplace_back(5, 2);
      e.emplace_back(6, 5);
      add("E6~", "IV*", "P_IV", {1, 2, 3, 2, 1, 2, 1},
          adjacency_matrix(7, e));
    }
    {  // D5~: head forks 0,1 on 2; edge 2–3; tail forks 4,5 on 3
      std::vector<std::pair<int, int>> e = {{0, 2}, {1, 2}, {2, 3},
                                            {4, 3}, {5, 3}};
      add("D5~", "I1*", "P_V", {1, 1, 2, 2, 1, 1}, adjacency_matrix(6, e));
    }
    {  // D4~: star with centre 2
      std::vector<std::pair<int, int>> e = {{0, 2}, {1, 2}, {3, 2}, {4, 2}};
      add("D4~", "I0*", "P_VI", {1, 1, 2, 1, 1}, adjacency_matrix(5, e));
    }
    {  // A1~: two components meeting twice
      IntersectionMatrix m;
      m.n = 2;
      m.entries = {{-2, 2}, {2, -2}};
      add("A1~", "I_2", "", {1, 1}, std::move(m));
    }
    for (int k = 2; k <= 8; ++k) {  // A{k}~: cycle of k+1 components
      const int r = k + 1;
      std::vector<std::pair<int, int>> e;
      for (int i = 0; i < r; ++i) e.emplace_back(i, (i + 1) % r);
      add("A" + std::to_string(k) + "~", "I_" + std::to_string(r), "",
          std::vector<int>((std::size_t)r, 1),
          adjacency_matrix((std::size_t)r, e));
    }
    {  // A0~: smooth degenerate fibre, one component of self-intersection 0
      IntersectionMatrix m;
      m.n = 1;
      m.entries = {{0}};
      add("A0~", "I_0", "", {1}, std::move(m));
    }
    {  // A0~*: nodal rational component; same 1×1 matrix as A0~
      IntersectionMatrix m;
      m.n = 1;
      m.entries = {{0}};
      add("A0~*", "I_1", "", {1}, std::move(m));
    }
    return c;
  }();
  return cat;
}

namespace detail {

inline std::string normalize_label(const std::string& label) {
  std::string s;
  for (char ch : label) {
    if (ch == ' ' || ch == '~') continue;
    s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return s;  // "E7~" -> "e7", "A0~*" -> "a0*"
}

}  // namespace detail

// Built-in lookup by label; accepts e.g. "E7~", "e7", "A0~*", "a0*".
inline const std::pair<RootType, IntersectionMatrix>& builtin_matrix(
    const std::string& label) {
  const std::string key = detail::normalize_label(label);
  for (const auto& entry : builtin_catalog())
    if (detail::normalize_label(entry.first.label) == key) return entry;
  throw error("unknown configuration label '" + label + "'");
}

// ----------------------------------------------------------------- kernel

// Exact rational null space, returned as primitive integer vectors with
// positive first nonzero entry.
inline std::vector<std::vector<mpz_class>> kernel(
    const IntersectionMatrix& m) {
  const std::size_t n = m.n;
  std::vector<std::vector<mpq_class>> a(n, std::vector<mpq_class>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i][j] = mpq_class(static_cast<long>(m.entries[i][j]));

  // Reduced row echelon form.
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < n; ++col) {
    std::size_t sel = row;
    while (sel < n && a[sel][col] == 0) ++sel;
    if (sel == n) continue;
    std::swap(a[sel], a[row]);
    const mpq_class inv = 1 / a[row][col];
    for (std::size_t j = col; j < n; ++j) a[row][j] *= inv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == row || a[i][col] == 0) continue;
      const mpq_class f = a[i][col];
      for (std::size_t j = col; j < n; ++j) a[i][j] -= f * a[row][j];
    }
    pivot_col.push_back(col);
    ++row;
  }

  std::vector<bool> is_pivot(n, false);
  for (std::size_t c : pivot_col) is_pivot[c] = true;

  std::vector<std::vector<mpz_class>> basis;
  for (std::size_t free_col = 0; free_col < n; ++free_col) {
    if (is_pivot[free_col]) continue;
    std::vector<mpq_class> v(n, 0);
    v[free_col] = 1;
    for (std::size_t p = 0; p < pivot_col.size(); ++p)
      v[pivot_col[p]] = -a[p][free_col];
    // Scale to a primitive integer vector with positive first nonzero entry.
    mpz_class l = 1;
    for (const mpq_class& q : v) l = lcm(l, q.get_den());
    std::vector<mpz_class> w(n);
    mpz_class g = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mpq_class scaled = v[i] * mpq_class(l);
      scaled.canonicalize();
      w[i] = scaled.get_num();
      g = gcd(g, w[i]);
    }
    if (g != 0)
      for (mpz_class& x : w) x /= g;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0) continue;
      if (w[i] < 0)
        for (mpz_class& x : w) x = -x;
      break;
    }
    basis.push_back(std::move(w));
  }
  return basis;
}

// ----------------------------------------------------------------- rank

struct SemidefiniteResult {
  bool negative_semidefinite = false;
  std::size_t rank = 0;
};

// Exact test that m is negative semidefinite, plus its rank: symmetric
// Gaussian elimination on −m, pivoting on positive diagonal entries. A
// positive semidefinite matrix with a zero diagonal entry must have the
// whole row zero, which the elimination loop checks when no pivot remains.
inline SemidefiniteResult negative_semidefinite_rank(
    const IntersectionMatrix& m) {
  SemidefiniteResult res;
  if (!m.symmetric()) return res;
  const std::size_t n = m.n;
  std::vector<std::vector<mpq_class>> a(n, std::vector<mpq_class>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i][j] = mpq_class(static_cast<long>(-m.entries[i][j]));

  std::vector<bool> active(n, true);
  std::size_t rank = 0;
  for (;;) {
    std::size_t piv = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      if (a[i][i] < 0) return res;  // negative diagonal: indefinite
      if (piv == n && a[i][i] > 0) piv = i;
    }
    if (piv == n) {
      // All remaining diagonal entries are zero; the block must vanish.
      for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        for (std::size_t j = 0; j < n; ++j)
          if (active[j] && a[i][j] != 0) return res;
      }
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || i == piv) continue;
      const mpq_class f = a[i][piv] / a[piv][piv];
      for (std::size_t j = 0; j < n; ++j) {
        if (!active[j] || j == piv) continue;
        a[i][j] -= f * a[piv][j];
      }
    }
    active[piv] = false;
    ++rank;
  }
  res.negative_semidefinite = true;
  res.rank = rank;
  return res;
}

// ----------------------------------------------------------------- classify

namespace detail {

// Per-vertex signature: diagonal entry plus the sorted nonzero off-diagonal
// entries of its row. Permutation-invariant, so signature multisets must
// agree between isomorphic matrices.
inline std::vector<std::pair<long long, std::vector<long long>>> signatures(
    const IntersectionMatrix& m) {
  std::vector<std::pair<long long, std::vector<long long>>> sig(m.n);
  for (std::size_t i = 0; i < m.n; ++i) {
    sig[i].first = m.entries[i][i];
    for (std::size_t j = 0; j < m.n; ++j)
      if (j != i && m.entries[i][j] != 0)
        sig[i].second.push_back(m.entries[i][j]);
    std::sort(sig[i].second.begin(), sig[i].second.end());
  }
  return sig;
}

// Backtracking vertex matching: perm[i] is the input vertex playing the role
// of catalog vertex i. n ≤ 9 throughout the catalog.
inline bool isomorphic(const IntersectionMatrix& cat,
                       const IntersectionMatrix& in) {
  if (cat.n != in.n) return false;
  const auto sc = signatures(cat);
  auto si = signatures(in);
  {
    auto a = sc, b = si;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return false;
  }
  const std::size_t n = cat.n;
  std::vector<std::size_t> perm(n, n);
  std::vector<bool> used(n, false);
  auto extend = [&](auto&& self, std::size_t i) -> bool {
    if (i == n) return true;
    for (std::size_t cand = 0; cand < n; ++cand) {
      if (used[cand] || sc[i] != si[cand]) continue;
      bool ok = cat.entries[i][i] == in.entries[cand][cand];
      for (std::size_t j = 0; ok && j < i; ++j) {
        ok = cat.entries[i][j] == in.entries[cand][perm[j]] &&
             cat.entries[j][i] == in.entries[perm[j]][cand];
      }
      if (!ok) continue;
      perm[i] = cand;
      used[cand] = true;
      if (self(self, i + 1)) return true;
      used[cand] = false;
    }
    return false;
  };
  return extend(extend, 0);
}

}  // namespace detail

// Every catalog type whose matrix matches m up to vertex permutation, in
// catalog order. The two one-component types share the 1×1 zero matrix, so
// that matrix yields both.
inline std::vector<RootType> classify_all(const IntersectionMatrix& m) {
  std::vector<RootType> out;
  for (const auto& [t, cm] : builtin_catalog())
    if (detail::isomorphic(cm, m)) out.push_back(t);
  return out;
}

// First match in catalog order, or nullopt when unrecognized.
inline std::optional<RootType> classify(const IntersectionMatrix& m) {
  auto all = classify_all(m);
  if (all.empty()) return std::nullopt;
  return all.front();
}

// ----------------------------------------------------------------- dimension

// Deformation dimension 10 − r of the paired-surface family.
inline int deformation_dim(const RootType& t) { return 10 - t.r; }

// ----------------------------------------------------------------- JSON I/O

inline nlohmann::json to_json(const IntersectionMatrix& m) {
  nlohmann::json j;
  j["n"] = m.n;
  j["entries"] = m.entries;
  return j;
}

inline IntersectionMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("entries"))
    throw error("matrix JSON must be an object with an \"entries\" field");
  const auto& e = j.at("entries");
  if (!e.is_array()) throw error("\"entries\" must be an array of rows");
  IntersectionMatrix m;
  m.n = e.size();
  for (const auto& row : e) {
    if (!row.is_array() || row.size() != m.n)
      throw error("\"entries\" must be a square matrix");
    std::vector<long long> r;
    for (const auto& x : row) {
      if (!x.is_number_integer())
        throw error("matrix entries must be integers");
      r.push_back(x.get<long long>());
    }
    m.entries.push_back(std::move(r));
  }
  if (j.contains("n")) {
    if (!j.at("n").is_number_unsigned() || j.at("n").get<std::size_t>() != m.n)
      throw error("\"n\" does not match the entry count");
  }
  return m;
}

inline IntersectionMatrix matrix_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw error("malformed matrix JSON");
  return matrix_from_json(j);
}

}  // namespace opal
