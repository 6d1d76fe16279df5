#pragma once

// Brute-force ground truth for small instances. Nothing here depends on the
// orientation engine; tests use it to check the engine from the outside.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "dyndsg/engine.hpp"
#include "dyndsg/error.hpp"

namespace dyndsg::oracle {

inline constexpr std::size_t kUndirectedCap = 16;
inline constexpr std::size_t kDirectedCap = 8;

/// Nonnegative rational with 64-bit parts, kept in lowest terms.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {  // NOLINT
    if (den == 0) throw Error("rational with zero denominator");
    normalize();
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    return Rational(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  void normalize() {
    if (den_ < 0) {
      den_ = -den_;
      num_ = -num_;
    }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct Edge {
  VertexId u;
  VertexId v;
  std::uint64_t multiplicity = 1;
};

struct UndirectedGraph {
  std::vector<Rational> weights;
  std::vector<Edge> edges;
};

struct DirectedGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;  // u -> v
};

/// Exact density |E(S)| / w(S), kept as edges over a rational weight.
struct VwdsgAnswer {
  std::uint64_t edges = 0;
  Rational weight{1};
  std::vector<VertexId> witness;

  double density() const { return static_cast<double>(edges) / weight.value(); }
};

struct DdsgAnswer {
  std::uint64_t edges = 0;
  std::vector<VertexId> sources;
  std::vector<VertexId> sinks;

  double density() const {
    if (sources.empty() || sinks.empty()) return 0.0;
    return static_cast<double>(edges) /
           std::sqrt(static_cast<double>(sources.size()) * static_cast<double>(sinks.size()));
  }
};

namespace detail {

inline std::vector<VertexId> members(std::uint32_t mask) {
  std::vector<VertexId> out;
  for (VertexId i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

inline bool lex_less(std::uint32_t a, std::uint32_t b) {
  const auto ma = members(a), mb = members(b);
  return std::lexicographical_compare(ma.begin(), ma.end(), mb.begin(), mb.end());
}

// Edge multiplicity matrix, symmetric for undirected input.
inline std::vector<std::vector<std::uint64_t>> matrix(std::size_t n, const std::vector<Edge>& edges,
                                                      bool symmetric) {
  std::vector<std::vector<std::uint64_t>> c(n, std::vector<std::uint64_t>(n, 0));
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) throw Error("oracle: edge endpoint out of range");
    if (e.u == e.v) throw Error("oracle: self-loops are not supported");
    c[e.u][e.v] += e.multiplicity;
    if (symmetric) c[e.v][e.u] += e.multiplicity;
  }
  return c;
}

// Induced edge counts of every subset, built from the subset minus its lowest member.
inline std::vector<std::uint64_t> induced_counts(const std::vector<std::vector<std::uint64_t>>& c) {
  const std::size_t n = c.size();
  std::vector<std::uint64_t> count(std::size_t{1} << n, 0);
  for (std::uint32_t mask = 1; mask < count.size(); ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    const std::uint32_t rest = mask & (mask - 1);
    std::uint64_t add = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (rest >> j & 1u) add += c[low][j];
    }
    count[mask] = count[rest] + add;
  }
  return count;
}

}  // namespace detail

/// Maximum of |E(S)| / w(S) over all nonempty S; the witness is the
/// lexicographically smallest maximizer.
inline VwdsgAnswer exact_vwdsg(const UndirectedGraph& g) {
  const std::size_t n = g.weights.size();
  if (n == 0) throw Error("oracle: empty vertex set");
  if (n > kUndirectedCap) throw Error("oracle: vertex cap exceeded");
  const auto counts = detail::induced_counts(detail::matrix(n, g.edges, true));
  std::vector<Rational> weight(counts.size());
  std::uint32_t best = 0;
  for (std::uint32_t mask = 1; mask < counts.size(); ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    weight[mask] = weight[mask & (mask - 1)] + g.weights[low];
    if (best == 0) {
      best = mask;
      continue;
    }
    // counts[mask] / weight[mask] vs counts[best] / weight[best]
    const __int128 lhs = static_cast<__int128>(counts[mask]) * weight[mask].den() * weight[best].num();
    const __int128 rhs = static_cast<__int128>(counts[best]) * weight[best].den() * weight[mask].num();
    if (lhs > rhs || (lhs == rhs && detail::lex_less(mask, best))) best = mask;
  }
  return VwdsgAnswer{counts[best], weight[best], detail::members(best)};
}

/// Same search with real-valued weights.
inline double exact_vwdsg_real(const std::vector<double>& weights, const std::vector<Edge>& edges,
                               std::vector<VertexId>* witness = nullptr) {
  const std::size_t n = weights.size();
  if (n == 0) throw Error("oracle: empty vertex set");
  if (n > kUndirectedCap) throw Error("oracle: vertex cap exceeded");
  const auto counts = detail::induced_counts(detail::matrix(n, edges, true));
  std::vector<double> weight(counts.size(), 0.0);
  double best = -1.0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < counts.size(); ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    weight[mask] = weight[mask & (mask - 1)] + weights[low];
    const double d = static_cast<double>(counts[mask]) / weight[mask];
    if (d > best) {
      best = d;
      best_mask = mask;
    }
  }
  if (witness != nullptr) *witness = detail::members(best_mask);
  return best;
}

/// Maximum of |E(S,T)| / sqrt(|S||T|) over all nonempty S, T (possibly
/// overlapping). Comparisons are exact on squared densities.
inline DdsgAnswer exact_ddsg(const DirectedGraph& g) {
  const std::size_t n = g.n;
  if (n == 0) throw Error("oracle: empty vertex set");
  if (n > kDirectedCap) throw Error("oracle: vertex cap exceeded");
  const auto c = detail::matrix(n, g.edges, false);
  const std::uint32_t full = (1u << n);
  std::uint64_t best_e = 0;
  std::uint32_t best_s = 0, best_t = 0;
  std::vector<std::uint64_t> into(n), cut(full, 0);
  for (std::uint32_t s = 1; s < full; ++s) {
    const auto ss = static_cast<std::uint64_t>(std::popcount(s));
    for (std::size_t v = 0; v < n; ++v) {
      into[v] = 0;
      for (std::size_t u = 0; u < n; ++u) {
        if (s >> u & 1u) into[v] += c[u][v];
      }
    }
    // |E(S, T)| for every T, each from T minus its lowest member
    for (std::uint32_t t = 1; t < full; ++t) {
      cut[t] = cut[t & (t - 1)] + into[static_cast<std::size_t>(std::countr_zero(t))];
    }
    for (std::uint32_t t = 1; t < full; ++t) {
      const std::uint64_t e = cut[t];
      const auto ts = static_cast<std::uint64_t>(std::popcount(t));
      if (best_s == 0) {
        best_e = e, best_s = s, best_t = t;
        continue;
      }
      const auto bs = static_cast<std::uint64_t>(std::popcount(best_s));
      const auto bt = static_cast<std::uint64_t>(std::popcount(best_t));
      const __int128 lhs = static_cast<__int128>(e) * e * bs * bt;
      const __int128 rhs = static_cast<__int128>(best_e) * best_e * ss * ts;
      bool better = lhs > rhs;
      if (lhs == rhs && !better) {
        const auto ms = detail::members(s), mt = detail::members(t);
        const auto mbs = detail::members(best_s), mbt = detail::members(best_t);
        better = std::tie(ms, mt) < std::tie(mbs, mbt);
      }
      if (better) best_e = e, best_s = s, best_t = t;
    }
  }
  return DdsgAnswer{best_e, detail::members(best_s), detail::members(best_t)};
}

/// |E(S,T)| / sqrt(|S||T|) for explicit sets.
inline double directed_density(const DirectedGraph& g, const std::vector<VertexId>& sources,
                               const std::vector<VertexId>& sinks) {
  if (sources.empty() || sinks.empty()) return 0.0;
  std::vector<char> in_s(g.n, 0), in_t(g.n, 0);
  for (VertexId v : sources) in_s.at(v) = 1;
  for (VertexId v : sinks) in_t.at(v) = 1;
  std::uint64_t e = 0;
  for (const Edge& ed : g.edges) {
    if (in_s[ed.u] && in_t[ed.v]) e += ed.multiplicity;
  }
  return static_cast<double>(e) /
         std::sqrt(static_cast<double>(sources.size()) * static_cast<double>(sinks.size()));
}

/// Builds the bipartite doubled graph for ratio parameter t explicitly
/// (left copies weigh 1/(2t), right copies t/2, one edge {u_L, v_R} per arc
/// u -> v) and returns its exact maximum density.
inline double exact_reduced(const DirectedGraph& g, double t) {
  if (!(t > 0.0)) throw Error("oracle: t must be positive");
  if (g.n == 0) throw Error("oracle: empty vertex set");
  if (2 * g.n > kUndirectedCap) throw Error("oracle: vertex cap exceeded");
  std::vector<double> weights(2 * g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    weights[i] = 1.0 / (2.0 * t);
    weights[g.n + i] = t / 2.0;
  }
  std::vector<Edge> edges;
  edges.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    edges.push_back({e.u, static_cast<VertexId>(g.n + e.v), e.multiplicity});
  }
  return exact_vwdsg_real(weights, edges);
}

/// True iff every live arc u->v satisfies l(v) <= (1 + alpha) l(u) + beta.
inline bool check_alpha_beta_optimality(const OrientationSnapshot& s, double alpha, double beta) {
  for (const ArcView& a : s.arcs) {
    if (a.count == 0) continue;
    if (s.loads.at(a.head) > (1.0 + alpha) * s.loads.at(a.tail) + beta + 1e-9) return false;
  }
  return true;
}

}  // namespace dyndsg::oracle
