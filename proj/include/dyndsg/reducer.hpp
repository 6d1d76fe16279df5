#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "dyndsg/engine.hpp"
#include "dyndsg/error.hpp"
#include "dyndsg/extractor.hpp"

namespace dyndsg {

struct ReducerConfig {
  double epsilon = 0.2;
  double alpha_c = 0.25;
  double loop_c = 4.0;
  // Low-density regime: D = ceil(dup_c log2 n / eps^2), T = threshold_c log2^2 n / eps^4.
  double dup_c = 4.0;
  double threshold_c = 4.0;
  double saturation_c = 1.0;
  std::uint64_t edge_capacity = std::uint64_t{1} << 32;
  bool parallel = false;
};

enum class Regime { kLow, kHigh };

inline const char* to_string(Regime r) { return r == Regime::kLow ? "low" : "high"; }

struct DirectedQueryResult {
  double density_estimate = 0.0;  // exact |E(S,T)| / sqrt(|S||T|) of the pair below
  std::vector<VertexId> sources;
  std::vector<VertexId> sinks;
  double winning_t = 0.0;
  Regime regime = Regime::kLow;
};

/// One grid point: the doubled bipartite graph for ratio t, with weights
/// 1/(2t) on left copies and t/2 on right copies, rescaled by `scale` so the
/// smaller of the two is exactly 1.
struct GridInstance {
  double t;
  double scale;
  double left_weight;
  double right_weight;
  OrientationEngine low;
  OrientationEngine high;

  const OrientationEngine& consulted() const { return low.saturated() ? high : low; }
  Regime regime() const { return low.saturated() ? Regime::kHigh : Regime::kLow; }
};

/// Geometric grid 1/sqrt(n), (1+eps)/sqrt(n), ... with sqrt(n) as the last point.
inline std::vector<double> t_grid(std::size_t n, double epsilon) {
  if (n == 0) throw Error("grid needs n >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0,1)");
  const double hi = std::sqrt(static_cast<double>(n));
  const double lo = 1.0 / hi;
  std::vector<double> ts{lo};
  while (ts.back() * (1.0 + epsilon) < hi * (1.0 - 1e-12)) ts.push_back(ts.back() * (1.0 + epsilon));
  if (ts.back() < hi * (1.0 - 1e-12)) ts.push_back(hi);
  else ts.back() = hi;
  return ts;
}

/// max(sqrt(|S|/|T|), sqrt(|T|/|S|)): a lower bound on the optimum directed
/// density at an optimal pair.
inline double best_t_sanity(std::size_t sources, std::size_t sinks) {
  if (sources == 0 || sinks == 0) throw Error("best_t_sanity needs nonempty sets");
  const double r = std::sqrt(static_cast<double>(sources) / static_cast<double>(sinks));
  return std::max(r, 1.0 / r);
}

/// Directed densest subgraph under arc insertions and deletions.
///
/// Each arc u->v becomes the undirected edge {u_L, v_R} in every grid
/// instance. Per grid point a thresholded engine with D parallel copies
/// serves the low-density regime and an unthresholded engine with single
/// copies takes over once the former saturates. Queries return the pair
/// (S, T) with the best exactly recomputed directed density over all grid
/// points.
class DdsgReducer {
 public:
  DdsgReducer(std::size_t n, ReducerConfig config) : n_(n), config_(config) {
    if (n == 0) throw Error("reducer needs n >= 1");
    if (n > (std::size_t{1} << 30)) throw Error("vertex count too large");
    const double lg = std::log2(static_cast<double>(std::max<std::size_t>(n, 2)));
    const double eps = config.epsilon;
    low_duplication_ = static_cast<std::uint64_t>(std::ceil(config.dup_c * lg / (eps * eps)));
    low_threshold_ = std::max(1.0, config.threshold_c * lg * lg / (eps * eps * eps * eps));
    for (double t : t_grid(n, eps)) {
      double left = 1.0, right = 1.0, scale = 2.0;
      if (t >= 1.0) {
        right = t * t;
        scale = 2.0 * t;
      } else {
        left = 1.0 / (t * t);
        scale = 2.0 / t;
      }
      std::vector<double> weights(2 * n);
      std::fill(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(n), left);
      std::fill(weights.begin() + static_cast<std::ptrdiff_t>(n), weights.end(), right);
      EngineConfig low;
      low.epsilon = eps;
      low.alpha_c = config.alpha_c;
      low.loop_c = config.loop_c;
      low.threshold = low_threshold_;
      low.duplication = low_duplication_;
      low.saturation_c = config.saturation_c;
      low.edge_capacity = config.edge_capacity;
      EngineConfig high = low;
      high.threshold = kUnthresholded;
      high.duplication = 1;
      grid_.push_back(std::make_unique<GridInstance>(
          GridInstance{t, scale, left, right, OrientationEngine(weights, low), OrientationEngine(weights, high)}));
    }
  }

  std::size_t vertex_count() const { return n_; }
  const ReducerConfig& config() const { return config_; }
  std::uint64_t low_duplication() const { return low_duplication_; }
  double low_threshold() const { return low_threshold_; }
  std::size_t grid_size() const { return grid_.size(); }
  const GridInstance& instance(std::size_t i) const { return *grid_.at(i); }

  VertexId left(VertexId v) const { return v; }
  VertexId right(VertexId v) const { return static_cast<VertexId>(n_ + v); }

  std::uint64_t arc_count(VertexId u, VertexId v) const {
    const auto it = arcs_.find({u, v});
    return it == arcs_.end() ? 0 : it->second;
  }
  const std::map<std::pair<VertexId, VertexId>, std::uint64_t>& arcs() const { return arcs_; }

  void insert_directed(VertexId u, VertexId v) {
    check(u, v);
    ++arcs_[{u, v}];
    fan_out([&](GridInstance& g) {
      g.low.insert(left(u), right(v), low_duplication_);
      g.high.insert(left(u), right(v), 1);
    });
  }

  void delete_directed(VertexId u, VertexId v) {
    check(u, v);
    const auto it = arcs_.find({u, v});
    if (it == arcs_.end()) throw Error("delete of absent arc");
    if (--it->second == 0) arcs_.erase(it);
    fan_out([&](GridInstance& g) {
      g.low.erase(left(u), right(v), low_duplication_);
      g.high.erase(left(u), right(v), 1);
    });
  }

  DirectedQueryResult query() const {
    DirectedQueryResult best;
    bool found = false;
    for (const auto& g : grid_) {
      const ExtractionResult ex = extract(g->consulted(), config_.epsilon);
      std::vector<VertexId> sources, sinks;
      for (VertexId x : ex.vertices) {
        if (x < n_) sources.push_back(x);
        else sinks.push_back(static_cast<VertexId>(x - n_));
      }
      if (sources.empty() || sinks.empty()) continue;
      std::sort(sources.begin(), sources.end());
      std::sort(sinks.begin(), sinks.end());
      const double d = directed_density(sources, sinks);
      if (!found || d > best.density_estimate) {
        found = true;
        best.density_estimate = d;
        best.sources = std::move(sources);
        best.sinks = std::move(sinks);
        best.winning_t = g->t;
        best.regime = g->regime();
      }
    }
    return best;
  }

  /// |E(S,T)| / sqrt(|S||T|) on the live arc multiset.
  double directed_density(const std::vector<VertexId>& sources, const std::vector<VertexId>& sinks) const {
    if (sources.empty() || sinks.empty()) return 0.0;
    std::vector<char> in_s(n_, 0), in_t(n_, 0);
    for (VertexId v : sources) in_s.at(v) = 1;
    for (VertexId v : sinks) in_t.at(v) = 1;
    std::uint64_t e = 0;
    for (const auto& [arc, c] : arcs_) {
      if (in_s[arc.first] && in_t[arc.second]) e += c;
    }
    return static_cast<double>(e) /
           std::sqrt(static_cast<double>(sources.size()) * static_cast<double>(sinks.size()));
  }

  EngineCounters counters() const {
    EngineCounters total;
    for (const auto& g : grid_) {
      total += g->low.counters();
      total += g->high.counters();
    }
    return total;
  }

 private:
  void check(VertexId u, VertexId v) const {
    if (u >= n_ || v >= n_) throw Error("unknown vertex");
    if (u == v) throw Error("self-loops are not supported");
  }

  template <class F>
  void fan_out(F&& f) {
    if (!config_.parallel || grid_.size() < 2) {
      for (auto& g : grid_) f(*g);
      return;
    }
    const std::size_t workers = std::min<std::size_t>(grid_.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < grid_.size(); i += workers) f(*grid_[i]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::size_t n_;
  ReducerConfig config_;
  std::uint64_t low_duplication_ = 1;
  double low_threshold_ = 1.0;
  std::vector<std::unique_ptr<GridInstance>> grid_;
  std::map<std::pair<VertexId, VertexId>, std::uint64_t> arcs_;
};

}  // namespace dyndsg
