#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dyndsg/error.hpp"
#include "dyndsg/levels.hpp"

namespace dyndsg {

using VertexId = std::uint32_t;

inline constexpr double kUnthresholded = std::numeric_limits<double>::infinity();

struct EngineConfig {
  double epsilon = 0.2;
  // alpha = alpha_c * epsilon^2 / log2(nW) unless `alpha` is set explicitly.
  double alpha_c = 0.25;
  double alpha = 0.0;
  // Arc directions scanned per check call: ceil(loop_c / alpha).
  double loop_c = 4.0;
  double threshold = kUnthresholded;
  std::uint64_t duplication = 1;
  // Bound on logical edges; the unthresholded level table covers D * capacity.
  std::uint64_t edge_capacity = std::uint64_t{1} << 32;
  // Additive margin (in units of log2(nW)/epsilon) below (1-eps)T at which
  // a thresholded engine reports saturation.
  double saturation_c = 1.0;
};

/// Exact event counts accumulated over the lifetime of an engine.
struct EngineCounters {
  std::uint64_t inc_calls = 0;
  std::uint64_t dec_calls = 0;
  std::uint64_t inc_arcs = 0;  // loop iterations in check_inc
  std::uint64_t dec_arcs = 0;  // loop iterations in check_dec (incoming scan)
  std::uint64_t flips = 0;
  std::uint64_t label_resets = 0;
  std::uint64_t max_inc_depth = 0;
  std::uint64_t max_dec_depth = 0;
  std::uint64_t max_layer_jump = 0;

  EngineCounters& operator+=(const EngineCounters& o) {
    inc_calls += o.inc_calls;
    dec_calls += o.dec_calls;
    inc_arcs += o.inc_arcs;
    dec_arcs += o.dec_arcs;
    flips += o.flips;
    label_resets += o.label_resets;
    max_inc_depth = std::max(max_inc_depth, o.max_inc_depth);
    max_dec_depth = std::max(max_dec_depth, o.max_dec_depth);
    max_layer_jump = std::max(max_layer_jump, o.max_layer_jump);
    return *this;
  }
};

/// One live arc direction as seen from outside the engine.
struct ArcView {
  VertexId tail;
  VertexId head;
  std::uint64_t count;
  double label;
};

struct OrientationSnapshot {
  std::vector<double> loads;  // thresholded loads
  std::vector<ArcView> arcs;
};

struct LocalOptimalityViolation {
  enum class Kind { kLoadAboveLabel, kLabelAboveHead, kLabelAboveTail, kLevelGap };
  Kind kind;
  ArcView arc;
  std::size_t head_level;
  std::size_t tail_level;
  std::size_t label_level;
};

inline const char* to_string(LocalOptimalityViolation::Kind k) {
  switch (k) {
    case LocalOptimalityViolation::Kind::kLoadAboveLabel: return "load-above-label";
    case LocalOptimalityViolation::Kind::kLabelAboveHead: return "label-above-head";
    case LocalOptimalityViolation::Kind::kLabelAboveTail: return "label-above-tail";
    case LocalOptimalityViolation::Kind::kLevelGap: return "level-gap";
  }
  return "?";
}

/// Fully dynamic vertex-weighted edge orientation.
///
/// Maintains an integral orientation of an undirected multigraph in which
/// every live arc u->v satisfies level(l(v)) <= level(l(u)) + 7, where l is
/// the (optionally thresholded) load indeg/weight. Each arc direction keeps
/// a lazily refreshed label, a snapshot of its head's load; check_inc and
/// check_dec repair labels and flip arcs after every unit load change.
///
/// Parallel copies of an edge share one record per direction with a
/// multiplicity counter and a single label.
///
/// Not thread-safe; distinct instances share no state.
class OrientationEngine {
 public:
  OrientationEngine(std::vector<double> weights, EngineConfig config)
      : config_(config), levels_(1.0, 1.0) {
    if (weights.empty()) throw Error("engine needs at least one vertex");
    if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) throw Error("epsilon must lie in (0,1)");
    if (config.duplication == 0) throw Error("duplication must be positive");
    if (!(config.loop_c > 0.0)) throw Error("loop constant must be positive");
    max_weight_ = 0.0;
    for (double w : weights) {
      if (!(w >= 1.0) || !std::isfinite(w)) throw Error("vertex weights must be finite and >= 1");
      max_weight_ = std::max(max_weight_, w);
    }
    log_nw_ = std::max(1.0, std::log2(static_cast<double>(weights.size()) * max_weight_));
    alpha_ = config.alpha > 0.0 ? config.alpha
                                : config.alpha_c * config.epsilon * config.epsilon / log_nw_;
    if (!(alpha_ > 0.0)) throw Error("alpha must be positive");
    loop_budget_ = static_cast<std::uint64_t>(std::ceil(config.loop_c / alpha_));
    if (thresholded()) {
      if (!(config.threshold >= 1.0)) throw Error("threshold must be >= 1");
      levels_ = LevelParams(alpha_, config.threshold);
    } else {
      levels_ = LevelParams(alpha_, static_cast<double>(config.duplication) *
                                        static_cast<double>(config.edge_capacity));
    }

    vertices_.resize(weights.size());
    layer_head_.assign(levels_.level_count(), kNil);
    layer_weight_.assign(levels_.level_count(), 0.0);
    layer_size_.assign(levels_.level_count(), 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      vertices_[i].weight = weights[i];
      layer_link(static_cast<VertexId>(i), 0);
    }
  }

  // ---- configuration -------------------------------------------------------

  const EngineConfig& config() const { return config_; }
  const LevelParams& levels() const { return levels_; }
  double alpha() const { return alpha_; }
  double epsilon() const { return config_.epsilon; }
  double threshold() const { return config_.threshold; }
  bool thresholded() const { return std::isfinite(config_.threshold); }
  std::uint64_t duplication() const { return config_.duplication; }
  std::uint64_t loop_budget() const { return loop_budget_; }
  double log_nw() const { return log_nw_; }
  double max_weight() const { return max_weight_; }
  std::size_t vertex_count() const { return vertices_.size(); }

  /// Constants (alpha', beta') such that every live arc u->v satisfies
  /// l(v) <= (1 + alpha') l(u) + beta' whenever the 7-level gap holds.
  std::pair<double, double> local_optimality_constants() const {
    const double grow = std::pow(1.0 + alpha_, 8.0);
    return {grow - 1.0, (grow - 1.0) / alpha_};
  }

  // ---- vertex state ----------------------------------------------------------

  double weight(VertexId v) const { return vertex(v).weight; }
  std::uint64_t indegree(VertexId v) const { return vertex(v).indeg; }
  double load(VertexId v) const { return static_cast<double>(vertex(v).indeg) / vertex(v).weight; }
  double thresholded_load(VertexId v) const { return vertex(v).load; }
  std::size_t level(VertexId v) const { return vertex(v).level; }

  const EngineCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = EngineCounters{}; }

  /// Logical edge copies currently stored (sum of all direction counts).
  std::uint64_t total_copies() const { return total_copies_; }

  std::uint64_t multiplicity(VertexId a, VertexId b) const {
    const auto it = pair_index_.find(pair_key(a, b));
    if (it == pair_index_.end()) return 0;
    return dirs_[2 * it->second].count + dirs_[2 * it->second + 1].count;
  }

  /// Copies currently oriented tail -> head.
  std::uint64_t oriented_count(VertexId tail, VertexId head) const {
    const auto it = pair_index_.find(pair_key(tail, head));
    if (it == pair_index_.end()) return 0;
    return dirs_[direction_of(it->second, tail, head)].count;
  }

  /// Label shared by the copies oriented tail -> head; NaN when none are.
  double label(VertexId tail, VertexId head) const {
    const auto it = pair_index_.find(pair_key(tail, head));
    if (it == pair_index_.end()) return std::numeric_limits<double>::quiet_NaN();
    const Direction& d = dirs_[direction_of(it->second, tail, head)];
    return d.count > 0 ? d.label : std::numeric_limits<double>::quiet_NaN();
  }

  // ---- updates ---------------------------------------------------------------

  void insert(VertexId a, VertexId b, std::uint64_t multiplicity = 1) {
    check_endpoints(a, b);
    if (multiplicity == 0) throw Error("multiplicity must be positive");
    const double cap = static_cast<double>(config_.duplication) * static_cast<double>(config_.edge_capacity);
    if (static_cast<double>(total_copies_) + static_cast<double>(multiplicity) > cap) {
      throw Error("edge capacity exceeded");
    }
    const std::uint32_t p = find_or_create_pair(a, b);
    for (std::uint64_t i = 0; i < multiplicity; ++i) insert_copy(p);
  }

  void erase(VertexId a, VertexId b, std::uint64_t multiplicity = 1) {
    check_endpoints(a, b);
    if (multiplicity == 0) throw Error("multiplicity must be positive");
    const auto it = pair_index_.find(pair_key(a, b));
    if (it == pair_index_.end()) throw Error("delete of absent edge");
    const std::uint32_t p = it->second;
    if (dirs_[2 * p].count + dirs_[2 * p + 1].count < multiplicity) {
      throw Error("delete exceeds stored multiplicity");
    }
    for (std::uint64_t i = 0; i < multiplicity; ++i) erase_copy(p);
  }

  // ---- queries ---------------------------------------------------------------

  /// Maximum thresholded load, read from the top nonempty layer.
  double max_load() const {
    double best = 0.0;
    for (std::int32_t v = layer_head_[top_layer_]; v != kNil; v = vertices_[v].layer_next) {
      best = std::max(best, vertices_[v].load);
    }
    return best;
  }

  bool saturated() const {
    if (!thresholded()) return false;
    return max_load() >= (1.0 - config_.epsilon) * config_.threshold -
                             config_.saturation_c * log_nw_ / config_.epsilon;
  }

  std::size_t top_layer() const { return top_layer_; }
  double layer_weight(std::size_t level) const { return layer_weight_.at(level); }
  std::size_t layer_size(std::size_t level) const { return layer_size_.at(level); }

  template <class F>
  void for_each_in_layer(std::size_t level, F&& f) const {
    for (std::int32_t v = layer_head_.at(level); v != kNil; v = vertices_[v].layer_next) {
      f(static_cast<VertexId>(v));
    }
  }

  /// Calls f(neighbor, total_multiplicity) for every live edge at v.
  template <class F>
  void for_each_neighbor(VertexId v, F&& f) const {
    for (std::uint32_t p : vertex(v).pairs) {
      const std::uint64_t c = dirs_[2 * p].count + dirs_[2 * p + 1].count;
      if (c == 0) continue;
      const ArcPair& ap = pairs_[p];
      f(ap.lo == v ? ap.hi : ap.lo, c);
    }
  }

  template <class F>
  void for_each_arc(F&& f) const {
    for (std::size_t d = 0; d < dirs_.size(); ++d) {
      if (dirs_[d].count == 0) continue;
      f(ArcView{tail_of(d), head_of(d), dirs_[d].count, dirs_[d].label});
    }
  }

  OrientationSnapshot snapshot() const {
    OrientationSnapshot s;
    s.loads.reserve(vertices_.size());
    for (const auto& v : vertices_) s.loads.push_back(v.load);
    for_each_arc([&](const ArcView& a) { s.arcs.push_back(a); });
    return s;
  }

  /// Full scan of the label and level-gap inequalities over every live arc.
  std::vector<LocalOptimalityViolation> verify_local_optimality() const {
    std::vector<LocalOptimalityViolation> out;
    using K = LocalOptimalityViolation::Kind;
    for (std::size_t d = 0; d < dirs_.size(); ++d) {
      const Direction& dir = dirs_[d];
      if (dir.count == 0) continue;
      const VertexId u = tail_of(d), v = head_of(d);
      const std::size_t lv_v = level_of(vertices_[v].load);
      const std::size_t lv_u = level_of(vertices_[u].load);
      const std::size_t lv_lb = level_of(dir.label);
      const ArcView view{u, v, dir.count, dir.label};
      if (lv_v > lv_lb + 4) out.push_back({K::kLoadAboveLabel, view, lv_v, lv_u, lv_lb});
      if (lv_lb > lv_v + 4) out.push_back({K::kLabelAboveHead, view, lv_v, lv_u, lv_lb});
      if (lv_lb > lv_u + 3) out.push_back({K::kLabelAboveTail, view, lv_v, lv_u, lv_lb});
      if (lv_v > lv_u + 7) out.push_back({K::kLevelGap, view, lv_v, lv_u, lv_lb});
    }
    return out;
  }

  /// Structural self-check of every index; returns a description of the
  /// first inconsistency, or an empty string.
  std::string check_consistency() const {
    std::uint64_t indeg_sum = 0, copies = 0;
    std::vector<std::uint64_t> indeg(vertices_.size(), 0);
    for (std::size_t d = 0; d < dirs_.size(); ++d) {
      copies += dirs_[d].count;
      indeg[head_of(d)] += dirs_[d].count;
    }
    if (copies != total_copies_) return "total copy count mismatch";
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
      const Vertex& vx = vertices_[v];
      indeg_sum += vx.indeg;
      if (indeg[v] != vx.indeg) return "indegree mismatch at " + std::to_string(v);
      if (vx.load != compute_load(vx)) return "stale load at " + std::to_string(v);
      if (vx.level != level_of(vx.load)) return "stale level at " + std::to_string(v);
      // incoming buckets: strictly increasing labels, members live and headed here
      std::size_t members = 0;
      double prev_label = -1.0;
      std::int32_t expect_cursor = kNil;
      for (std::int32_t b = vx.in_first; b != kNil; b = buckets_[b].next) {
        const LabelBucket& bk = buckets_[b];
        if (bk.first == kNil) return "empty label bucket";
        if (!(bk.label > prev_label)) return "label buckets out of order";
        if (expect_cursor == kNil && bk.label >= vx.load) expect_cursor = b;
        prev_label = bk.label;
        for (std::int32_t d = bk.first; d != kNil; d = dirs_[d].in_next) {
          if (dirs_[d].count == 0 || head_of(d) != v || dirs_[d].label != bk.label ||
              dirs_[d].in_bucket != b) {
            return "bad incoming record at " + std::to_string(v);
          }
          ++members;
        }
      }
      if (vx.cursor != expect_cursor) return "cursor out of place at " + std::to_string(v);
      std::size_t out_members = 0;
      for (const auto& [lvl, head] : vx.out_levels) {
        if (head == kNil) return "empty outgoing level";
        for (std::int32_t d = head; d != kNil; d = dirs_[d].out_next) {
          if (dirs_[d].count == 0 || tail_of(d) != v || dirs_[d].label_level != lvl) {
            return "bad outgoing record at " + std::to_string(v);
          }
          ++out_members;
        }
      }
      std::size_t live_in = 0, live_out = 0;
      for (std::uint32_t p : vx.pairs) {
        for (int s = 0; s < 2; ++s) {
          const std::size_t d = 2 * p + s;
          if (dirs_[d].count == 0) continue;
          if (head_of(d) == v) ++live_in;
          else ++live_out;
        }
      }
      if (live_in != members) return "incoming structure size mismatch at " + std::to_string(v);
      if (live_out != out_members) return "outgoing structure size mismatch at " + std::to_string(v);
    }
    if (indeg_sum != total_copies_) return "indegree sum mismatch";
    std::size_t top = 0;
    for (std::size_t l = 0; l < layer_head_.size(); ++l) {
      double w = 0.0;
      std::size_t n = 0;
      for (std::int32_t v = layer_head_[l]; v != kNil; v = vertices_[v].layer_next) {
        if (vertices_[v].layer != l || vertices_[v].level != l) return "vertex in wrong layer";
        w += vertices_[v].weight;
        ++n;
      }
      if (n != layer_size_[l]) return "layer size mismatch";
      if (std::abs(w - layer_weight_[l]) > 1e-6 * std::max(1.0, w)) return "layer weight mismatch";
      if (n > 0) top = l;
    }
    if (top != top_layer_) return "top layer mismatch";
    return {};
  }

  /// Overwrites a live direction's label without any repair. Diagnostics
  /// and tests only: it can break every maintained invariant.
  void unsafe_set_label(VertexId tail, VertexId head, double value) {
    const auto it = pair_index_.find(pair_key(tail, head));
    if (it == pair_index_.end()) throw Error("no such edge");
    const std::size_t d = direction_of(it->second, tail, head);
    if (dirs_[d].count == 0) throw Error("direction not live");
    remove_incoming(d);
    remove_outgoing(d);
    dirs_[d].label = value;
    dirs_[d].label_level = static_cast<std::uint32_t>(level_of(value));
    insert_incoming_at(d, value);
    insert_outgoing(d);
  }

 private:
  static constexpr std::int32_t kNil = -1;

  struct Vertex {
    double weight = 1.0;
    std::uint64_t indeg = 0;
    double load = 0.0;  // thresholded
    std::size_t level = 0;
    std::size_t layer = 0;
    std::int32_t layer_prev = kNil, layer_next = kNil;
    std::int32_t in_first = kNil, in_last = kNil, cursor = kNil;
    std::map<std::uint32_t, std::int32_t> out_levels;  // label level -> list head
    std::vector<std::uint32_t> pairs;
  };

  // Pair p has direction 2p (lo -> hi) and 2p+1 (hi -> lo).
  struct ArcPair {
    VertexId lo, hi;
  };

  struct Direction {
    std::uint64_t count = 0;
    double label = 0.0;
    std::uint32_t label_level = 0;
    std::int32_t in_prev = kNil, in_next = kNil, in_bucket = kNil;
    std::int32_t out_prev = kNil, out_next = kNil;
  };

  struct LabelBucket {
    double label = 0.0;
    std::int32_t prev = kNil, next = kNil;
    std::int32_t first = kNil, last = kNil;
  };

  const Vertex& vertex(VertexId v) const {
    if (v >= vertices_.size()) throw Error("unknown vertex " + std::to_string(v));
    return vertices_[v];
  }

  void check_endpoints(VertexId a, VertexId b) const {
    if (a >= vertices_.size()) throw Error("unknown vertex " + std::to_string(a));
    if (b >= vertices_.size()) throw Error("unknown vertex " + std::to_string(b));
    if (a == b) throw Error("self-loops are not supported");
  }

  static std::uint64_t pair_key(VertexId a, VertexId b) {
    const VertexId lo = std::min(a, b), hi = std::max(a, b);
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
  }

  std::size_t direction_of(std::uint32_t p, VertexId tail, VertexId /*head*/) const {
    return pairs_[p].lo == tail ? 2 * p : 2 * p + 1;
  }
  VertexId head_of(std::size_t d) const { return (d & 1) == 0 ? pairs_[d >> 1].hi : pairs_[d >> 1].lo; }
  VertexId tail_of(std::size_t d) const { return (d & 1) == 0 ? pairs_[d >> 1].lo : pairs_[d >> 1].hi; }

  std::size_t level_of(double x) const { return levels_.level_of_unchecked(x); }

  double compute_load(const Vertex& vx) const {
    return std::min(static_cast<double>(vx.indeg) / vx.weight, config_.threshold);
  }

  std::uint32_t find_or_create_pair(VertexId a, VertexId b) {
    const auto key = pair_key(a, b);
    const auto it = pair_index_.find(key);
    if (it != pair_index_.end()) return it->second;
    const auto p = static_cast<std::uint32_t>(pairs_.size());
    pairs_.push_back({std::min(a, b), std::max(a, b)});
    dirs_.emplace_back();
    dirs_.emplace_back();
    pair_index_.emplace(key, p);
    vertices_[a].pairs.push_back(p);
    vertices_[b].pairs.push_back(p);
    return p;
  }

  // ---- layer index -------------------------------------------------------------

  void layer_link(VertexId v, std::size_t level) {
    Vertex& vx = vertices_[v];
    vx.layer = level;
    vx.layer_prev = kNil;
    vx.layer_next = layer_head_[level];
    if (vx.layer_next != kNil) vertices_[vx.layer_next].layer_prev = static_cast<std::int32_t>(v);
    layer_head_[level] = static_cast<std::int32_t>(v);
    layer_weight_[level] += vx.weight;
    ++layer_size_[level];
    top_layer_ = std::max(top_layer_, level);
  }

  void layer_unlink(VertexId v) {
    Vertex& vx = vertices_[v];
    if (vx.layer_prev != kNil) vertices_[vx.layer_prev].layer_next = vx.layer_next;
    else layer_head_[vx.layer] = vx.layer_next;
    if (vx.layer_next != kNil) vertices_[vx.layer_next].layer_prev = vx.layer_prev;
    layer_weight_[vx.layer] -= vx.weight;
    if (--layer_size_[vx.layer] == 0) layer_weight_[vx.layer] = 0.0;
  }

  // Applies an in-degree change of +-1 and refreshes load, level, cursor, layer.
  void change_indegree(VertexId v, int delta) {
    Vertex& vx = vertices_[v];
    if (delta > 0) ++vx.indeg;
    else --vx.indeg;
    vx.load = compute_load(vx);
    const std::size_t lvl = level_of(vx.load);
    if (lvl != vx.level) {
      const std::size_t jump = lvl > vx.level ? lvl - vx.level : vx.level - lvl;
      counters_.max_layer_jump = std::max<std::uint64_t>(counters_.max_layer_jump, jump);
      vx.level = lvl;
      layer_unlink(v);
      layer_link(v, lvl);
      while (top_layer_ > 0 && layer_size_[top_layer_] == 0) --top_layer_;
    }
    fix_cursor(vx);
  }

  // ---- incoming label structure (nested doubly linked lists) -----------------

  // Cursor: first bucket whose label is >= the current load.
  void fix_cursor(Vertex& vx) {
    std::int32_t c = vx.cursor;
    std::int32_t prev = c == kNil ? vx.in_last : buckets_[c].prev;
    while (prev != kNil && buckets_[prev].label >= vx.load) {
      c = prev;
      prev = buckets_[c].prev;
    }
    while (c != kNil && buckets_[c].label < vx.load) c = buckets_[c].next;
    vx.cursor = c;
  }

  std::int32_t new_bucket(double label) {
    std::int32_t b;
    if (!free_buckets_.empty()) {
      b = free_buckets_.back();
      free_buckets_.pop_back();
      buckets_[b] = LabelBucket{};
    } else {
      b = static_cast<std::int32_t>(buckets_.size());
      buckets_.emplace_back();
    }
    buckets_[b].label = label;
    return b;
  }

  void append_to_bucket(std::int32_t b, std::size_t d) {
    Direction& dir = dirs_[d];
    LabelBucket& bk = buckets_[b];
    dir.in_bucket = b;
    dir.in_next = kNil;
    dir.in_prev = bk.last;
    if (bk.last != kNil) dirs_[bk.last].in_next = static_cast<std::int32_t>(d);
    else bk.first = static_cast<std::int32_t>(d);
    bk.last = static_cast<std::int32_t>(d);
  }

  // Places d in its head's incoming structure under `label`, which is the
  // head's current load in every maintained path (O(1) via the cursor).
  void insert_incoming_at(std::size_t d, double label) {
    Vertex& vx = vertices_[head_of(d)];
    std::int32_t c;
    if (label == vx.load) {
      c = vx.cursor;
    } else {
      // Only reached from unsafe_set_label.
      c = vx.in_first;
      while (c != kNil && buckets_[c].label < label) c = buckets_[c].next;
    }
    if (c != kNil && buckets_[c].label == label) {
      append_to_bucket(c, d);
      return;
    }
    const std::int32_t b = new_bucket(label);
    const std::int32_t before = c == kNil ? vx.in_last : buckets_[c].prev;
    buckets_[b].prev = before;
    buckets_[b].next = c;
    if (before != kNil) buckets_[before].next = b;
    else vx.in_first = b;
    if (c != kNil) buckets_[c].prev = b;
    else vx.in_last = b;
    append_to_bucket(b, d);
    fix_cursor(vx);
  }

  void remove_incoming(std::size_t d) {
    Direction& dir = dirs_[d];
    Vertex& vx = vertices_[head_of(d)];
    const std::int32_t b = dir.in_bucket;
    LabelBucket& bk = buckets_[b];
    if (dir.in_prev != kNil) dirs_[dir.in_prev].in_next = dir.in_next;
    else bk.first = dir.in_next;
    if (dir.in_next != kNil) dirs_[dir.in_next].in_prev = dir.in_prev;
    else bk.last = dir.in_prev;
    dir.in_prev = dir.in_next = dir.in_bucket = kNil;
    if (bk.first != kNil) return;
    if (bk.prev != kNil) buckets_[bk.prev].next = bk.next;
    else vx.in_first = bk.next;
    if (bk.next != kNil) buckets_[bk.next].prev = bk.prev;
    else vx.in_last = bk.prev;
    if (vx.cursor == b) vx.cursor = bk.next;
    free_buckets_.push_back(b);
  }

  // ---- outgoing level structure (ordered map keyed by label level) -----------

  void insert_outgoing(std::size_t d) {
    Direction& dir = dirs_[d];
    Vertex& vx = vertices_[tail_of(d)];
    auto [it, fresh] = vx.out_levels.try_emplace(dir.label_level, kNil);
    dir.out_prev = kNil;
    dir.out_next = fresh ? kNil : it->second;
    if (dir.out_next != kNil) dirs_[dir.out_next].out_prev = static_cast<std::int32_t>(d);
    it->second = static_cast<std::int32_t>(d);
  }

  void remove_outgoing(std::size_t d) {
    Direction& dir = dirs_[d];
    Vertex& vx = vertices_[tail_of(d)];
    if (dir.out_next != kNil) dirs_[dir.out_next].out_prev = dir.out_prev;
    if (dir.out_prev != kNil) {
      dirs_[dir.out_prev].out_next = dir.out_next;
    } else {
      auto it = vx.out_levels.find(dir.label_level);
      assert(it != vx.out_levels.end());
      if (dir.out_next == kNil) vx.out_levels.erase(it);
      else it->second = dir.out_next;
    }
    dir.out_prev = dir.out_next = kNil;
  }

  // ---- label and count maintenance --------------------------------------------

  // Sets d's label to its head's current load, repositioning it at both ends.
  void relabel(std::size_t d) {
    Direction& dir = dirs_[d];
    const double value = vertices_[head_of(d)].load;
    const auto lvl = static_cast<std::uint32_t>(level_of(value));
    remove_incoming(d);
    insert_incoming_at(d, value);
    dir.label = value;
    if (lvl != dir.label_level) {
      remove_outgoing(d);
      dir.label_level = lvl;
      insert_outgoing(d);
    }
  }

  // One more copy oriented along d; the head's load changes first, then the
  // shared label is set to the new head load.
  void add_copy(std::size_t d) {
    Direction& dir = dirs_[d];
    change_indegree(head_of(d), +1);
    ++total_copies_;
    if (dir.count++ == 0) {
      const double value = vertices_[head_of(d)].load;
      dir.label = value;
      dir.label_level = static_cast<std::uint32_t>(level_of(value));
      insert_incoming_at(d, value);
      insert_outgoing(d);
    } else {
      relabel(d);
    }
  }

  void remove_copy(std::size_t d) {
    Direction& dir = dirs_[d];
    assert(dir.count > 0);
    if (--dir.count == 0) {
      remove_incoming(d);
      remove_outgoing(d);
    }
    --total_copies_;
    change_indegree(head_of(d), -1);
  }

  void insert_copy(std::uint32_t p) {
    const VertexId lo = pairs_[p].lo, hi = pairs_[p].hi;
    // Orient toward the smaller load; ties go to the smaller id (lo).
    const bool into_hi = vertices_[hi].load < vertices_[lo].load;
    const std::size_t d = into_hi ? 2 * p : 2 * p + 1;
    add_copy(d);
    check_inc(head_of(d));
  }

  void erase_copy(std::uint32_t p) {
    const VertexId lo = pairs_[p].lo, hi = pairs_[p].hi;
    const std::size_t to_hi = 2 * p, to_lo = 2 * p + 1;
    std::size_t d;
    if (dirs_[to_hi].count == 0) d = to_lo;
    else if (dirs_[to_lo].count == 0) d = to_hi;
    else d = vertices_[hi].load > vertices_[lo].load ? to_hi : to_lo;
    const VertexId head = head_of(d);
    remove_copy(d);
    check_dec(head);
  }

  // Moves one copy of d to the opposite direction; the new label is the
  // new head's load after the move.
  void flip_one(std::size_t d) {
    ++counters_.flips;
    remove_copy(d);
    add_copy(d ^ 1);
  }

  void check_inc(VertexId v) {
    std::uint64_t depth = 0;
    for (;;) {
      ++counters_.inc_calls;
      counters_.max_inc_depth = std::max(counters_.max_inc_depth, ++depth);
      bool recurse = false;
      for (std::uint64_t i = 0; i < loop_budget_; ++i) {
        const Vertex& vx = vertices_[v];
        if (vx.in_first == kNil) return;
        const auto d = static_cast<std::size_t>(buckets_[vx.in_first].first);
        ++counters_.inc_arcs;
        const std::size_t lv_v = vx.level;
        if (lv_v < dirs_[d].label_level + 2) return;
        const VertexId u = tail_of(d);
        if (vertices_[u].level + 2 <= lv_v) {
          flip_one(d);
          v = u;
          recurse = true;
          break;
        }
        ++counters_.label_resets;
        relabel(d);
      }
      if (!recurse) return;
    }
  }

  void check_dec(VertexId u) {
    std::uint64_t depth = 0;
    for (;;) {
      ++counters_.dec_calls;
      counters_.max_dec_depth = std::max(counters_.max_dec_depth, ++depth);
      const Vertex& ux = vertices_[u];
      if (!ux.out_levels.empty()) {
        const auto top = std::prev(ux.out_levels.end());
        if (ux.level + 3 <= top->first) {
          const auto d = static_cast<std::size_t>(top->second);
          const VertexId v = head_of(d);
          flip_one(d);
          u = v;
          continue;
        }
      }
      for (std::uint64_t i = 0; i < loop_budget_; ++i) {
        const Vertex& vx = vertices_[u];
        if (vx.in_last == kNil) return;
        const auto d = static_cast<std::size_t>(buckets_[vx.in_last].first);
        ++counters_.dec_arcs;
        if (dirs_[d].label_level < vx.level + 2) return;
        ++counters_.label_resets;
        relabel(d);
      }
      return;
    }
  }

  EngineConfig config_;
  LevelParams levels_;
  double alpha_ = 0.0;
  double log_nw_ = 1.0;
  double max_weight_ = 1.0;
  std::uint64_t loop_budget_ = 1;
  std::uint64_t total_copies_ = 0;

  std::vector<Vertex> vertices_;
  std::vector<ArcPair> pairs_;
  std::vector<Direction> dirs_;
  std::unordered_map<std::uint64_t, std::uint32_t> pair_index_;
  std::vector<LabelBucket> buckets_;
  std::vector<std::int32_t> free_buckets_;

  std::vector<std::int32_t> layer_head_;
  std::vector<double> layer_weight_;
  std::vector<std::size_t> layer_size_;
  std::size_t top_layer_ = 0;

  EngineCounters counters_;
};

}  // namespace dyndsg
