#pragma once

// Stream replay, oracle verification and cost benchmarking on top of the
// reducer and the single-engine solver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dyndsg/engine.hpp"
#include "dyndsg/error.hpp"
#include "dyndsg/extractor.hpp"
#include "dyndsg/oracle.hpp"
#include "dyndsg/reducer.hpp"

namespace dyndsg {

enum class StreamMode { kDdsg, kVwdsg };

struct StreamHeader {
  std::size_t n = 0;
  StreamMode mode = StreamMode::kDdsg;
  double epsilon = 0.1;
};

struct UpdateEvent {
  enum class Kind { kInsert, kDelete, kQuery };
  Kind kind = Kind::kQuery;
  VertexId u = 0;
  VertexId v = 0;
  std::size_t line = 0;

  friend bool operator==(const UpdateEvent&, const UpdateEvent&) = default;
};

struct ParsedStream {
  StreamHeader header;
  std::vector<double> weights;  // vwdsg mode; defaults to 1
  std::vector<UpdateEvent> events;
};

namespace detail {

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& what) {
  throw Error("line " + std::to_string(line) + ": " + what);
}

inline VertexId parse_vertex(const std::string& tok, std::size_t n, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (tok.empty() || tok[0] == '-' || tok[0] == '+') throw std::invalid_argument(tok);
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(line, "bad vertex id '" + tok + "'");
  }
  if (pos != tok.size()) parse_fail(line, "bad vertex id '" + tok + "'");
  if (v >= n) parse_fail(line, "vertex id " + tok + " out of range");
  return static_cast<VertexId>(v);
}

inline double parse_real(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(line, "bad number '" + tok + "'");
  }
  if (pos != tok.size() || !std::isfinite(x)) parse_fail(line, "bad number '" + tok + "'");
  return x;
}

}  // namespace detail

/// Parses the line-oriented update stream:
///
///   h <n> <ddsg|vwdsg> <epsilon>
///   w <v> <weight>        (vwdsg only, before the first update)
///   + <u> <v>
///   - <u> <v>
///   ?
inline ParsedStream parse_stream(std::istream& in) {
  ParsedStream out;
  bool have_header = false;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& op = tok[0];
    if (!have_header) {
      if (op != "h" || tok.size() != 4) detail::parse_fail(line, "expected header 'h <n> <ddsg|vwdsg> <epsilon>'");
      const double n = detail::parse_real(tok[1], line);
      if (n < 1 || n != std::floor(n) || n > 1e9) detail::parse_fail(line, "bad vertex count");
      out.header.n = static_cast<std::size_t>(n);
      if (tok[2] == "ddsg") out.header.mode = StreamMode::kDdsg;
      else if (tok[2] == "vwdsg") out.header.mode = StreamMode::kVwdsg;
      else detail::parse_fail(line, "unknown mode '" + tok[2] + "'");
      out.header.epsilon = detail::parse_real(tok[3], line);
      if (!(out.header.epsilon > 0.0 && out.header.epsilon < 1.0)) detail::parse_fail(line, "epsilon must lie in (0,1)");
      out.weights.assign(out.header.n, 1.0);
      have_header = true;
      continue;
    }
    const std::size_t n = out.header.n;
    if (op == "w") {
      if (out.header.mode != StreamMode::kVwdsg) detail::parse_fail(line, "weight lines need vwdsg mode");
      if (!out.events.empty()) detail::parse_fail(line, "weight lines must precede updates");
      if (tok.size() != 3) detail::parse_fail(line, "expected 'w <v> <weight>'");
      const VertexId v = detail::parse_vertex(tok[1], n, line);
      const double w = detail::parse_real(tok[2], line);
      if (!(w > 0.0)) detail::parse_fail(line, "weights must be positive");
      out.weights[v] = w;
    } else if (op == "+" || op == "-") {
      if (tok.size() != 3) detail::parse_fail(line, "expected '" + op + " <u> <v>'");
      UpdateEvent e;
      e.kind = op == "+" ? UpdateEvent::Kind::kInsert : UpdateEvent::Kind::kDelete;
      e.u = detail::parse_vertex(tok[1], n, line);
      e.v = detail::parse_vertex(tok[2], n, line);
      e.line = line;
      if (e.u == e.v) detail::parse_fail(line, "self-loop");
      out.events.push_back(e);
    } else if (op == "?") {
      if (tok.size() != 1) detail::parse_fail(line, "trailing tokens after '?'");
      out.events.push_back(UpdateEvent{UpdateEvent::Kind::kQuery, 0, 0, line});
    } else {
      detail::parse_fail(line, "unknown record '" + op + "'");
    }
  }
  if (!have_header) throw Error("line " + std::to_string(line + 1) + ": missing header");
  return out;
}

inline ParsedStream parse_stream(const std::string& text) {
  std::istringstream in(text);
  return parse_stream(in);
}

struct RunConfig {
  ReducerConfig reducer;          // epsilon is taken from the stream header
  std::optional<double> epsilon;  // overrides the header when set
  bool timings = false;
  double verify_cq = 8.0;
};

struct QueryRecord {
  std::size_t event = 0;
  double estimate = 0.0;
  double upper = 0.0;
  std::vector<VertexId> sources;
  std::vector<VertexId> sinks;
  std::optional<double> winning_t;
  std::string regime;
};

struct RunReport {
  std::vector<QueryRecord> queries;
  EngineCounters counters;
  std::size_t inserts = 0, deletes = 0;
  std::optional<double> update_seconds, query_seconds;
};

/// A stream solver: the reducer for directed streams, or one unthresholded
/// engine for vertex-weighted undirected streams (weights rescaled so the
/// smallest is 1, densities scaled back on output).
class Session {
 public:
  Session(const ParsedStream& stream, const RunConfig& config) : mode_(stream.header.mode) {
    ReducerConfig rc = config.reducer;
    rc.epsilon = config.epsilon.value_or(stream.header.epsilon);
    epsilon_ = rc.epsilon;
    if (mode_ == StreamMode::kDdsg) {
      solver_.emplace<DdsgReducer>(stream.header.n, rc);
      return;
    }
    weights_ = stream.weights;
    min_weight_ = *std::min_element(weights_.begin(), weights_.end());
    std::vector<double> normalized(weights_.size());
    double max_w = 1.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      normalized[i] = weights_[i] == min_weight_ ? 1.0 : weights_[i] / min_weight_;
      max_w = std::max(max_w, normalized[i]);
    }
    const double lg = std::max(1.0, std::log2(static_cast<double>(weights_.size()) * max_w));
    EngineConfig ec;
    ec.epsilon = rc.epsilon;
    ec.alpha_c = rc.alpha_c;
    ec.loop_c = rc.loop_c;
    ec.duplication = static_cast<std::uint64_t>(std::ceil(rc.dup_c * lg / (rc.epsilon * rc.epsilon)));
    ec.edge_capacity = rc.edge_capacity;
    solver_.emplace<OrientationEngine>(normalized, ec);
  }

  StreamMode mode() const { return mode_; }
  double epsilon() const { return epsilon_; }

  void apply(const UpdateEvent& e) {
    if (auto* r = std::get_if<DdsgReducer>(&solver_)) {
      if (e.kind == UpdateEvent::Kind::kInsert) r->insert_directed(e.u, e.v);
      else r->delete_directed(e.u, e.v);
      return;
    }
    auto& eng = std::get<OrientationEngine>(solver_);
    const std::pair<VertexId, VertexId> key{std::min(e.u, e.v), std::max(e.u, e.v)};
    if (e.kind == UpdateEvent::Kind::kInsert) {
      eng.insert(e.u, e.v, eng.duplication());
      ++edges_[key];
    } else {
      const auto it = edges_.find(key);
      if (it == edges_.end()) throw Error("delete of absent edge");
      eng.erase(e.u, e.v, eng.duplication());
      if (--it->second == 0) edges_.erase(it);
    }
  }

  QueryRecord query() const {
    QueryRecord q;
    if (const auto* r = std::get_if<DdsgReducer>(&solver_)) {
      auto res = r->query();
      q.estimate = res.density_estimate;
      q.sources = std::move(res.sources);
      q.sinks = std::move(res.sinks);
      if (!q.sources.empty()) {
        q.winning_t = res.winning_t;
        q.regime = to_string(res.regime);
      } else {
        q.regime = "none";
      }
      return q;
    }
    const auto& eng = std::get<OrientationEngine>(solver_);
    auto ex = extract(eng, epsilon_);
    std::sort(ex.vertices.begin(), ex.vertices.end());
    q.estimate = ex.certified_density / min_weight_;
    q.upper = ex.estimate_upper / min_weight_;
    q.sources = std::move(ex.vertices);
    q.regime = "vwdsg";
    return q;
  }

  /// Exact optimum of the current graph (small instances only).
  double oracle_optimum() const {
    if (const auto* r = std::get_if<DdsgReducer>(&solver_)) {
      oracle::DirectedGraph g;
      g.n = r->vertex_count();
      for (const auto& [arc, c] : r->arcs()) g.edges.push_back({arc.first, arc.second, c});
      return oracle::exact_ddsg(g).density();
    }
    std::vector<oracle::Edge> edges;
    for (const auto& [key, c] : edges_) edges.push_back({key.first, key.second, c});
    return oracle::exact_vwdsg_real(weights_, edges);
  }

  std::size_t oracle_cap() const {
    return mode_ == StreamMode::kDdsg ? oracle::kDirectedCap : oracle::kUndirectedCap;
  }

  template <class F>
  void for_each_engine(F&& f) const {
    if (const auto* r = std::get_if<DdsgReducer>(&solver_)) {
      for (std::size_t i = 0; i < r->grid_size(); ++i) {
        f(r->instance(i).low);
        f(r->instance(i).high);
      }
      return;
    }
    f(std::get<OrientationEngine>(solver_));
  }

  EngineCounters counters() const {
    EngineCounters c;
    for_each_engine([&](const OrientationEngine& e) { c += e.counters(); });
    return c;
  }

 private:
  StreamMode mode_;
  double epsilon_ = 0.1;
  std::variant<std::monostate, DdsgReducer, OrientationEngine> solver_;
  std::vector<double> weights_;
  double min_weight_ = 1.0;
  std::map<std::pair<VertexId, VertexId>, std::uint64_t> edges_;
};

namespace detail {

[[noreturn]] inline void event_fail(std::size_t index, const UpdateEvent& e, const std::exception& ex) {
  throw Error("event " + std::to_string(index) + " (line " + std::to_string(e.line) + "): " + ex.what());
}

}  // namespace detail

inline RunReport run(const ParsedStream& stream, const RunConfig& config) {
  RunReport report;
  Session session(stream, config);
  using Clock = std::chrono::steady_clock;
  Clock::duration update_time{}, query_time{};
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const UpdateEvent& e = stream.events[i];
    const auto start = Clock::now();
    if (e.kind == UpdateEvent::Kind::kQuery) {
      QueryRecord q = session.query();
      q.event = i;
      report.queries.push_back(std::move(q));
      query_time += Clock::now() - start;
      continue;
    }
    try {
      session.apply(e);
    } catch (const Error& ex) {
      detail::event_fail(i, e, ex);
    }
    update_time += Clock::now() - start;
    if (e.kind == UpdateEvent::Kind::kInsert) ++report.inserts;
    else ++report.deletes;
  }
  report.counters = session.counters();
  if (config.timings) {
    report.update_seconds = std::chrono::duration<double>(update_time).count();
    report.query_seconds = std::chrono::duration<double>(query_time).count();
  }
  return report;
}

inline nlohmann::ordered_json counters_json(const EngineCounters& c) {
  nlohmann::ordered_json j;
  j["inc_calls"] = c.inc_calls;
  j["dec_calls"] = c.dec_calls;
  j["inc_arcs"] = c.inc_arcs;
  j["dec_arcs"] = c.dec_arcs;
  j["arcs_processed"] = c.inc_arcs + c.dec_arcs;
  j["flips"] = c.flips;
  j["label_resets"] = c.label_resets;
  j["max_inc_depth"] = c.max_inc_depth;
  j["max_dec_depth"] = c.max_dec_depth;
  return j;
}

inline nlohmann::ordered_json query_json(const QueryRecord& q) {
  nlohmann::ordered_json j;
  j["event"] = q.event;
  j["estimate"] = q.estimate;
  if (q.regime == "vwdsg") {
    j["upper"] = q.upper;
    j["S"] = q.sources;
  } else {
    j["S"] = q.sources;
    j["T"] = q.sinks;
    j["winning_t"] = q.winning_t ? nlohmann::ordered_json(*q.winning_t) : nlohmann::ordered_json(nullptr);
  }
  j["regime"] = q.regime;
  return j;
}

/// One JSON object per query, then a summary record.
inline std::string to_json_lines(const RunReport& r) {
  std::string out;
  for (const auto& q : r.queries) out += query_json(q).dump() + "\n";
  nlohmann::ordered_json s;
  s["summary"] = true;
  s["inserts"] = r.inserts;
  s["deletes"] = r.deletes;
  s["queries"] = r.queries.size();
  s["counters"] = counters_json(r.counters);
  if (r.update_seconds) s["update_seconds"] = *r.update_seconds;
  if (r.query_seconds) s["query_seconds"] = *r.query_seconds;
  out += s.dump() + "\n";
  return out;
}

struct VerifyReport {
  std::vector<QueryRecord> queries;
  std::vector<double> optima;
  std::size_t checked = 0;
  double worst_ratio = 1.0;
  std::size_t soundness_failures = 0;
  std::size_t invariant_violations = 0;
  std::size_t consistency_failures = 0;
  double required_ratio = 0.0;

  bool passed() const {
    return soundness_failures == 0 && invariant_violations == 0 && consistency_failures == 0 &&
           worst_ratio >= required_ratio;
  }
};

/// Replays the stream and, at every query, compares the answer with the
/// brute-force optimum and runs the full local-optimality scan on every
/// engine.
inline VerifyReport verify(const ParsedStream& stream, const RunConfig& config) {
  VerifyReport report;
  Session session(stream, config);
  if (stream.header.n > session.oracle_cap()) throw Error("stream exceeds the oracle vertex cap");
  report.required_ratio = 1.0 - config.verify_cq * session.epsilon();
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const UpdateEvent& e = stream.events[i];
    if (e.kind != UpdateEvent::Kind::kQuery) {
      try {
        session.apply(e);
      } catch (const Error& ex) {
        detail::event_fail(i, e, ex);
      }
      continue;
    }
    QueryRecord q = session.query();
    q.event = i;
    const double opt = session.oracle_optimum();
    ++report.checked;
    if (q.estimate > opt * (1.0 + 1e-9) + 1e-12) ++report.soundness_failures;
    const double ratio = opt > 0.0 ? q.estimate / opt : (q.estimate == 0.0 ? 1.0 : 0.0);
    report.worst_ratio = std::min(report.worst_ratio, ratio);
    session.for_each_engine([&](const OrientationEngine& eng) {
      report.invariant_violations += eng.verify_local_optimality().size();
      if (!eng.check_consistency().empty()) ++report.consistency_failures;
    });
    report.optima.push_back(opt);
    report.queries.push_back(std::move(q));
  }
  return report;
}

inline std::string to_json_lines(const VerifyReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.queries.size(); ++i) {
    auto j = query_json(r.queries[i]);
    j["optimum"] = r.optima[i];
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json s;
  s["summary"] = true;
  s["checked"] = r.checked;
  s["worst_ratio"] = r.worst_ratio;
  s["required_ratio"] = r.required_ratio;
  s["soundness_failures"] = r.soundness_failures;
  s["invariant_violations"] = r.invariant_violations;
  s["consistency_failures"] = r.consistency_failures;
  s["passed"] = r.passed();
  out += s.dump() + "\n";
  return out;
}

struct BenchConfig {
  std::size_t n = 200;
  std::size_t m = 10000;
  double epsilon = 0.2;
  std::uint64_t seed = 1;
  EngineConfig engine;  // epsilon is overwritten
};

struct BenchReport {
  std::size_t n = 0, m = 0;
  double alpha = 0.0;
  double log_nw = 0.0;
  std::uint64_t loop_budget = 0;
  std::size_t level_count = 0;
  EngineCounters insert_phase;
  EngineCounters delete_phase;
  double insert_seconds = 0.0, delete_seconds = 0.0;

  double insert_arcs_per_op() const { return static_cast<double>(insert_phase.inc_arcs) / static_cast<double>(m); }
  double delete_arcs_per_op() const {
    return static_cast<double>(delete_phase.inc_arcs + delete_phase.dec_arcs) / static_cast<double>(m);
  }
};

/// m uniformly random insertions (repeats allowed) into an unweighted
/// engine on n vertices, then deletion of all of them in shuffled order.
inline BenchReport run_bench(const BenchConfig& cfg) {
  if (cfg.n < 2) throw Error("bench needs n >= 2");
  EngineConfig ec = cfg.engine;
  ec.epsilon = cfg.epsilon;
  OrientationEngine eng(std::vector<double>(cfg.n, 1.0), ec);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::pair<VertexId, VertexId>> edges;
  edges.reserve(cfg.m);
  while (edges.size() < cfg.m) {
    const auto a = static_cast<VertexId>(rng() % cfg.n);
    const auto b = static_cast<VertexId>(rng() % cfg.n);
    if (a != b) edges.emplace_back(a, b);
  }
  BenchReport rep;
  rep.n = cfg.n;
  rep.m = cfg.m;
  rep.alpha = eng.alpha();
  rep.log_nw = eng.log_nw();
  rep.loop_budget = eng.loop_budget();
  rep.level_count = eng.levels().level_count();
  using Clock = std::chrono::steady_clock;
  auto start = Clock::now();
  for (const auto& [a, b] : edges) eng.insert(a, b);
  rep.insert_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  rep.insert_phase = eng.counters();
  eng.reset_counters();
  for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[rng() % i]);
  start = Clock::now();
  for (const auto& [a, b] : edges) eng.erase(a, b);
  rep.delete_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  rep.delete_phase = eng.counters();
  return rep;
}

inline std::string to_json(const BenchReport& r, bool timings) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["m"] = r.m;
  j["alpha"] = r.alpha;
  j["log_nw"] = r.log_nw;
  j["loop_budget"] = r.loop_budget;
  j["levels"] = r.level_count;
  j["insert"] = counters_json(r.insert_phase);
  j["delete"] = counters_json(r.delete_phase);
  j["insert_arcs_per_op"] = r.insert_arcs_per_op();
  j["delete_arcs_per_op"] = r.delete_arcs_per_op();
  if (timings) {
    j["insert_seconds"] = r.insert_seconds;
    j["delete_seconds"] = r.delete_seconds;
  }
  return j.dump() + "\n";
}

}  // namespace dyndsg
