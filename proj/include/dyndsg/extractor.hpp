#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dyndsg/engine.hpp"
#include "dyndsg/error.hpp"

namespace dyndsg {

// Level slack used when testing a cut; matches the engine's arc level gap.
inline constexpr std::size_t kExtractionSlack = 7;

struct ExtractionResult {
  std::vector<VertexId> vertices;
  double certified_density = 0.0;  // exact |E(S)| / w(S) on logical edges
  double estimate_upper = 0.0;     // max load / D
  std::size_t prefix_level = 0;    // vertices with level >= this were taken
  bool valid = true;               // false when a thresholded engine is saturated
};

/// Exact induced density of `vertices`: logical edges (stored copies / D)
/// with both endpoints inside, over their total weight.
inline double induced_density(const OrientationEngine& engine, const std::vector<VertexId>& vertices) {
  if (vertices.empty()) throw Error("induced_density of an empty set");
  std::vector<char> inside(engine.vertex_count(), 0);
  double weight = 0.0;
  for (VertexId v : vertices) {
    if (v >= engine.vertex_count()) throw Error("unknown vertex " + std::to_string(v));
    if (inside[v]) continue;
    inside[v] = 1;
    weight += engine.weight(v);
  }
  std::uint64_t twice = 0;
  for (VertexId v = 0; v < engine.vertex_count(); ++v) {
    if (!inside[v]) continue;
    engine.for_each_neighbor(v, [&](VertexId w, std::uint64_t c) {
      if (inside[w]) twice += c;
    });
  }
  const double logical = static_cast<double>(twice / 2) / static_cast<double>(engine.duplication());
  return logical / weight;
}

/// Reads an approximate densest subgraph off the layer index.
///
/// Candidate sets are the prefixes "all vertices at level >= c". A cut is
/// admissible when extending it by `slack` further levels multiplies its
/// weight by at most (1 + epsilon)^slack; among admissible cuts the one with
/// the largest exactly recomputed density wins. All prefix densities are
/// computed in one incremental pass over the adjacency of the added vertices.
inline ExtractionResult extract(const OrientationEngine& engine, double epsilon,
                                std::size_t slack = kExtractionSlack) {
  ExtractionResult result;
  result.valid = !engine.saturated();
  result.estimate_upper = engine.max_load() / static_cast<double>(engine.duplication());
  if (engine.total_copies() == 0) return result;

  struct Group {
    std::size_t level;
    std::size_t begin, end;  // range in `order`
    double weight_through;   // cumulative weight of groups[0..this]
    std::uint64_t copies_through;
  };
  std::vector<VertexId> order;
  std::vector<Group> groups;
  std::vector<char> inside(engine.vertex_count(), 0);
  double weight = 0.0;
  std::uint64_t copies = 0;
  for (std::size_t lvl = engine.top_layer() + 1; lvl-- > 0;) {
    if (engine.layer_size(lvl) == 0) continue;
    Group g{lvl, order.size(), 0, 0.0, 0};
    engine.for_each_in_layer(lvl, [&](VertexId v) {
      order.push_back(v);
      inside[v] = 1;
      weight += engine.weight(v);
      engine.for_each_neighbor(v, [&](VertexId w, std::uint64_t c) {
        // counted once, when the later endpoint arrives
        if (inside[w] && w != v) copies += c;
      });
    });
    g.end = order.size();
    g.weight_through = weight;
    g.copies_through = copies;
    groups.push_back(g);
  }

  const double growth = std::pow(1.0 + epsilon, static_cast<double>(slack));
  const double dup = static_cast<double>(engine.duplication());
  std::size_t best = groups.size();
  double best_density = -1.0;
  std::size_t ext = 0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const std::size_t floor_level = groups[j].level > slack ? groups[j].level - slack : 0;
    if (ext < j) ext = j;
    while (ext + 1 < groups.size() && groups[ext + 1].level >= floor_level) ++ext;
    const bool admissible = groups[ext].weight_through <= growth * groups[j].weight_through * (1.0 + 1e-12);
    if (!admissible) continue;
    const double density = static_cast<double>(groups[j].copies_through) / dup / groups[j].weight_through;
    if (density > best_density) {
      best_density = density;
      best = j;
    }
  }
  // The full vertex set is always admissible, so `best` is set.
  result.vertices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(groups[best].end));
  result.certified_density = best_density;
  result.prefix_level = groups[best].level;
  return result;
}

}  // namespace dyndsg
