#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citysvc/city_model.hpp"

namespace citysvc {

struct Route {
  std::vector<std::string> nodes;
  std::vector<std::string> edges;
  double total_cost = 0.0;
  double total_length = 0.0;

  friend bool operator==(const Route&, const Route&) = default;
};

/// Per-edge cost model: cost(e) = base(e) * penalty(e).
///
/// Base defaults to the segment length. A penalty of +infinity (see
/// `kBlocked`) removes the edge from routing altogether.
class EdgeWeighting {
 public:
  static constexpr double kBlocked = std::numeric_limits<double>::infinity();

  EdgeWeighting() = default;

  // Overrides the base cost; must be finite and > 0.
  void set_base(const std::string& edge_id, double cost);
  // Factor must be >= 1 (or kBlocked). Penalties on the same edge keep the max.
  void add_penalty(const std::string& edge_id, double factor);
  void block(const std::string& edge_id) { add_penalty(edge_id, kBlocked); }

  double factor(const std::string& edge_id) const;
  bool is_blocked(const std::string& edge_id) const;
  bool is_identity() const { return base_.empty() && penalties_.empty(); }

  // +infinity for blocked edges.
  double cost(const CityGraph& graph, std::size_t edge) const;

  const std::map<std::string, double>& penalties() const { return penalties_; }
  const std::map<std::string, double>& bases() const { return base_; }

 private:
  std::map<std::string, double> base_;
  std::map<std::string, double> penalties_;
};

// Minimum-cost route honoring edge direction. Among equal-cost predecessors
// the smaller node id wins (then the smaller edge id). Returns nullopt when
// the destination is unreachable. Throws NotFoundError for unknown nodes.
std::optional<Route> shortest_path(const CityGraph& graph, const std::string& origin,
                                   const std::string& destination,
                                   const EdgeWeighting& weighting = {});

// Up to k loopless routes in nondecreasing cost, pairwise distinct edge
// sequences, found by Yen's deviation search. The first element equals
// shortest_path(). Throws ValidationError for k < 1.
std::vector<Route> k_alternative_paths(const CityGraph& graph, const std::string& origin,
                                       const std::string& destination, int k,
                                       const EdgeWeighting& weighting = {});

double walking_distance(Coordinate a, Coordinate b);

}  // namespace citysvc
