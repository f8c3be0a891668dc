#pragma once

#include <random>
#include <string>
#include <vector>

#include "citysvc/city_model.hpp"
#include "citysvc/config.hpp"
#include "citysvc/geo_service.hpp"
#include "oracles.hpp"

namespace fixture {

inline std::string data_path(const std::string& relative) {
  return std::string(CITYSVC_DATA_DIR) + "/" + relative;
}

inline const citysvc::CityGraph& toy_map() {
  static const citysvc::CityGraph graph = citysvc::load_city_file(data_path("maps/tandil_toy.json"));
  return graph;
}

// A(0,0) B(1,0) C(1,1) D(0,1), four undirected unit sides.
inline citysvc::CityGraph unit_square() {
  using citysvc::Coordinate;
  std::vector<citysvc::Node> nodes{
      {"A", Coordinate{0, 0}}, {"B", Coordinate{1, 0}}, {"C", Coordinate{1, 1}}, {"D", Coordinate{0, 1}}};
  std::vector<citysvc::StreetSegment> edges{{"AB", "A", "B", "s", 0.0, false},
                                            {"BC", "B", "C", "s", 0.0, false},
                                            {"CD", "C", "D", "s", 0.0, false},
                                            {"DA", "D", "A", "s", 0.0, false}};
  return citysvc::CityGraph(std::move(nodes), std::move(edges), {}, {});
}

// Random street graph with up to `max_nodes` nodes and random edge costs.
struct RandomGraph {
  citysvc::CityGraph graph;
  citysvc::EdgeWeighting weighting;
  std::vector<oracle::WeightedEdge> oracle_edges;
};

inline RandomGraph random_graph(std::mt19937_64& rng, int max_nodes) {
  std::uniform_int_distribution<int> node_count(2, max_nodes);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = node_count(rng);
  std::vector<citysvc::Node> nodes;
  for (int i = 0; i < n; ++i) {
    nodes.push_back({"v" + std::to_string(i), citysvc::Coordinate{coord(rng), coord(rng)}});
  }
  const double density = 0.2 + 0.4 * unit(rng);
  std::vector<citysvc::StreetSegment> edges;
  citysvc::EdgeWeighting weighting;
  std::vector<oracle::WeightedEdge> oracle_edges;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b || unit(rng) > density / 2.0) continue;
      const bool directed = unit(rng) < 0.5;
      const std::string id = "e" + std::to_string(edges.size());
      edges.push_back({id, nodes[a].id, nodes[b].id, "s", 0.0, directed});
      const double cost = 1.0 + 99.0 * unit(rng);
      weighting.set_base(id, cost);
      double factor = 1.0;
      const double roll = unit(rng);
      if (roll < 0.1) {
        factor = citysvc::EdgeWeighting::kBlocked;
      } else if (roll < 0.3) {
        factor = 1.0 + 4.0 * unit(rng);
      }
      if (factor != 1.0) weighting.add_penalty(id, factor);
      oracle_edges.push_back({id, nodes[a].id, nodes[b].id, directed,
                              std::isinf(factor) ? factor : cost * factor});
    }
  }
  citysvc::CityGraph graph(std::move(nodes), std::move(edges), {}, {});
  return RandomGraph{std::move(graph), std::move(weighting), std::move(oracle_edges)};
}

inline std::vector<oracle::WeightedEdge> plain_edges(const citysvc::CityGraph& graph,
                                                     const citysvc::EdgeWeighting& weighting = {}) {
  std::vector<oracle::WeightedEdge> out;
  for (std::size_t e = 0; e < graph.edges().size(); ++e) {
    const auto& s = graph.edges()[e];
    out.push_back({s.id, s.from, s.to, s.directed, weighting.cost(graph, e)});
  }
  return out;
}

}  // namespace fixture
