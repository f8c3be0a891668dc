#include "citysvc/route_service.hpp"

#include <algorithm>

#include "citysvc/errors.hpp"

namespace citysvc {

namespace {

bool near_edge(const CityGraph& graph, std::size_t edge, Coordinate point, double radius) {
  return point_segment_distance(point, graph.edge_start(edge), graph.edge_end(edge)) <= radius;
}

void check_influence(const IncidentInfluence& influence) {
  if (!(influence.penalty_factor >= 1.0)) throw ValidationError("penalty factor must be >= 1");
  if (!(influence.block_radius >= 0.0)) throw ValidationError("block radius must be >= 0");
}

}  // namespace

EdgeWeighting incident_penalties(const CityGraph& graph, const std::vector<Incident>& incidents,
                                 const IncidentInfluence& influence) {
  check_influence(influence);
  EdgeWeighting weighting;
  for (const auto& incident : incidents) {
    const double factor = incident.category == Label::road_closure ? EdgeWeighting::kBlocked
                                                                   : influence.penalty_factor;
    if (factor == 1.0) continue;
    for (std::size_t e = 0; e < graph.edges().size(); ++e) {
      if (near_edge(graph, e, incident.location, influence.block_radius)) {
        weighting.add_penalty(graph.edges()[e].id, factor);
      }
    }
  }
  return weighting;
}

RouteRecommendation recommend(const RouteRequest& request, const CityGraph& graph,
                              const IncidentStore& incidents, const IncidentInfluence& influence) {
  if (request.k < 1) throw ValidationError("k must be >= 1");
  const auto active = incidents.active(request.t);
  const auto weighting = incident_penalties(graph, active, influence);

  RouteRecommendation out;
  for (auto& route :
       k_alternative_paths(graph, request.origin, request.destination, request.k, weighting)) {
    RecommendedRoute annotated;
    for (const auto& edge_id : route.edges) {
      if (weighting.factor(edge_id) > 1.0) annotated.penalized = true;
    }
    for (const auto& incident : active) {
      const bool touches = std::any_of(route.edges.begin(), route.edges.end(), [&](const auto& id) {
        return near_edge(graph, *graph.edge_index(id), incident.location, influence.block_radius);
      });
      if (touches) annotated.incidents.push_back(incident.id);
    }
    annotated.route = std::move(route);
    out.routes.push_back(std::move(annotated));
  }
  out.reachable = !out.routes.empty();
  return out;
}

}  // namespace citysvc
