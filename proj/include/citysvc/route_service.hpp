#pragma once

#include <string>
#include <vector>

#include "citysvc/city_model.hpp"
#include "citysvc/geo_service.hpp"
#include "citysvc/incident_service.hpp"

namespace citysvc {

struct RouteRequest {
  std::string origin;
  std::string destination;
  TimestampMs t = 0;
  int k = 3;
};

struct RecommendedRoute {
  Route route;
  // Ids of active incidents within the influence radius of any route edge.
  std::vector<std::string> incidents;
  // True when at least one edge of the route carries a penalty.
  bool penalized = false;

  friend bool operator==(const RecommendedRoute&, const RecommendedRoute&) = default;
};

struct RouteRecommendation {
  bool reachable = false;
  std::vector<RecommendedRoute> routes;
};

struct IncidentInfluence {
  double block_radius = 60.0;    // meters
  double penalty_factor = 5.0;   // applied to non-closure incidents
};

// Edges whose closest point lies within block_radius of an incident are
// penalized by `penalty_factor`; road closures exclude them instead.
EdgeWeighting incident_penalties(const CityGraph& graph, const std::vector<Incident>& incidents,
                                 const IncidentInfluence& influence = {});

// Incident-aware alternatives for one request. Stateless.
RouteRecommendation recommend(const RouteRequest& request, const CityGraph& graph,
                              const IncidentStore& incidents,
                              const IncidentInfluence& influence = {});

}  // namespace citysvc
