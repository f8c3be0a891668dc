#include "citysvc/geo_service.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <tuple>

#include "citysvc/errors.hpp"

namespace citysvc {

void EdgeWeighting::set_base(const std::string& edge_id, double cost) {
  if (!std::isfinite(cost) || cost <= 0.0) {
    throw ValidationError("base cost of edge '" + edge_id + "' must be finite and positive");
  }
  base_[edge_id] = cost;
}

void EdgeWeighting::add_penalty(const std::string& edge_id, double factor) {
  if (std::isnan(factor) || factor < 1.0) {
    throw ValidationError("penalty factor of edge '" + edge_id + "' must be >= 1");
  }
  auto [it, inserted] = penalties_.try_emplace(edge_id, factor);
  if (!inserted) it->second = std::max(it->second, factor);
}

double EdgeWeighting::factor(const std::string& edge_id) const {
  auto it = penalties_.find(edge_id);
  return it == penalties_.end() ? 1.0 : it->second;
}

bool EdgeWeighting::is_blocked(const std::string& edge_id) const {
  return std::isinf(factor(edge_id));
}

double EdgeWeighting::cost(const CityGraph& graph, std::size_t edge) const {
  const auto& segment = graph.edges()[edge];
  double base = segment.length;
  if (auto it = base_.find(segment.id); it != base_.end()) base = it->second;
  const double f = factor(segment.id);
  return std::isinf(f) ? kBlocked : base * f;
}

namespace {

struct IndexPath {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> edges;
  double cost = 0.0;
};

bool nearly_equal(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

double path_cost(const std::vector<std::size_t>& edges, const std::vector<double>& costs) {
  double total = 0.0;
  for (auto e : edges) total += costs[e];
  return total;
}

class Router {
 public:
  Router(const CityGraph& graph, const EdgeWeighting& weighting) : graph_(graph) {
    costs_.resize(graph.edges().size());
    for (std::size_t e = 0; e < costs_.size(); ++e) costs_[e] = weighting.cost(graph, e);
  }

  const std::vector<double>& costs() const { return costs_; }

  std::optional<IndexPath> dijkstra(std::size_t source, std::size_t target,
                                    const std::vector<bool>& node_removed,
                                    const std::vector<bool>& edge_removed) const {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    const std::size_t n = graph_.nodes().size();
    std::vector<double> dist(n, kInf);
    std::vector<std::size_t> pred_node(n, kNone);
    std::vector<std::size_t> pred_edge(n, kNone);
    std::vector<bool> done(n, false);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      if (done[u]) continue;
      done[u] = true;
      if (u == target) break;
      for (const auto& arc : graph_.out_arcs(u)) {
        const double w = costs_[arc.edge];
        if (std::isinf(w) || edge_removed[arc.edge] || node_removed[arc.to] || done[arc.to]) {
          continue;
        }
        const double nd = d + w;
        const std::size_t v = arc.to;
        if (nd < dist[v] && !nearly_equal(nd, dist[v])) {
          dist[v] = nd;
          pred_node[v] = u;
          pred_edge[v] = arc.edge;
          queue.emplace(nd, v);
        } else if (nearly_equal(nd, dist[v]) &&
                   std::tie(u, arc.edge) < std::tie(pred_node[v], pred_edge[v])) {
          pred_node[v] = u;
          pred_edge[v] = arc.edge;
        }
      }
    }
    if (!done[target]) return std::nullopt;
    IndexPath path;
    for (std::size_t v = target; v != source; v = pred_node[v]) {
      path.nodes.push_back(v);
      path.edges.push_back(pred_edge[v]);
    }
    path.nodes.push_back(source);
    std::reverse(path.nodes.begin(), path.nodes.end());
    std::reverse(path.edges.begin(), path.edges.end());
    path.cost = path_cost(path.edges, costs_);
    return path;
  }

  Route to_route(const IndexPath& path) const {
    Route route;
    for (auto v : path.nodes) route.nodes.push_back(graph_.nodes()[v].id);
    for (auto e : path.edges) {
      route.edges.push_back(graph_.edges()[e].id);
      route.total_length += graph_.edges()[e].length;
    }
    route.total_cost = path.cost;
    return route;
  }

 private:
  const CityGraph& graph_;
  std::vector<double> costs_;
};

std::size_t require_node(const CityGraph& graph, const std::string& id) {
  auto index = graph.node_index(id);
  if (!index) throw NotFoundError("node", id);
  return *index;
}

struct CandidateOrder {
  bool operator()(const IndexPath& a, const IndexPath& b) const {
    if (!nearly_equal(a.cost, b.cost)) return a.cost < b.cost;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    return a.edges < b.edges;
  }
};

}  // namespace

std::optional<Route> shortest_path(const CityGraph& graph, const std::string& origin,
                                   const std::string& destination,
                                   const EdgeWeighting& weighting) {
  const auto source = require_node(graph, origin);
  const auto target = require_node(graph, destination);
  Router router(graph, weighting);
  const std::vector<bool> no_nodes(graph.nodes().size(), false);
  const std::vector<bool> no_edges(graph.edges().size(), false);
  auto path = router.dijkstra(source, target, no_nodes, no_edges);
  if (!path) return std::nullopt;
  return router.to_route(*path);
}

std::vector<Route> k_alternative_paths(const CityGraph& graph, const std::string& origin,
                                       const std::string& destination, int k,
                                       const EdgeWeighting& weighting) {
  if (k < 1) throw ValidationError("k must be >= 1");
  const auto source = require_node(graph, origin);
  const auto target = require_node(graph, destination);
  Router router(graph, weighting);
  const auto& costs = router.costs();

  std::vector<bool> node_removed(graph.nodes().size(), false);
  std::vector<bool> edge_removed(graph.edges().size(), false);
  auto first = router.dijkstra(source, target, node_removed, edge_removed);
  if (!first) return {};

  std::vector<IndexPath> accepted{*first};
  std::set<std::vector<std::size_t>> seen{first->edges};
  std::set<IndexPath, CandidateOrder> candidates;

  while (static_cast<int>(accepted.size()) < k) {
    const IndexPath previous = accepted.back();
    for (std::size_t i = 0; i + 1 < previous.nodes.size(); ++i) {
      const std::size_t spur = previous.nodes[i];
      std::fill(node_removed.begin(), node_removed.end(), false);
      std::fill(edge_removed.begin(), edge_removed.end(), false);
      for (const auto& path : accepted) {
        if (path.edges.size() > i &&
            std::equal(previous.edges.begin(), previous.edges.begin() + static_cast<std::ptrdiff_t>(i),
                       path.edges.begin())) {
          edge_removed[path.edges[i]] = true;
        }
      }
      for (std::size_t j = 0; j < i; ++j) node_removed[previous.nodes[j]] = true;

      auto spur_path = router.dijkstra(spur, target, node_removed, edge_removed);
      if (!spur_path) continue;
      IndexPath candidate;
      candidate.nodes.assign(previous.nodes.begin(), previous.nodes.begin() + static_cast<std::ptrdiff_t>(i));
      candidate.nodes.insert(candidate.nodes.end(), spur_path->nodes.begin(), spur_path->nodes.end());
      candidate.edges.assign(previous.edges.begin(), previous.edges.begin() + static_cast<std::ptrdiff_t>(i));
      candidate.edges.insert(candidate.edges.end(), spur_path->edges.begin(), spur_path->edges.end());
      candidate.cost = path_cost(candidate.edges, costs);
      if (seen.insert(candidate.edges).second) candidates.insert(std::move(candidate));
    }
    if (candidates.empty()) break;
    accepted.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }

  std::vector<Route> routes;
  routes.reserve(accepted.size());
  for (const auto& path : accepted) routes.push_back(router.to_route(path));
  return routes;
}

double walking_distance(Coordinate a, Coordinate b) { return distance(a, b); }

}  // namespace citysvc
