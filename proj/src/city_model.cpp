#include "citysvc/city_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "citysvc/errors.hpp"
#include "citysvc/text.hpp"

namespace citysvc {

namespace {

constexpr double kEarthRadius = 6371008.8;
constexpr double kLengthTolerance = 0.01;
constexpr double kBoundsMargin = 1000.0;

template <typename T>
void sort_by_id(std::vector<T>& items) {
  std::sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.id < b.id; });
}

template <typename T>
std::optional<std::size_t> index_of(const std::vector<T>& sorted, std::string_view id) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), id,
                             [](const T& item, std::string_view key) { return item.id < key; });
  if (it == sorted.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - sorted.begin());
}

template <typename T>
void reject_duplicates(const std::vector<T>& sorted, const char* what) {
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].id == sorted[i - 1].id) {
      throw LoadError(std::string("duplicate ") + what + " id '" + sorted[i].id + "'",
                      sorted[i].id);
    }
  }
}

void check_spans(const Block& block, const std::vector<Span>& spans, const char* what) {
  for (const auto& span : spans) {
    const bool ok = std::isfinite(span.start) && std::isfinite(span.end) && span.start >= 0.0 &&
                    span.start <= span.end && span.end <= block.usable_length;
    if (!ok) {
      throw LoadError("block '" + block.id + "' has " + what + " span [" +
                          std::to_string(span.start) + ", " + std::to_string(span.end) +
                          "] outside [0, usable_length]",
                      block.id);
    }
  }
}

}  // namespace

double distance(Coordinate a, Coordinate b) { return std::hypot(a.x - b.x, a.y - b.y); }

double point_segment_distance(Coordinate p, Coordinate a, Coordinate b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return distance(p, Coordinate{a.x + t * dx, a.y + t * dy});
}

Coordinate project(const GeoOrigin& origin, double lat, double lon) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  return Coordinate{kEarthRadius * (lon - origin.lon) * kDeg * std::cos(origin.lat * kDeg),
                    kEarthRadius * (lat - origin.lat) * kDeg};
}

double covered_length(std::vector<Span> spans, double limit) {
  if (!(limit > 0.0)) return 0.0;
  for (auto& span : spans) {
    span.start = std::clamp(span.start, 0.0, limit);
    span.end = std::clamp(span.end, 0.0, limit);
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  double covered = 0.0;
  double run_start = 0.0;
  double run_end = -1.0;
  for (const auto& span : spans) {
    if (span.end <= span.start) continue;
    if (span.start > run_end) {
      if (run_end > run_start) covered += run_end - run_start;
      run_start = span.start;
      run_end = span.end;
    } else {
      run_end = std::max(run_end, span.end);
    }
  }
  if (run_end > run_start) covered += run_end - run_start;
  return covered;
}

int derive_capacity(const Block& block, double slot_length) {
  if (!(slot_length > 0.0) || !(block.usable_length > 0.0)) return 0;
  std::vector<Span> spans = block.prohibited;
  spans.insert(spans.end(), block.garages.begin(), block.garages.end());
  const double free = block.usable_length - covered_length(std::move(spans), block.usable_length);
  if (!(free > 0.0)) return 0;
  // Lengths are decimal meters; absorb representation error before flooring.
  const double slots = free / slot_length;
  return static_cast<int>(std::floor(slots + 1e-9 * std::max(1.0, slots)));
}

std::string_view to_string(PlaceKind kind) {
  switch (kind) {
    case PlaceKind::street: return "street";
    case PlaceKind::intersection: return "intersection";
    case PlaceKind::landmark: return "landmark";
  }
  return "street";
}

PlaceKind parse_place_kind(std::string_view s) {
  if (s == "street") return PlaceKind::street;
  if (s == "intersection") return PlaceKind::intersection;
  if (s == "landmark") return PlaceKind::landmark;
  throw ValidationError("unknown place kind '" + std::string(s) + "'");
}

std::string Gazetteer::normalize_key(std::string_view raw) {
  const auto parts = text::words_keep_ampersand(raw);
  return text::join(parts, " ", 0, parts.size());
}

void Gazetteer::add(std::string_view raw_key, Coordinate coordinate, PlaceKind kind) {
  std::string key = normalize_key(raw_key);
  if (key.empty()) throw ValidationError("empty gazetteer key");
  if (!std::isfinite(coordinate.x) || !std::isfinite(coordinate.y)) {
    throw ValidationError("non-finite coordinate for gazetteer key '" + key + "'");
  }
  entries_.insert_or_assign(key, GazetteerEntry{key, coordinate, kind});
}

const GazetteerEntry* Gazetteer::find_normalized(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const GazetteerEntry* Gazetteer::find(std::string_view raw_key) const {
  const std::string key = normalize_key(raw_key);
  if (const auto* hit = find_normalized(key)) return hit;
  const auto amp = key.find(" & ");
  if (amp == std::string::npos) return nullptr;
  const std::string swapped = key.substr(amp + 3) + " & " + key.substr(0, amp);
  const auto* hit = find_normalized(swapped);
  return (hit && hit->kind == PlaceKind::intersection) ? hit : nullptr;
}

std::optional<Coordinate> Gazetteer::resolve(std::string_view raw_key) const {
  if (const auto* entry = find(raw_key)) return entry->coordinate;
  return std::nullopt;
}

std::vector<const GazetteerEntry*> Gazetteer::entries_of(PlaceKind kind) const {
  std::vector<const GazetteerEntry*> out;
  for (const auto& [key, entry] : entries_) {
    if (entry.kind == kind) out.push_back(&entry);
  }
  return out;
}

std::optional<Coordinate> resolve_location(std::string_view text_key, const Gazetteer& gazetteer) {
  return gazetteer.resolve(text_key);
}

CityGraph::CityGraph(std::vector<Node> nodes, std::vector<StreetSegment> edges,
                     std::vector<Block> blocks, Gazetteer gazetteer, double slot_length)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      blocks_(std::move(blocks)),
      gazetteer_(std::move(gazetteer)),
      slot_length_(slot_length) {
  if (!(slot_length_ > 0.0)) throw LoadError("slot_length must be positive");
  sort_by_id(nodes_);
  sort_by_id(edges_);
  sort_by_id(blocks_);
  reject_duplicates(nodes_, "node");
  reject_duplicates(edges_, "edge");
  reject_duplicates(blocks_, "block");

  for (const auto& node : nodes_) {
    if (node.id.empty()) throw LoadError("node with empty id");
    if (!std::isfinite(node.position.x) || !std::isfinite(node.position.y)) {
      throw LoadError("node '" + node.id + "' has a non-finite coordinate", node.id);
    }
  }

  edge_from_.resize(edges_.size());
  edge_to_.resize(edges_.size());
  adjacency_.resize(nodes_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto& edge = edges_[e];
    const auto from = index_of(nodes_, edge.from);
    if (!from) throw LoadError("edge '" + edge.id + "' references missing node '" + edge.from + "'", edge.from);
    const auto to = index_of(nodes_, edge.to);
    if (!to) throw LoadError("edge '" + edge.id + "' references missing node '" + edge.to + "'", edge.to);
    const double euclid = distance(nodes_[*from].position, nodes_[*to].position);
    if (edge.length < 0.0) {
      throw LoadError("edge '" + edge.id + "' has negative length", edge.id);
    }
    if (edge.length == 0.0) {
      edge.length = euclid;
    } else if (std::abs(edge.length - euclid) > kLengthTolerance * euclid) {
      warnings_.push_back("edge '" + edge.id + "' declared length " + std::to_string(edge.length) +
                          " differs from endpoint distance " + std::to_string(euclid) +
                          " by more than 1%");
    }
    if (!(edge.length > 0.0)) {
      throw LoadError("edge '" + edge.id + "' has zero length", edge.id);
    }
    edge_from_[e] = *from;
    edge_to_[e] = *to;
    adjacency_[*from].push_back(Arc{e, *to});
    if (!edge.directed) adjacency_[*to].push_back(Arc{e, *from});
  }

  for (auto& block : blocks_) {
    if (!index_of(edges_, block.segment)) {
      throw LoadError("block '" + block.id + "' references missing edge '" + block.segment + "'",
                      block.segment);
    }
    if (!std::isfinite(block.usable_length) || block.usable_length < 0.0) {
      throw LoadError("block '" + block.id + "' has negative usable_length", block.id);
    }
    check_spans(block, block.prohibited, "prohibited");
    check_spans(block, block.garages, "garage");
    block.capacity = derive_capacity(block, slot_length_);
  }

  // Weak connectivity over all segments regardless of direction.
  if (!nodes_.empty()) {
    std::vector<std::vector<std::size_t>> undirected(nodes_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      undirected[edge_from_[e]].push_back(edge_to_[e]);
      undirected[edge_to_[e]].push_back(edge_from_[e]);
    }
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto v : undirected[u]) {
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          stack.push_back(v);
        }
      }
    }
    if (reached != nodes_.size()) {
      warnings_.push_back("street graph is not connected: " + std::to_string(reached) + " of " +
                          std::to_string(nodes_.size()) + " nodes reachable from '" +
                          nodes_[0].id + "'");
    }

    double min_x = nodes_[0].position.x, max_x = min_x;
    double min_y = nodes_[0].position.y, max_y = min_y;
    for (const auto& node : nodes_) {
      min_x = std::min(min_x, node.position.x);
      max_x = std::max(max_x, node.position.x);
      min_y = std::min(min_y, node.position.y);
      max_y = std::max(max_y, node.position.y);
    }
    for (const auto& [key, entry] : gazetteer_.entries()) {
      const auto& c = entry.coordinate;
      if (c.x < min_x - kBoundsMargin || c.x > max_x + kBoundsMargin ||
          c.y < min_y - kBoundsMargin || c.y > max_y + kBoundsMargin) {
        warnings_.push_back("gazetteer entry '" + key + "' lies outside the city bounds");
      }
    }
  }
}

std::optional<std::size_t> CityGraph::node_index(std::string_view id) const {
  return index_of(nodes_, id);
}

std::optional<std::size_t> CityGraph::edge_index(std::string_view id) const {
  return index_of(edges_, id);
}

const Node* CityGraph::find_node(std::string_view id) const {
  auto i = index_of(nodes_, id);
  return i ? &nodes_[*i] : nullptr;
}

const StreetSegment* CityGraph::find_edge(std::string_view id) const {
  auto i = index_of(edges_, id);
  return i ? &edges_[*i] : nullptr;
}

const Block* CityGraph::find_block(std::string_view id) const {
  auto i = index_of(blocks_, id);
  return i ? &blocks_[*i] : nullptr;
}

std::span<const CityGraph::Arc> CityGraph::out_arcs(std::size_t node) const {
  return adjacency_.at(node);
}

Coordinate CityGraph::edge_start(std::size_t edge) const { return nodes_[edge_from_[edge]].position; }
Coordinate CityGraph::edge_end(std::size_t edge) const { return nodes_[edge_to_[edge]].position; }

Coordinate CityGraph::edge_midpoint(std::size_t edge) const {
  const auto a = edge_start(edge);
  const auto b = edge_end(edge);
  return Coordinate{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
}

Coordinate CityGraph::block_midpoint(const Block& block) const {
  return edge_midpoint(*edge_index(block.segment));
}

namespace {

using nlohmann::json;

const json& require(const json& object, const char* key, const std::string& context) {
  if (!object.is_object() || !object.contains(key)) {
    throw LoadError(context + ": missing required key '" + key + "'", context);
  }
  return object.at(key);
}

double require_number(const json& object, const char* key, const std::string& context) {
  const auto& value = require(object, key, context);
  if (!value.is_number()) throw LoadError(context + ": '" + key + "' must be a number", context);
  return value.get<double>();
}

std::string require_string(const json& object, const char* key, const std::string& context) {
  const auto& value = require(object, key, context);
  if (!value.is_string()) throw LoadError(context + ": '" + key + "' must be a string", context);
  return value.get<std::string>();
}

const json& require_array(const json& document, const char* key) {
  const auto& value = require(document, key, "document");
  if (!value.is_array()) throw LoadError(std::string("'") + key + "' must be an array");
  return value;
}

std::vector<Span> parse_spans(const json& object, const char* key, const std::string& id) {
  std::vector<Span> spans;
  if (!object.contains(key)) return spans;
  const auto& list = object.at(key);
  if (!list.is_array()) throw LoadError("block '" + id + "': '" + key + "' must be an array", id);
  for (const auto& pair : list) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw LoadError("block '" + id + "': spans must be [start, end] number pairs", id);
    }
    spans.push_back(Span{pair[0].get<double>(), pair[1].get<double>()});
  }
  return spans;
}

std::string element_id(const json& element, const char* kind) {
  if (element.is_object() && element.contains("id") && element.at("id").is_string()) {
    return element.at("id").get<std::string>();
  }
  throw LoadError(std::string(kind) + " without a string 'id'");
}

}  // namespace

GeoOrigin load_origin(const json& document) {
  const auto& origin = require(document, "origin", "document");
  return GeoOrigin{require_number(origin, "lat", "origin"), require_number(origin, "lon", "origin")};
}

Gazetteer load_gazetteer(const json& document, const GeoOrigin& origin) {
  Gazetteer gazetteer;
  if (!document.contains("gazetteer")) return gazetteer;
  for (const auto& entry : require_array(document, "gazetteer")) {
    const std::string key = require_string(entry, "key", "gazetteer entry");
    const std::string context = "gazetteer entry '" + key + "'";
    PlaceKind kind = PlaceKind::street;
    try {
      kind = parse_place_kind(require_string(entry, "kind", context));
    } catch (const ValidationError& e) {
      throw LoadError(context + ": " + e.what(), key);
    }
    const auto coordinate = project(origin, require_number(entry, "lat", context),
                                    require_number(entry, "lon", context));
    try {
      gazetteer.add(key, coordinate, kind);
    } catch (const ValidationError& e) {
      throw LoadError(context + ": " + e.what(), key);
    }
  }
  return gazetteer;
}

CityGraph load_city(const json& document, const LoadOptions& options) {
  if (!document.is_object()) throw LoadError("city map must be a JSON object");
  const GeoOrigin origin = load_origin(document);

  std::vector<Node> nodes;
  for (const auto& element : require_array(document, "nodes")) {
    const auto id = element_id(element, "node");
    nodes.push_back(Node{id, project(origin, require_number(element, "lat", id),
                                     require_number(element, "lon", id))});
  }

  std::vector<StreetSegment> edges;
  for (const auto& element : require_array(document, "edges")) {
    StreetSegment edge;
    edge.id = element_id(element, "edge");
    edge.from = require_string(element, "from", edge.id);
    edge.to = require_string(element, "to", edge.id);
    edge.street = require_string(element, "street", edge.id);
    edge.directed = element.value("directed", false);
    if (element.contains("length")) {
      edge.length = require_number(element, "length", edge.id);
      if (edge.length <= 0.0) {
        throw LoadError("edge '" + edge.id + "' has non-positive length", edge.id);
      }
    }
    edges.push_back(std::move(edge));
  }

  std::vector<Block> blocks;
  if (document.contains("blocks")) {
    for (const auto& element : require_array(document, "blocks")) {
      Block block;
      block.id = element_id(element, "block");
      block.segment = require_string(element, "edge", block.id);
      block.usable_length = require_number(element, "usable_length", block.id);
      if (block.usable_length < 0.0) {
        throw LoadError("block '" + block.id + "' has negative usable_length", block.id);
      }
      block.prohibited = parse_spans(element, "prohibited", block.id);
      block.garages = parse_spans(element, "garages", block.id);
      block.metered = element.value("metered", false);
      blocks.push_back(std::move(block));
    }
  }

  return CityGraph(std::move(nodes), std::move(edges), std::move(blocks),
                   load_gazetteer(document, origin), options.slot_length);
}

CityGraph load_city_file(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open city map '" + path.string() + "'");
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw LoadError("city map '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return load_city(document, options);
}

std::vector<NearbyBlock> nearest_blocks(Coordinate center, double radius, const CityGraph& graph) {
  if (!(radius > 0.0)) throw ValidationError("radius must be positive");
  std::vector<NearbyBlock> out;
  for (const auto& block : graph.blocks()) {
    const double d = distance(center, graph.block_midpoint(block));
    if (d <= radius) out.push_back(NearbyBlock{&block, d});
  }
  std::sort(out.begin(), out.end(), [](const NearbyBlock& a, const NearbyBlock& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.block->id < b.block->id;
  });
  return out;
}

}  // namespace citysvc
