#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace citysvc {

// Planar city frame: meters east (x) and north (y) of the map origin.
struct Coordinate {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

double distance(Coordinate a, Coordinate b);

// Shortest distance from p to the closed segment [a, b].
double point_segment_distance(Coordinate p, Coordinate a, Coordinate b);

struct GeoOrigin {
  double lat = 0.0;
  double lon = 0.0;
};

// Equirectangular projection around `origin`. Adequate for city-sized extents.
Coordinate project(const GeoOrigin& origin, double lat, double lon);

struct Node {
  std::string id;
  Coordinate position;
};

struct StreetSegment {
  std::string id;
  std::string from;
  std::string to;
  std::string street;
  double length = 0.0;
  bool directed = false;
};

// Closed interval of meters measured along a block from its start.
struct Span {
  double start = 0.0;
  double end = 0.0;
};

struct Block {
  std::string id;
  std::string segment;
  double usable_length = 0.0;
  std::vector<Span> prohibited;
  std::vector<Span> garages;
  int capacity = 0;
  bool metered = false;
};

// Total length of the union of `spans` after clipping each to [0, limit].
double covered_length(std::vector<Span> spans, double limit);

// floor(free / slot_length), where free is the usable length not covered by
// the union of prohibited and garage spans. Degenerate inputs give 0.
int derive_capacity(const Block& block, double slot_length);

enum class PlaceKind { street, intersection, landmark };

std::string_view to_string(PlaceKind kind);
PlaceKind parse_place_kind(std::string_view s);

struct GazetteerEntry {
  std::string key;
  Coordinate coordinate;
  PlaceKind kind = PlaceKind::street;
};

/// Normalized place-name lookup.
///
/// Keys are lowercased, accent-folded, and punctuation-stripped; '&' is kept
/// as the intersection separator and whitespace collapses to single spaces.
/// Lookup is exact after normalization. An intersection also answers to its
/// two streets in swapped order.
class Gazetteer {
 public:
  static std::string normalize_key(std::string_view raw);

  // Re-registering a key replaces its entry.
  void add(std::string_view raw_key, Coordinate coordinate, PlaceKind kind);

  const GazetteerEntry* find(std::string_view raw_key) const;
  std::optional<Coordinate> resolve(std::string_view raw_key) const;

  std::vector<const GazetteerEntry*> entries_of(PlaceKind kind) const;
  const std::map<std::string, GazetteerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  const GazetteerEntry* find_normalized(const std::string& key) const;

  std::map<std::string, GazetteerEntry> entries_;
};

std::optional<Coordinate> resolve_location(std::string_view text_key, const Gazetteer& gazetteer);

/// Immutable street network with its blocks and gazetteer.
///
/// Nodes, edges, and blocks are kept sorted by id, so an index comparison is
/// an id comparison. Undirected segments are traversable both ways.
class CityGraph {
 public:
  struct Arc {
    std::size_t edge = 0;
    std::size_t to = 0;
  };

  // Validates and indexes. Throws LoadError naming the offending id.
  CityGraph(std::vector<Node> nodes, std::vector<StreetSegment> edges, std::vector<Block> blocks,
            Gazetteer gazetteer, double slot_length = 5.0);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<StreetSegment>& edges() const { return edges_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Gazetteer& gazetteer() const { return gazetteer_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  double slot_length() const { return slot_length_; }

  std::optional<std::size_t> node_index(std::string_view id) const;
  std::optional<std::size_t> edge_index(std::string_view id) const;
  const Node* find_node(std::string_view id) const;
  const StreetSegment* find_edge(std::string_view id) const;
  const Block* find_block(std::string_view id) const;

  std::span<const Arc> out_arcs(std::size_t node) const;

  Coordinate edge_start(std::size_t edge) const;
  Coordinate edge_end(std::size_t edge) const;
  Coordinate edge_midpoint(std::size_t edge) const;
  Coordinate block_midpoint(const Block& block) const;

 private:
  std::vector<Node> nodes_;
  std::vector<StreetSegment> edges_;
  std::vector<Block> blocks_;
  Gazetteer gazetteer_;
  double slot_length_;
  std::vector<std::size_t> edge_from_;
  std::vector<std::size_t> edge_to_;
  std::vector<std::vector<Arc>> adjacency_;
  std::vector<std::string> warnings_;
};

struct LoadOptions {
  double slot_length = 5.0;
};

// Parses a city-map document ({origin, nodes, edges, blocks, gazetteer}).
CityGraph load_city(const nlohmann::json& document, const LoadOptions& options = {});
CityGraph load_city_file(const std::filesystem::path& path, const LoadOptions& options = {});

// Reads the `gazetteer` array of a map (or standalone gazetteer) document.
Gazetteer load_gazetteer(const nlohmann::json& document, const GeoOrigin& origin);
GeoOrigin load_origin(const nlohmann::json& document);

struct NearbyBlock {
  const Block* block = nullptr;
  double distance = 0.0;
};

// Blocks whose segment midpoint lies within `radius`, nearest first, ties by
// block id. Throws ValidationError when radius <= 0.
std::vector<NearbyBlock> nearest_blocks(Coordinate center, double radius, const CityGraph& graph);

}  // namespace citysvc
