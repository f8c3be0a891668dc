#include "citysvc/serialization.hpp"

#include <fstream>
#include <sstream>

#include "citysvc/errors.hpp"

namespace citysvc {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

json span_list(const std::vector<Span>& spans) {
  json out = json::array();
  for (const auto& span : spans) out.push_back({span.start, span.end});
  return out;
}

}  // namespace

json to_json(const Incident& incident) {
  return json{{"id", incident.id},
              {"category", std::string(to_string(incident.category))},
              {"x", incident.location.x},
              {"y", incident.location.y},
              {"start", incident.start},
              {"duration_min", incident.duration_min},
              {"confidence", incident.confidence},
              {"source_report", incident.source_report}};
}

Incident incident_from_json(const json& j) {
  Incident incident;
  incident.id = field<std::string>(j, "id");
  incident.category = parse_label(field<std::string>(j, "category"));
  if (!is_incident(incident.category)) throw ValidationError("incident category cannot be non_incident");
  incident.location = Coordinate{field<double>(j, "x"), field<double>(j, "y")};
  incident.start = field<TimestampMs>(j, "start");
  incident.duration_min = field<int>(j, "duration_min");
  incident.confidence = field<double>(j, "confidence");
  incident.source_report = field<std::string>(j, "source_report");
  if (incident.duration_min <= 0) throw ValidationError("duration_min must be positive");
  if (!(incident.confidence >= 0.0 && incident.confidence <= 1.0)) {
    throw ValidationError("confidence must lie in [0, 1]");
  }
  return incident;
}

json to_json(const TextReport& report) {
  json out{{"id", report.id},
           {"text", report.text},
           {"timestamp", report.timestamp},
           {"source", std::string(to_string(report.source))}};
  if (report.category) out["category"] = std::string(to_string(*report.category));
  return out;
}

TextReport report_from_json(const json& j) {
  TextReport report;
  report.id = field<std::string>(j, "id");
  report.text = field<std::string>(j, "text");
  report.timestamp = field<TimestampMs>(j, "timestamp");
  report.source = parse_report_source(j.is_object() && j.contains("source")
                                          ? field<std::string>(j, "source")
                                          : std::string("social"));
  if (j.contains("category") && !j.at("category").is_null()) {
    report.category = parse_label(field<std::string>(j, "category"));
  }
  if (report.id.empty()) throw ValidationError("report id must not be empty");
  if (report.text.empty()) throw ValidationError("report text must not be empty");
  return report;
}

json to_json(const ParkingEvent& event) {
  return json{{"id", event.id},
              {"block", event.block},
              {"kind", std::string(to_string(event.kind))},
              {"timestamp", event.timestamp}};
}

ParkingEvent parking_event_from_json(const json& j) {
  ParkingEvent event;
  event.id = field<std::string>(j, "id");
  event.block = field<std::string>(j, "block");
  event.kind = parse_parking_event_kind(field<std::string>(j, "kind"));
  event.timestamp = field<TimestampMs>(j, "timestamp");
  return event;
}

json to_json(const BlockOccupancy& occupancy) {
  return json{{"block", occupancy.block},
              {"occupied", occupancy.occupied},
              {"capacity", occupancy.capacity},
              {"last_update", occupancy.last_update}};
}

json to_json(const Block& block) {
  return json{{"id", block.id},
              {"edge", block.segment},
              {"usable_length", block.usable_length},
              {"prohibited", span_list(block.prohibited)},
              {"garages", span_list(block.garages)},
              {"capacity", block.capacity},
              {"metered", block.metered}};
}

json to_json(const Route& route) {
  return json{{"nodes", route.nodes},
              {"edges", route.edges},
              {"total_cost", route.total_cost},
              {"total_length", route.total_length}};
}

json to_json(const RouteRecommendation& recommendation) {
  json routes = json::array();
  for (const auto& entry : recommendation.routes) {
    json route = to_json(entry.route);
    route["incidents"] = entry.incidents;
    route["penalized"] = entry.penalized;
    routes.push_back(std::move(route));
  }
  return json{{"reachable", recommendation.reachable}, {"routes", routes}};
}

json to_json(const PredictionRanking& ranking) {
  json out = json::array();
  for (const auto& entry : ranking) {
    out.push_back(json{{"block", entry.block},
                       {"p_free", entry.p_free},
                       {"walk_distance", entry.walk_distance},
                       {"score", entry.score}});
  }
  return out;
}

json to_json(const LabeledText& doc) {
  return json{{"text", doc.text}, {"label", std::string(to_string(doc.label))}};
}

std::vector<LabeledText> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  std::vector<json> items;
  try {
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '[') {
      for (const auto& item : json::parse(content)) items.push_back(item);
    } else {
      std::istringstream lines(content);
      for (std::string line; std::getline(lines, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        items.push_back(json::parse(line));
      }
    }
  } catch (const json::parse_error& e) {
    throw ValidationError("corpus '" + path.string() + "' is not valid JSON: " + e.what());
  }

  std::vector<LabeledText> corpus;
  corpus.reserve(items.size());
  for (const auto& item : items) {
    corpus.push_back(LabeledText{field<std::string>(item, "text"),
                                 parse_label(field<std::string>(item, "label"))});
  }
  return corpus;
}

}  // namespace citysvc
