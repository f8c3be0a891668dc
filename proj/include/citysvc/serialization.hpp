#pragma once

// JSON wire formats shared by the bus, the gateway, and the CLI.

#include "citysvc/city_model.hpp"
#include "citysvc/geo_service.hpp"
#include "citysvc/incident_service.hpp"
#include "citysvc/parking_service.hpp"
#include "citysvc/route_service.hpp"
#include <filesystem>

#include "json.hpp"

namespace citysvc {

nlohmann::json to_json(const Incident& incident);
Incident incident_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TextReport& report);
// Throws ValidationError naming the first bad field.
TextReport report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ParkingEvent& event);
ParkingEvent parking_event_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BlockOccupancy& occupancy);
nlohmann::json to_json(const Block& block);
nlohmann::json to_json(const Route& route);
nlohmann::json to_json(const RouteRecommendation& recommendation);
nlohmann::json to_json(const PredictionRanking& ranking);

// A JSON array of {text, label} objects, or the same objects one per line.
std::vector<LabeledText> read_corpus(const std::filesystem::path& path);
nlohmann::json to_json(const LabeledText& doc);

}  // namespace citysvc
