#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "citysvc/city_model.hpp"
#include "citysvc/incident_service.hpp"
#include "citysvc/parking_service.hpp"
#include "json.hpp"

namespace citysvc {

// Monday 2025-03-03 00:00 UTC.
inline constexpr TimestampMs kReferenceStart = 1'740'960'000'000;

struct SimulationConfig {
  std::uint64_t seed = 42;
  TimestampMs start = kReferenceStart;
  double duration_hours = 24.0;
  // Metered blocks to simulate; empty means all of them.
  std::vector<std::string> blocks;
  // Target occupancy fraction per 30-minute slot: 48 values (every weekday
  // alike) or 336 values (Monday first).
  std::vector<double> demand_profile = std::vector<double>(kSlotsPerDay, 0.5);
  double mean_dwell_min = 45.0;
  double report_rate = 0.0;    // reports per hour
  double incident_rate = 0.0;  // injected incidents per hour
  double noise_fraction = 0.5;

  // Throws ValidationError on out-of-range values.
  void validate() const;
  double target_occupancy(TimestampMs t) const;
  TimestampMs end() const;

  static SimulationConfig from_json(const nlohmann::json& document);
  nlohmann::json to_json() const;
};

struct OccupancySample {
  TimestampMs t = 0;
  int occupied = 0;

  friend bool operator==(const OccupancySample&, const OccupancySample&) = default;
};

struct InjectedIncident {
  std::string id;
  Label category = Label::accident;
  std::string place;
  Coordinate location;
  TimestampMs start = 0;
  int duration_min = 0;

  TimestampMs end() const { return start + static_cast<TimestampMs>(duration_min) * kMinuteMs; }
};

struct ReportTruth {
  std::string report;
  Label label = Label::non_incident;
  std::string incident;  // empty for chatter
};

struct GroundTruth {
  // Per block: (start, 0) followed by the occupancy after every event.
  std::map<std::string, std::vector<OccupancySample>, std::less<>> occupancy;
  std::vector<InjectedIncident> incidents;
  std::vector<ReportTruth> reports;

  // Occupancy after all events with timestamp <= t.
  int occupancy_at(std::string_view block, TimestampMs t) const;
};

struct ParkingSimulation {
  std::vector<ParkingEvent> events;
  GroundTruth truth;
};

struct ReportSimulation {
  std::vector<TextReport> reports;
  GroundTruth truth;
};

/// Spanish phrase templates per label; "{place}" is replaced by a location.
class ReportTemplates {
 public:
  // Every label needs at least one template.
  static ReportTemplates from_json(const nlohmann::json& document);
  static ReportTemplates from_file(const std::string& path);

  const std::vector<std::string>& for_label(Label label) const;

 private:
  std::map<Label, std::vector<std::string>> templates_;
};

// Birth-death occupancy per block: candidate arrivals at rate capacity / dwell
// are accepted with the profile's target fraction (and only when a slot is
// free); each accepted car leaves after an exponential dwell.
ParkingSimulation simulate_parking(const SimulationConfig& config, const CityGraph& graph);

// Reports arrive at report_rate. Each one is chatter with probability
// noise_fraction; otherwise it describes a uniformly chosen injected incident
// active at that moment and is dropped when none is active.
ReportSimulation simulate_reports(const SimulationConfig& config, const Gazetteer& gazetteer,
                                  const ReportTemplates& templates,
                                  const DurationTable& durations);

// n labeled texts cycling through all labels, shuffled by seed.
std::vector<LabeledText> labeled_corpus(const SimulationConfig& config, const Gazetteer& gazetteer,
                                        const ReportTemplates& templates, std::size_t n);

}  // namespace citysvc
