#include <set>

#include "doctest.h"

#include "citysvc/errors.hpp"
#include "citysvc/feed_simulator.hpp"
#include "citysvc/serialization.hpp"
#include "support/fixtures.hpp"

using namespace citysvc;

namespace {

const ReportTemplates& templates() {
  static const auto t = ReportTemplates::from_file(fixture::data_path("templates/reports_es.json"));
  return t;
}

const DurationTable& durations() {
  static const auto d = DurationTable::from_file(fixture::data_path("config/incident_durations.json"));
  return d;
}

std::string dump_events(const std::vector<ParkingEvent>& events) {
  std::string out;
  for (const auto& e : events) out += to_json(e).dump() + "\n";
  return out;
}

SimulationConfig report_config() {
  SimulationConfig config;
  config.duration_hours = 24;
  config.report_rate = 20;
  config.incident_rate = 2;
  config.noise_fraction = 0.4;
  return config;
}

}  // namespace

TEST_CASE("all-zero demand produces no check-ins") {
  SimulationConfig config;
  config.demand_profile.assign(kSlotsPerDay, 0.0);
  const auto sim = simulate_parking(config, fixture::toy_map());
  CHECK(sim.events.empty());
  for (const auto& [block, trace] : sim.truth.occupancy) {
    CHECK(trace.size() == 1);
    CHECK(sim.truth.occupancy_at(block, config.end()) == 0);
  }
}

TEST_CASE("parking simulation is deterministic per seed") {
  SimulationConfig config;
  config.duration_hours = 6;
  const auto a = simulate_parking(config, fixture::toy_map());
  const auto b = simulate_parking(config, fixture::toy_map());
  CHECK(dump_events(a.events) == dump_events(b.events));
  CHECK(a.truth.occupancy == b.truth.occupancy);
  config.seed = 43;
  CHECK(dump_events(simulate_parking(config, fixture::toy_map()).events) != dump_events(a.events));
}

TEST_CASE("parking events are well formed and consistent with the truth") {
  SimulationConfig config;
  config.duration_hours = 12;
  const auto& graph = fixture::toy_map();
  const auto sim = simulate_parking(config, graph);
  REQUIRE_FALSE(sim.events.empty());
  std::set<std::string> ids;
  std::map<std::string, int> occupied;
  for (std::size_t i = 0; i < sim.events.size(); ++i) {
    const auto& e = sim.events[i];
    ids.insert(e.id);
    CHECK(e.timestamp >= config.start);
    CHECK(e.timestamp < config.end());
    if (i > 0) CHECK(sim.events[i - 1].timestamp <= e.timestamp);
    const auto* block = graph.find_block(e.block);
    REQUIRE(block);
    CHECK(block->metered);
    auto& n = occupied[e.block];
    n += e.kind == ParkingEventKind::check_in ? 1 : -1;
    CHECK(n >= 0);
    CHECK(n <= block->capacity);
  }
  CHECK(ids.size() == sim.events.size());
  for (const auto& [block, n] : occupied) CHECK(sim.truth.occupancy_at(block, config.end()) == n);
  CHECK(sim.truth.occupancy_at("b-n22-n23", config.start - 1) == 0);
  CHECK_THROWS_AS(sim.truth.occupancy_at("nope", 0), NotFoundError);
}

TEST_CASE("higher demand fills blocks more") {
  const auto& graph = fixture::toy_map();
  auto mean_fill = [&](double target) {
    SimulationConfig config;
    config.duration_hours = 12;
    config.demand_profile.assign(kSlotsPerDay, target);
    const auto sim = simulate_parking(config, graph);
    double total = 0;
    int n = 0;
    for (const auto& [block, trace] : sim.truth.occupancy) {
      total += static_cast<double>(sim.truth.occupancy_at(block, config.end())) / graph.find_block(block)->capacity;
      ++n;
    }
    return total / n;
  };
  const double low = mean_fill(0.2);
  const double high = mean_fill(0.9);
  CHECK(low < high);
}

TEST_CASE("block subset restricts the simulation") {
  SimulationConfig config;
  config.duration_hours = 4;
  config.blocks = {"b-n22-n23", "b-n33-n34"};
  const auto sim = simulate_parking(config, fixture::toy_map());
  CHECK(sim.truth.occupancy.size() == 2);
  for (const auto& e : sim.events) CHECK((e.block == "b-n22-n23" || e.block == "b-n33-n34"));
  config.blocks = {"b-unknown"};
  CHECK_THROWS_AS(simulate_parking(config, fixture::toy_map()), Error);
}

TEST_CASE("pure noise reports are all non_incident") {
  auto config = report_config();
  config.noise_fraction = 1.0;
  const auto sim = simulate_reports(config, fixture::toy_map().gazetteer(), templates(), durations());
  REQUIRE_FALSE(sim.reports.empty());
  for (const auto& r : sim.truth.reports) CHECK(r.label == Label::non_incident);
}

TEST_CASE("no injected incidents means no incident reports") {
  auto config = report_config();
  config.incident_rate = 0.0;
  const auto sim = simulate_reports(config, fixture::toy_map().gazetteer(), templates(), durations());
  CHECK(sim.truth.incidents.empty());
  for (const auto& r : sim.truth.reports) CHECK(r.label == Label::non_incident);
}

TEST_CASE("incident reports describe an active incident at a resolvable place") {
  const auto config = report_config();
  const auto& gazetteer = fixture::toy_map().gazetteer();
  const auto sim = simulate_reports(config, gazetteer, templates(), durations());
  REQUIRE(sim.reports.size() == sim.truth.reports.size());
  std::map<std::string, const InjectedIncident*> incidents;
  for (const auto& i : sim.truth.incidents) incidents[i.id] = &i;
  int described = 0;
  for (std::size_t k = 0; k < sim.reports.size(); ++k) {
    const auto& report = sim.reports[k];
    const auto& truth = sim.truth.reports[k];
    CHECK(truth.report == report.id);
    if (k > 0) CHECK(sim.reports[k - 1].timestamp <= report.timestamp);
    if (truth.label == Label::non_incident) continue;
    ++described;
    const auto* incident = incidents.at(truth.incident);
    CHECK(incident->category == truth.label);
    CHECK(incident->start <= report.timestamp);
    CHECK(report.timestamp < incident->end());
    CHECK(extract_location(report.text, gazetteer) == incident->location);
  }
  CHECK(described > 10);
}

TEST_CASE("report simulation is deterministic") {
  const auto config = report_config();
  const auto& gazetteer = fixture::toy_map().gazetteer();
  const auto a = simulate_reports(config, gazetteer, templates(), durations());
  const auto b = simulate_reports(config, gazetteer, templates(), durations());
  REQUIRE(a.reports.size() == b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(to_json(a.reports[i]) == to_json(b.reports[i]));
  }
}

TEST_CASE("labeled corpus") {
  SimulationConfig config;
  const auto& gazetteer = fixture::toy_map().gazetteer();
  CHECK(labeled_corpus(config, gazetteer, templates(), 1).size() == 1);
  const auto a = labeled_corpus(config, gazetteer, templates(), 200);
  const auto b = labeled_corpus(config, gazetteer, templates(), 200);
  REQUIRE(a.size() == 200);
  std::map<Label, int> counts;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].label == b[i].label);
    ++counts[a[i].label];
  }
  CHECK(counts.size() == 6);
  for (const auto& [label, n] : counts) CHECK((n == 33 || n == 34));
  CHECK_THROWS_AS(labeled_corpus(config, gazetteer, templates(), 0), ValidationError);
  config.seed = 1;
  CHECK(labeled_corpus(config, gazetteer, templates(), 200)[0].text != a[0].text);
}

TEST_CASE("simulation config parsing and validation") {
  const auto config = SimulationConfig::from_json(
      nlohmann::json::parse(R"({"seed": 9, "start_ms": 1000, "duration_hours": 2, "report_rate": 3})"));
  CHECK(config.seed == 9);
  CHECK(config.start == 1000);
  CHECK(config.end() == 1000 + 2 * 3600000);
  CHECK(SimulationConfig::from_json(config.to_json()).to_json() == config.to_json());

  CHECK_THROWS_AS(SimulationConfig::from_json({{"demand_profile", {0.5, 0.5}}}), ValidationError);
  CHECK_THROWS_AS(SimulationConfig::from_json({{"noise_fraction", 1.5}}), ValidationError);
  CHECK_THROWS_AS(SimulationConfig::from_json({{"report_rate", -1}}), ValidationError);
  CHECK_THROWS_AS(SimulationConfig::from_json({{"seed", "x"}}), ValidationError);

  SimulationConfig weekly;
  weekly.demand_profile.assign(7 * kSlotsPerDay, 0.1);
  weekly.demand_profile[kSlotsPerDay + 2] = 0.9;  // Tuesday 01:00
  CHECK(weekly.target_occupancy(kReferenceStart + kDayMs + 60 * kMinuteMs) == 0.9);
  CHECK(weekly.target_occupancy(kReferenceStart + 60 * kMinuteMs) == 0.1);
}

TEST_CASE("templates need every label") {
  auto doc = nlohmann::json::parse(R"({"accident": ["choque en {place}"]})");
  CHECK_THROWS_AS(ReportTemplates::from_json(doc), ValidationError);
  CHECK_FALSE(templates().for_label(Label::hazard).empty());
}
