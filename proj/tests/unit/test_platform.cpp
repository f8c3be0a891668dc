#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "citysvc/errors.hpp"
#include "citysvc/platform.hpp"
#include "citysvc/scenario.hpp"
#include "citysvc/serialization.hpp"
#include "support/fixtures.hpp"

using namespace citysvc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return read_json_file(fixture::data_path("config/platform.json"));
}

PlatformConfig config_from(const json& document) {
  return PlatformConfig::from_json(document, fixture::data_path("config"));
}

Platform& shared_platform() {
  static Platform platform(config_from(base_config()));
  return platform;
}

int api_status(const std::function<void()>& fn, std::string* code = nullptr) {
  try {
    fn();
  } catch (const std::exception& e) {
    const auto error = to_api_error(e);
    if (code) *code = error.code();
    return error.http_status();
  }
  return 200;
}

}  // namespace

TEST_CASE("platform config resolves relative paths and validates") {
  const auto config = config_from(base_config());
  CHECK(config.map.filename() == "tandil_toy.json");
  CHECK(fs::exists(config.map));
  CHECK(config.port == 8080);
  CHECK(config.thresholds.confidence == 0.6);
  CHECK(config.classifier.synthetic.has_value());

  auto missing = base_config();
  missing["map"] = "nope.json";
  CHECK_THROWS_AS(config_from(missing), ValidationError);

  auto two_sources = base_config();
  two_sources["classifier"]["corpus"] = "incident_durations.json";
  CHECK_THROWS_AS(config_from(two_sources), ValidationError);

  auto bad_alpha = base_config();
  bad_alpha["thresholds"]["alpha"] = 2.0;
  CHECK_THROWS_AS(config_from(bad_alpha), ValidationError);

  auto bad_port = base_config();
  bad_port["listen"]["port"] = 70000;
  CHECK_THROWS_AS(config_from(bad_port), ValidationError);

  auto wrong_type = base_config();
  wrong_type["thresholds"]["lambda"] = "fast";
  CHECK_THROWS_AS(config_from(wrong_type), ValidationError);

  CHECK_THROWS_AS(PlatformConfig::from_file("/nonexistent/platform.json"), ValidationError);
}

TEST_CASE("health reports every component") {
  const auto health = shared_platform().health();
  CHECK(health["status"] == "ok");
  for (const char* name : {"message_bus", "city_model", "incident_service", "parking_service", "route_service"}) {
    CHECK(health["components"][name]["ready"] == true);
  }
  CHECK(health["components"]["city_model"]["metered_blocks"] == 40);
  CHECK(health["components"]["incident_service"]["classes"] == 6);
}

TEST_CASE("blocks and single block queries") {
  auto& platform = shared_platform();
  const auto all = platform.blocks();
  CHECK(all["blocks"].size() == 84);
  const auto one = platform.block("b-n22-n23");
  CHECK(one["id"] == "b-n22-n23");
  CHECK(one.contains("midpoint"));
  CHECK(one.contains("occupancy"));
  std::string code;
  CHECK(api_status([&] { platform.block("b-none"); }, &code) == 404);
  CHECK(code == "block_not_found");
}

TEST_CASE("parking events flow through the bus") {
  Platform platform(config_from(base_config()));
  const auto before = platform.bus().topic(kParkingTopic).next_seq;
  const auto answer = platform.submit_parking_event(
      json{{"id", "p1"}, {"block", "b-n22-n23"}, {"kind", "check_in"}, {"timestamp", kReferenceStart}});
  CHECK(answer["seq"] == before);
  CHECK(answer["occupancy"]["occupied"] == 1);
  CHECK(platform.parking().occupancy("b-n22-n23").occupied == 1);

  std::string code;
  CHECK(api_status([&] {
          platform.submit_parking_event(
              json{{"id", "p2"}, {"block", "b-nowhere"}, {"kind", "check_in"}, {"timestamp", 0}});
        }, &code) == 404);
  CHECK(code == "block_not_found");

  // An unmetered block.
  std::string unmetered;
  for (const auto& b : platform.graph().blocks()) {
    if (!b.metered) unmetered = b.id;
  }
  REQUIRE_FALSE(unmetered.empty());
  CHECK(api_status([&] {
          platform.submit_parking_event(
              json{{"id", "p3"}, {"block", unmetered}, {"kind", "check_in"}, {"timestamp", 0}});
        }, &code) == 422);
  CHECK(code == "block_not_metered");

  CHECK(api_status([&] { platform.submit_parking_event(json{{"id", "p4"}, {"block", "b-n22-n23"}}); }) == 400);
  CHECK(api_status([&] {
          platform.submit_parking_event(
              json{{"id", "p5"}, {"block", "b-n22-n23"}, {"kind", "park"}, {"timestamp", 0}});
        }) == 400);
  // Rejected events never reach the bus.
  CHECK(platform.bus().topic(kParkingTopic).next_seq == before + 1);
}

TEST_CASE("reports become incidents and shape routes") {
  Platform platform(config_from(base_config()));
  const TimestampMs t = kReferenceStart + 3600000;
  const auto answer = platform.submit_report(
      json{{"id", "r1"}, {"text", "corte total en San Martín y General Paz"}, {"timestamp", t}});
  REQUIRE(answer["incident"].is_object());
  CHECK(answer["incident"]["category"] == "road_closure");
  CHECK(answer["incident"]["id"] == "inc-r1");

  const auto chatter = platform.submit_report(
      json{{"id", "r2"}, {"text", "hermoso atardecer en el lago"}, {"timestamp", t}});
  CHECK(chatter["incident"].is_null());

  std::string code;
  CHECK(api_status([&] {
          platform.submit_report(json{{"id", "r1"}, {"text", "corte en Pinto y Mitre"}, {"timestamp", t}});
        }, &code) == 409);
  CHECK(code == "conflict");
  CHECK(api_status([&] { platform.submit_report(json{{"id", "r3"}, {"timestamp", t}}); }) == 400);

  const auto active = platform.active_incidents(t + 60000);
  CHECK(active["incidents"].size() == 1);
  CHECK(platform.active_incidents(t + 180 * 60000)["incidents"].empty());

  const auto routes = platform.routes("n30", "n36", t + 60000, 2);
  CHECK(routes["reachable"] == true);
  const auto closed_corner = platform.graph().gazetteer().resolve("San Martín & General Paz");
  REQUIRE(closed_corner);
  for (const auto& r : routes["routes"]) {
    for (const auto& node : r["nodes"]) {
      const auto& pos = platform.graph().find_node(node.get<std::string>())->position;
      CHECK(distance(pos, *closed_corner) > 1.0);
    }
  }
  CHECK(routes["from"] == "n30");
  CHECK(routes["k"] == 2);
}

TEST_CASE("query validation errors map onto API errors") {
  auto& platform = shared_platform();
  std::string code;
  CHECK(api_status([&] { platform.routes("n00", "zz", 0, 3); }, &code) == 404);
  CHECK(code == "node_not_found");
  CHECK(api_status([&] { platform.routes("n00", "n11", 0, 0); }) == 400);
  CHECK(api_status([&] { platform.parking_ranking(0, 0, 0, 0); }) == 400);
  CHECK(api_status([&] { platform.parking_ranking(0, 0, -5, 0); }) == 400);

  CHECK(to_api_error(NotFoundError("topic", "x")).code() == "not_found");
  CHECK(to_api_error(StoreError("dup")).http_status() == 409);
  CHECK(to_api_error(std::runtime_error("boom")).http_status() == 500);
  CHECK(to_api_error(ValidationError("bad")).to_json() ==
        json{{"http_status", 400}, {"code", "bad_request"}, {"message", "bad"}});
}

TEST_CASE("ranking response wraps the ranking") {
  const auto answer = shared_platform().parking_ranking(350, -250, 250, kReferenceStart);
  CHECK(answer["x"] == 350.0);
  CHECK(answer["ranking"].is_array());
  CHECK(answer["ranking"].size() > 0);
  CHECK(shared_platform().parking_ranking(50000, 50000, 10, kReferenceStart)["ranking"].empty());
}

TEST_CASE("serialization round trips") {
  const Incident incident{"i", Label::hazard, {1.5, -2}, 10, 60, 0.75, "r"};
  CHECK(incident_from_json(to_json(incident)) == incident);
  CHECK_THROWS_AS(incident_from_json(json{{"id", "i"}}), ValidationError);

  const ParkingEvent event{"e", "b", ParkingEventKind::check_out, 99};
  CHECK(parking_event_from_json(to_json(event)) == event);

  const TextReport report{"r", "texto", 5, ReportSource::municipal, Label::construction};
  const auto back = report_from_json(to_json(report));
  CHECK(back.id == "r");
  CHECK(back.source == ReportSource::municipal);
  CHECK(back.category == Label::construction);
  CHECK(report_from_json(json{{"id", "r"}, {"text", "x"}, {"timestamp", 1}}).source == ReportSource::social);
}

TEST_CASE("corpus files: JSON array and NDJSON") {
  const auto dir = fs::temp_directory_path() / "citysvc_corpus_test";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "a.json") << R"([{"text": "choque", "label": "accident"}, {"text": "feria", "label": "non_incident"}])";
    std::ofstream(dir / "b.ndjson") << "{\"text\": \"choque\", \"label\": \"accident\"}\n\n{\"text\": \"feria\", \"label\": \"non_incident\"}\n";
    std::ofstream(dir / "c.ndjson") << "{\"text\": \"choque\", \"label\": \"meteor\"}\n";
  }
  const auto a = read_corpus(dir / "a.json");
  const auto b = read_corpus(dir / "b.ndjson");
  REQUIRE(a.size() == 2);
  REQUIRE(b.size() == 2);
  CHECK(a[1].label == Label::non_incident);
  CHECK(b[0].text == "choque");
  CHECK_THROWS_AS(read_corpus(dir / "c.ndjson"), ValidationError);
  CHECK_THROWS_AS(read_corpus(dir / "missing.json"), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("empty scenario gives an empty report") {
  Platform platform(config_from(base_config()));
  CHECK(run_scenario(platform, json::object()) == json::object());
  CHECK_THROWS_AS(run_scenario(platform, json::array()), ValidationError);
}

TEST_CASE("scenario failures name the step") {
  Platform platform(config_from(base_config()));
  try {
    run_scenario(platform, json{{"queries", json::array({json{{"type", "teleport"}}})}});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("scenario step 'queries'") != std::string::npos);
  }
}

TEST_CASE("query paths") {
  CHECK(query_path(json{{"type", "routes"}, {"from", "a"}, {"to", "b"}, {"t", 5}, {"k", 2}}) ==
        "/routes?from=a&to=b&t=5&k=2");
  CHECK(query_path(json{{"type", "ranking"}, {"x", 1.5}, {"y", -2}, {"radius", 100}, {"t", 7}}) ==
        "/parking/ranking?x=1.5&y=-2&radius=100&t=7");
  CHECK(query_path(json{{"type", "incidents"}, {"t", 9}}) == "/incidents/active?t=9");
  CHECK(query_path(json{{"type", "block"}, {"id", "b-1"}}) == "/blocks/b-1");
  CHECK(query_path(json{{"type", "blocks"}}) == "/blocks");
}

TEST_CASE("small scenario runs end to end and deterministically") {
  const json scenario = {
      {"parking", {{"history_days", 2}, {"horizon_min", 30}, {"simulation", {{"duration_hours", 6}}}}},
      {"classifier", {{"seed", 42}, {"n", 120}}},
      {"reports", {{"seed", 5}, {"report_rate", 10}, {"incident_rate", 2}, {"duration_hours", 6}}},
      {"queries", json::array({json{{"type", "incidents"}, {"t", kReferenceStart + 3 * 3600000}},
                               json{{"type", "routes"}, {"from", "n00"}, {"to", "n66"},
                                    {"t", kReferenceStart + 3 * 3600000}, {"k", 2}}})}};
  Platform p1(config_from(base_config()));
  Platform p2(config_from(base_config()));
  const auto r1 = run_scenario(p1, scenario);
  const auto r2 = run_scenario(p2, scenario);
  CHECK(r1.dump() == r2.dump());
  CHECK(r1["parking"]["replay_mismatches"] == 0);
  CHECK(r1["parking"]["samples"] == 12 * 40);
  CHECK(r1["reports"]["reports"].get<int>() > 0);
  CHECK(r1["queries"].size() == 2);
}
