#include "citysvc/platform.hpp"

#include <cmath>

#include "citysvc/errors.hpp"
#include "citysvc/serialization.hpp"

namespace citysvc {

using nlohmann::json;

json ApiError::to_json() const {
  return json{{"http_status", http_status_}, {"code", code_}, {"message", what()}};
}

ApiError to_api_error(const std::exception& e) {
  if (const auto* api = dynamic_cast<const ApiError*>(&e)) return *api;
  if (const auto* missing = dynamic_cast<const NotFoundError*>(&e)) {
    if (missing->kind() == "node") return ApiError(404, "node_not_found", e.what());
    if (missing->kind() == "block" || missing->kind() == "metered block") {
      return ApiError(404, "block_not_found", e.what());
    }
    return ApiError(404, "not_found", e.what());
  }
  if (dynamic_cast<const StoreError*>(&e)) return ApiError(409, "conflict", e.what());
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const LoadError*>(&e)) {
    return ApiError(400, "bad_request", e.what());
  }
  if (dynamic_cast<const json::exception*>(&e)) return ApiError(400, "invalid_json", e.what());
  return ApiError(500, "internal", e.what());
}

namespace {

json load_map_document(const PlatformConfig& config) {
  json document = read_json_file(config.map);
  if (!config.gazetteer.empty()) {
    const json gazetteer = read_json_file(config.gazetteer);
    if (!gazetteer.contains("gazetteer")) {
      throw ValidationError("gazetteer file '" + config.gazetteer.string() +
                            "' lacks a 'gazetteer' array");
    }
    document["gazetteer"] = gazetteer.at("gazetteer");
  }
  return document;
}

}  // namespace

Platform::Platform(PlatformConfig config) : config_(std::move(config)) {
  config_.validate();
  graph_ = std::make_unique<CityGraph>(
      load_city(load_map_document(config_), LoadOptions{config_.thresholds.slot_length}));
  durations_ = DurationTable::from_json(read_json_file(config_.durations));
  templates_ = std::make_unique<ReportTemplates>(ReportTemplates::from_json(read_json_file(config_.templates)));
  simulation_ = SimulationConfig::from_json(read_json_file(config_.simulator));

  const auto& source = config_.classifier;
  if (!source.model.empty()) {
    model_ = std::make_unique<ClassifierModel>(ClassifierModel::from_json(read_json_file(source.model)));
  } else {
    std::vector<LabeledText> corpus;
    if (!source.corpus.empty()) {
      corpus = read_corpus(source.corpus);
    } else {
      SimulationConfig corpus_config = simulation_;
      corpus_config.seed = source.synthetic->first;
      corpus = labeled_corpus(corpus_config, graph_->gazetteer(), *templates_, source.synthetic->second);
    }
    model_ = std::make_unique<ClassifierModel>(
        ClassifierModel::train(corpus, config_.thresholds.smoothing));
  }

  influence_ = IncidentInfluence{config_.thresholds.block_radius, config_.thresholds.penalty_factor};
  incidents_ = std::make_unique<IncidentService>(
      *model_, graph_->gazetteer(), durations_,
      IngestOptions{config_.thresholds.confidence}, &bus_);
  ParkingService::Options parking_options;
  parking_options.snapshot_interval = config_.snapshot_interval_min * kMinuteMs;
  parking_options.ranking = RankingOptions{config_.thresholds.lambda, config_.thresholds.alpha};
  parking_ = std::make_unique<ParkingService>(*graph_, parking_options);

  bus_.create_topic(kReportsTopic);
  bus_.create_topic(kParkingTopic);
  report_sub_ = bus_.subscribe(kReportsTopic, 0);
  parking_sub_ = bus_.subscribe(kParkingTopic, 0);
}

Platform::~Platform() {
  bus_.unsubscribe(report_sub_);
  bus_.unsubscribe(parking_sub_);
}

void Platform::drain_locked(Delivery* last) {
  // One message at a time: a failure leaves the rest of the backlog queued.
  while (true) {
    auto batch = bus_.poll(parking_sub_, 1);
    if (batch.empty()) break;
    const auto event = parking_event_from_json(json::parse(batch.front()->payload));
    auto occupancy = parking_->apply(event);
    if (last) last->occupancy = std::move(occupancy);
  }
  while (true) {
    auto batch = bus_.poll(report_sub_, 1);
    if (batch.empty()) break;
    const auto report = report_from_json(json::parse(batch.front()->payload));
    auto incident = incidents_->ingest(report);
    if (last) last->incident = std::move(incident);
  }
}

void Platform::pump() {
  std::unique_lock lock(state_mutex_);
  drain_locked(nullptr);
}

void Platform::advance_clock(TimestampMs t) {
  std::unique_lock lock(state_mutex_);
  parking_->advance_to(t);
}

json Platform::submit_report(const json& body) {
  const auto report = report_from_json(body);
  std::unique_lock lock(state_mutex_);
  drain_locked(nullptr);
  const auto seq = bus_.publish(kReportsTopic, to_json(report).dump(), report.timestamp);
  Delivery delivery;
  drain_locked(&delivery);
  return json{{"seq", seq},
              {"incident", delivery.incident ? to_json(*delivery.incident) : json(nullptr)}};
}

json Platform::submit_parking_event(const json& body) {
  const auto event = parking_event_from_json(body);
  const auto* block = graph_->find_block(event.block);
  if (!block) throw ApiError(404, "block_not_found", "block not found: " + event.block);
  if (!block->metered) {
    throw ApiError(422, "block_not_metered", "block '" + event.block + "' is not metered");
  }
  std::unique_lock lock(state_mutex_);
  drain_locked(nullptr);
  const auto seq = bus_.publish(kParkingTopic, to_json(event).dump(), event.timestamp);
  Delivery delivery;
  drain_locked(&delivery);
  return json{{"seq", seq}, {"occupancy", to_json(*delivery.occupancy)}};
}

json Platform::health() const {
  std::shared_lock lock(state_mutex_);
  json topics = json::array();
  for (const auto& topic : bus_.topics()) {
    topics.push_back(json{{"name", topic.name}, {"next_seq", topic.next_seq}});
  }
  std::size_t metered = 0;
  for (const auto& b : graph_->blocks()) metered += b.metered ? 1 : 0;
  return json{
      {"status", "ok"},
      {"components",
       {{"message_bus", {{"ready", true}, {"topics", topics}}},
        {"city_model",
         {{"ready", true},
          {"nodes", graph_->nodes().size()},
          {"edges", graph_->edges().size()},
          {"blocks", graph_->blocks().size()},
          {"metered_blocks", metered},
          {"gazetteer_entries", graph_->gazetteer().size()},
          {"warnings", graph_->warnings()}}},
        {"incident_service",
         {{"ready", true},
          {"classes", model_->classes().size()},
          {"vocabulary", model_->vocabulary().size()},
          {"incidents", incidents_->store().size()},
          {"metrics", incidents_->metrics().to_json()}}},
        {"parking_service",
         {{"ready", true},
          {"events_applied", parking_->events_applied()},
          {"anomalies", parking_->anomalies()}}},
        {"route_service", {{"ready", true}}}}}};
}

json Platform::blocks() const {
  std::shared_lock lock(state_mutex_);
  json out = json::array();
  for (const auto& b : graph_->blocks()) {
    json entry = to_json(b);
    if (b.metered) entry["occupancy"] = to_json(parking_->occupancy(b.id));
    out.push_back(std::move(entry));
  }
  return json{{"blocks", out}};
}

json Platform::block(const std::string& id) const {
  std::shared_lock lock(state_mutex_);
  const auto* b = graph_->find_block(id);
  if (!b) throw ApiError(404, "block_not_found", "block not found: " + id);
  json entry = to_json(*b);
  const auto midpoint = graph_->block_midpoint(*b);
  entry["midpoint"] = json{{"x", midpoint.x}, {"y", midpoint.y}};
  if (b->metered) entry["occupancy"] = to_json(parking_->occupancy(b->id));
  return entry;
}

json Platform::active_incidents(TimestampMs t) const {
  std::shared_lock lock(state_mutex_);
  json list = json::array();
  for (const auto& incident : citysvc::active_incidents(incidents_->store(), t)) {
    list.push_back(to_json(incident));
  }
  return json{{"t", t}, {"incidents", list}};
}

json Platform::parking_ranking(double x, double y, double radius, TimestampMs t) const {
  if (!std::isfinite(x) || !std::isfinite(y)) throw ApiError(400, "bad_request", "x and y must be finite");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ApiError(400, "bad_request", "radius must be positive");
  }
  std::shared_lock lock(state_mutex_);
  return json{{"x", x},
              {"y", y},
              {"radius", radius},
              {"t", t},
              {"ranking", to_json(parking_->rank(Coordinate{x, y}, radius, t))}};
}

json Platform::routes(const std::string& from, const std::string& to, TimestampMs t, int k) const {
  if (k < 1) throw ApiError(400, "bad_request", "k must be >= 1");
  if (!graph_->find_node(from)) throw ApiError(404, "node_not_found", "node not found: " + from);
  if (!graph_->find_node(to)) throw ApiError(404, "node_not_found", "node not found: " + to);
  std::shared_lock lock(state_mutex_);
  const auto recommendation =
      recommend(RouteRequest{from, to, t, k}, *graph_, incidents_->store(), influence_);
  json out = to_json(recommendation);
  out["from"] = from;
  out["to"] = to;
  out["t"] = t;
  out["k"] = k;
  return out;
}

}  // namespace citysvc
