#include "citysvc/scenario.hpp"

#include <cmath>

#include "citysvc/errors.hpp"
#include "citysvc/serialization.hpp"

namespace citysvc {

using nlohmann::json;

namespace {

SimulationConfig merged(const SimulationConfig& base, const json& overrides) {
  json document = base.to_json();
  document.merge_patch(overrides);
  return SimulationConfig::from_json(document);
}

std::string number_text(const json& value) { return value.dump(); }

json parking_section(Platform& platform, const json& section) {
  const auto eval_config =
      merged(platform.simulation(), section.value("simulation", json::object()));
  const int history_days = section.value("history_days", 28);
  const auto horizon = static_cast<TimestampMs>(section.value("horizon_min", 30)) * kMinuteMs;
  if (history_days < 0) throw ValidationError("history_days must be >= 0");
  if (horizon <= 0) throw ValidationError("horizon_min must be positive");

  SimulationConfig full = eval_config;
  full.start = eval_config.start - history_days * kDayMs;
  full.duration_hours = eval_config.duration_hours + 24.0 * history_days;
  const auto simulation = simulate_parking(full, platform.graph());
  const auto evaluation =
      evaluate_parking(platform, simulation, eval_config.start, eval_config.end(), horizon);

  return json{{"events", simulation.events.size()},
              {"blocks", simulation.truth.occupancy.size()},
              {"history_days", history_days},
              {"eval_start", eval_config.start},
              {"eval_end", eval_config.end()},
              {"horizon_min", horizon / kMinuteMs},
              {"anomalies", platform.parking().anomalies()},
              {"replay_checks", evaluation.replay_checks},
              {"replay_mismatches", evaluation.replay_mismatches},
              {"samples", evaluation.samples},
              {"mae_model", evaluation.mae_model},
              {"mae_current", evaluation.mae_current},
              {"mae_constant", evaluation.mae_constant}};
}

json classifier_section(const Platform& platform, const json& section) {
  SimulationConfig config = platform.simulation();
  config.seed = section.value("seed", std::uint64_t{42});
  const auto n = section.value("n", std::size_t{200});
  const double train_fraction = section.value("train_fraction", 0.8);
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must lie in (0, 1)");
  }
  const auto corpus = labeled_corpus(config, platform.graph().gazetteer(), platform.templates(), n);
  const auto split = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  const std::span<const LabeledText> train(corpus.data(), split);
  const std::span<const LabeledText> test(corpus.data() + split, corpus.size() - split);
  const auto model = ClassifierModel::train(train, platform.config().thresholds.smoothing);
  std::size_t correct = 0;
  for (const auto& doc : test) correct += model.classify(doc.text).label == doc.label ? 1 : 0;
  return json{{"seed", config.seed},
              {"n", n},
              {"train", train.size()},
              {"test", test.size()},
              {"correct", correct},
              {"accuracy", test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size())}};
}

json reports_section(Platform& platform, const json& section) {
  const auto config = merged(platform.simulation(), section);
  const auto simulation = simulate_reports(config, platform.graph().gazetteer(),
                                           platform.templates(), platform.durations());
  for (const auto& report : simulation.reports) {
    platform.bus().publish(kReportsTopic, to_json(report).dump(), report.timestamp);
  }
  platform.pump();

  std::int64_t detected = 0;
  std::int64_t correct_category = 0;
  std::int64_t false_alarms = 0;
  std::int64_t incident_reports = 0;
  for (const auto& truth : simulation.truth.reports) {
    incident_reports += is_incident(truth.label) ? 1 : 0;
    const auto incident = platform.incidents().store().find("inc-" + truth.report);
    if (!incident) continue;
    ++detected;
    if (!is_incident(truth.label)) {
      ++false_alarms;
    } else if (incident->category == truth.label) {
      ++correct_category;
    }
  }
  return json{{"reports", simulation.reports.size()},
              {"incident_reports", incident_reports},
              {"injected_incidents", simulation.truth.incidents.size()},
              {"detected", detected},
              {"correct_category", correct_category},
              {"false_alarms", false_alarms},
              {"metrics", platform.incidents().metrics().to_json()}};
}

}  // namespace

PredictionEvaluation evaluate_parking(Platform& platform, const ParkingSimulation& simulation,
                                      TimestampMs eval_start, TimestampMs eval_end,
                                      TimestampMs horizon) {
  PredictionEvaluation result;
  const double alpha = platform.config().thresholds.alpha;
  std::size_t next = 0;
  auto publish_until = [&](TimestampMs t) {
    while (next < simulation.events.size() && simulation.events[next].timestamp <= t) {
      const auto& event = simulation.events[next++];
      platform.bus().publish(kParkingTopic, to_json(event).dump(), event.timestamp);
    }
    platform.pump();
    platform.advance_clock(t);
  };
  auto check_replay = [&](TimestampMs t) {
    for (const auto& [block, trace] : simulation.truth.occupancy) {
      ++result.replay_checks;
      if (platform.parking().occupancy(block).occupied != simulation.truth.occupancy_at(block, t)) {
        ++result.replay_mismatches;
      }
    }
  };

  double err_model = 0.0;
  double err_current = 0.0;
  double err_constant = 0.0;
  for (TimestampMs t = eval_start; t + horizon <= eval_end; t += horizon) {
    publish_until(t);
    check_replay(t);
    const TimestampMs target = t + horizon;
    for (const auto& [block_id, trace] : simulation.truth.occupancy) {
      const auto* block = platform.graph().find_block(block_id);
      if (block->capacity <= 0) continue;
      const double cap = static_cast<double>(block->capacity);
      const double truth = (cap - simulation.truth.occupancy_at(block_id, target)) / cap;
      err_model += std::abs(platform.parking().predict(block_id, target, alpha) - truth);
      err_current += std::abs(platform.parking().predict(block_id, target, 1.0) - truth);
      err_constant += std::abs(0.5 - truth);
      ++result.samples;
    }
  }
  publish_until(std::max(eval_end, simulation.events.empty() ? eval_end : simulation.events.back().timestamp));
  check_replay(eval_end);
  if (result.samples > 0) {
    const auto n = static_cast<double>(result.samples);
    result.mae_model = err_model / n;
    result.mae_current = err_current / n;
    result.mae_constant = err_constant / n;
  }
  return result;
}

json execute_query(const Platform& platform, const json& query) {
  const std::string type = query.at("type").get<std::string>();
  if (type == "routes") {
    return platform.routes(query.at("from").get<std::string>(), query.at("to").get<std::string>(),
                           query.at("t").get<TimestampMs>(), query.value("k", 3));
  }
  if (type == "ranking") {
    return platform.parking_ranking(query.at("x").get<double>(), query.at("y").get<double>(),
                                    query.at("radius").get<double>(), query.at("t").get<TimestampMs>());
  }
  if (type == "incidents") return platform.active_incidents(query.at("t").get<TimestampMs>());
  if (type == "block") return platform.block(query.at("id").get<std::string>());
  if (type == "blocks") return platform.blocks();
  throw ValidationError("unknown query type '" + type + "'");
}

std::string query_path(const json& query) {
  const std::string type = query.at("type").get<std::string>();
  if (type == "routes") {
    return "/routes?from=" + query.at("from").get<std::string>() +
           "&to=" + query.at("to").get<std::string>() + "&t=" + number_text(query.at("t")) +
           "&k=" + std::to_string(query.value("k", 3));
  }
  if (type == "ranking") {
    return "/parking/ranking?x=" + number_text(query.at("x")) + "&y=" + number_text(query.at("y")) +
           "&radius=" + number_text(query.at("radius")) + "&t=" + number_text(query.at("t"));
  }
  if (type == "incidents") return "/incidents/active?t=" + number_text(query.at("t"));
  if (type == "block") return "/blocks/" + query.at("id").get<std::string>();
  if (type == "blocks") return "/blocks";
  throw ValidationError("unknown query type '" + type + "'");
}

json run_scenario(Platform& platform, const json& scenario) {
  if (!scenario.is_object()) throw ValidationError("scenario must be a JSON object");
  json report = json::object();
  auto step = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw Error(std::string("scenario step '") + name + "' failed: " + e.what());
    }
  };
  if (scenario.contains("parking")) {
    step("parking", [&] { report["parking"] = parking_section(platform, scenario.at("parking")); });
  }
  if (scenario.contains("classifier")) {
    step("classifier",
         [&] { report["classifier"] = classifier_section(platform, scenario.at("classifier")); });
  }
  if (scenario.contains("reports")) {
    step("reports", [&] { report["reports"] = reports_section(platform, scenario.at("reports")); });
  }
  if (scenario.contains("queries")) {
    step("queries", [&] {
      json answers = json::array();
      for (const auto& query : scenario.at("queries")) {
        answers.push_back(json{{"query", query},
                               {"path", query_path(query)},
                               {"response", execute_query(platform, query)}});
      }
      report["queries"] = std::move(answers);
    });
  }
  return report;
}

}  // namespace citysvc
