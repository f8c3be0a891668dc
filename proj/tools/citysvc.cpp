// Operator CLI: serve the gateway, run simulators, train the classifier,
// and drive scenarios.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <pthread.h>
#include <unistd.h>

#include "CLI11.hpp"

#include "citysvc/config.hpp"
#include "citysvc/errors.hpp"
#include "citysvc/feed_simulator.hpp"
#include "citysvc/gateway.hpp"
#include "citysvc/platform.hpp"
#include "citysvc/scenario.hpp"
#include "citysvc/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw citysvc::Error("cannot write '" + path.string() + "'");
  out << content;
}

template <typename Items>
void write_ndjson(const fs::path& path, const Items& items) {
  std::ofstream out(path);
  if (!out) throw citysvc::Error("cannot write '" + path.string() + "'");
  for (const auto& item : items) out << citysvc::to_json(item).dump() << '\n';
}

int serve(const fs::path& config_path, const std::string& scenario_path, int port_override) {
  auto config = citysvc::PlatformConfig::from_file(config_path);
  if (port_override >= 0) config.port = port_override;

  // Block termination signals before any thread exists; a dedicated thread
  // waits for them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  citysvc::Platform platform(config);
  if (!scenario_path.empty()) {
    citysvc::run_scenario(platform, citysvc::read_json_file(scenario_path));
  }
  citysvc::Gateway gateway(platform, config.cors_origin);
  const int port = gateway.bind(config.host, config.port);
  std::cerr << "citysvc gateway listening on http://" << config.host << ':' << port << '\n';

  std::thread waiter([&] {
    int received = 0;
    sigwait(&signals, &received);
    gateway.stop();
  });
  gateway.serve();
  kill(getpid(), SIGTERM);  // releases the waiter if serve() returned on its own
  waiter.join();
  std::cerr << "citysvc gateway stopped\n";
  return 0;
}

int simulate(const fs::path& config_path, const fs::path& out_dir, std::size_t corpus_size) {
  const auto config = citysvc::PlatformConfig::from_file(config_path);
  citysvc::Platform platform(config);
  const auto& sim = platform.simulation();
  fs::create_directories(out_dir);

  const auto parking = citysvc::simulate_parking(sim, platform.graph());
  const auto reports = citysvc::simulate_reports(sim, platform.graph().gazetteer(),
                                                 platform.templates(), platform.durations());
  write_ndjson(out_dir / "parking_events.ndjson", parking.events);
  write_ndjson(out_dir / "reports.ndjson", reports.reports);

  json truth{{"occupancy", json::object()}, {"incidents", json::array()}, {"reports", json::array()}};
  for (const auto& [block, trace] : parking.truth.occupancy) {
    json samples = json::array();
    for (const auto& s : trace) samples.push_back({s.t, s.occupied});
    truth["occupancy"][block] = std::move(samples);
  }
  for (const auto& incident : reports.truth.incidents) {
    truth["incidents"].push_back({{"id", incident.id},
                                  {"category", std::string(citysvc::to_string(incident.category))},
                                  {"place", incident.place},
                                  {"x", incident.location.x},
                                  {"y", incident.location.y},
                                  {"start", incident.start},
                                  {"duration_min", incident.duration_min}});
  }
  for (const auto& label : reports.truth.reports) {
    truth["reports"].push_back({{"report", label.report},
                                {"label", std::string(citysvc::to_string(label.label))},
                                {"incident", label.incident}});
  }
  write_file(out_dir / "ground_truth.json", truth.dump(1) + "\n");

  if (corpus_size > 0) {
    write_ndjson(out_dir / "corpus.ndjson",
                 citysvc::labeled_corpus(sim, platform.graph().gazetteer(), platform.templates(),
                                         corpus_size));
  }
  std::cout << parking.events.size() << " parking events, " << reports.reports.size()
            << " reports written to " << out_dir.string() << '\n';
  return 0;
}

int train(const fs::path& corpus_path, const fs::path& out, double alpha) {
  const auto corpus = citysvc::read_corpus(corpus_path);
  const auto model = citysvc::ClassifierModel::train(corpus, alpha);
  write_file(out, model.to_json().dump() + "\n");
  std::cout << "trained on " << corpus.size() << " documents, " << model.vocabulary().size()
            << " tokens, " << model.classes().size() << " classes\n";
  return 0;
}

int scenario(const fs::path& config_path, const fs::path& scenario_path, const fs::path& report) {
  citysvc::Platform platform(citysvc::PlatformConfig::from_file(config_path));
  const auto result = citysvc::run_scenario(platform, citysvc::read_json_file(scenario_path));
  write_file(report, result.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citysvc: mobility services platform for an intermediate city"};
  app.require_subcommand(1);

  std::string config;
  std::string scenario_file;
  std::string out;
  std::string corpus;
  std::string report;
  int port = -1;
  double alpha = 1.0;
  std::size_t corpus_size = 0;

  auto* serve_cmd = app.add_subcommand("serve", "Run the REST gateway");
  serve_cmd->add_option("--config", config, "Platform config")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--scenario", scenario_file, "Scenario to preload")->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", port, "Override the configured port");

  auto* simulate_cmd = app.add_subcommand("simulate", "Write simulated feeds as NDJSON");
  simulate_cmd->add_option("--config", config, "Platform config")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out", out, "Output directory")->required();
  simulate_cmd->add_option("--corpus-size", corpus_size, "Also write a labeled corpus of this size");

  auto* train_cmd = app.add_subcommand("train", "Train the incident classifier");
  train_cmd->add_option("--corpus", corpus, "Labeled corpus (JSON array or NDJSON)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out, "Model output path")->required();
  train_cmd->add_option("--alpha", alpha, "Additive smoothing")->check(CLI::PositiveNumber);

  auto* scenario_cmd = app.add_subcommand("scenario", "Run a scenario and write its report");
  scenario_cmd->add_option("--config", config, "Platform config")->required()->check(CLI::ExistingFile);
  scenario_cmd->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  scenario_cmd->add_option("--report", report, "Report output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config, scenario_file, port);
    if (*simulate_cmd) return simulate(config, out, corpus_size);
    if (*train_cmd) return train(corpus, out, alpha);
    if (*scenario_cmd) return scenario(config, scenario_file, report);
  } catch (const std::exception& e) {
    std::cerr << "citysvc: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
