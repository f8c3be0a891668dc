#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

namespace citysvc {

struct Thresholds {
  double confidence = 0.6;
  double alpha = 0.5;           // live-state weight in parking prediction
  double lambda = 1.0 / 300.0;  // walking-distance decay, 1/m
  double block_radius = 60.0;   // incident influence, m
  double penalty_factor = 5.0;
  double slot_length = 5.0;     // m
  double smoothing = 1.0;       // naive Bayes additive smoothing
};

// Where the incident classifier comes from. Exactly one source is set.
struct ClassifierSource {
  std::filesystem::path model;
  std::filesystem::path corpus;
  std::optional<std::pair<std::uint64_t, std::size_t>> synthetic;  // (seed, n)
};

/// Platform settings. Relative paths are resolved against the directory of
/// the config file.
struct PlatformConfig {
  std::filesystem::path map;
  std::filesystem::path gazetteer;  // optional; overrides the map's gazetteer
  std::filesystem::path durations;
  std::filesystem::path templates;
  std::filesystem::path simulator;
  ClassifierSource classifier;
  Thresholds thresholds;
  std::int64_t snapshot_interval_min = 5;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";

  // Throws ValidationError for missing files or out-of-range parameters.
  void validate() const;

  static PlatformConfig from_json(const nlohmann::json& document,
                                  const std::filesystem::path& base_dir);
  static PlatformConfig from_file(const std::filesystem::path& path);
};

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace citysvc
