#include "citysvc/config.hpp"

#include <cmath>
#include <fstream>

#include "citysvc/errors.hpp"

namespace citysvc {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace {

fs::path resolve(const fs::path& base, const json& document, const char* key) {
  if (!document.contains(key) || document.at(key).is_null()) return {};
  const fs::path p(document.at(key).get<std::string>());
  return p.is_absolute() ? p : base / p;
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("config lacks the ") + what + " path");
  if (!fs::is_regular_file(path)) {
    throw ValidationError(std::string(what) + " file '" + path.string() + "' does not exist");
  }
}

void require_range(double value, double lo, double hi, const char* what) {
  if (!std::isfinite(value) || value < lo || value > hi) {
    throw ValidationError(std::string(what) + " must lie in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
}

}  // namespace

void PlatformConfig::validate() const {
  require_file(map, "map");
  if (!gazetteer.empty()) require_file(gazetteer, "gazetteer");
  require_file(durations, "durations");
  require_file(templates, "templates");
  require_file(simulator, "simulator");
  const int sources = (!classifier.model.empty()) + (!classifier.corpus.empty()) +
                      (classifier.synthetic.has_value());
  if (sources != 1) throw ValidationError("classifier needs exactly one of model, corpus, synthetic");
  if (!classifier.model.empty()) require_file(classifier.model, "classifier model");
  if (!classifier.corpus.empty()) require_file(classifier.corpus, "classifier corpus");
  if (classifier.synthetic && classifier.synthetic->second < 1) {
    throw ValidationError("synthetic corpus size must be >= 1");
  }

  require_range(thresholds.confidence, 0.0, 1.0, "confidence threshold");
  require_range(thresholds.alpha, 0.0, 1.0, "alpha");
  require_range(thresholds.lambda, 1e-9, 1.0, "lambda");
  require_range(thresholds.block_radius, 0.0, 10000.0, "block_radius");
  require_range(thresholds.penalty_factor, 1.0, 1e6, "penalty_factor");
  require_range(thresholds.slot_length, 0.5, 100.0, "slot_length");
  require_range(thresholds.smoothing, 1e-9, 1e6, "smoothing");
  if (snapshot_interval_min < 1 || snapshot_interval_min > 30) {
    throw ValidationError("snapshot_interval_min must lie in [1, 30]");
  }
  if (port < 0 || port > 65535) throw ValidationError("port must lie in [0, 65535]");
}

PlatformConfig PlatformConfig::from_json(const json& document, const fs::path& base_dir) {
  if (!document.is_object()) throw ValidationError("platform config must be a JSON object");
  PlatformConfig config;
  try {
    config.map = resolve(base_dir, document, "map");
    config.gazetteer = resolve(base_dir, document, "gazetteer");
    config.durations = resolve(base_dir, document, "durations");
    config.templates = resolve(base_dir, document, "templates");
    config.simulator = resolve(base_dir, document, "simulator");
    if (document.contains("classifier")) {
      const auto& c = document.at("classifier");
      config.classifier.model = resolve(base_dir, c, "model");
      config.classifier.corpus = resolve(base_dir, c, "corpus");
      if (c.contains("synthetic")) {
        const auto& s = c.at("synthetic");
        config.classifier.synthetic = std::make_pair(s.value("seed", std::uint64_t{42}),
                                                     s.value("n", std::size_t{200}));
      }
    }
    if (document.contains("thresholds")) {
      const auto& t = document.at("thresholds");
      auto& th = config.thresholds;
      th.confidence = t.value("confidence", th.confidence);
      th.alpha = t.value("alpha", th.alpha);
      th.lambda = t.value("lambda", th.lambda);
      th.block_radius = t.value("block_radius", th.block_radius);
      th.penalty_factor = t.value("penalty_factor", th.penalty_factor);
      th.slot_length = t.value("slot_length", th.slot_length);
      th.smoothing = t.value("smoothing", th.smoothing);
    }
    config.snapshot_interval_min = document.value("snapshot_interval_min", config.snapshot_interval_min);
    if (document.contains("listen")) {
      const auto& l = document.at("listen");
      config.host = l.value("host", config.host);
      config.port = l.value("port", config.port);
    }
    config.cors_origin = document.value("cors_origin", config.cors_origin);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed platform config: ") + e.what());
  }
  config.validate();
  return config;
}

PlatformConfig PlatformConfig::from_file(const fs::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

}  // namespace citysvc
