#include "citysvc/feed_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "citysvc/errors.hpp"

namespace citysvc {

using nlohmann::json;

namespace {

// Portable draws on top of mt19937_64 (whose output sequence is fixed by the
// standard, unlike the std distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }
  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  template <typename T>
  const T& pick(const std::vector<T>& items) { return items[below(items.size())]; }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) {
  return splitmix64(seed ^ fnv1a(stream));
}

constexpr double kHourMs = 3'600'000.0;
constexpr double kMinuteMsD = 60'000.0;

std::string render(const std::string& pattern, const std::string& place) {
  std::string out = pattern;
  const std::string token = "{place}";
  for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos)) {
    out.replace(pos, token.size(), place);
    pos += place.size();
  }
  return out;
}

// Writes an intersection key "a & b" the way people type it.
std::string spoken_place(const GazetteerEntry& entry, Rng& rng) {
  const auto amp = entry.key.find(" & ");
  if (amp == std::string::npos) return entry.key;
  static const std::vector<std::string> connectors = {" y ", " & ", " esquina "};
  return entry.key.substr(0, amp) + rng.pick(connectors) + entry.key.substr(amp + 3);
}

std::vector<const GazetteerEntry*> incident_places(const Gazetteer& gazetteer) {
  auto places = gazetteer.entries_of(PlaceKind::intersection);
  if (places.empty()) {
    for (const auto& [key, entry] : gazetteer.entries()) places.push_back(&entry);
  }
  return places;
}

std::vector<const GazetteerEntry*> all_places(const Gazetteer& gazetteer) {
  std::vector<const GazetteerEntry*> places;
  for (const auto& [key, entry] : gazetteer.entries()) places.push_back(&entry);
  return places;
}

}  // namespace

void SimulationConfig::validate() const {
  if (!(duration_hours >= 0.0) || !std::isfinite(duration_hours)) {
    throw ValidationError("duration must be a non-negative number of hours");
  }
  if (demand_profile.size() != static_cast<std::size_t>(kSlotsPerDay) &&
      demand_profile.size() != static_cast<std::size_t>(7 * kSlotsPerDay)) {
    throw ValidationError("demand_profile needs 48 or 336 values");
  }
  for (double q : demand_profile) {
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("demand_profile values must lie in [0, 1]");
  }
  if (!(mean_dwell_min > 0.0)) throw ValidationError("mean_dwell_min must be positive");
  if (!(report_rate >= 0.0) || !(incident_rate >= 0.0)) {
    throw ValidationError("rates must be non-negative");
  }
  if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0)) {
    throw ValidationError("noise_fraction must lie in [0, 1]");
  }
}

double SimulationConfig::target_occupancy(TimestampMs t) const {
  const auto bucket = TimeBucket::of(t);
  if (demand_profile.size() == static_cast<std::size_t>(kSlotsPerDay)) {
    return demand_profile[static_cast<std::size_t>(bucket.slot)];
  }
  return demand_profile[static_cast<std::size_t>(bucket.index())];
}

TimestampMs SimulationConfig::end() const {
  return start + static_cast<TimestampMs>(std::llround(duration_hours * kHourMs));
}

SimulationConfig SimulationConfig::from_json(const json& document) {
  SimulationConfig config;
  try {
    config.seed = document.value("seed", config.seed);
    config.start = document.value("start_ms", config.start);
    config.duration_hours = document.value("duration_hours", config.duration_hours);
    config.blocks = document.value("blocks", config.blocks);
    config.demand_profile = document.value("demand_profile", config.demand_profile);
    config.mean_dwell_min = document.value("mean_dwell_min", config.mean_dwell_min);
    config.report_rate = document.value("report_rate", config.report_rate);
    config.incident_rate = document.value("incident_rate", config.incident_rate);
    config.noise_fraction = document.value("noise_fraction", config.noise_fraction);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed simulation config: ") + e.what());
  }
  config.validate();
  return config;
}

json SimulationConfig::to_json() const {
  return json{{"seed", seed},
              {"start_ms", start},
              {"duration_hours", duration_hours},
              {"blocks", blocks},
              {"demand_profile", demand_profile},
              {"mean_dwell_min", mean_dwell_min},
              {"report_rate", report_rate},
              {"incident_rate", incident_rate},
              {"noise_fraction", noise_fraction}};
}

int GroundTruth::occupancy_at(std::string_view block, TimestampMs t) const {
  auto it = occupancy.find(block);
  if (it == occupancy.end()) throw NotFoundError("simulated block", std::string(block));
  const auto& trace = it->second;
  auto after = std::upper_bound(trace.begin(), trace.end(), t,
                                [](TimestampMs value, const OccupancySample& s) { return value < s.t; });
  if (after == trace.begin()) return 0;
  return std::prev(after)->occupied;
}

ReportTemplates ReportTemplates::from_json(const json& document) {
  ReportTemplates templates;
  for (auto label : kAllLabels) {
    const std::string key(to_string(label));
    if (!document.contains(key) || !document.at(key).is_array() || document.at(key).empty()) {
      throw ValidationError("report templates lack entries for '" + key + "'");
    }
    templates.templates_[label] = document.at(key).get<std::vector<std::string>>();
  }
  return templates;
}

ReportTemplates ReportTemplates::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report templates '" + path + "'");
  return from_json(json::parse(in));
}

const std::vector<std::string>& ReportTemplates::for_label(Label label) const {
  return templates_.at(label);
}

ParkingSimulation simulate_parking(const SimulationConfig& config, const CityGraph& graph) {
  config.validate();
  std::vector<const Block*> blocks;
  if (config.blocks.empty()) {
    for (const auto& block : graph.blocks()) {
      if (block.metered) blocks.push_back(&block);
    }
  } else {
    for (const auto& id : config.blocks) {
      const auto* block = graph.find_block(id);
      if (!block) throw NotFoundError("block", id);
      if (!block->metered) throw ValidationError("block '" + id + "' is not metered");
      blocks.push_back(block);
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const Block* a, const Block* b) { return a->id < b->id; });
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  }

  struct Pending {
    TimestampMs t;
    std::size_t block;
    std::size_t order;
    ParkingEventKind kind;
  };
  std::vector<Pending> pending;
  ParkingSimulation out;
  const double horizon = config.duration_hours * kHourMs;
  const double dwell_ms = config.mean_dwell_min * kMinuteMsD;

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& block = *blocks[b];
    auto& trace = out.truth.occupancy[block.id];
    trace.push_back({config.start, 0});
    if (block.capacity <= 0) continue;

    Rng rng(stream_seed(config.seed, "parking/" + block.id));
    const double max_rate = static_cast<double>(block.capacity) / dwell_ms;  // arrivals per ms
    std::priority_queue<double, std::vector<double>, std::greater<>> departures;
    int occupied = 0;
    std::size_t order = 0;
    auto emit = [&](double offset, ParkingEventKind kind) {
      const TimestampMs t = config.start + static_cast<TimestampMs>(std::floor(offset));
      occupied += kind == ParkingEventKind::check_in ? 1 : -1;
      pending.push_back({t, b, order++, kind});
      trace.push_back({t, occupied});
    };

    double next_arrival = rng.exponential(1.0 / max_rate);
    while (true) {
      const double next_departure =
          departures.empty() ? std::numeric_limits<double>::infinity() : departures.top();
      if (next_departure <= next_arrival) {
        if (next_departure >= horizon) break;
        departures.pop();
        emit(next_departure, ParkingEventKind::check_out);
        continue;
      }
      if (next_arrival >= horizon) break;
      const double now = next_arrival;
      next_arrival = now + rng.exponential(1.0 / max_rate);
      const double target =
          config.target_occupancy(config.start + static_cast<TimestampMs>(std::floor(now)));
      const bool accepted = rng.uniform() < target;
      const double dwell = rng.exponential(dwell_ms);
      if (accepted && occupied < block.capacity) {
        emit(now, ParkingEventKind::check_in);
        departures.push(now + dwell);
      }
    }
  }

  std::stable_sort(pending.begin(), pending.end(), [&](const Pending& a, const Pending& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.block != b.block) return a.block < b.block;
    return a.order < b.order;
  });
  out.events.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    out.events.push_back(ParkingEvent{"pe-" + std::to_string(i), blocks[pending[i].block]->id,
                                      pending[i].kind, pending[i].t});
  }
  return out;
}

ReportSimulation simulate_reports(const SimulationConfig& config, const Gazetteer& gazetteer,
                                  const ReportTemplates& templates,
                                  const DurationTable& durations) {
  config.validate();
  if (gazetteer.empty()) throw ValidationError("report simulation needs a non-empty gazetteer");
  ReportSimulation out;
  const double horizon = config.duration_hours * kHourMs;
  const auto sites = incident_places(gazetteer);
  const auto places = all_places(gazetteer);

  if (config.incident_rate > 0.0) {
    Rng rng(stream_seed(config.seed, "incidents"));
    const double gap = kHourMs / config.incident_rate;
    for (double t = rng.exponential(gap); t < horizon; t += rng.exponential(gap)) {
      InjectedIncident incident;
      incident.id = "sim-inc-" + std::to_string(out.truth.incidents.size());
      incident.category = kIncidentCategories[rng.below(kIncidentCategories.size())];
      const auto* site = sites[rng.below(sites.size())];
      incident.place = site->key;
      incident.location = site->coordinate;
      incident.start = config.start + static_cast<TimestampMs>(std::floor(t));
      incident.duration_min = durations.minutes(incident.category);
      out.truth.incidents.push_back(std::move(incident));
    }
  }

  if (config.report_rate > 0.0) {
    Rng rng(stream_seed(config.seed, "reports"));
    const double gap = kHourMs / config.report_rate;
    std::size_t attempts = 0;
    for (double t = rng.exponential(gap); t < horizon; t += rng.exponential(gap), ++attempts) {
      const TimestampMs stamp = config.start + static_cast<TimestampMs>(std::floor(t));
      const bool chatter = rng.uniform() < config.noise_fraction;
      TextReport report;
      report.id = "r-" + std::to_string(attempts);
      report.timestamp = stamp;
      report.source = ReportSource::social;
      ReportTruth truth{report.id, Label::non_incident, {}};
      if (chatter) {
        const auto* place = places[rng.below(places.size())];
        report.text = render(rng.pick(templates.for_label(Label::non_incident)),
                             spoken_place(*place, rng));
      } else {
        std::vector<const InjectedIncident*> active;
        for (const auto& incident : out.truth.incidents) {
          if (incident.start <= stamp && stamp < incident.end()) active.push_back(&incident);
        }
        if (active.empty()) continue;
        const auto* incident = active[rng.below(active.size())];
        const auto* entry = gazetteer.find(incident->place);
        report.text = render(rng.pick(templates.for_label(incident->category)),
                             spoken_place(*entry, rng));
        truth.label = incident->category;
        truth.incident = incident->id;
      }
      out.reports.push_back(std::move(report));
      out.truth.reports.push_back(std::move(truth));
    }
  }
  return out;
}

std::vector<LabeledText> labeled_corpus(const SimulationConfig& config, const Gazetteer& gazetteer,
                                        const ReportTemplates& templates, std::size_t n) {
  if (n < 1) throw ValidationError("corpus size must be >= 1");
  if (gazetteer.empty()) throw ValidationError("corpus generation needs a non-empty gazetteer");
  Rng rng(stream_seed(config.seed, "corpus"));
  const auto sites = incident_places(gazetteer);
  const auto places = all_places(gazetteer);
  std::vector<LabeledText> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = kAllLabels[i % kAllLabels.size()];
    const auto& pool = is_incident(label) ? sites : places;
    const auto* place = pool[rng.below(pool.size())];
    corpus.push_back(
        LabeledText{render(rng.pick(templates.for_label(label)), spoken_place(*place, rng)), label});
  }
  rng.shuffle(corpus);
  return corpus;
}

}  // namespace citysvc
