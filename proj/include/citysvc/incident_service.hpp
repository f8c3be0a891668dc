#pragma once

#include <array>
#include <atomic>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citysvc/city_model.hpp"
#include "citysvc/message_bus.hpp"
#include "json.hpp"

namespace citysvc {

// Classifier labels. Everything except non_incident is an incident category.
enum class Label { accident, road_closure, construction, congestion, hazard, non_incident };

inline constexpr std::array<Label, 5> kIncidentCategories = {
    Label::accident, Label::road_closure, Label::construction, Label::congestion, Label::hazard};
inline constexpr std::array<Label, 6> kAllLabels = {
    Label::accident,   Label::road_closure, Label::construction,
    Label::congestion, Label::hazard,       Label::non_incident};

std::string_view to_string(Label label);
Label parse_label(std::string_view s);
inline bool is_incident(Label label) { return label != Label::non_incident; }

// Validity window in minutes for each incident category.
class DurationTable {
 public:
  // Requires a positive entry for every incident category.
  static DurationTable from_json(const nlohmann::json& document);
  static DurationTable from_file(const std::string& path);

  int minutes(Label category) const;
  nlohmann::json to_json() const;

 private:
  std::array<int, kIncidentCategories.size()> minutes_{};
};

enum class ReportSource { social, municipal };

std::string_view to_string(ReportSource source);
ReportSource parse_report_source(std::string_view s);

struct TextReport {
  std::string id;
  std::string text;
  TimestampMs timestamp = 0;
  ReportSource source = ReportSource::social;
  // Municipal notices carry their category; social reports are classified.
  std::optional<Label> category;
};

struct Incident {
  std::string id;
  Label category = Label::accident;
  Coordinate location;
  TimestampMs start = 0;
  int duration_min = 0;
  double confidence = 0.0;
  std::string source_report;

  TimestampMs end() const { return start + static_cast<TimestampMs>(duration_min) * 60000; }
  // Half-open: [start, start + duration).
  bool active_at(TimestampMs t) const { return start <= t && t < end(); }

  friend bool operator==(const Incident&, const Incident&) = default;
};

// Lowercased, accent-folded, punctuation-stripped words of length >= 2.
std::vector<std::string> tokenize(std::string_view text);

struct LabeledText {
  std::string text;
  Label label = Label::non_incident;
};

struct Classification {
  Label label = Label::non_incident;
  double confidence = 0.0;
  // Posterior per trained class, in class order.
  std::vector<std::pair<Label, double>> posteriors;
  // Natural-log posteriors, same order; exact where posteriors underflow.
  std::vector<std::pair<Label, double>> log_posteriors;
};

/// Multinomial naive Bayes over unigram tokens with additive smoothing.
///
/// Parameters are derived from integer counts, so training is independent of
/// corpus order. Tokens outside the training vocabulary are ignored at
/// classification time; in-vocabulary tokens never seen with a class get the
/// smoothed probability alpha / (N_c + alpha * |V|).
class ClassifierModel {
 public:
  // Classes are the labels present in the corpus unless `classes` is given,
  // in which case each of them needs at least one example.
  static ClassifierModel train(std::span<const LabeledText> corpus, double alpha = 1.0,
                               std::optional<std::vector<Label>> classes = std::nullopt);

  Classification classify(std::string_view text) const;

  const std::vector<Label>& classes() const { return classes_; }
  const std::map<std::string, std::size_t>& vocabulary() const { return vocabulary_; }
  double alpha() const { return alpha_; }
  double log_prior(std::size_t class_index) const { return log_priors_[class_index]; }
  double log_likelihood(std::size_t class_index, std::size_t token_index) const;
  std::int64_t doc_count(std::size_t class_index) const { return doc_counts_[class_index]; }
  std::int64_t token_count(std::size_t class_index, std::size_t token_index) const;

  nlohmann::json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& document);

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;

 private:
  ClassifierModel() = default;
  void derive_parameters();

  double alpha_ = 1.0;
  std::vector<Label> classes_;
  std::map<std::string, std::size_t> vocabulary_;
  std::vector<std::int64_t> doc_counts_;
  std::vector<std::vector<std::int64_t>> token_counts_;  // [class][token]
  std::vector<double> log_priors_;
  std::vector<std::vector<double>> log_likelihoods_;  // [class][token]
};

ClassifierModel train_classifier(std::span<const LabeledText> corpus, double smoothing_alpha = 1.0);
Classification classify(const ClassifierModel& model, std::string_view text);

struct LocationMatch {
  const GazetteerEntry* entry = nullptr;
  std::size_t first_word = 0;
  std::size_t word_count = 0;
};

// Scans word n-grams (n <= 4) of `text` for gazetteer keys. Intersections
// written "X y Z", "X & Z", "X e Z" or "X esquina Z" are tried before plain
// keys; the longest match wins, then the earliest.
std::optional<LocationMatch> match_location(std::string_view text, const Gazetteer& gazetteer);
std::optional<Coordinate> extract_location(std::string_view text, const Gazetteer& gazetteer);

/// Thread-safe incident repository. Readers see each incident atomically.
class IncidentStore {
 public:
  // Throws StoreError when the id is already stored.
  void insert(const Incident& incident);

  std::vector<Incident> active(TimestampMs t) const;
  std::vector<Incident> all() const;
  std::optional<Incident> find(std::string_view id) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Incident, std::less<>> incidents_;
};

// Incidents active at t, sorted by start then id.
std::vector<Incident> active_incidents(const IncidentStore& store, TimestampMs t);

struct IngestOptions {
  double confidence_threshold = 0.6;
};

struct IngestMetrics {
  std::atomic<std::int64_t> reports{0};
  std::atomic<std::int64_t> detected{0};
  std::atomic<std::int64_t> dropped_non_incident{0};
  std::atomic<std::int64_t> dropped_low_confidence{0};
  std::atomic<std::int64_t> dropped_unlocated{0};

  nlohmann::json to_json() const;
};

inline constexpr std::string_view kIncidentsTopic = "incidents.detected";
inline constexpr std::string_view kReportsTopic = "reports.raw";

/// Classify, geolocate, and persist citizen reports.
class IncidentService {
 public:
  IncidentService(const ClassifierModel& model, const Gazetteer& gazetteer, DurationTable durations,
                  IngestOptions options = {}, MessageBus* bus = nullptr);

  // Returns the stored incident, or nullopt when the report is filtered out.
  // A store failure propagates as StoreError.
  std::optional<Incident> ingest(const TextReport& report);

  IncidentStore& store() { return store_; }
  const IncidentStore& store() const { return store_; }
  const IngestMetrics& metrics() const { return metrics_; }
  const IngestOptions& options() const { return options_; }
  const DurationTable& durations() const { return durations_; }

 private:
  const ClassifierModel& model_;
  const Gazetteer& gazetteer_;
  DurationTable durations_;
  IngestOptions options_;
  MessageBus* bus_;
  IncidentStore store_;
  IngestMetrics metrics_;
};

}  // namespace citysvc
