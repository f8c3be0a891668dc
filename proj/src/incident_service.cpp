#include "citysvc/incident_service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "citysvc/errors.hpp"
#include "citysvc/serialization.hpp"
#include "citysvc/text.hpp"

namespace citysvc {

using nlohmann::json;

std::string_view to_string(Label label) {
  switch (label) {
    case Label::accident: return "accident";
    case Label::road_closure: return "road_closure";
    case Label::construction: return "construction";
    case Label::congestion: return "congestion";
    case Label::hazard: return "hazard";
    case Label::non_incident: return "non_incident";
  }
  return "non_incident";
}

Label parse_label(std::string_view s) {
  for (auto label : kAllLabels) {
    if (to_string(label) == s) return label;
  }
  throw ValidationError("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(ReportSource source) {
  return source == ReportSource::municipal ? "municipal" : "social";
}

ReportSource parse_report_source(std::string_view s) {
  if (s == "social") return ReportSource::social;
  if (s == "municipal") return ReportSource::municipal;
  throw ValidationError("unknown report source '" + std::string(s) + "'");
}

DurationTable DurationTable::from_json(const json& document) {
  if (!document.is_object()) throw ValidationError("duration table must be a JSON object");
  DurationTable table;
  for (std::size_t i = 0; i < kIncidentCategories.size(); ++i) {
    const std::string key(to_string(kIncidentCategories[i]));
    if (!document.contains(key) || !document.at(key).is_number_integer()) {
      throw ValidationError("duration table lacks an integer entry for '" + key + "'");
    }
    const int minutes = document.at(key).get<int>();
    if (minutes <= 0) throw ValidationError("duration for '" + key + "' must be positive");
    table.minutes_[i] = minutes;
  }
  return table;
}

DurationTable DurationTable::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open duration table '" + path + "'");
  return from_json(json::parse(in));
}

int DurationTable::minutes(Label category) const {
  if (!is_incident(category)) throw ValidationError("non_incident has no duration");
  return minutes_[static_cast<std::size_t>(category)];
}

json DurationTable::to_json() const {
  json out = json::object();
  for (std::size_t i = 0; i < kIncidentCategories.size(); ++i) {
    out[std::string(to_string(kIncidentCategories[i]))] = minutes_[i];
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto words = text::words(text);
  std::erase_if(words, [](const std::string& w) { return w.size() < 2; });
  return words;
}

ClassifierModel ClassifierModel::train(std::span<const LabeledText> corpus, double alpha,
                                       std::optional<std::vector<Label>> classes) {
  if (corpus.empty()) throw ValidationError("training corpus is empty");
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw ValidationError("smoothing alpha must be positive");
  }
  ClassifierModel model;
  model.alpha_ = alpha;
  if (classes) {
    model.classes_ = *classes;
  } else {
    for (const auto& doc : corpus) model.classes_.push_back(doc.label);
  }
  std::sort(model.classes_.begin(), model.classes_.end());
  model.classes_.erase(std::unique(model.classes_.begin(), model.classes_.end()),
                       model.classes_.end());

  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(corpus.size());
  for (const auto& doc : corpus) {
    tokenized.push_back(tokenize(doc.text));
    for (const auto& token : tokenized.back()) model.vocabulary_.emplace(token, 0);
  }
  std::size_t index = 0;
  for (auto& [token, slot] : model.vocabulary_) slot = index++;

  const std::size_t n_classes = model.classes_.size();
  model.doc_counts_.assign(n_classes, 0);
  model.token_counts_.assign(n_classes, std::vector<std::int64_t>(model.vocabulary_.size(), 0));
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto it = std::find(model.classes_.begin(), model.classes_.end(), corpus[d].label);
    if (it == model.classes_.end()) {
      throw ValidationError("corpus label '" + std::string(to_string(corpus[d].label)) +
                            "' is not among the declared classes");
    }
    const auto c = static_cast<std::size_t>(it - model.classes_.begin());
    ++model.doc_counts_[c];
    for (const auto& token : tokenized[d]) ++model.token_counts_[c][model.vocabulary_.at(token)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (model.doc_counts_[c] == 0) {
      throw ValidationError("class '" + std::string(to_string(model.classes_[c])) +
                            "' has no training examples");
    }
  }
  model.derive_parameters();
  return model;
}

void ClassifierModel::derive_parameters() {
  const std::size_t n_classes = classes_.size();
  const double vocab = static_cast<double>(vocabulary_.size());
  std::int64_t total_docs = 0;
  for (auto n : doc_counts_) total_docs += n;
  log_priors_.assign(n_classes, 0.0);
  log_likelihoods_.assign(n_classes, std::vector<double>(vocabulary_.size(), 0.0));
  for (std::size_t c = 0; c < n_classes; ++c) {
    log_priors_[c] = std::log(static_cast<double>(doc_counts_[c]) / static_cast<double>(total_docs));
    std::int64_t class_tokens = 0;
    for (auto n : token_counts_[c]) class_tokens += n;
    const double denominator = static_cast<double>(class_tokens) + alpha_ * vocab;
    for (std::size_t v = 0; v < vocabulary_.size(); ++v) {
      log_likelihoods_[c][v] =
          std::log((static_cast<double>(token_counts_[c][v]) + alpha_) / denominator);
    }
  }
}

double ClassifierModel::log_likelihood(std::size_t class_index, std::size_t token_index) const {
  return log_likelihoods_.at(class_index).at(token_index);
}

std::int64_t ClassifierModel::token_count(std::size_t class_index, std::size_t token_index) const {
  return token_counts_.at(class_index).at(token_index);
}

Classification ClassifierModel::classify(std::string_view text) const {
  const auto tokens = tokenize(text);
  const std::size_t n_classes = classes_.size();
  std::vector<double> scores(log_priors_);
  for (const auto& token : tokens) {
    auto it = vocabulary_.find(token);
    if (it == vocabulary_.end()) continue;
    for (std::size_t c = 0; c < n_classes; ++c) scores[c] += log_likelihoods_[c][it->second];
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - top);
  const double log_norm = top + std::log(sum);

  Classification result;
  for (std::size_t c = 0; c < n_classes; ++c) {
    result.log_posteriors.emplace_back(classes_[c], scores[c] - log_norm);
    result.posteriors.emplace_back(classes_[c], std::exp(scores[c] - log_norm));
  }
  if (tokens.empty()) {
    result.label = Label::non_incident;
    for (const auto& [label, p] : result.posteriors) {
      if (label == Label::non_incident) result.confidence = p;
    }
    return result;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  result.label = classes_[best];
  result.confidence = std::clamp(result.posteriors[best].second, 0.0, 1.0);
  return result;
}

json ClassifierModel::to_json() const {
  json classes = json::array();
  for (auto label : classes_) classes.push_back(std::string(to_string(label)));
  json vocabulary = json::array();
  for (const auto& [token, index] : vocabulary_) vocabulary.push_back(token);
  return json{{"alpha", alpha_},
              {"classes", classes},
              {"doc_counts", doc_counts_},
              {"vocabulary", vocabulary},
              {"token_counts", token_counts_}};
}

ClassifierModel ClassifierModel::from_json(const json& document) {
  ClassifierModel model;
  try {
    model.alpha_ = document.at("alpha").get<double>();
    for (const auto& label : document.at("classes")) {
      model.classes_.push_back(parse_label(label.get<std::string>()));
    }
    std::size_t index = 0;
    for (const auto& token : document.at("vocabulary")) {
      model.vocabulary_.emplace(token.get<std::string>(), index++);
    }
    model.doc_counts_ = document.at("doc_counts").get<std::vector<std::int64_t>>();
    model.token_counts_ = document.at("token_counts").get<std::vector<std::vector<std::int64_t>>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed classifier model: ") + e.what());
  }
  const bool shape_ok =
      model.alpha_ > 0.0 && !model.classes_.empty() &&
      model.doc_counts_.size() == model.classes_.size() &&
      model.token_counts_.size() == model.classes_.size() &&
      model.vocabulary_.size() == document.at("vocabulary").size() &&
      std::all_of(model.token_counts_.begin(), model.token_counts_.end(),
                  [&](const auto& row) { return row.size() == model.vocabulary_.size(); }) &&
      std::all_of(model.doc_counts_.begin(), model.doc_counts_.end(),
                  [](std::int64_t n) { return n > 0; });
  if (!shape_ok) throw ValidationError("malformed classifier model: inconsistent shapes");
  model.derive_parameters();
  return model;
}

ClassifierModel train_classifier(std::span<const LabeledText> corpus, double smoothing_alpha) {
  return ClassifierModel::train(corpus, smoothing_alpha);
}

Classification classify(const ClassifierModel& model, std::string_view text) {
  return model.classify(text);
}

namespace {

constexpr std::size_t kMaxGram = 4;

bool is_connector(const std::string& word) {
  return word == "y" || word == "e" || word == "&" || word == "esquina" || word == "esq";
}

}  // namespace

std::optional<LocationMatch> match_location(std::string_view text, const Gazetteer& gazetteer) {
  const auto words = text::words_keep_ampersand(text);
  const std::size_t n = words.size();

  std::optional<LocationMatch> best;
  auto consider = [&](const GazetteerEntry* entry, std::size_t first, std::size_t count) {
    if (!entry) return;
    if (!best || count > best->word_count) best = LocationMatch{entry, first, count};
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 1; a <= kMaxGram && i + a < n; ++a) {
      const std::size_t connector = i + a;
      if (!is_connector(words[connector])) continue;
      const std::string left = text::join(words, " ", i, connector);
      for (std::size_t b = 1; b <= kMaxGram && connector + b < n; ++b) {
        const std::string right = text::join(words, " ", connector + 1, connector + 1 + b);
        const auto* entry = gazetteer.find(left + " & " + right);
        if (entry && entry->kind == PlaceKind::intersection) consider(entry, i, a + b + 1);
      }
    }
  }
  if (best) return best;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t len = 1; len <= kMaxGram && i + len <= n; ++len) {
      const auto* entry = gazetteer.find(text::join(words, " ", i, i + len));
      if (entry && entry->kind != PlaceKind::intersection) consider(entry, i, len);
    }
  }
  return best;
}

std::optional<Coordinate> extract_location(std::string_view text, const Gazetteer& gazetteer) {
  if (auto match = match_location(text, gazetteer)) return match->entry->coordinate;
  return std::nullopt;
}

void IncidentStore::insert(const Incident& incident) {
  std::unique_lock lock(mutex_);
  if (!incidents_.emplace(incident.id, incident).second) {
    throw StoreError("incident '" + incident.id + "' already stored");
  }
}

std::vector<Incident> IncidentStore::active(TimestampMs t) const {
  std::vector<Incident> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, incident] : incidents_) {
      if (incident.active_at(t)) out.push_back(incident);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Incident& a, const Incident& b) {
    return a.start != b.start ? a.start < b.start : a.id < b.id;
  });
  return out;
}

std::vector<Incident> IncidentStore::all() const {
  std::shared_lock lock(mutex_);
  std::vector<Incident> out;
  for (const auto& [id, incident] : incidents_) out.push_back(incident);
  return out;
}

std::optional<Incident> IncidentStore::find(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = incidents_.find(id);
  if (it == incidents_.end()) return std::nullopt;
  return it->second;
}

std::size_t IncidentStore::size() const {
  std::shared_lock lock(mutex_);
  return incidents_.size();
}

std::vector<Incident> active_incidents(const IncidentStore& store, TimestampMs t) {
  return store.active(t);
}

json IngestMetrics::to_json() const {
  return json{{"reports", reports.load()},
              {"detected", detected.load()},
              {"dropped_non_incident", dropped_non_incident.load()},
              {"dropped_low_confidence", dropped_low_confidence.load()},
              {"dropped_unlocated", dropped_unlocated.load()}};
}

IncidentService::IncidentService(const ClassifierModel& model, const Gazetteer& gazetteer,
                                 DurationTable durations, IngestOptions options, MessageBus* bus)
    : model_(model),
      gazetteer_(gazetteer),
      durations_(durations),
      options_(options),
      bus_(bus) {
  if (!(options_.confidence_threshold >= 0.0 && options_.confidence_threshold <= 1.0)) {
    throw ValidationError("confidence threshold must lie in [0, 1]");
  }
  if (bus_) bus_->create_topic(kIncidentsTopic);
}

std::optional<Incident> IncidentService::ingest(const TextReport& report) {
  if (report.text.empty()) throw ValidationError("report '" + report.id + "' has empty text");
  ++metrics_.reports;

  Label category = Label::non_incident;
  double confidence = 0.0;
  if (report.source == ReportSource::municipal && report.category) {
    category = *report.category;
    confidence = 1.0;
  } else {
    const auto result = model_.classify(report.text);
    category = result.label;
    confidence = result.confidence;
  }
  if (!is_incident(category)) {
    ++metrics_.dropped_non_incident;
    return std::nullopt;
  }
  if (confidence < options_.confidence_threshold) {
    ++metrics_.dropped_low_confidence;
    return std::nullopt;
  }
  const auto location = extract_location(report.text, gazetteer_);
  if (!location) {
    ++metrics_.dropped_unlocated;
    return std::nullopt;
  }

  Incident incident;
  incident.id = "inc-" + report.id;
  incident.category = category;
  incident.location = *location;
  incident.start = report.timestamp;
  incident.duration_min = durations_.minutes(category);
  incident.confidence = confidence;
  incident.source_report = report.id;
  store_.insert(incident);
  ++metrics_.detected;
  if (bus_) bus_->publish(kIncidentsTopic, to_json(incident).dump(), incident.start);
  return incident;
}

}  // namespace citysvc
