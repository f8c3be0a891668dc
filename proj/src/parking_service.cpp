#include "citysvc/parking_service.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "citysvc/errors.hpp"

namespace citysvc {

namespace {

TimestampMs floor_div(TimestampMs a, TimestampMs b) {
  TimestampMs q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr TimestampMs kMaxSnapshotBackfill = 7 * kDayMs;

}  // namespace

std::string_view to_string(ParkingEventKind kind) {
  return kind == ParkingEventKind::check_in ? "check_in" : "check_out";
}

ParkingEventKind parse_parking_event_kind(std::string_view s) {
  if (s == "check_in") return ParkingEventKind::check_in;
  if (s == "check_out") return ParkingEventKind::check_out;
  throw ValidationError("unknown parking event kind '" + std::string(s) + "'");
}

double BlockOccupancy::free_fraction() const {
  if (capacity <= 0) return 0.0;
  return static_cast<double>(capacity - occupied) / static_cast<double>(capacity);
}

TimeBucket TimeBucket::of(TimestampMs t) {
  const TimestampMs day = floor_div(t, kDayMs);
  const TimestampMs in_day = t - day * kDayMs;
  // 1970-01-01 was a Thursday.
  const auto weekday = static_cast<int>(((day + 3) % 7 + 7) % 7);
  return TimeBucket{weekday, static_cast<int>(in_day / kBucketMs)};
}

OccupancyState::OccupancyState(const CityGraph& graph) : graph_(&graph) {
  for (const auto& block : graph.blocks()) {
    if (block.metered) blocks_.emplace(block.id, BlockOccupancy{block.id, 0, block.capacity, 0});
  }
}

const BlockOccupancy& OccupancyState::apply(const ParkingEvent& event) {
  auto it = blocks_.find(event.block);
  if (it == blocks_.end()) {
    if (!graph_->find_block(event.block)) throw NotFoundError("block", event.block);
    throw ValidationError("block '" + event.block + "' is not metered");
  }
  auto& occupancy = it->second;
  if (event.kind == ParkingEventKind::check_in) {
    if (occupancy.occupied >= occupancy.capacity) {
      ++clamped_check_ins_;
    } else {
      ++occupancy.occupied;
    }
  } else {
    if (occupancy.occupied <= 0) {
      ++clamped_check_outs_;
    } else {
      --occupancy.occupied;
    }
  }
  occupancy.last_update = std::max(occupancy.last_update, event.timestamp);
  ++events_applied_;
  return occupancy;
}

const BlockOccupancy& OccupancyState::at(std::string_view block) const {
  auto it = blocks_.find(block);
  if (it == blocks_.end()) throw NotFoundError("metered block", std::string(block));
  return it->second;
}

bool OccupancyState::tracks(std::string_view block) const { return blocks_.contains(block); }

const BlockOccupancy& apply_event(OccupancyState& state, const ParkingEvent& event) {
  return state.apply(event);
}

bool OccupancyHistory::record(const BlockOccupancy& occupancy, TimestampMs t) {
  if (occupancy.capacity <= 0) return false;
  auto& stat = stats_[{occupancy.block, TimeBucket::of(t).index()}];
  ++stat.count;
  stat.mean += (occupancy.free_fraction() - stat.mean) / static_cast<double>(stat.count);
  return true;
}

BucketStat OccupancyHistory::stat(std::string_view block, TimeBucket bucket) const {
  auto it = stats_.find(std::pair<std::string, int>{std::string(block), bucket.index()});
  return it == stats_.end() ? BucketStat{} : it->second;
}

bool record_snapshot(OccupancyHistory& history, const BlockOccupancy& occupancy, TimestampMs t) {
  return history.record(occupancy, t);
}

double predict_free_probability(const OccupancyHistory& history, const OccupancyState& state,
                                std::string_view block, TimestampMs t, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (!state.tracks(block)) {
    throw ValidationError("block '" + std::string(block) + "' is not a metered block");
  }
  const auto& occupancy = state.at(block);
  if (occupancy.capacity <= 0) {
    throw ValidationError("block '" + std::string(block) + "' has no capacity to predict");
  }
  const double current = occupancy.free_fraction();
  const auto stat = history.stat(block, TimeBucket::of(t));
  if (stat.count == 0) return current;
  return std::clamp((1.0 - alpha) * stat.mean + alpha * current, 0.0, 1.0);
}

PredictionRanking rank_blocks(const CityGraph& graph, const OccupancyHistory& history,
                              const OccupancyState& state, Coordinate destination, double radius,
                              TimestampMs t, const RankingOptions& options) {
  PredictionRanking ranking;
  for (const auto& candidate : nearest_blocks(destination, radius, graph)) {
    const auto& block = *candidate.block;
    if (!block.metered || block.capacity <= 0 || !state.tracks(block.id)) continue;
    RankedBlock entry;
    entry.block = block.id;
    entry.p_free = predict_free_probability(history, state, block.id, t, options.alpha);
    entry.walk_distance = candidate.distance;
    entry.score = entry.p_free * std::exp(-options.lambda * entry.walk_distance);
    ranking.push_back(std::move(entry));
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedBlock& a, const RankedBlock& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.block < b.block;
  });
  return ranking;
}

ParkingService::ParkingService(const CityGraph& graph, Options options)
    : graph_(graph), options_(options), state_(graph) {
  if (options_.snapshot_interval <= 0) throw ValidationError("snapshot interval must be positive");
  if (!(options_.ranking.lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!(options_.ranking.alpha >= 0.0 && options_.ranking.alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1]");
  }
}

void ParkingService::snapshot_until(TimestampMs limit, bool inclusive) {
  if (!clock_started_) return;
  if (limit - next_snapshot_ > kMaxSnapshotBackfill) {
    const auto start = limit - kMaxSnapshotBackfill;
    next_snapshot_ = -floor_div(-start, options_.snapshot_interval) * options_.snapshot_interval;
  }
  while (inclusive ? next_snapshot_ <= limit : next_snapshot_ < limit) {
    for (const auto& [id, occupancy] : state_.blocks()) history_.record(occupancy, next_snapshot_);
    next_snapshot_ += options_.snapshot_interval;
  }
}

BlockOccupancy ParkingService::apply(const ParkingEvent& event) {
  std::unique_lock lock(mutex_);
  if (!clock_started_) {
    clock_started_ = true;
    next_snapshot_ = -floor_div(-event.timestamp, options_.snapshot_interval) *
                     options_.snapshot_interval;
  }
  snapshot_until(event.timestamp, false);
  return state_.apply(event);
}

void ParkingService::advance_to(TimestampMs t) {
  std::unique_lock lock(mutex_);
  snapshot_until(t, true);
}

BlockOccupancy ParkingService::occupancy(std::string_view block) const {
  std::shared_lock lock(mutex_);
  if (!state_.tracks(block)) {
    if (!graph_.find_block(block)) throw NotFoundError("block", std::string(block));
    throw ValidationError("block '" + std::string(block) + "' is not metered");
  }
  return state_.at(block);
}

double ParkingService::predict(std::string_view block, TimestampMs t) const {
  return predict(block, t, options_.ranking.alpha);
}

double ParkingService::predict(std::string_view block, TimestampMs t, double alpha) const {
  std::shared_lock lock(mutex_);
  return predict_free_probability(history_, state_, block, t, alpha);
}

PredictionRanking ParkingService::rank(Coordinate destination, double radius,
                                       TimestampMs t) const {
  std::shared_lock lock(mutex_);
  return rank_blocks(graph_, history_, state_, destination, radius, t, options_.ranking);
}

std::int64_t ParkingService::anomalies() const {
  std::shared_lock lock(mutex_);
  return state_.anomalies();
}

std::int64_t ParkingService::events_applied() const {
  std::shared_lock lock(mutex_);
  return state_.events_applied();
}

}  // namespace citysvc
