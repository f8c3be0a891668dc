#pragma once

#include <map>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "citysvc/city_model.hpp"
#include "citysvc/message_bus.hpp"

namespace citysvc {

enum class ParkingEventKind { check_in, check_out };

std::string_view to_string(ParkingEventKind kind);
ParkingEventKind parse_parking_event_kind(std::string_view s);

struct ParkingEvent {
  std::string id;
  std::string block;
  ParkingEventKind kind = ParkingEventKind::check_in;
  TimestampMs timestamp = 0;

  friend bool operator==(const ParkingEvent&, const ParkingEvent&) = default;
};

struct BlockOccupancy {
  std::string block;
  int occupied = 0;
  int capacity = 0;
  TimestampMs last_update = 0;

  // 0 for capacity-0 blocks.
  double free_fraction() const;
};

inline constexpr TimestampMs kMinuteMs = 60'000;
inline constexpr TimestampMs kDayMs = 24 * 60 * kMinuteMs;
inline constexpr TimestampMs kBucketMs = 30 * kMinuteMs;
inline constexpr int kSlotsPerDay = 48;

// Weekday (0 = Monday) and 30-minute slot of a UTC millisecond timestamp.
struct TimeBucket {
  int weekday = 0;
  int slot = 0;

  static TimeBucket of(TimestampMs t);
  int index() const { return weekday * kSlotsPerDay + slot; }

  friend auto operator<=>(const TimeBucket&, const TimeBucket&) = default;
};

/// Live per-block occupancy for the metered blocks of a city.
///
/// Out-of-range events are clamped rather than rejected; each clamp is
/// counted so noisy feeds stay visible.
class OccupancyState {
 public:
  explicit OccupancyState(const CityGraph& graph);

  // Throws NotFoundError for unknown blocks, ValidationError for unmetered ones.
  const BlockOccupancy& apply(const ParkingEvent& event);

  const BlockOccupancy& at(std::string_view block) const;
  bool tracks(std::string_view block) const;
  const std::map<std::string, BlockOccupancy, std::less<>>& blocks() const { return blocks_; }

  std::int64_t clamped_check_ins() const { return clamped_check_ins_; }
  std::int64_t clamped_check_outs() const { return clamped_check_outs_; }
  std::int64_t anomalies() const { return clamped_check_ins_ + clamped_check_outs_; }
  std::int64_t events_applied() const { return events_applied_; }

 private:
  const CityGraph* graph_;
  std::map<std::string, BlockOccupancy, std::less<>> blocks_;
  std::int64_t clamped_check_ins_ = 0;
  std::int64_t clamped_check_outs_ = 0;
  std::int64_t events_applied_ = 0;
};

const BlockOccupancy& apply_event(OccupancyState& state, const ParkingEvent& event);

struct BucketStat {
  double mean = 0.0;
  std::int64_t count = 0;
};

// Running mean of the free fraction per (block, time bucket).
class OccupancyHistory {
 public:
  // Returns false (and records nothing) for capacity-0 blocks.
  bool record(const BlockOccupancy& occupancy, TimestampMs t);

  BucketStat stat(std::string_view block, TimeBucket bucket) const;
  std::size_t populated_buckets() const { return stats_.size(); }

 private:
  std::map<std::pair<std::string, int>, BucketStat, std::less<>> stats_;
};

bool record_snapshot(OccupancyHistory& history, const BlockOccupancy& occupancy, TimestampMs t);

// (1 - alpha) * historical mean + alpha * current free fraction; the current
// fraction alone when the bucket has no history. Throws ValidationError for
// capacity-0 or untracked blocks.
double predict_free_probability(const OccupancyHistory& history, const OccupancyState& state,
                                std::string_view block, TimestampMs t, double alpha = 0.5);

struct RankedBlock {
  std::string block;
  double p_free = 0.0;
  double walk_distance = 0.0;
  double score = 0.0;
};

using PredictionRanking = std::vector<RankedBlock>;

inline constexpr double kDefaultDecay = 1.0 / 300.0;

struct RankingOptions {
  double lambda = kDefaultDecay;  // per meter
  double alpha = 0.5;
};

// Metered blocks with capacity > 0 within `radius` of the destination,
// scored p_free * exp(-lambda * distance), best first, ties by block id.
PredictionRanking rank_blocks(const CityGraph& graph, const OccupancyHistory& history,
                              const OccupancyState& state, Coordinate destination, double radius,
                              TimestampMs t, const RankingOptions& options = {});

inline constexpr std::string_view kParkingTopic = "parking.events";

/// Thread-safe owner of live state and history.
///
/// Snapshots of every tracked block are folded into the history on a fixed
/// cadence of event time: the snapshot at boundary b reflects all events
/// with timestamp <= b.
class ParkingService {
 public:
  struct Options {
    TimestampMs snapshot_interval = 5 * kMinuteMs;
    RankingOptions ranking;
  };

  ParkingService(const CityGraph& graph, Options options);

  BlockOccupancy apply(const ParkingEvent& event);
  // Records pending snapshots for every boundary <= t.
  void advance_to(TimestampMs t);

  BlockOccupancy occupancy(std::string_view block) const;
  double predict(std::string_view block, TimestampMs t) const;
  double predict(std::string_view block, TimestampMs t, double alpha) const;
  PredictionRanking rank(Coordinate destination, double radius, TimestampMs t) const;

  std::int64_t anomalies() const;
  std::int64_t events_applied() const;
  const Options& options() const { return options_; }

 private:
  void snapshot_until(TimestampMs limit, bool inclusive);

  const CityGraph& graph_;
  Options options_;
  mutable std::shared_mutex mutex_;
  OccupancyState state_;
  OccupancyHistory history_;
  bool clock_started_ = false;
  TimestampMs next_snapshot_ = 0;
};

}  // namespace citysvc
