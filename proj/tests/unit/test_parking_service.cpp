#include <random>

#include "doctest.h"

#include "citysvc/errors.hpp"
#include "citysvc/feed_simulator.hpp"
#include "citysvc/parking_service.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace citysvc;

namespace {

// One straight street x = 0..400 split into four blocks:
//   b10  capacity 10, metered
//   b20  capacity 10, metered
//   bz   capacity 0, metered
//   bu   capacity 10, not metered
CityGraph street() {
  std::vector<Node> nodes;
  std::vector<StreetSegment> edges;
  for (int i = 0; i <= 4; ++i) nodes.push_back({"p" + std::to_string(i), Coordinate{100.0 * i, 0}});
  for (int i = 0; i < 4; ++i) {
    edges.push_back({"s" + std::to_string(i), "p" + std::to_string(i), "p" + std::to_string(i + 1),
                     "Calle", 0.0, false});
  }
  std::vector<Block> blocks{
      {"b10", "s0", 50.0, {}, {}, 0, true},
      {"b20", "s1", 50.0, {}, {}, 0, true},
      {"bz", "s2", 3.0, {}, {}, 0, true},
      {"bu", "s3", 50.0, {}, {}, 0, false},
  };
  return CityGraph(std::move(nodes), std::move(edges), std::move(blocks), {});
}

ParkingEvent in(const std::string& block, TimestampMs t, std::string id = "e") {
  return ParkingEvent{std::move(id), block, ParkingEventKind::check_in, t};
}
ParkingEvent out(const std::string& block, TimestampMs t, std::string id = "e") {
  return ParkingEvent{std::move(id), block, ParkingEventKind::check_out, t};
}

}  // namespace

TEST_CASE("time buckets use UTC weekday and 30-minute slots") {
  const auto monday = TimeBucket::of(kReferenceStart);
  CHECK(monday.weekday == 0);
  CHECK(monday.slot == 0);
  CHECK(TimeBucket::of(kReferenceStart + kDayMs + 90 * kMinuteMs) == TimeBucket{1, 3});
  CHECK(TimeBucket::of(kReferenceStart + 6 * kDayMs + kDayMs - 1) == TimeBucket{6, 47});
  CHECK(TimeBucket::of(0) == TimeBucket{3, 0});   // Thursday 1970-01-01
  CHECK(TimeBucket::of(-1) == TimeBucket{2, 47});  // the Wednesday before
  CHECK(TimeBucket{6, 47}.index() == 335);
}

TEST_CASE("apply_event arithmetic and clamping") {
  const auto graph = street();
  OccupancyState state(graph);
  CHECK(state.blocks().size() == 3);  // metered only
  apply_event(state, in("b10", 1));
  apply_event(state, in("b10", 2));
  apply_event(state, in("b10", 3));
  const auto& occ = apply_event(state, out("b10", 4));
  CHECK(occ.occupied == 2);
  CHECK(occ.capacity == 10);
  CHECK(occ.last_update == 4);
  CHECK(occ.free_fraction() == doctest::Approx(0.8));

  const auto& empty = apply_event(state, out("b20", 5));
  CHECK(empty.occupied == 0);
  CHECK(state.anomalies() == 1);
  CHECK(state.clamped_check_outs() == 1);

  for (int i = 0; i < 12; ++i) apply_event(state, in("b20", 10 + i));
  CHECK(state.at("b20").occupied == 10);
  CHECK(state.clamped_check_ins() == 2);

  apply_event(state, in("bz", 30));
  CHECK(state.at("bz").occupied == 0);
  CHECK(state.at("bz").free_fraction() == 0.0);

  CHECK_THROWS_AS(apply_event(state, in("nowhere", 0)), NotFoundError);
  CHECK_THROWS_AS(apply_event(state, in("bu", 0)), ValidationError);
  CHECK(state.events_applied() == 18);
  CHECK(state.clamped_check_ins() == 3);
}

TEST_CASE("history keeps a running mean per bucket") {
  OccupancyHistory history;
  BlockOccupancy half{"b", 5, 10, 0};
  CHECK(record_snapshot(history, half, kReferenceStart));
  auto stat = history.stat("b", TimeBucket::of(kReferenceStart));
  CHECK(stat.mean == 0.5);
  CHECK(stat.count == 1);

  OccupancyHistory two;
  record_snapshot(two, BlockOccupancy{"b", 10, 10, 0}, kReferenceStart);
  record_snapshot(two, BlockOccupancy{"b", 0, 10, 0}, kReferenceStart + 10 * kMinuteMs);
  CHECK(two.stat("b", TimeBucket::of(kReferenceStart)).mean == 0.5);

  CHECK_FALSE(record_snapshot(history, BlockOccupancy{"z", 0, 0, 0}, 0));
  CHECK(history.stat("z", TimeBucket{}).count == 0);
}

TEST_CASE("streamed means equal batch recomputation") {
  std::mt19937_64 rng(4);
  OccupancyHistory history;
  std::map<std::pair<std::string, int>, std::vector<double>> raw;
  for (int i = 0; i < 5000; ++i) {
    const std::string block = "b" + std::to_string(rng() % 4);
    const int capacity = 1 + static_cast<int>(rng() % 20);
    const int occupied = static_cast<int>(rng() % (capacity + 1));
    const TimestampMs t = kReferenceStart + static_cast<TimestampMs>(rng() % (14 * kDayMs));
    record_snapshot(history, BlockOccupancy{block, occupied, capacity, t}, t);
    raw[{block, TimeBucket::of(t).index()}].push_back(
        static_cast<double>(capacity - occupied) / capacity);
  }
  CHECK(history.populated_buckets() == raw.size());
  for (const auto& [key, values] : raw) {
    const auto stat = history.stat(key.first, TimeBucket{key.second / kSlotsPerDay, key.second % kSlotsPerDay});
    CHECK(stat.count == static_cast<std::int64_t>(values.size()));
    CHECK(stat.mean == doctest::Approx(oracle::batch_mean(values)).epsilon(1e-12));
  }
}

TEST_CASE("predict_free_probability") {
  const auto graph = street();
  OccupancyState state(graph);
  OccupancyHistory history;

  CHECK(predict_free_probability(history, state, "b10", kReferenceStart, 0.5) == 1.0);

  // Historical mean 0.2: occupied 8 of 10.
  record_snapshot(history, BlockOccupancy{"b10", 8, 10, 0}, kReferenceStart);
  for (int i = 0; i < 4; ++i) apply_event(state, in("b10", i));  // current 0.6
  CHECK(predict_free_probability(history, state, "b10", kReferenceStart + 60000, 0.5) ==
        doctest::Approx(0.4));
  CHECK(predict_free_probability(history, state, "b10", kReferenceStart, 1.0) == doctest::Approx(0.6));
  CHECK(predict_free_probability(history, state, "b10", kReferenceStart, 0.0) == doctest::Approx(0.2));
  // Another bucket has no history.
  CHECK(predict_free_probability(history, state, "b10", kReferenceStart + kBucketMs, 0.5) ==
        doctest::Approx(0.6));

  CHECK_THROWS_AS(predict_free_probability(history, state, "bz", 0, 0.5), ValidationError);
  CHECK_THROWS_AS(predict_free_probability(history, state, "bu", 0, 0.5), ValidationError);
  CHECK_THROWS_AS(predict_free_probability(history, state, "b10", 0, 1.5), ValidationError);
}

TEST_CASE("rank_blocks") {
  const auto graph = street();
  OccupancyState state(graph);
  OccupancyHistory history;

  SUBCASE("single candidate") {
    const auto ranking = rank_blocks(graph, history, state, Coordinate{50, 0}, 10, 0);
    REQUIRE(ranking.size() == 1);
    CHECK(ranking[0].block == "b10");
    CHECK(ranking[0].p_free == 1.0);
    CHECK(ranking[0].walk_distance == 0.0);
    CHECK(ranking[0].score == 1.0);
  }
  SUBCASE("equal p_free: nearer first") {
    // b10 midpoint at 50, b20 at 150; destination at -50.
    const auto ranking = rank_blocks(graph, history, state, Coordinate{-50, 0}, 250, 0);
    REQUIRE(ranking.size() == 2);
    CHECK(ranking[0].block == "b10");
    CHECK(ranking[0].walk_distance == doctest::Approx(100));
    CHECK(ranking[1].walk_distance == doctest::Approx(200));
  }
  SUBCASE("capacity-0 and unmetered blocks are never candidates") {
    const auto ranking = rank_blocks(graph, history, state, Coordinate{200, 0}, 1000, 0);
    CHECK(ranking.size() == 2);
  }
  SUBCASE("exact ties fall back to block id") {
    const auto ranking = rank_blocks(graph, history, state, Coordinate{100, 0}, 60, 0);
    REQUIRE(ranking.size() == 2);
    CHECK(ranking[0].score == ranking[1].score);
    CHECK(ranking[0].block == "b10");
  }
  CHECK_THROWS_AS(rank_blocks(graph, history, state, Coordinate{}, 0, 0), ValidationError);
}

TEST_CASE("toy map ranking equals independent score recomputation") {
  const auto& graph = fixture::toy_map();
  SimulationConfig config;
  config.duration_hours = 3;
  const auto sim = simulate_parking(config, graph);
  ParkingService service(graph, ParkingService::Options{});
  for (const auto& e : sim.events) service.apply(e);
  const TimestampMs t = config.end();
  service.advance_to(t);

  const Coordinate destination{300, -300};
  const auto ranking = service.rank(destination, 250, t);
  REQUIRE(ranking.size() > 3);

  std::vector<std::tuple<double, std::string, double>> expected;
  for (const auto& b : graph.blocks()) {
    if (!b.metered || b.capacity == 0) continue;
    const auto& e = *graph.find_edge(b.segment);
    const auto& p = graph.find_node(e.from)->position;
    const auto& q = graph.find_node(e.to)->position;
    const double d = oracle::euclid(destination, Coordinate{(p.x + q.x) / 2, (p.y + q.y) / 2});
    if (d > 250) continue;
    const double p_free = service.predict(b.id, t);
    expected.push_back({-p_free * std::exp(-d / 300.0), b.id, d});
  }
  std::sort(expected.begin(), expected.end());
  REQUIRE(ranking.size() == expected.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    CHECK(ranking[i].block == std::get<1>(expected[i]));
    CHECK(ranking[i].score == doctest::Approx(-std::get<0>(expected[i])).epsilon(1e-12));
    CHECK(ranking[i].walk_distance == doctest::Approx(std::get<2>(expected[i])));
    if (i > 0) CHECK(ranking[i - 1].score >= ranking[i].score);
  }
}

TEST_CASE("parking service snapshots at interval boundaries, inclusive of the boundary") {
  const auto graph = street();
  ParkingService service(graph, ParkingService::Options{});
  const TimestampMs t0 = kReferenceStart;
  service.apply(in("b10", t0, "a"));             // starts the clock at t0
  service.apply(in("b10", t0 + 5 * kMinuteMs, "b"));  // on the next boundary
  service.advance_to(t0 + 5 * kMinuteMs);

  // Snapshots at t0 (1 car) and t0+5min (2 cars), both in slot 0.
  CHECK(service.predict("b10", t0, 0.0) == doctest::Approx((0.9 + 0.8) / 2));
  service.advance_to(t0 + 30 * kMinuteMs);
  // Slot 1 got the t0+30 snapshot only.
  CHECK(service.predict("b10", t0 + 30 * kMinuteMs, 0.0) == doctest::Approx(0.8));
  CHECK(service.events_applied() == 2);
  CHECK(service.occupancy("b10").occupied == 2);
  CHECK_THROWS_AS(service.occupancy("nowhere"), NotFoundError);
  CHECK_THROWS_AS(service.occupancy("bu"), ValidationError);
}

TEST_CASE("parking service option validation") {
  const auto graph = street();
  ParkingService::Options bad;
  bad.snapshot_interval = 0;
  CHECK_THROWS_AS(ParkingService(graph, bad), ValidationError);
  ParkingService::Options bad_alpha;
  bad_alpha.ranking.alpha = 2;
  CHECK_THROWS_AS(ParkingService(graph, bad_alpha), ValidationError);
}

TEST_CASE("replaying 10 000 simulator events reproduces ground truth") {
  const auto& graph = fixture::toy_map();
  SimulationConfig config;
  config.seed = 42;
  config.duration_hours = 24;
  config.demand_profile = std::vector<double>(kSlotsPerDay, 0.8);
  const auto sim = simulate_parking(config, graph);
  REQUIRE(sim.events.size() >= 10000);
  OccupancyState state(graph);
  for (std::size_t i = 0; i < 10000; ++i) apply_event(state, sim.events[i]);
  const TimestampMs cutoff = sim.events[9999].timestamp;
  // Events sharing the cutoff timestamp beyond index 9999 would be counted by
  // the ground truth; apply them too.
  for (std::size_t i = 10000; i < sim.events.size() && sim.events[i].timestamp == cutoff; ++i) {
    apply_event(state, sim.events[i]);
  }
  for (const auto& [block, occupancy] : state.blocks()) {
    CHECK(occupancy.occupied == sim.truth.occupancy_at(block, cutoff));
  }
  CHECK(state.anomalies() == 0);
}
