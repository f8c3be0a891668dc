#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "citysvc/city_model.hpp"
#include "citysvc/config.hpp"
#include "citysvc/errors.hpp"
#include "citysvc/feed_simulator.hpp"
#include "citysvc/incident_service.hpp"
#include "citysvc/message_bus.hpp"
#include "citysvc/parking_service.hpp"
#include "citysvc/route_service.hpp"
#include "json.hpp"

namespace citysvc {

/// Error surfaced by the service layer. `code` is one of:
/// bad_request, invalid_json, not_found, node_not_found, block_not_found,
/// block_not_metered, conflict, internal.
class ApiError : public Error {
 public:
  ApiError(int http_status, std::string code, const std::string& message)
      : Error(message), http_status_(http_status), code_(std::move(code)) {}

  int http_status() const noexcept { return http_status_; }
  const std::string& code() const noexcept { return code_; }
  nlohmann::json to_json() const;

 private:
  int http_status_;
  std::string code_;
};

// Maps library exceptions onto ApiError.
ApiError to_api_error(const std::exception& e);

/// The assembled platform: city model, bus, and the mobility services.
///
/// Producers publish onto "parking.events" and "reports.raw"; the platform
/// drains those topics into the services. Query methods return exactly the
/// JSON bodies the gateway sends. Queries share a lock; ingestion is
/// exclusive, so every query sees a consistent snapshot.
class Platform {
 public:
  explicit Platform(PlatformConfig config);
  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;
  ~Platform();

  const PlatformConfig& config() const { return config_; }
  const CityGraph& graph() const { return *graph_; }
  const ClassifierModel& model() const { return *model_; }
  const ReportTemplates& templates() const { return *templates_; }
  const DurationTable& durations() const { return durations_; }
  const SimulationConfig& simulation() const { return simulation_; }
  MessageBus& bus() { return bus_; }
  const IncidentService& incidents() const { return *incidents_; }
  const ParkingService& parking() const { return *parking_; }
  ParkingService& parking() { return *parking_; }

  // Publish onto the bus and drain it into the services.
  nlohmann::json submit_report(const nlohmann::json& body);
  nlohmann::json submit_parking_event(const nlohmann::json& body);

  // Bulk producers publish directly on the bus, then call pump().
  void pump();
  void advance_clock(TimestampMs t);

  nlohmann::json health() const;
  nlohmann::json blocks() const;
  nlohmann::json block(const std::string& id) const;
  nlohmann::json active_incidents(TimestampMs t) const;
  nlohmann::json parking_ranking(double x, double y, double radius, TimestampMs t) const;
  nlohmann::json routes(const std::string& from, const std::string& to, TimestampMs t, int k) const;

 private:
  struct Delivery {
    std::optional<Incident> incident;
    std::optional<BlockOccupancy> occupancy;
  };
  void drain_locked(Delivery* last);

  PlatformConfig config_;
  std::unique_ptr<CityGraph> graph_;
  std::unique_ptr<ClassifierModel> model_;
  std::unique_ptr<ReportTemplates> templates_;
  DurationTable durations_;
  SimulationConfig simulation_;
  MessageBus bus_;
  std::unique_ptr<IncidentService> incidents_;
  std::unique_ptr<ParkingService> parking_;
  IncidentInfluence influence_;
  SubscriptionId report_sub_ = 0;
  SubscriptionId parking_sub_ = 0;
  mutable std::shared_mutex state_mutex_;
};

}  // namespace citysvc
