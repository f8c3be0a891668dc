#pragma once

#include <memory>
#include <string>

#include "citysvc/platform.hpp"

namespace httplib {
class Server;
}

namespace citysvc {

/// REST surface of a Platform.
///
///   GET  /health
///   GET  /blocks, /blocks/{id}
///   GET  /incidents/active?t=
///   POST /reports            (TextReport JSON)
///   POST /parking/events     (ParkingEvent JSON)
///   GET  /parking/ranking?x=&y=&radius=&t=
///   GET  /routes?from=&to=&t=&k=
///
/// Response bodies are the Platform query results serialized with dump();
/// errors are ApiError JSON.
class Gateway {
 public:
  Gateway(Platform& platform, std::string cors_origin = "*");
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Port 0 picks a free port. Throws Error when the address is unavailable.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  Platform& platform_;
  std::string cors_origin_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace citysvc
