#include "citysvc/gateway.hpp"

#include <charconv>
#include <cmath>

#include "httplib.h"

#include "citysvc/errors.hpp"

namespace citysvc {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

std::string param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) {
    throw ApiError(400, "bad_request", std::string("missing query parameter '") + name + "'");
  }
  return req.get_param_value(name);
}

double number_param(const httplib::Request& req, const char* name) {
  const auto raw = param(req, name);
  double value = 0.0;
  const auto* end = raw.data() + raw.size();
  const auto [ptr, ec] = std::from_chars(raw.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ApiError(400, "bad_request", std::string("query parameter '") + name + "' must be a number");
  }
  return value;
}

std::int64_t integer_param(const httplib::Request& req, const char* name) {
  const auto raw = param(req, name);
  std::int64_t value = 0;
  const auto* end = raw.data() + raw.size();
  const auto [ptr, ec] = std::from_chars(raw.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ApiError(400, "bad_request", std::string("query parameter '") + name + "' must be an integer");
  }
  return value;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, "invalid_json", std::string("request body is not valid JSON: ") + e.what());
  }
}

template <typename Fn>
httplib::Server::Handler handle(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(fn(req).dump(), kJson);
      res.status = 200;
    } catch (const std::exception& e) {
      const auto error = to_api_error(e);
      res.status = error.http_status();
      res.set_content(error.to_json().dump(), kJson);
    }
  };
}

}  // namespace

Gateway::Gateway(Platform& platform, std::string cors_origin)
    : platform_(platform),
      cors_origin_(std::move(cors_origin)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Gateway::~Gateway() { stop(); }

void Gateway::install_routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", cors_origin_},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/health", handle([this](const auto&) { return platform_.health(); }));
  s.Get("/blocks", handle([this](const auto&) { return platform_.blocks(); }));
  s.Get(R"(/blocks/([^/]+))", handle([this](const httplib::Request& req) {
          return platform_.block(req.matches[1].str());
        }));
  s.Get("/incidents/active", handle([this](const httplib::Request& req) {
          return platform_.active_incidents(integer_param(req, "t"));
        }));
  s.Post("/reports", handle([this](const httplib::Request& req) {
           return platform_.submit_report(parse_body(req));
         }));
  s.Post("/parking/events", handle([this](const httplib::Request& req) {
           return platform_.submit_parking_event(parse_body(req));
         }));
  s.Get("/parking/ranking", handle([this](const httplib::Request& req) {
          return platform_.parking_ranking(number_param(req, "x"), number_param(req, "y"),
                                           number_param(req, "radius"), integer_param(req, "t"));
        }));
  s.Get("/routes", handle([this](const httplib::Request& req) {
          const auto k = req.has_param("k") ? integer_param(req, "k") : 3;
          if (k < 1 || k > 100) throw ApiError(400, "bad_request", "k must lie in [1, 100]");
          return platform_.routes(param(req, "from"), param(req, "to"), integer_param(req, "t"),
                                  static_cast<int>(k));
        }));

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const ApiError error(res.status, res.status == 404 ? "not_found" : "bad_request",
                         "no route for " + req.method + " " + req.path);
    res.set_content(error.to_json().dump(), kJson);
    return httplib::Server::HandlerResponse::Handled;
  });
}

int Gateway::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind to " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  return port;
}

void Gateway::serve() { server_->listen_after_bind(); }

void Gateway::stop() {
  if (server_) server_->stop();
}

void Gateway::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace citysvc
