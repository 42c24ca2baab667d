#pragma once

// Service core behind the HTTP endpoints, usable without a network:
//
//   POST /session            {"scenario", "goal"?, "seed"?, "noisy"?, "error_rate"?,
//                             "motion"?, "randomize"?}  -> {"id", "status", "menu"}
//   GET  /session/{id}       status
//   GET  /menu/{id}          menu view
//   POST /command/{id}       {"command": "select"}  -> {"decoded", "menu", "status"}
//   POST /world/{id}/move    {"object", "location"}  (unexpected change)
//   GET  /world[?session=id] world snapshot (latest session when omitted)
//   GET  /events[?session=id] newline-delimited JSON records with a per-connection
//                            gapless "seq"
//
// Errors are {"error": {"code": ..., "message": ...}}.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "bciassist/simulator.hpp"

namespace bciassist {

// Fan-out of event records to any number of subscribers.
class EventHub {
 public:
  class Queue {
   public:
    std::optional<nlohmann::json> wait_pop(std::chrono::milliseconds timeout);
    void push(const nlohmann::json& j);
    void close();
    bool closed() const;

   private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<nlohmann::json> items_;
    bool closed_ = false;
  };

  std::shared_ptr<Queue> subscribe();
  void publish(const nlohmann::json& record);
  void close_all();

 private:
  std::mutex mutex_;
  std::vector<std::weak_ptr<Queue>> queues_;
};

struct GatewayConfig {
  std::string default_scenario = "fetch_and_carry";
  std::uint64_t seed = 1;
};

int http_status(ErrorCode code);
nlohmann::json error_body(const Error& e);

class Gateway {
 public:
  explicit Gateway(GatewayConfig config = {});

  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json session_status(const std::string& id) const;
  nlohmann::json menu(const std::string& id) const;
  nlohmann::json command(const std::string& id, const nlohmann::json& request);
  nlohmann::json move_object(const std::string& id, const nlohmann::json& request);
  nlohmann::json world(const std::optional<std::string>& id) const;

  EventHub& events() { return hub_; }

 private:
  struct Entry {
    mutable std::mutex mutex;  // serializes commands of one session
    std::unique_ptr<AssistSession> session;
    bool noisy = false;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  std::shared_ptr<const Scenario> scenario(const std::string& name) const;

  GatewayConfig config_;
  EventHub hub_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  mutable std::map<std::string, std::shared_ptr<const Scenario>> scenarios_;
  std::string latest_;
  std::uint64_t next_id_ = 1;
};

// HTTP transport. `listen` blocks; `start` runs it on a background thread.
class HttpServer {
 public:
  explicit HttpServer(Gateway& gateway);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// BCISIM_BIND ("host:port" or "port"), default 127.0.0.1:8080.
std::pair<std::string, int> bind_address_from_env();

}  // namespace bciassist
