#include "bciassist/gateway.hpp"

#include <cstdlib>

#include "httplib.h"

namespace bciassist {

using nlohmann::json;

// ---- event hub ------------------------------------------------------------------

std::optional<json> EventHub::Queue::wait_pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
  if (items_.empty()) return std::nullopt;
  json j = std::move(items_.front());
  items_.pop_front();
  return j;
}

void EventHub::Queue::push(const json& j) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    items_.push_back(j);
  }
  cv_.notify_one();
}

void EventHub::Queue::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventHub::Queue::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::shared_ptr<EventHub::Queue> EventHub::subscribe() {
  auto q = std::make_shared<Queue>();
  std::lock_guard lock(mutex_);
  queues_.push_back(q);
  return q;
}

void EventHub::publish(const json& record) {
  std::lock_guard lock(mutex_);
  std::erase_if(queues_, [&](const std::weak_ptr<Queue>& w) {
    auto q = w.lock();
    if (!q) return true;
    q->push(record);
    return false;
  });
}

void EventHub::close_all() {
  std::lock_guard lock(mutex_);
  for (auto& w : queues_) {
    if (auto q = w.lock()) q->close();
  }
  queues_.clear();
}

// ---- service core ---------------------------------------------------------------

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::unknown_type:
    case ErrorCode::unknown_symbol:
    case ErrorCode::parse_error: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::session_finished:
    case ErrorCode::precondition_failed: return 409;
    case ErrorCode::infeasible: return 422;
    case ErrorCode::io_error: return 500;
  }
  return 500;
}

json error_body(const Error& e) {
  return {{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) {}

std::shared_ptr<const Scenario> Gateway::scenario(const std::string& name) const {
  // names only; clients never get to pick arbitrary files
  if (name.empty() || name.find_first_of("/\\") != std::string::npos || name.find("..") != std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "scenario must be a bundled scenario name");
  }
  std::lock_guard lock(mutex_);
  auto it = scenarios_.find(name);
  if (it != scenarios_.end()) return it->second;
  std::filesystem::path p = data_dir() / "scenarios" / (name + ".json");
  if (!std::filesystem::exists(p)) throw Error(ErrorCode::not_found, "unknown scenario '" + name + "'");
  auto sc = std::make_shared<const Scenario>(load_scenario(p));
  scenarios_[name] = sc;
  return sc;
}

std::shared_ptr<Gateway::Entry> Gateway::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + id + "'");
  return it->second;
}

json Gateway::create_session(const json& req) {
  if (!req.is_object()) throw Error(ErrorCode::invalid_argument, "request body must be an object");
  try {
    const auto sc = scenario(req.value("scenario", config_.default_scenario));
    SimConfig cfg = SimConfig::from_scenario(*sc);
    const bool noisy = req.value("noisy", false);
    cfg.channel.error_rate = req.value("error_rate", cfg.channel.error_rate);
    if (!noisy) {
      // keyboard mode: commands arrive exactly as posted
      cfg.channel.error_rate = 0.0;
      cfg.channel.custom_matrix.reset();
    }
    cfg.motion = req.value("motion", false);
    cfg.randomize = req.value("randomize", false);
    std::optional<std::string> goal;
    if (req.contains("goal")) goal = req["goal"].get<std::string>();

    auto e = std::make_shared<Entry>();
    e->noisy = noisy;
    std::string id;
    std::uint64_t seed = 0;
    {
      std::lock_guard lock(mutex_);
      seed = derive_seed(config_.seed, next_id_);
      id = "s" + std::to_string(next_id_++);
    }
    seed = req.value("seed", seed);
    e->session = std::make_unique<AssistSession>(sc, cfg, goal, seed);
    e->session->set_listener([this, id](const json& j) {
      json r = j;
      r["session"] = id;
      hub_.publish(r);
    });
    {
      std::lock_guard lock(mutex_);
      sessions_[id] = e;
      latest_ = id;
    }
    hub_.publish({{"type", "session"}, {"session", id}, {"status", e->session->status_json()}});
    std::lock_guard lock(e->mutex);
    return {{"id", id}, {"status", e->session->status_json()}, {"menu", e->session->menu_view()}};
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::invalid_argument, ex.what());
  }
}

json Gateway::session_status(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lock(e->mutex);
  json j = e->session->status_json();
  j["id"] = id;
  j["noisy"] = e->noisy;
  return j;
}

json Gateway::menu(const std::string& id) const {
  auto e = find(id);
  std::lock_guard lock(e->mutex);
  return e->session->menu_view();
}

json Gateway::command(const std::string& id, const json& req) {
  if (!req.is_object() || !req.contains("command") || !req["command"].is_string()) {
    throw Error(ErrorCode::invalid_argument, "expected {\"command\": name}");
  }
  const auto c = parse_command(req["command"].get<std::string>());
  if (!c) throw Error(ErrorCode::invalid_argument, "unknown command '" + req["command"].get<std::string>() + "'");
  auto e = find(id);
  std::lock_guard lock(e->mutex);
  const auto ev = e->session->submit(*c);
  return {{"decoded", to_json(ev)}, {"menu", e->session->menu_view()}, {"status", e->session->status_json()}};
}

json Gateway::move_object(const std::string& id, const json& req) {
  auto e = find(id);
  std::lock_guard lock(e->mutex);
  try {
    const auto world = e->session->kb()->snapshot();
    const auto* obj = world->find(req.at("object").get<std::string>());
    const auto* loc = world->find(req.at("location").get<std::string>());
    if (!obj || !loc) throw Error(ErrorCode::not_found, "unknown object or location");
    if (!world->schema->types.is_subtype(loc->type_name, "location")) {
      throw Error(ErrorCode::invalid_argument, "'" + loc->id + "' is not a location");
    }
    WorldObject moved = *obj;
    moved.placement = Placement{loc->id, loc->placement ? loc->placement->pose : Pose2D{}};
    e->session->kb()->upsert_object(moved);
    e->session->sync();
    return {{"revision", e->session->kb()->revision()}, {"status", e->session->status_json()}};
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::invalid_argument, ex.what());
  }
}

json Gateway::world(const std::optional<std::string>& id) const {
  std::string key;
  if (id) {
    key = *id;
  } else {
    std::lock_guard lock(mutex_);
    key = latest_;
  }
  if (key.empty()) {
    // no session yet: the default scenario as loaded
    const auto sc = scenario(config_.default_scenario);
    return to_json(*make_knowledge_base(*sc)->snapshot());
  }
  auto e = find(key);
  json j = to_json(*e->session->kb()->snapshot());
  j["session"] = key;
  return j;
}

// ---- http -----------------------------------------------------------------------

struct HttpServer::Impl {
  Gateway& gw;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};

  explicit Impl(Gateway& g) : gw(g) {}
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    reply(res, 200, f());
  } catch (const Error& e) {
    reply(res, http_status(e.code()), error_body(e));
  } catch (const std::exception& e) {
    reply(res, 500, error_body(Error(ErrorCode::io_error, e.what())));
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

HttpServer::HttpServer(Gateway& gateway) : impl_(std::make_unique<Impl>(gateway)) {
  auto& s = impl_->server;
  auto& gw = impl_->gw;
  Impl* impl = impl_.get();

  s.Post("/session", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return gw.create_session(parse_body(req)); });
  });
  s.Get(R"(/session/([^/]+))", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return gw.session_status(req.matches[1]); });
  });
  s.Get(R"(/menu/([^/]+))", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return gw.menu(req.matches[1]); });
  });
  s.Post(R"(/command/([^/]+))", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return gw.command(req.matches[1], parse_body(req)); });
  });
  s.Post(R"(/world/([^/]+)/move)", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return gw.move_object(req.matches[1], parse_body(req)); });
  });
  s.Get("/world", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<std::string> id;
      if (req.has_param("session")) id = req.get_param_value("session");
      return gw.world(id);
    });
  });
  s.Get("/events", [&gw, impl](const httplib::Request& req, httplib::Response& res) {
    auto queue = gw.events().subscribe();
    std::optional<std::string> filter;
    if (req.has_param("session")) filter = req.get_param_value("session");
    auto seq = std::make_shared<std::uint64_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "application/x-ndjson", [queue, filter, seq, impl](std::size_t, httplib::DataSink& sink) {
          // a hello record first, so clients know the subscription is live
          if (*seq == 0) {
            ++*seq;
            const std::string hello = json{{"type", "hello"}, {"seq", 0}}.dump() + "\n";
            return sink.write(hello.data(), hello.size());
          }
          while (!impl->stopping && sink.is_writable()) {
            auto j = queue->wait_pop(std::chrono::milliseconds(100));
            if (!j) {
              if (queue->closed()) break;
              continue;
            }
            if (filter && j->value("session", "") != *filter) continue;
            (*j)["seq"] = (*seq)++;
            const std::string line = j->dump() + "\n";
            return sink.write(line.data(), line.size());
          }
          sink.done();
          return false;
        });
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      reply(res, res.status, error_body(Error(ErrorCode::not_found, "no such endpoint")));
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->gw.events().close_all();
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::pair<std::string, int> bind_address_from_env() {
  std::string host = "127.0.0.1";
  int port = 8080;
  if (const char* v = std::getenv("BCISIM_BIND"); v && *v) {
    std::string s = v;
    const auto colon = s.rfind(':');
    try {
      if (colon == std::string::npos) {
        port = std::stoi(s);
      } else {
        host = s.substr(0, colon);
        port = std::stoi(s.substr(colon + 1));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "BCISIM_BIND must be host:port or port");
    }
    if (port < 0 || port > 65535) throw Error(ErrorCode::invalid_argument, "port out of range");
  }
  return {host, port};
}

}  // namespace bciassist
