#include "handover/service.hpp"

#include <atomic>
#include <condition_variable>
#include <thread>

#include "httplib.h"

namespace handover {

using nlohmann::json;

std::string_view to_string(SessionMode m) noexcept {
  return m == SessionMode::Realtime ? "realtime" : "stepped";
}

std::optional<SessionMode> session_mode_from_string(std::string_view name) noexcept {
  if (name == "stepped") return SessionMode::Stepped;
  if (name == "realtime") return SessionMode::Realtime;
  return std::nullopt;
}

struct SessionRegistry::Live {
  Live(std::string id_, SessionMode mode_, HandoverSession session_)
      : id(std::move(id_)), mode(mode_), session(std::move(session_)) {}

  std::string id;
  SessionMode mode;
  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  HandoverSession session;
  std::atomic<bool> stopping{false};
  std::thread ticker;

  std::vector<Event> suffix(std::optional<std::uint64_t> since) const {
    const auto& log = session.log();
    const std::size_t from = since ? static_cast<std::size_t>(*since) + 1 : 0;
    if (from >= log.size()) return {};
    return {log.begin() + static_cast<std::ptrdiff_t>(from), log.end()};
  }
};

SessionRegistry::SessionRegistry(ServiceConfig config) : config_(std::move(config)) {}

SessionRegistry::~SessionRegistry() {
  std::map<std::string, std::shared_ptr<Live>> sessions;
  {
    std::lock_guard lock(mutex_);
    sessions.swap(sessions_);
  }
  for (auto& [id, live] : sessions) {
    live->stopping = true;
    live->changed.notify_all();
    if (live->ticker.joinable()) live->ticker.join();
  }
}

std::shared_ptr<SessionRegistry::Live> SessionRegistry::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSession(id);
  return it->second;
}

std::string SessionRegistry::create(std::string_view scenario_json, SessionMode mode,
                                    ResponderMode responder) {
  Scenario scenario = parse_scenario(scenario_json);
  SessionConfig session_config = config_.session;
  session_config.responder = responder;

  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "s" + std::to_string(next_id_++);
  }
  auto live = std::make_shared<Live>(id, mode,
                                     HandoverSession(std::move(scenario), std::move(session_config)));
  if (mode == SessionMode::Realtime) {
    const double dt = live->session.params().dt;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(dt * config_.realtime_scale));
    Live* raw = live.get();
    live->ticker = std::thread([raw, period] {
      auto next = std::chrono::steady_clock::now() + period;
      std::unique_lock lock(raw->mutex);
      while (!raw->stopping && !raw->session.done()) {
        if (raw->changed.wait_until(lock, next, [raw] { return raw->stopping.load(); })) break;
        raw->session.tick();
        raw->changed.notify_all();
        next += period;
      }
    });
  }
  std::lock_guard lock(mutex_);
  sessions_.emplace(id, std::move(live));
  return id;
}

std::vector<Event> SessionRegistry::step(const std::string& id, int n) {
  auto live = find(id);
  if (live->mode != SessionMode::Stepped) {
    throw std::invalid_argument("session " + id + " ticks in realtime");
  }
  if (n < 1) throw std::invalid_argument("step count must be at least 1");
  std::vector<Event> out;
  {
    std::lock_guard lock(live->mutex);
    if (live->session.done()) throw SessionFinished();
    for (int i = 0; i < n && !live->session.done(); ++i) {
      std::vector<Event> events = live->session.tick();
      out.insert(out.end(), events.begin(), events.end());
    }
  }
  live->changed.notify_all();
  return out;
}

std::vector<Event> SessionRegistry::respond(const std::string& id, DriverInput input) {
  auto live = find(id);
  std::vector<Event> out;
  {
    std::lock_guard lock(live->mutex);
    out = live->session.handle_response(input);
  }
  live->changed.notify_all();
  return out;
}

json SessionRegistry::state(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  const HandoverSession& s = live->session;
  json j;
  j["id"] = live->id;
  j["mode"] = std::string(to_string(live->mode));
  j["machine"] = std::string(to_string(s.state()));
  j["state"] = to_json(s.world());
  j["t"] = s.now();
  j["done"] = s.done();
  j["last_seq"] = s.log().back().seq;
  j["critical_at"] = s.critical_at() ? json(*s.critical_at()) : json(nullptr);
  j["ack_deadline"] = s.ack_deadline() ? json(*s.ack_deadline()) : json(nullptr);
  j["escalation_level"] = s.escalation_level();
  j["vigilance"] = s.driver().vigilance;
  const auto outcome = s.outcome();
  j["outcome"] = outcome ? json(*outcome) : json(nullptr);
  return j;
}

std::vector<Event> SessionRegistry::events(const std::string& id,
                                           std::optional<std::uint64_t> since,
                                           std::chrono::milliseconds wait) const {
  auto live = find(id);
  std::unique_lock lock(live->mutex);
  std::vector<Event> out = live->suffix(since);
  if (out.empty() && wait.count() > 0) {
    live->changed.wait_for(lock, wait, [&] {
      return live->stopping || live->session.done() || !live->suffix(since).empty();
    });
    out = live->suffix(since);
  }
  return out;
}

bool SessionRegistry::done(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  return live->session.done();
}

std::vector<std::string> SessionRegistry::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, live] : sessions_) out.push_back(id);
  return out;
}

namespace {

json event_json(const Event& e) { return json::parse(to_json_line(e)); }

json events_json(const std::vector<Event>& events) {
  json arr = json::array();
  for (const Event& e : events) arr.push_back(event_json(e));
  return arr;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json error_body(std::string_view message) { return json{{"error", std::string(message)}}; }

// Maps library errors to HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const UnknownSession& e) {
    reply(res, 404, error_body(e.what()));
  } catch (const SessionFinished& e) {
    reply(res, 410, error_body(e.what()));
  } catch (const InvalidTransition& e) {
    json body = error_body(e.what());
    body["state"] = e.state();
    reply(res, 409, body);
  } catch (const ValidationError& e) {
    json body = error_body(e.what());
    body["field"] = e.field();
    reply(res, 400, body);
  } catch (const SyntaxError& e) {
    json body = error_body(e.what());
    body["line"] = e.line();
    body["column"] = e.column();
    reply(res, 400, body);
  } catch (const json::exception& e) {
    reply(res, 400, error_body(e.what()));
  } catch (const std::invalid_argument& e) {
    reply(res, 400, error_body(e.what()));
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body);
  if (!body.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return body;
}

std::optional<std::uint64_t> since_param(const httplib::Request& req) {
  if (!req.has_param("since")) return std::nullopt;
  const std::string v = req.get_param_value("since");
  std::size_t used = 0;
  const unsigned long long n = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("since must be an event sequence number");
  return n;
}

std::string sse_frame(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(to_string(e.kind)) +
         "\ndata: " + to_json_line(e) + "\n\n";
}

}  // namespace

struct SessionService::Server {
  httplib::Server http;
};

SessionService::SessionService(ServiceConfig config)
    : registry_(std::move(config)), server_(std::make_unique<Server>()) {
  httplib::Server& http = server_->http;
  SessionRegistry& registry = registry_;

  http.Post("/api/sessions", [&registry](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      if (!body.contains("scenario")) throw ValidationError("scenario", "is required");
      const json& doc = body["scenario"];
      const std::string text = doc.is_string() ? doc.get<std::string>() : doc.dump();
      SessionMode mode = SessionMode::Stepped;
      if (body.contains("mode")) {
        const auto m = session_mode_from_string(body["mode"].get<std::string>());
        if (!m) throw ValidationError("mode", "must be stepped or realtime");
        mode = *m;
      }
      ResponderMode responder = ResponderMode::External;
      if (body.contains("responder")) {
        const std::string r = body["responder"].get<std::string>();
        if (r == "scripted") {
          responder = ResponderMode::Scripted;
        } else if (r == "none") {
          responder = ResponderMode::None;
        } else if (r != "human") {
          throw ValidationError("responder", "must be human, scripted or none");
        }
      }
      const std::string id = registry.create(text, mode, responder);
      json out = registry.state(id);
      reply(res, 201, out);
    });
  });

  http.Post(R"(/api/sessions/([^/]+)/step)",
            [&registry](const httplib::Request& req, httplib::Response& res) {
              guarded(res, [&] {
                const json body = parse_body(req);
                const int n = body.value("n", 1);
                const std::vector<Event> events = registry.step(req.matches[1], n);
                json out = registry.state(req.matches[1]);
                out["events"] = events_json(events);
                reply(res, 200, out);
              });
            });

  http.Post(R"(/api/sessions/([^/]+)/response)",
            [&registry](const httplib::Request& req, httplib::Response& res) {
              guarded(res, [&] {
                const json body = parse_body(req);
                const auto input = driver_input_from_string(body.value("kind", std::string()));
                if (!input) throw ValidationError("kind", "must be ack, takeover or handback");
                const std::vector<Event> events = registry.respond(req.matches[1], *input);
                json out = registry.state(req.matches[1]);
                out["events"] = events_json(events);
                reply(res, 200, out);
              });
            });

  http.Get(R"(/api/sessions/([^/]+)/state)",
           [&registry](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] { reply(res, 200, registry.state(req.matches[1])); });
           });

  http.Get(R"(/api/sessions/([^/]+)/events)",
           [&registry](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const std::string id = req.matches[1];
               const auto since = since_param(req);
               registry.state(id);  // unknown ids fail before streaming starts
               const std::string accept = req.get_header_value("Accept");
               if (accept.find("text/event-stream") != std::string::npos) {
                 auto cursor = std::make_shared<std::optional<std::uint64_t>>(since);
                 res.set_header("Cache-Control", "no-cache");
                 res.set_chunked_content_provider(
                     "text/event-stream",
                     [&registry, id, cursor](std::size_t, httplib::DataSink& sink) {
                       try {
                         const auto events =
                             registry.events(id, *cursor, std::chrono::milliseconds{1000});
                         for (const Event& e : events) {
                           const std::string frame = sse_frame(e);
                           if (!sink.write(frame.data(), frame.size())) return false;
                           *cursor = e.seq;
                         }
                         if (events.empty() && registry.done(id)) sink.done();
                       } catch (const UnknownSession&) {
                         sink.done();
                       }
                       return true;
                     });
                 return;
               }
               double wait_s = static_cast<double>(registry.config().max_wait.count()) / 1000.0;
               if (req.has_param("wait")) wait_s = std::stod(req.get_param_value("wait"));
               wait_s = std::clamp(wait_s, 0.0,
                                   static_cast<double>(registry.config().max_wait.count()) / 1000.0);
               const auto wait = std::chrono::milliseconds(static_cast<std::int64_t>(wait_s * 1000));
               reply(res, 200, events_json(registry.events(id, since, wait)));
             });
           });

  if (registry_.config().static_dir) {
    http.set_mount_point("/", registry_.config().static_dir->string());
  }
}

SessionService::~SessionService() { stop(); }

bool SessionService::listen(const std::string& host, int port) {
  return server_->http.listen(host, port);
}

int SessionService::bind_any_port(const std::string& host) {
  return server_->http.bind_to_any_port(host);
}

bool SessionService::serve() { return server_->http.listen_after_bind(); }

void SessionService::stop() {
  if (server_) server_->http.stop();
}

void SessionService::wait_until_ready() const { server_->http.wait_until_ready(); }

}  // namespace handover
