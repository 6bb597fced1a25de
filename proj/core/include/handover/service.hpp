#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "handover/errors.hpp"
#include "handover/orchestrator.hpp"

namespace handover {

enum class SessionMode : std::uint8_t { Stepped, Realtime };

std::string_view to_string(SessionMode m) noexcept;
std::optional<SessionMode> session_mode_from_string(std::string_view name) noexcept;

class UnknownSession : public Error {
 public:
  explicit UnknownSession(const std::string& id) : Error("unknown session '" + id + "'") {}
};

struct ServiceConfig {
  SessionConfig session;
  /// Wall-clock seconds per simulated second in realtime mode.
  double realtime_scale = 1.0;
  std::optional<std::filesystem::path> static_dir;
  std::chrono::milliseconds max_wait{25'000};
};

/// Live sessions addressed by id. Every call is thread-safe; each session is
/// mutated by one caller at a time and its log can be read concurrently.
class SessionRegistry {
 public:
  explicit SessionRegistry(ServiceConfig config = {});
  ~SessionRegistry();
  SessionRegistry(const SessionRegistry&) = delete;
  SessionRegistry& operator=(const SessionRegistry&) = delete;

  /// Parses and validates the scenario document. Throws SyntaxError or
  /// ValidationError. `responder` defaults to External, so a connected human
  /// is the only source of responses.
  std::string create(std::string_view scenario_json, SessionMode mode,
                     ResponderMode responder = ResponderMode::External);

  /// Ticks a stepped session `n` times, or until it is done. Throws
  /// UnknownSession, SessionFinished, or std::invalid_argument for a
  /// realtime session.
  std::vector<Event> step(const std::string& id, int n);

  /// Applies the input at the current tick boundary. Throws UnknownSession,
  /// SessionFinished or InvalidTransition.
  std::vector<Event> respond(const std::string& id, DriverInput input);

  nlohmann::json state(const std::string& id) const;

  /// Events with seq > since (all events when `since` is empty). Waits up to
  /// `wait` for the first one unless the session is done.
  std::vector<Event> events(const std::string& id, std::optional<std::uint64_t> since,
                            std::chrono::milliseconds wait = std::chrono::milliseconds{0}) const;

  bool done(const std::string& id) const;
  std::vector<std::string> ids() const;
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Live;
  std::shared_ptr<Live> find(const std::string& id) const;

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// HTTP front end over a SessionRegistry.
///
///   POST /api/sessions                 {scenario, mode}  -> {id}
///   POST /api/sessions/{id}/step       {n}
///   POST /api/sessions/{id}/response   {kind}
///   GET  /api/sessions/{id}/state
///   GET  /api/sessions/{id}/events?since=SEQ[&wait=S]
///
/// The events endpoint streams server-sent events when the client accepts
/// `text/event-stream` and otherwise long-polls for the available suffix.
class SessionService {
 public:
  explicit SessionService(ServiceConfig config = {});
  ~SessionService();

  /// Binds and serves until stop(). Returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it, or -1.
  int bind_any_port(const std::string& host);
  /// Serves on a socket bound by bind_any_port().
  bool serve();
  void stop();
  void wait_until_ready() const;

  SessionRegistry& registry() noexcept { return registry_; }

 private:
  struct Server;
  SessionRegistry registry_;
  std::unique_ptr<Server> server_;
};

}  // namespace handover
