#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "handover/criticality.hpp"
#include "handover/driver.hpp"
#include "handover/nlg.hpp"
#include "handover/planner.hpp"
#include "handover/scenario.hpp"

namespace handover {

enum class MachineState : std::uint8_t {
  Autonomous,
  PlanAdapted,
  Announced,
  AwaitingAck,
  Escalated,
  HumanControl,
  MinimalRisk,
  Done,
};

std::string_view to_string(MachineState s) noexcept;

enum class EventKind : std::uint8_t {
  Tick,
  Criticality,
  ReplanAdopted,
  AlertIssued,
  Escalation,
  Ack,
  Takeover,
  Handback,
  SafeStopStarted,
  Stopped,
  Completed,
};

std::string_view to_string(EventKind k) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept;

struct Event {
  std::uint64_t seq = 0;
  double t = 0.0;
  EventKind kind = EventKind::Tick;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const Event&, const Event&) = default;
};

/// One JSON object per event: {"seq","t","kind","payload"}.
std::string to_json_line(const Event& e);
Event event_from_json(const nlohmann::json& j);
std::string to_jsonl(const std::vector<Event>& log);
/// Throws SyntaxError citing the line.
std::vector<Event> parse_jsonl(std::string_view text);

nlohmann::json to_json(const WorldState& s);
WorldState world_state_from_json(const nlohmann::json& j);

struct TimingPolicy {
  double t_transfer = 8.0;
  double t_ack = 5.0;
  double announce_lead = 20.0;
  double safe_margin = 1.0;

  /// Seconds to stop from `speed` plus the margin.
  double t_safe(double speed, double a_max) const { return speed / a_max + safe_margin; }
};

/// Level 0: fastest modality for the profile's load and condition, ties by
/// preference score then TACTILE, AUDIO, VISUAL. Level 1: the runner-up.
/// Level 2: all three. Throws MissingEntry.
std::vector<Modality> select_modality(const DriverProfile& profile, const ReactionTable& table,
                                      int escalation_level);

/// Who answers alerts. Scripted draws from the driver model; None never
/// responds; External takes responses only through queue_response().
enum class ResponderMode : std::uint8_t { Scripted, None, External };

enum class DriverInput : std::uint8_t { Ack, Takeover, Handback };

std::string_view to_string(DriverInput d) noexcept;
std::optional<DriverInput> driver_input_from_string(std::string_view name) noexcept;

struct SessionConfig {
  QueryCatalog catalog = QueryCatalog::defaults();
  ReactionTable reactions = ReactionTable::defaults();
  TemplateTable templates = TemplateTable::defaults();
  TimingPolicy timing;
  PlannerConfig planner;
  DensityConfig density;
  SimParams base_params;
  ResponderMode responder = ResponderMode::Scripted;
  std::optional<std::uint64_t> seed;  ///< overrides the scenario seed
};

class HandoverSession {
 public:
  /// Emits the seq 0 TICK carrying the initial state and the scenario.
  HandoverSession(Scenario scenario, SessionConfig config);

  /// Advances one dt. Throws SessionFinished.
  std::vector<Event> tick();

  /// Applies a driver input immediately. Throws InvalidTransition when the
  /// input is not legal in the current state, SessionFinished when done.
  std::vector<Event> handle_response(DriverInput input);

  /// Checks legality now and applies the input at the next tick boundary.
  void queue_response(DriverInput input);

  /// Ticks until DONE or `max_ticks`. Returns true when DONE.
  bool run(std::int64_t max_ticks = 100'000);

  bool done() const noexcept { return state_ == MachineState::Done; }
  MachineState state() const noexcept { return state_; }
  const WorldState& world() const noexcept { return world_; }
  const DriverProfile& driver() const noexcept { return driver_; }
  double now() const noexcept { return static_cast<double>(world_.tick) * params_.dt; }
  const std::vector<Event>& log() const noexcept { return log_; }
  const Scenario& scenario() const noexcept { return scenario_; }
  const SimParams& params() const noexcept { return params_; }
  const std::optional<Plan>& active_plan() const noexcept { return plan_; }
  std::optional<double> critical_at() const noexcept { return critical_at_; }
  std::optional<double> ack_deadline() const noexcept { return ack_deadline_; }
  int escalation_level() const noexcept { return level_; }
  bool budget_exhausted() const noexcept { return budget_exhausted_; }
  std::optional<std::string> outcome() const;

 private:
  Event& emit(EventKind kind, double t, nlohmann::json payload);
  void check_legal(DriverInput input) const;
  void apply_input(DriverInput input, std::vector<Event>& out,
                   std::optional<double> reaction_ms = std::nullopt);
  void apply_pending(std::vector<Event>& out);
  Action control() const;
  void monitor(std::vector<Event>& out);
  void issue_alert(const PlannerVerdict& verdict, double ttc, std::vector<Event>& out);
  void escalate(std::vector<Event>& out);
  void start_safe_stop(std::string_view reason, std::optional<double> ttc,
                       std::vector<Event>& out);
  void schedule_scripted_response(Modality modality);
  bool plan_still_safe() const;

  Scenario scenario_;
  SessionConfig config_;
  SimParams params_;
  Rng rng_;
  WorldState world_;
  DriverProfile driver_;
  MachineState state_ = MachineState::Autonomous;
  std::optional<Plan> plan_;
  std::size_t plan_step_ = 0;
  std::optional<double> critical_at_;
  std::optional<double> ack_deadline_;
  std::optional<double> alert_at_;
  int level_ = 0;
  std::vector<Modality> used_modalities_;
  std::optional<Response> scripted_;
  std::deque<DriverInput> pending_;
  std::optional<std::pair<VerdictKind, CriticalityLevel>> last_verdict_;
  bool budget_exhausted_ = false;
  std::vector<Event> log_;
};

struct MetricsReport {
  std::optional<double> notice_lead_time;
  int handovers_avoided = 0;
  int alerts = 0;
  int safe_stops = 0;
  int escalations = 0;
  std::vector<std::size_t> message_words;
  std::optional<double> takeover_latency;
  std::string outcome;  ///< COMPLETED, STOPPED or empty
  bool budget_exhausted = false;

  std::size_t total_words() const;
};

MetricsReport metrics(const std::vector<Event>& log);
nlohmann::json to_json(const MetricsReport& m);

/// World states of the TICK events, in order.
std::vector<WorldState> state_sequence(const std::vector<Event>& log);

/// Re-runs the scenario with the driver inputs recorded in `log` applied at
/// the same tick boundaries.
HandoverSession replay(const Scenario& scenario, SessionConfig config,
                       const std::vector<Event>& log);

}  // namespace handover
