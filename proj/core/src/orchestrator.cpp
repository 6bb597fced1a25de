#include "handover/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "handover/errors.hpp"

namespace handover {

namespace {

using nlohmann::json;

constexpr double kTimeEps = 1e-9;

constexpr std::array<std::string_view, 8> kStateNames{
    "AUTONOMOUS", "PLAN_ADAPTED", "ANNOUNCED",     "AWAITING_ACK",
    "ESCALATED",  "HUMAN_CONTROL", "MINIMAL_RISK", "DONE",
};

constexpr std::array<std::string_view, 11> kEventNames{
    "TICK", "CRITICALITY", "REPLAN_ADOPTED", "ALERT_ISSUED", "ESCALATION", "ACK",
    "TAKEOVER", "HANDBACK", "SAFE_STOP_STARTED", "STOPPED", "COMPLETED",
};

// Tie-break order after equal means and equal preference scores.
int fixed_rank(Modality m) {
  switch (m) {
    case Modality::Tactile: return 0;
    case Modality::Audio: return 1;
    case Modality::Visual: return 2;
  }
  return 3;
}

std::vector<Modality> ranked_modalities(const DriverProfile& profile, const ReactionTable& table) {
  std::vector<Modality> order(kAllModalities.begin(), kAllModalities.end());
  std::sort(order.begin(), order.end(), [&](Modality a, Modality b) {
    const double ma = table.at(a, profile.load, profile.condition).mean_ms;
    const double mb = table.at(b, profile.load, profile.condition).mean_ms;
    if (ma != mb) return ma < mb;
    if (table.preference(a) != table.preference(b)) return table.preference(a) > table.preference(b);
    return fixed_rank(a) < fixed_rank(b);
  });
  return order;
}

json modality_list(const std::vector<Modality>& mods) {
  json out = json::array();
  for (Modality m : mods) out.push_back(std::string(to_string(m)));
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool is_awaiting(MachineState s) {
  return s == MachineState::Announced || s == MachineState::AwaitingAck ||
         s == MachineState::Escalated;
}

bool is_pre_critical(MachineState s) {
  return s == MachineState::Autonomous || s == MachineState::PlanAdapted || is_awaiting(s);
}

// Holds the lane and the speed target, braking for anything in the lane.
Action human_cruise(const WorldState& state, const Road& road, const SimParams& params) {
  if (route_finished(state, road)) return Action::hold();
  if (road.obstacle_ahead(state.lane, state.position, reaction_range(state.speed, params))) {
    return Action::decel(params.a_max);
  }
  const double target = target_speed(state, road, params);
  if (state.speed > target) return Action::decel(std::min(params.a_max, (state.speed - target) / params.dt));
  if (state.speed < target) return Action::accel(std::min(params.a_max, (target - state.speed) / params.dt));
  return Action::hold();
}

VehicleMode vehicle_mode_from_string(std::string_view s) {
  for (VehicleMode m : {VehicleMode::Auto, VehicleMode::Human, VehicleMode::SafeStop}) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("state.mode", "unknown vehicle mode");
}

}  // namespace

std::string_view to_string(MachineState s) noexcept { return kStateNames[static_cast<int>(s)]; }

std::string_view to_string(EventKind k) noexcept { return kEventNames[static_cast<int>(k)]; }

std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(DriverInput d) noexcept {
  switch (d) {
    case DriverInput::Ack: return "ack";
    case DriverInput::Takeover: return "takeover";
    case DriverInput::Handback: return "handback";
  }
  return "?";
}

std::optional<DriverInput> driver_input_from_string(std::string_view name) noexcept {
  for (DriverInput d : {DriverInput::Ack, DriverInput::Takeover, DriverInput::Handback}) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

json to_json(const WorldState& s) {
  json j;
  j["position"] = s.position;
  j["lane"] = s.lane;
  j["speed"] = s.speed;
  j["tick"] = s.tick;
  j["mode"] = std::string(to_string(s.mode));
  j["sensor_health"] = s.sensor_health;
  return j;
}

WorldState world_state_from_json(const json& j) {
  WorldState s;
  s.position = j.at("position").get<double>();
  s.lane = j.at("lane").get<int>();
  s.speed = j.at("speed").get<double>();
  s.tick = j.at("tick").get<std::int64_t>();
  s.mode = vehicle_mode_from_string(j.at("mode").get<std::string>());
  s.sensor_health = j.at("sensor_health").get<double>();
  return s;
}

std::string to_json_line(const Event& e) {
  json j;
  j["seq"] = e.seq;
  j["t"] = e.t;
  j["kind"] = std::string(to_string(e.kind));
  j["payload"] = e.payload;
  return j.dump();
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.t = j.at("t").get<double>();
  const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw ValidationError("kind", "unknown event kind");
  e.kind = *kind;
  e.payload = j.at("payload");
  return e;
}

std::string to_jsonl(const std::vector<Event>& log) {
  std::string out;
  for (const Event& e : log) {
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

std::vector<Event> parse_jsonl(std::string_view text) {
  std::vector<Event> log;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    const std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      log.push_back(event_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw SyntaxError(e.what(), line_no, 1);
    } catch (const ValidationError& e) {
      throw SyntaxError(e.what(), line_no, 1);
    }
  }
  return log;
}

std::vector<Modality> select_modality(const DriverProfile& profile, const ReactionTable& table,
                                      int escalation_level) {
  const std::vector<Modality> ranked = ranked_modalities(profile, table);
  switch (escalation_level) {
    case 0: return {ranked[0]};
    case 1: return {ranked[1]};
    case 2: return {Modality::Tactile, Modality::Audio, Modality::Visual};
    default: throw std::invalid_argument("escalation level must be 0, 1 or 2");
  }
}

HandoverSession::HandoverSession(Scenario scenario, SessionConfig config)
    : scenario_(std::move(scenario)),
      config_(std::move(config)),
      params_(scenario_.params(config_.base_params)),
      rng_(config_.seed.value_or(scenario_.seed)),
      world_(scenario_.initial),
      driver_(scenario_.driver) {
  validate(params_);
  json header;
  header["state"] = to_json(world_);
  header["machine"] = std::string(to_string(state_));
  header["scenario"] = json::parse(serialize_scenario(scenario_));
  header["seed"] = config_.seed.value_or(scenario_.seed);
  emit(EventKind::Tick, now(), std::move(header));
}

Event& HandoverSession::emit(EventKind kind, double t, json payload) {
  Event e;
  e.seq = log_.size();
  e.t = t;
  e.kind = kind;
  e.payload = std::move(payload);
  log_.push_back(std::move(e));
  return log_.back();
}

std::optional<std::string> HandoverSession::outcome() const {
  for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
    if (it->kind == EventKind::Completed || it->kind == EventKind::Stopped) {
      return std::string(to_string(it->kind));
    }
  }
  return std::nullopt;
}

void HandoverSession::check_legal(DriverInput input) const {
  if (done()) throw SessionFinished();
  bool legal = false;
  switch (input) {
    case DriverInput::Ack: legal = is_awaiting(state_); break;
    case DriverInput::Takeover: legal = is_pre_critical(state_); break;
    case DriverInput::Handback: legal = state_ == MachineState::HumanControl; break;
  }
  if (!legal) {
    throw InvalidTransition(std::string(to_string(input)) + " is not accepted in state " +
                                std::string(to_string(state_)),
                            std::string(to_string(state_)));
  }
}

void HandoverSession::apply_input(DriverInput input, std::vector<Event>& out,
                                  std::optional<double> reaction_ms) {
  const double t = now();
  auto take_control = [this] {
    state_ = MachineState::HumanControl;
    world_.mode = VehicleMode::Human;
    driver_ = update_vigilance(driver_, 0.0, VigilanceEvent::TookOver);
    plan_.reset();
    ack_deadline_.reset();
    scripted_.reset();
  };
  switch (input) {
    case DriverInput::Ack: {
      json ack{{"response", "ack"}};
      ack["latency"] = optional_number(alert_at_ ? std::optional<double>(t - *alert_at_) : std::nullopt);
      if (reaction_ms) ack["reaction_ms"] = *reaction_ms;
      out.push_back(emit(EventKind::Ack, t, std::move(ack)));
      take_control();
      out.push_back(emit(EventKind::Takeover, t, {{"via", "ack"}}));
      break;
    }
    case DriverInput::Takeover:
      take_control();
      out.push_back(emit(EventKind::Takeover, t, {{"via", "unsolicited"}, {"response", "takeover"}}));
      break;
    case DriverInput::Handback: {
      const Trace trace = rollout(world_, scenario_.road, params_, scenario_.horizon);
      const CriticalityReport report =
          score_trace(trace.propositions, config_.catalog, config_.planner.thresholds, params_.dt);
      if (report.level == CriticalityLevel::Low) {
        state_ = MachineState::Autonomous;
        world_.mode = VehicleMode::Auto;
        alert_at_.reset();
        critical_at_.reset();
        level_ = 0;
        used_modalities_.clear();
        last_verdict_.reset();
        out.push_back(emit(EventKind::Handback, t, {{"response", "handback"}}));
      } else {
        json refusal{{"response", "handback"}, {"rejected", true}};
        refusal["level"] = std::string(to_string(report.level));
        refusal["score"] = report.score;
        refusal["time_to_critical"] = optional_number(report.time_to_critical);
        out.push_back(emit(EventKind::Criticality, t, std::move(refusal)));
      }
      break;
    }
  }
}

std::vector<Event> HandoverSession::handle_response(DriverInput input) {
  check_legal(input);
  std::vector<Event> out;
  apply_input(input, out);
  return out;
}

void HandoverSession::queue_response(DriverInput input) {
  check_legal(input);
  pending_.push_back(input);
}

void HandoverSession::apply_pending(std::vector<Event>& out) {
  while (!pending_.empty()) {
    const DriverInput input = pending_.front();
    pending_.pop_front();
    try {
      check_legal(input);
    } catch (const InvalidTransition&) {
      continue;  // the state moved on since the input was queued
    }
    apply_input(input, out);
  }
  if (scripted_ && scripted_->kind == ResponseKind::Ack && scripted_->at_s &&
      *scripted_->at_s <= now() + kTimeEps && is_awaiting(state_)) {
    apply_input(DriverInput::Ack, out, scripted_->latency_ms);
  }
}

void HandoverSession::schedule_scripted_response(Modality modality) {
  if (config_.responder != ResponderMode::Scripted) return;
  if (scripted_ && scripted_->kind == ResponseKind::Ack) return;
  scripted_ = respond(driver_, Alert{modality, now()}, config_.reactions, rng_);
}

Action HandoverSession::control() const {
  switch (state_) {
    case MachineState::PlanAdapted:
      if (plan_ && plan_step_ < plan_->actions.size()) {
        const Action& a = plan_->actions[plan_step_];
        if (is_applicable(world_, a, scenario_.road, params_)) return a;
      }
      return default_policy(world_, scenario_.road, params_);
    case MachineState::HumanControl: return human_cruise(world_, scenario_.road, params_);
    case MachineState::MinimalRisk: return Action{ActionKind::SafeStop, params_.a_max};
    default: return default_policy(world_, scenario_.road, params_);
  }
}

bool HandoverSession::plan_still_safe() const {
  if (!plan_ || plan_step_ >= plan_->actions.size()) return false;
  const std::span<const Action> rest(plan_->actions.data() + plan_step_,
                                     plan_->actions.size() - plan_step_);
  const auto trace = rollout_with_prefix(world_, rest, scenario_.road, params_, scenario_.horizon);
  if (!trace) return false;
  return score_trace(trace->propositions, config_.catalog, config_.planner.thresholds, params_.dt)
             .level == CriticalityLevel::Low;
}

std::vector<Event> HandoverSession::tick() {
  if (done()) throw SessionFinished();
  std::vector<Event> out;
  apply_pending(out);

  const Action action = control();
  const bool from_plan = state_ == MachineState::PlanAdapted && plan_ &&
                         plan_step_ < plan_->actions.size() &&
                         plan_->actions[plan_step_] == action;
  const WorldState before = world_;
  world_ = step(world_, action, scenario_.road, params_);
  if (from_plan) ++plan_step_;
  driver_ = update_vigilance(driver_, params_.dt, VigilanceEvent::None);

  json tick;
  tick["state"] = to_json(world_);
  tick["machine"] = std::string(to_string(state_));
  tick["action"] = std::string(to_string(action.kind));
  if (collides(before, world_, scenario_.road)) tick["collision"] = true;
  out.push_back(emit(EventKind::Tick, now(), std::move(tick)));

  if (state_ == MachineState::MinimalRisk && world_.speed <= 0.0) {
    state_ = MachineState::Done;
    out.push_back(emit(EventKind::Stopped, now(), {{"position", world_.position}}));
    return out;
  }
  if (route_finished(world_, scenario_.road)) {
    state_ = MachineState::Done;
    out.push_back(emit(EventKind::Completed, now(), {{"position", world_.position}}));
    return out;
  }
  monitor(out);
  return out;
}

void HandoverSession::monitor(std::vector<Event>& out) {
  if (state_ == MachineState::HumanControl || state_ == MachineState::MinimalRisk) return;
  if (state_ == MachineState::PlanAdapted && plan_still_safe()) return;

  PlannerVerdict verdict;
  if (is_awaiting(state_)) {
    // The driver has been asked already; only the time left matters.
    verdict.default_trace = rollout(world_, scenario_.road, params_, scenario_.horizon);
    verdict.report = score_trace(verdict.default_trace.propositions, config_.catalog,
                                 config_.planner.thresholds, params_.dt);
    if (verdict.report.level != CriticalityLevel::Low) verdict.kind = VerdictKind::Unavoidable;
  } else {
    verdict = assess(world_, scenario_.road, params_, scenario_.horizon, config_.catalog,
                     config_.planner);
  }
  budget_exhausted_ = budget_exhausted_ || verdict.budget_exhausted;

  const auto summary = std::make_pair(verdict.kind, verdict.report.level);
  if (last_verdict_ != summary) {
    last_verdict_ = summary;
    json c;
    c["verdict"] = std::string(to_string(verdict.kind));
    c["level"] = std::string(to_string(verdict.report.level));
    c["score"] = verdict.report.score;
    c["time_to_critical"] = optional_number(verdict.report.time_to_critical);
    json matched = json::array();
    for (const QueryResult& r : verdict.report.results) {
      if (r.matched) matched.push_back(r.name);
    }
    c["matched"] = std::move(matched);
    if (verdict.budget_exhausted) c["budget_exhausted"] = true;
    out.push_back(emit(EventKind::Criticality, now(), std::move(c)));
  }

  switch (verdict.kind) {
    case VerdictKind::Safe:
      if (state_ == MachineState::PlanAdapted) {
        state_ = MachineState::Autonomous;
        plan_.reset();
      }
      break;
    case VerdictKind::Avoidable:
      if (state_ == MachineState::Autonomous || state_ == MachineState::PlanAdapted) {
        plan_ = verdict.plan;
        plan_step_ = 0;
        state_ = MachineState::PlanAdapted;
        json actions = json::array();
        for (const Action& a : plan_->actions) actions.push_back(std::string(to_string(a.kind)));
        out.push_back(emit(EventKind::ReplanAdopted, now(),
                           {{"actions", std::move(actions)}, {"cost", plan_->cost}}));
      }
      break;
    case VerdictKind::Unavoidable: {
      const double ttc = static_cast<double>(verdict.report.earliest_step().value_or(0)) * params_.dt;
      const double at = now() + ttc;
      critical_at_ = critical_at_ ? std::min(*critical_at_, at) : at;
      if (ttc - config_.timing.t_safe(world_.speed, params_.a_max) <= 0.0) {
        start_safe_stop("time_to_critical", ttc, out);
        return;
      }
      if ((state_ == MachineState::Autonomous || state_ == MachineState::PlanAdapted) &&
          !alert_at_ && ttc - config_.timing.t_transfer <= config_.timing.announce_lead) {
        issue_alert(verdict, ttc, out);
        return;
      }
      break;
    }
  }

  if (is_awaiting(state_) && ack_deadline_ && now() + kTimeEps >= *ack_deadline_) {
    if (level_ < 2) {
      escalate(out);
    } else {
      start_safe_stop("no_response", std::nullopt, out);
    }
  }
}

void HandoverSession::issue_alert(const PlannerVerdict& verdict, double ttc,
                                  std::vector<Event>& out) {
  const double t_safe = config_.timing.t_safe(world_.speed, params_.a_max);
  const double notice = ttc - config_.timing.t_transfer;
  const double message_notice = notice > 0.0 ? notice : ttc - t_safe;
  const std::vector<Modality> modalities = select_modality(driver_, config_.reactions, 0);
  const std::vector<Fact> facts =
      ground_facts(verdict.report, verdict.default_trace, scenario_.road, config_.catalog, params_,
                   message_notice);
  const Message message = compose(verdict.report, facts, modalities.front(), message_notice,
                                  driver_.load, config_.templates, config_.density);

  driver_ = update_vigilance(driver_, 0.0, VigilanceEvent::Alert);
  plan_.reset();
  state_ = MachineState::AwaitingAck;
  alert_at_ = now();
  level_ = 0;
  used_modalities_ = modalities;
  ack_deadline_ = now() + config_.timing.t_ack;

  json a;
  a["modality"] = std::string(to_string(modalities.front()));
  a["modalities"] = modality_list(modalities);
  a["message"] = message.text;
  a["word_count"] = message.word_count;
  a["est_duration"] = message.est_duration;
  a["verbosity"] = std::string(to_string(message.verbosity));
  json predicates = json::array();
  for (const Fact& f : message.facts) predicates.push_back(std::string(to_string(f.predicate)));
  a["facts"] = std::move(predicates);
  a["notice"] = message_notice;
  a["time_to_critical"] = ttc;
  a["critical_at"] = *critical_at_;
  a["ack_deadline"] = *ack_deadline_;
  a["level"] = 0;
  out.push_back(emit(EventKind::AlertIssued, now(), std::move(a)));
  schedule_scripted_response(modalities.front());
}

void HandoverSession::escalate(std::vector<Event>& out) {
  ++level_;
  const std::vector<Modality> modalities = select_modality(driver_, config_.reactions, level_);
  driver_ = update_vigilance(driver_, 0.0, VigilanceEvent::Alert);
  state_ = MachineState::Escalated;
  ack_deadline_ = now() + config_.timing.t_ack;
  for (Modality m : modalities) {
    if (std::find(used_modalities_.begin(), used_modalities_.end(), m) == used_modalities_.end()) {
      used_modalities_.push_back(m);
    }
  }
  json e;
  e["level"] = level_;
  e["modality"] = std::string(to_string(modalities.front()));
  e["modalities"] = modality_list(modalities);
  e["ack_deadline"] = *ack_deadline_;
  out.push_back(emit(EventKind::Escalation, now(), std::move(e)));
  schedule_scripted_response(modalities.front());
}

void HandoverSession::start_safe_stop(std::string_view reason, std::optional<double> ttc,
                                      std::vector<Event>& out) {
  state_ = MachineState::MinimalRisk;
  plan_.reset();
  ack_deadline_.reset();
  scripted_.reset();
  pending_.clear();
  json s;
  s["reason"] = std::string(reason);
  s["time_to_critical"] = optional_number(ttc);
  s["speed"] = world_.speed;
  out.push_back(emit(EventKind::SafeStopStarted, now(), std::move(s)));
}

bool HandoverSession::run(std::int64_t max_ticks) {
  for (std::int64_t i = 0; i < max_ticks && !done(); ++i) tick();
  return done();
}

std::size_t MetricsReport::total_words() const {
  std::size_t n = 0;
  for (std::size_t w : message_words) n += w;
  return n;
}

MetricsReport metrics(const std::vector<Event>& log) {
  MetricsReport m;
  std::optional<double> first_alert;
  for (const Event& e : log) {
    switch (e.kind) {
      case EventKind::ReplanAdopted: ++m.handovers_avoided; break;
      case EventKind::AlertIssued:
        ++m.alerts;
        m.message_words.push_back(e.payload.value("word_count", std::size_t{0}));
        if (!first_alert) {
          first_alert = e.t;
          if (e.payload.contains("critical_at")) {
            m.notice_lead_time = e.payload["critical_at"].get<double>() - e.t;
          }
        }
        break;
      case EventKind::Escalation: ++m.escalations; break;
      case EventKind::SafeStopStarted: ++m.safe_stops; break;
      case EventKind::Takeover:
        if (first_alert && !m.takeover_latency) m.takeover_latency = e.t - *first_alert;
        break;
      case EventKind::Criticality:
        if (e.payload.value("budget_exhausted", false)) m.budget_exhausted = true;
        break;
      case EventKind::Stopped:
      case EventKind::Completed: m.outcome = std::string(to_string(e.kind)); break;
      default: break;
    }
  }
  return m;
}

json to_json(const MetricsReport& m) {
  json j;
  j["notice_lead_time"] = optional_number(m.notice_lead_time);
  j["handovers_avoided"] = m.handovers_avoided;
  j["alerts"] = m.alerts;
  j["safe_stops"] = m.safe_stops;
  j["escalations"] = m.escalations;
  j["message_words"] = m.message_words;
  j["total_words"] = m.total_words();
  j["takeover_latency"] = optional_number(m.takeover_latency);
  j["outcome"] = m.outcome;
  j["budget_exhausted"] = m.budget_exhausted;
  return j;
}

std::vector<WorldState> state_sequence(const std::vector<Event>& log) {
  std::vector<WorldState> states;
  for (const Event& e : log) {
    if (e.kind == EventKind::Tick) states.push_back(world_state_from_json(e.payload.at("state")));
  }
  return states;
}

HandoverSession replay(const Scenario& scenario, SessionConfig config,
                       const std::vector<Event>& log) {
  config.responder = ResponderMode::External;
  std::multimap<double, DriverInput> inputs;
  for (const Event& e : log) {
    if (!e.payload.is_object() || !e.payload.contains("response")) continue;
    const auto input = driver_input_from_string(e.payload["response"].get<std::string>());
    if (input) inputs.emplace(e.t, *input);
  }
  HandoverSession session(scenario, std::move(config));
  auto next = inputs.begin();
  while (!session.done() && session.world().tick < 1'000'000) {
    while (next != inputs.end() && next->first <= session.now() + kTimeEps) {
      if (next->first >= session.now() - kTimeEps) {
        try {
          session.queue_response(next->second);
        } catch (const InvalidTransition&) {
          // recorded input no longer legal: the replay has diverged and the
          // state comparison will show it
        }
      }
      ++next;
    }
    session.tick();
  }
  return session;
}

}  // namespace handover
