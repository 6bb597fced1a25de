#include "oracles.hpp"

#include <algorithm>
#include <functional>

namespace oracle {

using handover::Op;

namespace {

std::size_t window_end(std::size_t i, int bound, std::size_t n) {
  return std::min(i + static_cast<std::size_t>(bound), n);
}

}  // namespace

bool holds(const Formula& f, TraceView trace, std::size_t i) {
  const std::size_t n = trace.size() - 1;
  switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Atom: return trace[i].contains(f.atom_index());
    case Op::Not: return !holds(f.lhs(), trace, i);
    case Op::And: return holds(f.lhs(), trace, i) && holds(f.rhs(), trace, i);
    case Op::Or: return holds(f.lhs(), trace, i) || holds(f.rhs(), trace, i);
    case Op::Next: return i < n && holds(f.lhs(), trace, i + 1);
    case Op::Finally:
      for (std::size_t j = i; j <= window_end(i, f.bound(), n); ++j) {
        if (holds(f.lhs(), trace, j)) return true;
      }
      return false;
    case Op::Globally:
      for (std::size_t j = i; j <= window_end(i, f.bound(), n); ++j) {
        if (!holds(f.lhs(), trace, j)) return false;
      }
      return true;
    case Op::Until:
      for (std::size_t j = i; j <= window_end(i, f.bound(), n); ++j) {
        if (holds(f.rhs(), trace, j)) return true;
        if (!holds(f.lhs(), trace, j)) return false;
      }
      return false;
  }
  return false;
}

std::optional<std::size_t> earliest(const Formula& f, TraceView trace) {
  if (!holds(f, trace, 0)) return std::nullopt;
  const std::size_t n = trace.size() - 1;
  if (f.op() == Op::Finally) {
    for (std::size_t j = 0; j <= window_end(0, f.bound(), n); ++j) {
      if (holds(f.lhs(), trace, j)) return j;
    }
  }
  if (f.op() == Op::Until) {
    for (std::size_t j = 0; j <= window_end(0, f.bound(), n); ++j) {
      if (holds(f.rhs(), trace, j)) return j;
    }
  }
  return 0;
}

double score(TraceView trace, const handover::QueryCatalog& catalog) {
  double s = 0.0;
  for (const auto& e : catalog.entries()) {
    if (holds(e.formula, trace, 0)) s += e.severity * e.weight;
  }
  return s;
}

PlanOracleResult enumerate_plans(const handover::WorldState& state, const handover::Road& road,
                                 const handover::SimParams& params, int horizon,
                                 const handover::QueryCatalog& catalog,
                                 const handover::PlannerConfig& config) {
  using namespace handover;
  // Goal position from the plain default rollout, computed by hand.
  WorldState s = state;
  for (int t = 0; t < horizon && !route_finished(s, road); ++t) {
    s = step(s, default_policy(s, road, params), road, params);
  }
  const double goal = s.position - config.progress_slack;
  const auto actions = branching_actions(params);

  PlanOracleResult out;
  std::vector<WorldState> states{state};
  std::vector<Action> taken;
  double cost = 0.0;

  std::function<void()> dfs = [&] {
    const WorldState cur = states.back();
    const bool end = static_cast<int>(taken.size()) == horizon || route_finished(cur, road);
    if (end) {
      ++out.sequences;
      std::vector<PropositionSet> props;
      for (const WorldState& w : states) props.push_back(abstract(w, road, params));
      while (props.size() < static_cast<std::size_t>(horizon) + 1) props.push_back(props.back());
      if (cur.position < goal) return;
      if (score(props, catalog) >= config.thresholds.elevated) return;
      if (!out.found || cost < out.best_cost - 1e-9) {
        out.found = true;
        out.best_cost = cost;
        out.best = taken;
      }
      return;
    }
    for (const Action& a : actions) {
      if (!is_applicable(cur, a, road, params)) continue;
      WorldState next = step(cur, a, road, params);
      if (collides(cur, next, road)) continue;
      const double c = step_cost(a, params, config);
      states.push_back(next);
      taken.push_back(a);
      cost += c;
      dfs();
      cost -= c;
      taken.pop_back();
      states.pop_back();
    }
  };
  dfs();
  return out;
}

const handover::Alphabet& Generator::alphabet() {
  static const handover::Alphabet a{"a", "b", "c", "d"};
  return a;
}

Formula Generator::formula(int max_depth, int max_bound) {
  static const char* const kAtoms[] = {"a", "b", "c", "d"};
  std::function<Formula(int)> make = [&](int depth) -> Formula {
    const int leaf_odds = depth <= 1 ? 100 : 25;
    if (uniform(1, 100) <= leaf_odds) {
      const int pick = uniform(0, 9);
      if (pick == 8) return Formula::constant(true);
      if (pick == 9) return Formula::constant(false);
      return Formula::atom(kAtoms[pick % 4]);
    }
    const int k = uniform(0, max_bound);
    switch (uniform(0, 7)) {
      case 0: return Formula::negation(make(depth - 1));
      case 1: return Formula::conjunction(make(depth - 1), make(depth - 1));
      case 2: return Formula::disjunction(make(depth - 1), make(depth - 1));
      case 3: return Formula::next(make(depth - 1));
      case 4: return Formula::finally(k, make(depth - 1));
      case 5: return Formula::globally(k, make(depth - 1));
      default: return Formula::until(k, make(depth - 1), make(depth - 1));
    }
  };
  return handover::bind(make(uniform(1, max_depth)), alphabet());
}

std::vector<PropositionSet> Generator::trace(std::size_t min_len, std::size_t max_len) {
  const auto len = static_cast<std::size_t>(uniform(static_cast<int>(min_len),
                                                    static_cast<int>(max_len)));
  std::vector<PropositionSet> t;
  for (std::size_t i = 0; i < len; ++i) t.emplace_back(static_cast<std::uint32_t>(uniform(0, 15)));
  return t;
}

std::filesystem::path pack_dir() { return HANDOVER_PACK_DIR; }

std::filesystem::path data_dir() { return HANDOVER_DATA_DIR; }

std::vector<std::filesystem::path> pack_files() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(pack_dir())) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

bool violates(PropositionSet props, const handover::QueryCatalog& catalog) {
  const PropositionSet one[] = {props};
  for (const auto& e : catalog.entries()) {
    if (holds(e.formula, one, 0)) return true;
  }
  return false;
}

std::optional<double> first_critical_position(const handover::Scenario& scenario,
                                              const handover::QueryCatalog& catalog) {
  using namespace handover;
  const SimParams params = scenario.params();
  WorldState s = scenario.initial;
  for (int t = 0; t < 100'000; ++t) {
    if (violates(abstract(s, scenario.road, params), catalog)) {
      return scenario.road.segment_start(scenario.road.segment_index(s.position));
    }
    if (route_finished(s, scenario.road)) break;
    s = step(s, default_policy(s, scenario.road, params), scenario.road, params);
  }
  return std::nullopt;
}

}  // namespace oracle
