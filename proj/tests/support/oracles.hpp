#pragma once

// Reference implementations the production code is checked against. They are
// written from the definitions, favouring obviousness over speed.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "handover/criticality.hpp"
#include "handover/planner.hpp"
#include "handover/scenario.hpp"
#include "handover/tql.hpp"

namespace oracle {

using handover::Formula;
using handover::PropositionSet;
using handover::TraceView;

/// Direct recursive semantics at index i of a non-empty trace.
bool holds(const Formula& f, TraceView trace, std::size_t i);

/// Smallest witness of a top-level F or U, 0 for other shapes that hold at 0.
std::optional<std::size_t> earliest(const Formula& f, TraceView trace);

/// Sum of severity * weight over the queries holding at index 0.
double score(TraceView trace, const handover::QueryCatalog& catalog);

struct PlanOracleResult {
  bool found = false;
  double best_cost = 0.0;
  std::vector<handover::Action> best;
  std::size_t sequences = 0;
};

/// Enumerates every action sequence of the branching set up to `horizon`
/// steps, stopping a branch where the route ends.
PlanOracleResult enumerate_plans(const handover::WorldState& state, const handover::Road& road,
                                 const handover::SimParams& params, int horizon,
                                 const handover::QueryCatalog& catalog,
                                 const handover::PlannerConfig& config = {});

/// Random formulas over atoms a..d and random traces over the same alphabet.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  Formula formula(int max_depth, int max_bound);
  std::vector<PropositionSet> trace(std::size_t min_len, std::size_t max_len);
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

  static const handover::Alphabet& alphabet();

 private:
  std::mt19937_64 rng_;
};

std::filesystem::path pack_dir();
std::vector<std::filesystem::path> pack_files();
std::filesystem::path data_dir();

/// Start of the segment holding the first state of the no-intervention
/// trajectory that violates the catalog on its own. nullopt when none does.
std::optional<double> first_critical_position(const handover::Scenario& scenario,
                                              const handover::QueryCatalog& catalog);

/// True when some query holds on the single-state trace [props].
bool violates(PropositionSet props, const handover::QueryCatalog& catalog);

}  // namespace oracle
