#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "handover/orchestrator.hpp"
#include "handover/tql.hpp"

namespace handover::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBudget = 3;

struct RunOptions {
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> catalog;
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> reactions;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> metrics;
  std::optional<std::size_t> node_budget;
  ResponderMode driver = ResponderMode::Scripted;
};

/// Events go to `--out` or `out`; the metrics document to `--metrics`.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// One JSON array of atom names per line. Throws SyntaxError or UnknownAtom
/// citing the line.
std::vector<PropositionSet> parse_trace(std::string_view text, const Alphabet& alphabet);

int cmd_check(const std::filesystem::path& catalog, const std::filesystem::path& trace,
              std::ostream& out, std::ostream& err);

struct BatchOptions {
  std::filesystem::path dir;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> catalog;
  ResponderMode driver = ResponderMode::Scripted;
  unsigned jobs = 0;  ///< 0 picks the hardware concurrency
};

struct BatchRow {
  std::string name;
  std::string outcome;
  MetricsReport metrics;
  std::string error;
};

std::string batch_csv(const std::vector<BatchRow>& rows);

int cmd_batch(const BatchOptions& options, std::ostream& out, std::ostream& err);

}  // namespace handover::cli
