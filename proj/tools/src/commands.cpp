#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <thread>

#include "handover/errors.hpp"
#include "handover/scenario.hpp"

namespace handover::cli {

namespace {

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

SessionConfig session_config(const RunOptions& o) {
  SessionConfig config;
  if (o.catalog) config.catalog = QueryCatalog::load(*o.catalog);
  if (o.templates) config.templates = TemplateTable::load(*o.templates);
  if (o.reactions) config.reactions = ReactionTable::from_json(read_text_file(*o.reactions));
  if (o.node_budget) config.planner.node_budget = *o.node_budget;
  config.responder = o.driver;
  config.seed = o.seed;
  return config;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const Scenario scenario = load_scenario(options.scenario);
    HandoverSession session(scenario, session_config(options));
    const bool finished = session.run();
    const std::string log = to_jsonl(session.log());
    if (options.out) {
      write_file(*options.out, log);
    } else {
      out << log;
    }
    const MetricsReport m = metrics(session.log());
    if (options.metrics) write_file(*options.metrics, to_json(m).dump(2) + "\n");
    if (!finished) {
      err << "error: session did not finish\n";
      return kExitFailure;
    }
    if (m.budget_exhausted) {
      err << "error: planner node budget exhausted\n";
      return kExitBudget;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

std::vector<PropositionSet> parse_trace(std::string_view text, const Alphabet& alphabet) {
  std::vector<PropositionSet> trace;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    const std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SyntaxError(e.what(), line_no, e.byte);
    }
    if (!row.is_array()) throw SyntaxError("expected an array of atom names", line_no, 1);
    PropositionSet set;
    for (const auto& atom : row) {
      if (!atom.is_string()) throw SyntaxError("atom names must be strings", line_no, 1);
      const auto index = alphabet.index_of(atom.get<std::string>());
      if (!index) throw UnknownAtom(atom.get<std::string>(), line_no);
      set.insert(*index);
    }
    trace.push_back(set);
  }
  return trace;
}

int cmd_check(const std::filesystem::path& catalog_path, const std::filesystem::path& trace_path,
              std::ostream& out, std::ostream& err) {
  try {
    const QueryCatalog catalog = QueryCatalog::load(catalog_path);
    const std::vector<PropositionSet> trace =
        parse_trace(read_text_file(trace_path), concept_alphabet());
    if (trace.empty()) {
      err << "error: " << trace_path.string() << ": trace is empty\n";
      return kExitInput;
    }
    const CriticalityReport report = score_trace(trace, catalog, Thresholds{}, 1.0);
    std::size_t width = 5;
    for (const CatalogEntry& e : catalog.entries()) width = std::max(width, e.name.size());
    auto pad = [width](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };
    out << pad("query") << "matched  step\n";
    for (const QueryResult& r : report.results) {
      out << pad(r.name) << (r.matched ? "yes      " : "no       ")
          << (r.earliest_step ? std::to_string(*r.earliest_step) : std::string("-")) << "\n";
    }
    out << "score " << report.score << " level " << to_string(report.level) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

std::string batch_csv(const std::vector<BatchRow>& rows) {
  std::string csv =
      "name,outcome,replans,alerts,escalations,safe_stops,notice_lead_time,words,"
      "takeover_latency,budget_exhausted,error\n";
  for (const BatchRow& r : rows) {
    const MetricsReport& m = r.metrics;
    csv += csv_field(r.name) + ',' + r.outcome + ',' + std::to_string(m.handovers_avoided) + ',' +
           std::to_string(m.alerts) + ',' + std::to_string(m.escalations) + ',' +
           std::to_string(m.safe_stops) + ',' +
           (m.notice_lead_time ? format_number(*m.notice_lead_time) : std::string()) + ',' +
           std::to_string(m.total_words()) + ',' +
           (m.takeover_latency ? format_number(*m.takeover_latency) : std::string()) + ',' +
           (m.budget_exhausted ? "1" : "0") + ',' + csv_field(r.error) + '\n';
  }
  return csv;
}

int cmd_batch(const BatchOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<std::filesystem::path> files;
  try {
    if (!std::filesystem::is_directory(options.dir)) {
      err << "error: " << options.dir.string() << " is not a directory\n";
      return kExitInput;
    }
    for (const auto& entry : std::filesystem::directory_iterator(options.dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::sort(files.begin(), files.end());

  std::optional<QueryCatalog> catalog;
  try {
    if (options.catalog) catalog = QueryCatalog::load(*options.catalog);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  auto run_one = [&](const std::filesystem::path& file) {
    BatchRow row;
    row.name = file.stem().string();
    try {
      const Scenario scenario = load_scenario(file);
      row.name = scenario.name.empty() ? row.name : scenario.name;
      SessionConfig config;
      if (catalog) config.catalog = *catalog;
      config.responder = options.driver;
      HandoverSession session(scenario, std::move(config));
      if (!session.run()) row.error = "session did not finish";
      row.metrics = metrics(session.log());
      row.outcome = row.metrics.outcome;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  const unsigned jobs =
      std::max(1u, options.jobs ? options.jobs : std::thread::hardware_concurrency());
  std::vector<BatchRow> rows(files.size());
  for (std::size_t start = 0; start < files.size(); start += jobs) {
    std::vector<std::future<BatchRow>> running;
    for (std::size_t i = start; i < std::min(files.size(), start + jobs); ++i) {
      running.push_back(std::async(std::launch::async, run_one, files[i]));
    }
    for (std::size_t k = 0; k < running.size(); ++k) rows[start + k] = running[k].get();
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const BatchRow& a, const BatchRow& b) { return a.name < b.name; });

  const std::string csv = batch_csv(rows);
  try {
    if (options.report) {
      write_file(*options.report, csv);
    } else {
      out << csv;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  bool exhausted = false;
  for (const BatchRow& r : rows) {
    if (!r.error.empty()) err << r.name << ": " << r.error << "\n";
    exhausted = exhausted || r.metrics.budget_exhausted;
  }
  return exhausted ? kExitBudget : kExitOk;
}

}  // namespace handover::cli
