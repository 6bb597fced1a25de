#include "doctest.h"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "handover/errors.hpp"
#include "oracles.hpp"

using namespace handover;
using namespace handover::cli;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("handover_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
  fs::path path;
};

void write(const fs::path& p, std::string_view text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

RunOptions run_of(const char* scenario) {
  RunOptions o;
  o.scenario = oracle::pack_dir() / scenario;
  return o;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const RunOptions& o) {
  std::ostringstream out, err;
  const int code = cmd_run(o, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("run writes a parseable log and metrics") {
  TempDir dir;
  RunOptions o = run_of("blocked_avoidable.json");
  o.metrics = dir / "m.json";
  const Outcome r = run(o);
  CHECK(r.code == kExitOk);
  CHECK(r.err.empty());
  const auto log = parse_jsonl(r.out);
  REQUIRE_FALSE(log.empty());
  CHECK(log.back().kind == EventKind::Completed);
  const auto m = nlohmann::json::parse(read_text_file(dir / "m.json"));
  CHECK(m["outcome"] == "COMPLETED");
  CHECK(m["alerts"] == 0);

  o.out = dir / "log.jsonl";
  CHECK(run(o).code == kExitOk);
  CHECK(read_text_file(dir / "log.jsonl") == r.out);
}

TEST_CASE("runs are deterministic and the seed matters") {
  RunOptions o = run_of("fog_highway.json");
  const std::string first = run(o).out;
  CHECK(run(o).out == first);
  o.seed = 12345;
  const std::string seeded = run(o).out;
  CHECK(run(o).out == seeded);
  CHECK(seeded != first);
}

TEST_CASE("run exit codes for bad input") {
  TempDir dir;
  RunOptions o;
  o.scenario = dir / "absent.json";
  Outcome r = run(o);
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("error:") == 0);

  write(dir / "broken.json", "{\n  \"name\": \n}");
  o.scenario = dir / "broken.json";
  r = run(o);
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("line 3") != std::string::npos);

  o = run_of("fog_highway.json");
  write(dir / "bad.tql", "q 3 F[<=3] Fog\n");
  o.catalog = dir / "bad.tql";
  CHECK(run(o).code == kExitInput);
}

TEST_CASE("an exhausted planner budget exits with its own code") {
  RunOptions o = run_of("blocked_avoidable.json");
  o.node_budget = 3;
  const Outcome r = run(o);
  CHECK(r.code == kExitBudget);
  CHECK(r.err.find("budget") != std::string::npos);
  CHECK(metrics(parse_jsonl(r.out)).budget_exhausted);
}

TEST_CASE("trace files") {
  const Alphabet& a = concept_alphabet();
  const auto t = parse_trace("[\"InFog\", \"HighSpeed\"]\n\n[]\n", a);
  REQUIRE(t.size() == 2);
  CHECK(t[0].names(a) == std::vector<std::string>{"InFog", "HighSpeed"});
  CHECK(t[1].empty());
  try {
    parse_trace("[]\n[]\n[\"InFog\"\n", a);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_trace("[]\n[\"Snow\"]\n", a);
    FAIL("expected an unknown atom");
  } catch (const UnknownAtom& e) {
    CHECK(e.line() == 2);
    CHECK(e.name() == "Snow");
  }
  CHECK_THROWS_AS(parse_trace("{}\n", a), SyntaxError);
  CHECK_THROWS_AS(parse_trace("[1]\n", a), SyntaxError);
}

TEST_CASE("check reports every query") {
  TempDir dir;
  write(dir / "t.jsonl", "[]\n[\"InFog\", \"HighSpeed\"]\n[\"LaneBlocked\"]\n");
  std::ostringstream out, err;
  CHECK(cmd_check(oracle::data_dir() / "catalog.tql", dir / "t.jsonl", out, err) == kExitOk);
  const std::string text = out.str();
  CHECK(text.find("fog_speed") != std::string::npos);
  CHECK(text.find("fog_speed      yes      1\n") != std::string::npos);
  CHECK(text.find("blocked_road   yes      2\n") != std::string::npos);
  CHECK(text.find("tunnel_sensor  no       -\n") != std::string::npos);
  CHECK(text.find("score 8 level CRITICAL\n") != std::string::npos);

  write(dir / "empty.jsonl", "\n");
  std::ostringstream out2, err2;
  CHECK(cmd_check(oracle::data_dir() / "catalog.tql", dir / "empty.jsonl", out2, err2) == kExitInput);
  write(dir / "bad.jsonl", "[]\n[\"Nope\"]\n");
  std::ostringstream out3, err3;
  CHECK(cmd_check(oracle::data_dir() / "catalog.tql", dir / "bad.jsonl", out3, err3) == kExitInput);
  CHECK(err3.str().find("line 2") != std::string::npos);
}

TEST_CASE("batch over the pack") {
  TempDir dir;
  BatchOptions o;
  o.dir = oracle::pack_dir();
  o.report = dir / "report.csv";
  o.jobs = 2;
  std::ostringstream out, err;
  CHECK(cmd_batch(o, out, err) == kExitOk);
  const std::string csv = read_text_file(dir / "report.csv");
  std::istringstream lines(csv);
  std::vector<std::string> rows;
  for (std::string line; std::getline(lines, line);) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] ==
        "name,outcome,replans,alerts,escalations,safe_stops,notice_lead_time,words,"
        "takeover_latency,budget_exhausted,error");
  CHECK(rows[1].rfind("blocked_avoidable,COMPLETED,", 0) == 0);
  CHECK(rows[2].rfind("construction_zone,", 0) == 0);
  CHECK(rows[3].rfind("fog_highway,", 0) == 0);
  CHECK(rows[4].rfind("tunnel_sensor,", 0) == 0);

  o.jobs = 1;
  o.report.reset();
  std::ostringstream serial;
  CHECK(cmd_batch(o, serial, err) == kExitOk);
  CHECK(serial.str() == csv);

  o.driver = ResponderMode::None;
  std::ostringstream none;
  CHECK(cmd_batch(o, none, err) == kExitOk);
  CHECK(none.str().find("fog_highway,STOPPED,") != std::string::npos);

  o.dir = dir / "missing";
  CHECK(cmd_batch(o, out, err) == kExitInput);
}

TEST_CASE("csv quoting") {
  BatchRow row;
  row.name = "a,b";
  row.error = "say \"hi\"";
  const std::string csv = batch_csv({row});
  CHECK(csv.find("\"a,b\",") != std::string::npos);
  CHECK(csv.find("\"say \"\"hi\"\"\"") != std::string::npos);
}
