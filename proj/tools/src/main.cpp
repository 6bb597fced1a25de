#include <csignal>
#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "handover/service.hpp"

namespace {

handover::SessionService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

handover::ResponderMode parse_driver(const std::string& s) {
  return s == "none" ? handover::ResponderMode::None : handover::ResponderMode::Scripted;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace handover::cli;
  CLI::App app{"Foresighted handover orchestration for an abstract driving world"};
  app.require_subcommand(1);

  RunOptions run;
  std::string run_driver = "scripted";
  std::string run_scenario;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario to completion");
  run_cmd->add_option("scenario", run_scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--catalog", run.catalog, "Query catalog file");
  run_cmd->add_option("--templates", run.templates, "Message template table");
  run_cmd->add_option("--reactions", run.reactions, "Reaction time table");
  run_cmd->add_option("--out", run.out, "Event log (JSON Lines), default stdout");
  run_cmd->add_option("--metrics", run.metrics, "Metrics JSON");
  run_cmd->add_option("--node-budget", run.node_budget, "Planner node budget per search");
  run_cmd->add_option("--driver", run_driver, "Responding driver")
      ->check(CLI::IsMember({"scripted", "none"}));

  std::string check_catalog;
  std::string check_trace;
  auto* check_cmd = app.add_subcommand("check", "Evaluate a query catalog on a stored trace");
  check_cmd->add_option("catalog", check_catalog, "Query catalog file")->required();
  check_cmd->add_option("trace", check_trace, "Trace file, one JSON array of atoms per line")
      ->required();

  BatchOptions batch;
  std::string batch_dir;
  std::string batch_driver = "scripted";
  auto* batch_cmd = app.add_subcommand("batch", "Run every scenario in a directory");
  batch_cmd->add_option("dir", batch_dir, "Directory of scenario files")->required();
  batch_cmd->add_option("--report", batch.report, "CSV report, default stdout");
  batch_cmd->add_option("--catalog", batch.catalog, "Query catalog file");
  batch_cmd->add_option("--driver", batch_driver, "Responding driver")
      ->check(CLI::IsMember({"scripted", "none"}));
  batch_cmd->add_option("--jobs", batch.jobs, "Concurrent scenarios");

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;
  double scale = 1.0;
  auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions over HTTP");
  serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--static", static_dir, "Directory served under /");
  serve_cmd->add_option("--scale", scale, "Wall-clock seconds per simulated second")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*run_cmd) {
    run.scenario = run_scenario;
    run.driver = parse_driver(run_driver);
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*check_cmd) return cmd_check(check_catalog, check_trace, std::cout, std::cerr);
  if (*batch_cmd) {
    batch.dir = batch_dir;
    batch.driver = parse_driver(batch_driver);
    return cmd_batch(batch, std::cout, std::cerr);
  }

  handover::ServiceConfig config;
  config.realtime_scale = scale;
  if (!static_dir.empty()) config.static_dir = static_dir;
  handover::SessionService service(config);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on http://" << host << ":" << port << "\n";
  if (!service.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitInput;
  }
  return kExitOk;
}
