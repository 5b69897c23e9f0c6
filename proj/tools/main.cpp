#include "cli/commands.hpp"
#include "cli/config.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int fail(const std::string& command, msdelay::ErrorKind kind, const std::string& message) {
  std::cerr << msdelay::cli::error_document(command, kind, message).dump() << '\n';
  return msdelay::cli::exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-state train delay analysis: ingest, episodes, fit-np, fit-cox, predict, simulate"};
  app.require_subcommand(1, 1);

  std::string config_file;
  std::string workspace;
  std::vector<std::string> overrides;
  unsigned workers = 0;
  bool no_timestamp = false;
  bool quiet = false;
  app.add_option("-c,--config", config_file, "Configuration file (JSON)");
  app.add_option("-w,--workspace", workspace,
                 "Workspace root; overrides MSDELAY_WORKSPACE and the config key");
  app.add_option("--set", overrides, "Override a configuration key, e.g. --set bootstrap.replicates=200");
  app.add_option("-j,--workers", workers, "Worker threads");
  app.add_flag("--no-timestamp", no_timestamp, "Omit generation timestamps from report headers");
  app.add_flag("-q,--quiet", quiet, "Suppress progress notes");

  for (const auto& name : msdelay::cli::command_names()) {
    app.add_subcommand(name, "Run the " + name + " stage");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const auto command = app.get_subcommands().front()->get_name();

  try {
    msdelay::cli::LoadOptions load;
    if (!config_file.empty()) load.config_file = config_file;
    if (!workspace.empty()) load.workspace_flag = workspace;
    if (workers > 0) load.workers_flag = workers;
    load.overrides = overrides;
    const auto config = msdelay::cli::load_config(load);
    msdelay::cli::RunOptions run;
    run.timestamp = !no_timestamp;
    run.log = quiet ? nullptr : &std::cerr;
    msdelay::cli::run_command(command, config, run);
  } catch (const msdelay::Error& e) {
    return fail(command, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(command, msdelay::ErrorKind::Input, e.what());
  }
  return 0;
}
