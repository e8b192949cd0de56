#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "dkplab/scenarios.hpp"
#include "dkplab/util.hpp"

namespace {

// 0 ok, 1 validation failure, 2 runtime error
int cmd_validate(const std::string& path, bool quiet) {
  std::vector<dkplab::Diagnostic> diags;
  try {
    diags = dkplab::validate_config(path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  bool failed = false;
  for (const auto& d : diags) {
    failed = failed || d.severity == "error";
    if (!quiet || d.severity == "error") {
      if (d.line > 0)
        std::fprintf(stderr, "%s:%d: %s: %s: %s\n", path.c_str(), d.line, d.severity.c_str(),
                     d.field.c_str(), d.message.c_str());
      else
        std::fprintf(stderr, "%s: %s: %s: %s\n", path.c_str(), d.severity.c_str(),
                     d.field.c_str(), d.message.c_str());
    }
  }
  if (failed) return 1;
  if (!quiet) std::printf("%s: ok (%zu warnings)\n", path.c_str(), diags.size());
  return 0;
}

int cmd_run(const std::string& path) {
  int rc = cmd_validate(path, true);
  if (rc != 0) return rc;
  try {
    auto cfg = dkplab::load_config(path);
    auto files = dkplab::run_scenario(cfg);
    for (const auto& f : files) std::printf("%s/%s\n", cfg.output_dir.c_str(), f.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

int cmd_list() {
  for (const auto& [id, desc] : dkplab::scenario_catalog())
    std::printf("%s  %s\n", id.c_str(), desc.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dkplab: elliptic-measure experiments on the discrete half space"};
  app.set_version_flag("--version", std::string(dkplab::kVersion));
  app.require_subcommand(1);
  app.footer("worker count: DKPLAB_WORKERS (default: hardware concurrency)");

  std::string run_path, validate_path;
  auto* run = app.add_subcommand("run", "execute a scenario config and write its artifacts");
  run->add_option("config", run_path, "path to a scenario config (json)")->required();
  auto* val = app.add_subcommand("validate", "check a config and print diagnostics");
  val->add_option("config", validate_path, "path to a scenario config (json)")->required();
  auto* list = app.add_subcommand("list-scenarios", "print the scenario catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(run_path);
  if (val->parsed()) return cmd_validate(validate_path, false);
  if (list->parsed()) return cmd_list();
  return 2;
}
