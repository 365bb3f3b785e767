// Scenario-driven command line runner. Each subcommand executes the
// matching task block of a JSON scenario config and writes CSV datasets
// plus a manifest with content digests.
//
// Exit codes: 0 success, 1 runtime error (reported in the manifest),
// 2 config error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hybridsim/runner.hpp"
#include "hybridsim/scenario.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool strict = true;
};

int run(const CliOptions& opts, const std::string& subcommand) {
  hybridsim::ScenarioConfig cfg;
  try {
    cfg = hybridsim::parse_config(opts.config_path, opts.strict);
  } catch (const hybridsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  if (subcommand == "validate") {
    std::printf("ok: %s (task %s)\n", opts.config_path.c_str(),
                hybridsim::task_name(cfg.task));
    return 0;
  }
  if (subcommand != hybridsim::task_name(cfg.task)) {
    std::fprintf(stderr,
                 "config error: config contains a \"%s\" task block but the \"%s\" "
                 "subcommand was invoked\n",
                 hybridsim::task_name(cfg.task), subcommand.c_str());
    return 2;
  }

  hybridsim::RunOptions run_opts;
  if (!opts.out_dir.empty()) run_opts.out_dir = opts.out_dir;
  if (opts.seed_set) run_opts.seed = opts.seed;
  run_opts.threads = opts.threads;

  try {
    const hybridsim::RunManifest manifest = hybridsim::run_scenario(cfg, run_opts);
    if (manifest.status != "ok") {
      std::fprintf(stderr, "runtime error: %s\n", manifest.error.c_str());
      return 1;
    }
    std::printf("%s: wrote %zu files to %s (%.1f ms)\n", manifest.task.c_str(),
                manifest.files.size(),
                run_opts.out_dir.value_or(cfg.output_dir).c_str(), manifest.timing_ms);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybridsim: ferromagnet-spin-qubit hybrid system simulator"};
  app.require_subcommand(1);

  CliOptions opts;
  app.add_option("--config", opts.config_path, "scenario config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", opts.out_dir, "output directory (overrides output.dir)");
  app.add_option("--seed", opts.seed, "ensemble seed override")
      ->each([&](const std::string&) { opts.seed_set = true; });
  app.add_option("--threads", opts.threads,
                 "worker threads (0 = HYBRIDSIM_THREADS or hardware)");
  app.add_flag("--strict,!--no-strict", opts.strict,
               "reject unknown config keys (default on)");

  const char* subcommands[] = {"dispersion",    "transmission", "odmr-map", "rabi",
                               "sequence",      "amplification", "sensing",  "validate"};
  for (const char* name : subcommands) {
    app.add_subcommand(name, std::string("run the ") + name + " task");
  }

  CLI11_PARSE(app, argc, argv);

  std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "odmr-map") sub = "odmr_map";
  return run(opts, sub);
}
