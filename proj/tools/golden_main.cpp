// Golden-suite runner: executes every curated scenario through the CLI
// binary, evaluates the per-case predicates and writes a machine-readable
// report. Exit code 0 only when every check passes.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "hybridsim/golden.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hybridsim golden-suite runner"};
  std::string bin, scenarios, out = "golden_out", report_path;
  int threads = 1;
  app.add_option("--bin", bin, "path to the hybridsim CLI binary")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--scenarios", scenarios, "directory with scenario configs")
      ->required()
      ->check(CLI::ExistingDirectory);
  app.add_option("--out", out, "output root for case datasets");
  app.add_option("--report", report_path, "write the JSON report here");
  app.add_option("--threads", threads, "worker threads per case");
  CLI11_PARSE(app, argc, argv);

  const hybridsim::GoldenReport report =
      hybridsim::run_golden_suite(bin, scenarios, out, threads);

  int failed = 0;
  for (const auto& r : report.results) {
    if (!r.ran) {
      std::printf("[FAIL] %s: run exited with %d\n", r.name.c_str(), r.exit_code);
      ++failed;
      continue;
    }
    for (const auto& c : r.checks) {
      std::printf("[%s] %s: %s — %s\n", c.pass ? "PASS" : "FAIL", r.name.c_str(),
                  c.name.c_str(), c.detail.c_str());
      if (!c.pass) ++failed;
    }
  }
  std::printf("%s: %zu cases, %d failing checks\n",
              report.all_pass() ? "GOLDEN SUITE PASS" : "GOLDEN SUITE FAIL",
              report.results.size(), failed);

  if (!report_path.empty()) {
    std::ofstream out_file(report_path);
    out_file << report.to_json().dump(2) << '\n';
  }
  return report.all_pass() ? 0 : 1;
}
