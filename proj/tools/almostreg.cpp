#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "almostreg/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Almost-regularity toolkit: run scenario suites and report verdicts"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run scenario files or directories of *.json files");
  std::vector<std::string> paths;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::string format = "text";
  double tolerance_scale = 1.0;
  run->add_option("paths", paths, "Scenario files or directories")->required();
  run->add_option("--seed", seed, "Suite seed; each scenario derives its own from it and its id");
  run->add_option("--jobs", jobs, "Worker threads (default: ALMOSTREG_JOBS or the core count)");
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "machine"}));
  run->add_option("--tolerance-scale", tolerance_scale, "Multiplier for every expectation tolerance")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  std::vector<std::filesystem::path> fs_paths;
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) {
      std::cerr << "almostreg: no such file or directory: " << p << "\n";
      return 2;
    }
    fs_paths.emplace_back(p);
  }
  const auto scenarios = almostreg::load_paths(fs_paths);
  const almostreg::SuiteReport suite =
      almostreg::run_suite(scenarios, {.seed = seed, .jobs = jobs, .tolerance_scale = tolerance_scale});
  std::cout << almostreg::emit_report(
      suite, format == "machine" ? almostreg::ReportFormat::machine : almostreg::ReportFormat::text);
  return suite.all_passed() ? 0 : 1;
}
