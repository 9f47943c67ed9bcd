#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "llsp/harness.hpp"

namespace {

void print_report(const llsp::Report& report) {
  for (const auto& c : report.checks) {
    const llsp::Scenario* s = llsp::find_scenario(report.scenario);
    bool expected = true;
    if (s) {
      auto it = s->expected.find(c.name);
      if (it != s->expected.end()) expected = it->second;
    }
    std::printf("  [%s] %-32s max_residual=%.3e%s\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.max_residual,
                expected ? "" : "  (failure expected)");
  }
  std::printf("%s: %s (%lld ms)\n", report.scenario.c_str(),
              report.verdict ? "all expectations met" : "MISMATCH",
              report.wall_ms);
  for (const auto& name : report.mismatches)
    std::printf("  mismatch: %s\n", name.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chart-level checks for locally Lagrangian symplectic and Poisson structures"};
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "list registered scenarios");

  std::string describe_name;
  auto* describe_cmd = app.add_subcommand("describe", "describe one scenario");
  describe_cmd->add_option("name", describe_name, "scenario name")->required();

  std::string run_name, json_path, params_path;
  std::vector<std::string> param_kv;
  llsp::RunConfig cfg;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and report per-check outcomes");
  run_cmd->add_option("name", run_name, "scenario name")->required();
  run_cmd->add_option("--seed", cfg.seed, "sample seed (default 42)");
  run_cmd->add_option("--samples", cfg.samples, "sample count (default 100)");
  run_cmd->add_option("--tol", cfg.residual_tol, "residual tolerance (default 1e-9)");
  run_cmd->add_option("--box", cfg.box, "sample box half width (default 1)");
  run_cmd->add_option("--json", json_path, "write the JSON report to this path");
  run_cmd->add_option("--param", param_kv, "scenario parameter key=value (repeatable)");
  run_cmd->add_option("--params", params_path, "JSON file with scenario parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list_cmd->parsed()) {
      for (const auto& name : llsp::list_scenarios()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (describe_cmd->parsed()) {
      std::printf("%s", llsp::describe_scenario(describe_name).c_str());
      return 0;
    }

    std::map<std::string, std::string> params;
    if (!params_path.empty()) {
      std::ifstream in(params_path);
      if (!in) {
        std::fprintf(stderr, "cannot open parameter file: %s\n", params_path.c_str());
        return 2;
      }
      nlohmann::json j = nlohmann::json::parse(in);
      for (auto it = j.begin(); it != j.end(); ++it)
        params[it.key()] = it.value().is_string() ? it.value().get<std::string>()
                                                  : it.value().dump();
    }
    for (const auto& kv : param_kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "malformed --param (expected key=value): %s\n", kv.c_str());
        return 2;
      }
      params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }

    if (!llsp::find_scenario(run_name)) {
      std::fprintf(stderr, "unknown scenario: %s\n", run_name.c_str());
      return 2;
    }
    llsp::Report report = llsp::run_scenario(run_name, cfg, params);
    print_report(report);
    if (!json_path.empty()) {
      std::ofstream out(json_path);
      out << report.to_json() << "\n";
    }
    return report.verdict ? 0 : 1;
  } catch (const llsp::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const llsp::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
