#include "llsp/harness.hpp"

#include <chrono>

#include <json.hpp>

namespace llsp {

std::vector<std::string> list_scenarios() {
  std::vector<std::string> out;
  for (const auto& s : scenario_registry()) out.push_back(s.name);
  return out;
}

const Scenario* find_scenario(const std::string& name) {
  for (const auto& s : scenario_registry())
    if (s.name == name) return &s;
  return nullptr;
}

std::string describe_scenario(const std::string& name) {
  const Scenario* s = find_scenario(name);
  if (!s) throw DomainError("unknown scenario: " + name);
  std::string out = s->name + "\n" + s->description + "\n";
  if (!s->expected.empty()) {
    out += "expected outcomes:\n";
    for (const auto& [check, pass] : s->expected)
      out += "  " + check + ": " + (pass ? "pass" : "fail") + "\n";
  }
  return out;
}

std::string Report::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["config"] = {{"seed", config.seed},
                 {"samples", config.samples},
                 {"box", config.box},
                 {"tol", config.residual_tol}};
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    jc["max_residual"] = c.max_residual;
    if (c.witness)
      jc["witness"] = *c.witness;
    else
      jc["witness"] = nullptr;
    if (!c.note.empty()) jc["note"] = c.note;
    j["checks"].push_back(jc);
  }
  j["verdict"] = verdict ? "pass" : "fail";
  // Reports must be byte-identical across runs with the same configuration;
  // wall time goes to the console instead.
  j["ms"] = 0;
  return j.dump(2);
}

Report run_scenario(const std::string& name, const RunConfig& cfg,
                    const std::map<std::string, std::string>& params) {
  const Scenario* s = find_scenario(name);
  if (!s) throw DomainError("unknown scenario: " + name);

  Report report;
  report.scenario = name;
  report.config = cfg;

  auto start = std::chrono::steady_clock::now();
  report.checks = s->run(cfg, params);
  auto stop = std::chrono::steady_clock::now();
  report.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();

  report.verdict = true;
  for (const auto& c : report.checks) {
    auto it = s->expected.find(c.name);
    bool expect = it == s->expected.end() ? true : it->second;
    if (c.pass != expect) {
      report.verdict = false;
      report.mismatches.push_back(c.name);
    }
  }
  return report;
}

}  // namespace llsp
