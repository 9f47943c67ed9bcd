#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "llsp/tensor.hpp"
#include "llsp/verify.hpp"

namespace llsp {

/// Quotient of a product of generalized Heisenberg groups on one fundamental
/// domain chart: the invariant 2-form, the Lagrangian foliation frame, a
/// transversal frame, and the projectable transversal metric block.
struct HeisenbergData {
  ChartPtr chart;
  PForm omega;
  Splitting split;
  MetricBlock theta;
  ExprMat metric;  // full coordinate metric
};

HeisenbergData build_heisenberg(int p, int q, double alpha);

/// Named, reproducible check bundle.  Every scenario lists its expected
/// outcomes explicitly; names absent from `expected` are expected to pass.
/// A scenario run matches when every observed outcome equals its expectation,
/// so deliberately failing checks are part of a passing run.
struct Scenario {
  std::string name;
  std::string description;
  std::map<std::string, bool> expected;
  std::function<std::vector<CheckReport>(const RunConfig&,
                                         const std::map<std::string, std::string>&)>
      run;
};

const std::vector<Scenario>& scenario_registry();
std::vector<std::string> list_scenarios();
const Scenario* find_scenario(const std::string& name);
/// Human-readable description including parameters and expected outcomes.
/// Throws DomainError for unknown names.
std::string describe_scenario(const std::string& name);

struct Report {
  std::string scenario;
  RunConfig config;
  std::vector<CheckReport> checks;
  bool verdict = false;                  // all outcomes match their expectations
  std::vector<std::string> mismatches;   // names of checks that deviated
  long long wall_ms = 0;                 // console only; serialized as 0

  /// Schema: {scenario, config:{seed,samples,box,tol}, checks:[{name, pass,
  /// max_residual, witness}], verdict, ms}.  Byte-identical for identical
  /// (scenario, config, params).
  std::string to_json() const;
};

Report run_scenario(const std::string& name, const RunConfig& cfg,
                    const std::map<std::string, std::string>& params = {});

}  // namespace llsp
