#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "llsp/harness.hpp"

using namespace llsp;

TEST_CASE("scenario catalog") {
  auto names = list_scenarios();
  for (const char* required :
       {"torus_oscillator", "heisenberg", "fibered_product", "tangent_lift_negative",
        "circle_maslov", "tn_forms"}) {
    CHECK(std::find(names.begin(), names.end(), required) != names.end());
  }

  std::string d = describe_scenario("tangent_lift_negative");
  CHECK(d.find("llp_pairing_symmetry") != std::string::npos);
  CHECK(d.find("fail") != std::string::npos);

  CHECK_THROWS_AS(describe_scenario("nosuch"), DomainError);
  CHECK(find_scenario("nosuch") == nullptr);
}

TEST_CASE("torus oscillator with custom parameters") {
  RunConfig cfg;
  std::map<std::string, std::string> params = {{"alpha", "[[2,0],[0,3]]"},
                                               {"m", "[1,2]"},
                                               {"s", "[0,1]"}};
  Report r = run_scenario("torus_oscillator", cfg, params);
  CHECK(r.verdict);
  bool found = false;
  for (const auto& c : r.checks)
    if (c.name == "omega_is_flat_symplectic") {
      found = true;
      CHECK(c.pass);
    }
  CHECK(found);
}

TEST_CASE("expected failures count as matches") {
  RunConfig cfg;
  Report r = run_scenario("tangent_lift_negative", cfg);
  CHECK(r.verdict);
  bool saw_expected_failure = false;
  for (const auto& c : r.checks)
    if (c.name == "llp_pairing_symmetry") saw_expected_failure = !c.pass;
  CHECK(saw_expected_failure);
}

TEST_CASE("reports are deterministic and schema-stable") {
  RunConfig cfg;
  Report a = run_scenario("fibered_product", cfg);
  Report b = run_scenario("fibered_product", cfg);
  CHECK(a.to_json() == b.to_json());

  std::string j = a.to_json();
  CHECK(j.find("\"scenario\"") != std::string::npos);
  CHECK(j.find("\"config\"") != std::string::npos);
  CHECK(j.find("\"seed\": 42") != std::string::npos);
  CHECK(j.find("\"checks\"") != std::string::npos);
  CHECK(j.find("\"verdict\"") != std::string::npos);
  CHECK(j.find("\"ms\": 0") != std::string::npos);

  // a different seed produces a report that is still internally consistent
  RunConfig other = cfg;
  other.seed = 7;
  Report c = run_scenario("fibered_product", other);
  CHECK(c.verdict);
  CHECK(c.to_json() != a.to_json());
}

TEST_CASE("unknown scenario is rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(run_scenario("nosuch", cfg), DomainError);
}

TEST_CASE("loop scenario surfaces its integral, winding, and agreement") {
  RunConfig cfg;
  Report r = run_scenario("circle_maslov", cfg, {{"resolution", "360"}});
  CHECK(r.verdict);
  std::string j = r.to_json();
  CHECK(j.find("maslov_integral") != std::string::npos);
  CHECK(j.find("winding") != std::string::npos);
  CHECK(j.find("agreement") != std::string::npos);
}

TEST_CASE("expression parameters flow through") {
  RunConfig cfg;
  std::map<std::string, std::string> params = {{"w12", "q1 + q2^2"}};
  Report r = run_scenario("tangent_lift_negative", cfg, params);
  CHECK(r.verdict);

  std::map<std::string, std::string> fp_params = {{"p_sym", "[[\"1 + x1^2\"]]"}};
  Report r2 = run_scenario("fibered_product", cfg, fp_params);
  CHECK(r2.verdict);
}
