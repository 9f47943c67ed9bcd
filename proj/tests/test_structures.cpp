#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llsp/normal.hpp"
#include "llsp/structures.hpp"

using namespace llsp;

namespace {

ChartPtr tangent(int n) {
  return std::make_shared<const CoordSystem>(CoordSystem::tangent_chart(n));
}

bool form_zero_at(const PForm& w, const std::vector<Point>& pts, double tol) {
  for (const auto& [k, c] : w.terms()) {
    ResidualScan scan = scan_expr(c, pts);
    if (scan.max() > tol) return false;
  }
  return true;
}

// Independent numeric oracle for the Hamiltonian field: solve the dense linear
// system i(X) omega = -dE at one sample point.
std::vector<double> hamiltonian_field_oracle(const PForm& omega, const Expr& energy,
                                             const Point& p) {
  int d = omega.chart()->dim();
  Mat gram = form_gram_at(omega, p);
  Mat system(d, std::vector<double>(d));
  std::vector<double> rhs(d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) system[j][i] = gram[i][j];
    rhs[j] = -eval(diff(energy, j), p);
  }
  auto x = solve_dense(system, rhs);
  REQUIRE(x.has_value());
  return *x;
}

}  // namespace

TEST_CASE("canonical tangent structure") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  TangentStructure ts = canonical_tangent_structure(cs, cfg);
  CHECK(ts.verified());
  CHECK(nf_equal(ts.S.m[1][0], rational(1)));
  CHECK(is_zero(ts.S.m[0][0]));
  CHECK(is_zero(ts.S.m[0][1]));
  CHECK(is_zero(ts.S.m[1][1]));

  // S(u dq + q du) = u du
  CoordSystem chart = *cs;
  VectorField x(cs, {parse("u1", chart), parse("q1", chart)});
  VectorField sx = ts.S.apply(x);
  CHECK(nf_equal(sx.comps[1], parse("u1", chart)));
  CHECK(is_zero(sx.comps[0]));
}

TEST_CASE("check_tangent flags rank-deficient structures") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);

  // drop one canonical column: rank n-1 everywhere
  EndField s = EndField::zero(cs);
  s.m[3][1] = rational(1);
  ComplianceReport r = check_tangent(s, cfg);
  CHECK_FALSE(r.pass());
  const CheckReport* rank = r.find("S_rank");
  REQUIRE(rank != nullptr);
  CHECK_FALSE(rank->pass);
  CHECK(rank->witness.has_value());
  CHECK(r.find("S_squared_zero")->pass);
}

TEST_CASE("lagrangian_form matches hand values and the theta route") {
  RunConfig cfg;
  ChartPtr cs2 = tangent(2);
  CoordSystem chart2 = *cs2;

  // flat Lagrangian: omega = sum du_i ^ dq_i
  LagrangianChart flat(cs2, parse("1/2*(u1^2 + u2^2)", chart2));
  PForm omega = lagrangian_form(flat, cfg);
  CHECK(omega.terms().size() == 2);
  CHECK(nf_equal(omega.coefficient({0, 2}), rational(-1)));
  CHECK(nf_equal(omega.coefficient({1, 3}), rational(-1)));

  // the alpha term of the oscillator drops out
  ChartPtr cs1 = tangent(1);
  CoordSystem chart1 = *cs1;
  LagrangianChart osc(cs1, parse("1/2*(u1^2 + 2*q1^2)", chart1));
  PForm omega_osc = lagrangian_form(osc, cfg);
  CHECK(omega_osc.terms().size() == 1);
  CHECK(nf_equal(omega_osc.coefficient({0, 1}), rational(-1)));

  // mixed q-u Lagrangian: hessian route equals d theta route coefficientwise
  LagrangianChart mixed(cs1, parse("1/2*u1^2 + q1*u1", chart1));
  PForm a = lagrangian_form(mixed, cfg);
  PForm b = exterior_d(lagrangian_theta(mixed));
  CHECK((a - b).structurally_zero());

  // and the same for a dense polynomial example with n = 2
  LagrangianChart dense(cs2,
                        parse("1/2*(u1^2 + u2^2) + q1*u1*u2 + q2^2*u1 + q1^3", chart2));
  PForm da = lagrangian_form(dense, cfg);
  PForm db = exterior_d(lagrangian_theta(dense));
  CHECK((da - db).structurally_zero());
}

TEST_CASE("check_compat accepts Lagrangian forms and rejects the broken mixed block") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);
  CoordSystem chart = *cs;
  TangentStructure ts = canonical_tangent_structure(cs, cfg);

  LagrangianChart lc(cs, parse("1/2*(u1^2 + u2^2) + q1*u2^2/2 + q2*u1", chart));
  PForm omega = lagrangian_form(lc, cfg);
  CHECK(check_compat(omega, ts.S, cfg).pass());

  // extra du1^dq2 breaks the symmetry of the mixed block
  PForm bad = omega;
  bad.accumulate({2, 1}, rational(1));
  ComplianceReport r = check_compat(bad, ts.S, cfg);
  CHECK_FALSE(r.pass());
  CHECK_FALSE(r.find("compat_frame")->pass);

  // an extra base-base term is invisible to the compatibility pairing
  PForm shifted = omega;
  shifted.accumulate({0, 1}, rational(1));
  CHECK(check_compat(shifted, ts.S, cfg).pass());
}

TEST_CASE("theta metric and ellipticity") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);
  CoordSystem chart = *cs;
  TangentStructure ts = canonical_tangent_structure(cs, cfg);
  Splitting split = Splitting::coordinate(cs);

  LagrangianChart flat(cs, parse("1/2*(u1^2 + u2^2)", chart));
  PForm omega = lagrangian_form(flat, cfg);
  TransversalMetric tm = theta_metric(omega, ts.S, split.vprime, cfg);
  CHECK(tm.elliptic);
  CHECK(nf_equal(tm.theta.g[0][0], rational(1)));
  CHECK(nf_equal(tm.theta.g[1][1], rational(1)));
  CHECK(is_zero(tm.theta.g[0][1]));

  // theta components recover the fiber Hessian for a non-flat Lagrangian
  LagrangianChart curved(cs, parse("1/2*(u1^2 + u2^2) + q1*u1*u2", chart));
  PForm omega_c = lagrangian_form(curved, cfg);
  TransversalMetric tm_c = theta_metric(omega_c, ts.S, split.vprime, cfg);
  ExprMat h = curved.fiber_hessian();
  auto pts = sample_points(4, cfg, 20);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      ResidualScan scan = scan_expr(tm_c.theta.g[i][j] - h[i][j], pts);
      CHECK(scan.max() < 1e-12);
    }

  // signature (1, 1) is not elliptic
  LagrangianChart indef(cs, parse("1/2*(u1^2 - u2^2)", chart));
  PForm omega_i = lagrangian_form(indef, cfg);
  TransversalMetric tm_i = theta_metric(omega_i, ts.S, split.vprime, cfg);
  CHECK_FALSE(tm_i.elliptic);
}

TEST_CASE("tangent_from_metric reproduces the canonical structure and round-trips") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  CoordSystem chart = *cs;

  PForm omega(cs, 2);
  omega.accumulate({1, 0}, rational(1));  // du ^ dq
  Splitting split = Splitting::coordinate(cs);
  MetricBlock theta;
  theta.frame = split.vprime;
  theta.g = {{rational(1)}};

  TangentStructure ts = tangent_from_metric(omega, split, theta, cfg);
  CHECK(ts.verified());
  CHECK(nf_equal(ts.S.m[1][0], rational(1)));
  CHECK(is_zero(ts.S.m[0][0]));
  CHECK(is_zero(ts.S.m[0][1]));
  CHECK(is_zero(ts.S.m[1][1]));
  CHECK(ts.verification.find("theta_roundtrip")->pass);

  // non-Lagrangian V' is rejected: swap in a frame with omega(v1, v2) != 0
  ChartPtr cs2 = tangent(2);
  PForm omega2(cs2, 2);
  omega2.accumulate({2, 0}, rational(1));
  omega2.accumulate({3, 1}, rational(1));
  Splitting bad;
  bad.vprime = {VectorField::basis(cs2, 0), VectorField::basis(cs2, 2)};
  bad.v = {VectorField::basis(cs2, 1), VectorField::basis(cs2, 3)};
  MetricBlock id2;
  id2.frame = bad.vprime;
  id2.g = {{rational(1), rational(0)}, {rational(0), rational(1)}};
  CHECK_THROWS_AS(tangent_from_metric(omega2, bad, id2, cfg), DomainError);

  // non-projectable Theta is rejected
  MetricBlock drifting;
  drifting.frame = split.vprime;
  drifting.g = {{parse("1 + u1^2", chart)}};
  CHECK_THROWS_AS(tangent_from_metric(omega, split, drifting, cfg), DomainError);
}

TEST_CASE("transition_check on integer torus shifts") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);
  CoordSystem chart = *cs;

  Expr L = parse("1/2*(u1^2 + u2^2 + 2*q1^2 + 3*q2^2)", chart);
  LagrangianChart la(cs, L);
  LagrangianChart lb(cs, L);

  // integer shift q -> q + m, u -> u + s
  std::vector<Expr> shift = {parse("q1 + 1", chart), parse("q2 + 2", chart),
                             parse("u1 + 1", chart), parse("u2 - 1", chart)};
  ComplianceReport ok = transition_check(la, lb, shift, cfg);
  CHECK(ok.pass());

  // identity map with a fiber-quadratic Lagrangian difference fails
  std::vector<Expr> identity = {parse("q1", chart), parse("q2", chart),
                                parse("u1", chart), parse("u2", chart)};
  LagrangianChart lb_bad(cs, L + parse("q1*u1^2", chart));
  ComplianceReport bad = transition_check(la, lb_bad, identity, cfg);
  CHECK_FALSE(bad.pass());
  CHECK_FALSE(bad.find("delta_fiber_hessian_zero")->pass);

  // zero difference passes trivially
  CHECK(transition_check(la, lb, identity, cfg).pass());

  // a non-affine fiber map is not of the transition shape
  std::vector<Expr> warped = {parse("q1", chart), parse("q2", chart),
                              parse("u1 + u2^2", chart), parse("u2", chart)};
  ComplianceReport shape = transition_check(la, lb, warped, cfg);
  CHECK_FALSE(shape.find("transition_shape")->pass);
}

TEST_CASE("second-order field detection") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  CoordSystem chart = *cs;
  TangentStructure ts = canonical_tangent_structure(cs, cfg);

  VectorField good(cs, {parse("u1", chart), parse("q1^2 + u1*q1", chart)});
  CHECK(is_second_order(good, ts.S, SecondOrderMode::TangentBundle, cfg).pass());
  CHECK(is_second_order(good, ts.S, SecondOrderMode::General, cfg).pass());

  VectorField shifted(cs, {parse("u1 + q1", chart), parse("u1", chart)});
  CHECK_FALSE(is_second_order(shifted, ts.S, SecondOrderMode::TangentBundle, cfg).pass());
  CHECK(is_second_order(shifted, ts.S, SecondOrderMode::General, cfg).pass());

  VectorField quad(cs, {parse("u1^2", chart), parse("0", chart)});
  CHECK_FALSE(is_second_order(quad, ts.S, SecondOrderMode::TangentBundle, cfg).pass());
  CHECK_FALSE(is_second_order(quad, ts.S, SecondOrderMode::General, cfg).pass());
}

TEST_CASE("almost product structure") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  CoordSystem chart = *cs;
  TangentStructure ts = canonical_tangent_structure(cs, cfg);
  auto pts = sample_points(2, cfg, 40);

  // X = u dq: V' = span(dq)
  VectorField x1(cs, {parse("u1", chart), parse("0", chart)});
  AlmostProduct ap1 = almost_product(x1, ts.S, cfg);
  CHECK(nf_equal(ap1.vprime[0].comps[0], rational(1)));
  CHECK(nf_is_zero(ap1.vprime[0].comps[1]));

  // harmonic oscillator flow keeps V' = span(dq): beta is fiber-independent
  VectorField x2(cs, {parse("u1", chart), parse("-q1", chart)});
  AlmostProduct ap2 = almost_product(x2, ts.S, cfg);
  CHECK(nf_is_zero(ap2.vprime[0].comps[1]));

  // random quadratic beta: F^2 = Id and F v' = -v' at samples
  VectorField x3(cs, {parse("u1", chart), parse("1/2*u1^2 + q1*u1 - q1^2", chart)});
  AlmostProduct ap3 = almost_product(x3, ts.S, cfg);
  EndField f2 = ap3.F.compose(ap3.F);
  for (const auto& p : pts) {
    Mat m = f2.at(p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(std::abs(m[i][j] - (i == j ? 1.0 : 0.0)) < 1e-10);
  }
  VectorField ev = ap3.F.apply(ap3.vprime[0]) + ap3.vprime[0];
  for (const auto& p : pts)
    for (const Expr& c : ev.comps) CHECK(std::abs(eval(c, p)) < 1e-10);
}

TEST_CASE("energy Hamiltonian field") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  CoordSystem chart = *cs;
  TangentStructure ts = canonical_tangent_structure(cs, cfg);

  // L = u^2/2: E = u^2/2, X = u dq
  LagrangianChart free(cs, parse("1/2*u1^2", chart));
  EnergyHamiltonian eh = energy_hamiltonian(free, cfg);
  CHECK(nf_equal(eh.energy, parse("1/2*u1^2", chart)));
  CHECK(nf_equal(eh.field.comps[0], parse("u1", chart)));
  CHECK(nf_is_zero(eh.field.comps[1]));

  // modified oscillator L = (u^2 + a q^2)/2: the numeric oracle fixes the sign
  // of the fiber component as +a q under i(X) omega = -dE.
  LagrangianChart osc(cs, parse("1/2*(u1^2 + 2*q1^2)", chart));
  EnergyHamiltonian eh2 = energy_hamiltonian(osc, cfg);
  PForm omega2 = lagrangian_form(osc, cfg);
  Point p{0.7, -0.3};
  auto oracle = hamiltonian_field_oracle(omega2, eh2.energy, p);
  CHECK(eval(eh2.field.comps[0], p) == doctest::Approx(oracle[0]).epsilon(1e-10));
  CHECK(eval(eh2.field.comps[1], p) == doctest::Approx(oracle[1]).epsilon(1e-10));
  CHECK(nf_equal(eh2.field.comps[1], parse("2*q1", chart)));

  // SX = E for a mixed-term Lagrangian, and the field is second order
  ChartPtr cs2 = tangent(2);
  CoordSystem chart2 = *cs2;
  TangentStructure ts2 = canonical_tangent_structure(cs2, cfg);
  LagrangianChart mixed(cs2, parse("1/2*(u1^2 + u2^2) + q1*u1 + q2^3", chart2));
  EnergyHamiltonian eh3 = energy_hamiltonian(mixed, cfg);
  CHECK(is_second_order(eh3.field, ts2.S, SecondOrderMode::TangentBundle, cfg).pass());
}

TEST_CASE("vertical correction solve") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  CoordSystem chart = *cs;
  auto pts = sample_points(2, cfg, 30);

  // zeta = u dq so that d zeta = du^dq
  PForm zeta(cs, 1);
  zeta.accumulate({0}, parse("u1", chart));
  PForm phi0(cs, 2);  // zero

  LagrangianChart free(cs, parse("1/2*u1^2", chart));
  EnergyHamiltonian eh = energy_hamiltonian(free, cfg);

  // Phi = 0, f = 0: Z = 0
  VectorField z0 = solve_vertical_correction(phi0, zeta, eh.field, rational(0), cfg);
  for (const Expr& c : z0.comps) CHECK(is_zero(c));

  // Phi = 0, f = q: the hand solve of i(Z) du^dq = dq gives Z = +du, and the
  // corrected field is Hamiltonian for h = E - f.
  VectorField z1 = solve_vertical_correction(phi0, zeta, eh.field, parse("q1", chart), cfg);
  CHECK(nf_equal(z1.comps[1], rational(1)));
  {
    PForm omega = exterior_d(zeta);
    Expr h = eh.energy - parse("q1", chart);
    PForm residual = interior(eh.field + z1, omega);
    for (int i = 0; i < 2; ++i) residual.accumulate({i}, diff(h, i));
    CHECK(form_zero_at(residual, pts, 1e-12));
  }

  // n = 2 with Phi = dq1^dq2, f = 0: Psi = i(X)Phi = u1 dq2 - u2 dq1 so
  // Z = (u2, -u1) in the fiber frame.
  ChartPtr cs2 = tangent(2);
  CoordSystem chart2 = *cs2;
  PForm zeta2(cs2, 1);
  zeta2.accumulate({0}, parse("u1", chart2));
  zeta2.accumulate({1}, parse("u2", chart2));
  PForm phi2(cs2, 2);
  phi2.accumulate({0, 1}, rational(1));
  LagrangianChart free2(cs2, parse("1/2*(u1^2 + u2^2)", chart2));
  EnergyHamiltonian eh2 = energy_hamiltonian(free2, cfg);
  VectorField z2 = solve_vertical_correction(phi2, zeta2, eh2.field, rational(0), cfg);
  CHECK(nf_equal(z2.comps[2], parse("u2", chart2)));
  CHECK(nf_equal(z2.comps[3], parse("-u1", chart2)));

  // the corrected field is Hamiltonian for h = E against omega = Phi + d zeta
  auto pts2 = sample_points(4, cfg, 30);
  PForm omega2 = phi2 + exterior_d(zeta2);
  PForm residual2 = interior(eh2.field + z2, omega2);
  for (int i = 0; i < 4; ++i) residual2.accumulate({i}, diff(eh2.energy, i));
  CHECK(form_zero_at(residual2, pts2, 1e-12));
}

TEST_CASE("assemble_tn_form") {
  RunConfig cfg;
  ChartPtr cs = tangent(1);
  CoordSystem chart = *cs;

  // Phi = 0, zeta = u dq: omega = du^dq with potential u^2/2
  PForm phi0(cs, 2);
  PForm zeta(cs, 1);
  zeta.accumulate({0}, parse("u1", chart));
  TNForm tn = assemble_tn_form(phi0, zeta, cfg);
  CHECK(tn.checks.pass());
  CHECK(nf_equal(tn.lagrangian_potential, parse("1/2*u1^2", chart)));
  CHECK(nf_equal(tn.omega.coefficient({0, 1}), rational(-1)));

  // n = 2 with a nonzero base form
  ChartPtr cs2 = tangent(2);
  CoordSystem chart2 = *cs2;
  PForm phi2(cs2, 2);
  phi2.accumulate({0, 1}, rational(1));
  PForm zeta2(cs2, 1);
  zeta2.accumulate({0}, parse("u1", chart2));
  zeta2.accumulate({1}, parse("u2", chart2));
  TNForm tn2 = assemble_tn_form(phi2, zeta2, cfg);
  CHECK(tn2.checks.pass());

  // quadratic fiber dependence still passes with n = 1
  PForm zq(cs, 1);
  zq.accumulate({0}, parse("u1^2", chart));
  CHECK(assemble_tn_form(phi0, zq, cfg).checks.pass());

  // asymmetric fiber derivatives fail
  PForm zbad(cs2, 1);
  zbad.accumulate({0}, parse("u2", chart2));
  TNForm tb = assemble_tn_form(phi2, zbad, cfg);
  CHECK_FALSE(tb.checks.pass());
  CHECK_FALSE(tb.checks.find("zeta_fiber_symmetric")->pass);
}

TEST_CASE("global witness check") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);
  CoordSystem chart = *cs;
  TangentStructure ts = canonical_tangent_structure(cs, cfg);

  Expr L = parse("1/2*(u1^2 + u2^2)", chart);
  LagrangianChart lc(cs, L);
  PForm omega = lagrangian_form(lc, cfg);
  PForm theta = lagrangian_theta(lc);

  CHECK(global_witness_check(theta, L, omega, ts.S, cfg).pass());

  // adding a closed base form to eps breaks the leafwise equation
  PForm shifted = theta;
  shifted.accumulate({0}, rational(1));
  ComplianceReport r = global_witness_check(shifted, L, omega, ts.S, cfg);
  CHECK_FALSE(r.pass());
  CHECK_FALSE(r.find("eta_equals_leafwise_dL")->pass);
  CHECK(r.find("omega_equals_d_eps")->pass);

  // a fiber component breaks verticality
  PForm vert(cs, 1);
  vert.accumulate({2}, parse("q1", chart));
  ComplianceReport rv = global_witness_check(vert, L, omega, ts.S, cfg);
  CHECK_FALSE(rv.find("eps_vertical")->pass);
}
