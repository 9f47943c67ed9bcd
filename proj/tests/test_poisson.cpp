#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llsp/normal.hpp"
#include "llsp/poisson.hpp"

using namespace llsp;

namespace {

ChartPtr tangent(int n) {
  return std::make_shared<const CoordSystem>(CoordSystem::tangent_chart(n));
}

ChartPtr plain(std::vector<std::string> names) {
  return std::make_shared<const CoordSystem>(CoordSystem(std::move(names)));
}

}  // namespace

TEST_CASE("sharp_p pairing") {
  ChartPtr c3 = plain({"x", "y", "z"});
  Bivector p(c3);
  p.set(1, 2, rational(1));  // dy ^ dz plane

  PForm dy(c3, 1);
  dy.accumulate({1}, rational(1));
  VectorField s = sharp_p(p, dy);
  // <sharp dy, dz> = P(dy, dz) = 1, so sharp dy = +d/dz
  CHECK(is_zero(s.comps[0]));
  CHECK(is_zero(s.comps[1]));
  CHECK(nf_equal(s.comps[2], rational(1)));

  PForm zero(c3, 1);
  VectorField s0 = sharp_p(p, zero);
  for (const Expr& c : s0.comps) CHECK(is_zero(c));

  // x-directions are not in the image of the fibered-product style bivector
  PForm dx(c3, 1);
  dx.accumulate({0}, rational(1));
  VectorField sx = sharp_p(p, dx);
  for (const Expr& c : sx.comps) CHECK(is_zero(c));
}

TEST_CASE("check_jacobi") {
  RunConfig cfg;
  ChartPtr c3 = plain({"x", "y", "z"});

  Bivector constant(c3);
  constant.set(1, 2, rational(1));
  CHECK(check_jacobi(constant, cfg).pass());

  Bivector pi(c3);
  pi.set(1, 2, parse("1 + x^2", *c3));
  CHECK(check_jacobi(pi, cfg).pass());

  // hand-expanded counterexample: T^{123} = 1
  ChartPtr c4 = tangent(2);
  Bivector bad(c4);
  bad.set(0, 1, coord(*c4, 0));
  bad.set(0, 2, rational(1));
  ComplianceReport r = check_jacobi(bad, cfg);
  CHECK_FALSE(r.pass());
  CHECK(r.checks[0].witness.has_value());
}

TEST_CASE("llp axioms on the fibered product pair") {
  RunConfig cfg;
  // n = 1 fibered product chart (x, y, z) with P = 1, t = 0
  ExprMat p_sym = {{integer(1)}};
  ExprMat t = {{integer(0)}};
  FiberedProduct fp = fibered_product(p_sym, t, cfg);
  CHECK(fp.checks.pass());

  LLPReport llp = llp_check(fp.pi, fp.s, cfg);
  CHECK(llp.pass());
  for (auto [rank_p, rank_sb] : llp.sampled_ranks) {
    CHECK(rank_p == 2);
    CHECK(rank_sb == 1);
  }
}

TEST_CASE("llp axioms on tangent-bundle shapes") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);
  TangentStructure ts = canonical_tangent_structure(cs, cfg);

  // symmetric mixed block: axioms (4.1) and (4.2) hold
  Bivector p(cs);
  p.set(0, 2, rational(1));
  p.set(1, 3, rational(2));
  p.set(0, 3, rational(1));
  p.set(1, 2, rational(1));  // symmetric P^{ij}
  LLPReport good = llp_check(p, ts.S, cfg);
  CHECK(good.checks.find("llp_pairing_symmetry")->pass);
  CHECK(good.checks.find("llp_isotropy")->pass);

  // canonical flat structure: everything passes
  Bivector flat(cs);
  flat.set(0, 2, rational(1));
  flat.set(1, 3, rational(1));
  CHECK(llp_check(flat, ts.S, cfg).pass());
}

TEST_CASE("leaf restriction") {
  RunConfig cfg;

  // fibered product leaf: the (y, z) plane
  ExprMat p_sym = {{integer(1)}};
  ExprMat t = {{integer(0)}};
  FiberedProduct fp = fibered_product(p_sym, t, cfg);
  Point x{0.3, -0.2, 0.7};
  ComplianceReport leaf = leaf_restriction(fp.pi, fp.s, x, cfg);
  CHECK(leaf.pass());

  // zero bivector: vacuous pass
  ChartPtr c3 = plain({"x", "y", "z"});
  Bivector zero(c3);
  EndField s0 = EndField::zero(c3);
  ComplianceReport vac = leaf_restriction(zero, s0, Point{0, 0, 0}, cfg);
  CHECK(vac.pass());

  // full-rank symplectic bivector with the canonical structure: the leaf is
  // the whole chart
  ChartPtr cs = tangent(1);
  Bivector full(cs);
  full.set(0, 1, rational(1));
  TangentStructure ts = canonical_tangent_structure(cs, cfg);
  ComplianceReport whole = leaf_restriction(full, ts.S, Point{0.1, 0.4}, cfg);
  CHECK(whole.pass());
}

TEST_CASE("fibered product variants") {
  RunConfig cfg;

  // x-dependent symmetric tensor: leafwise checks run numerically per sample
  ChartPtr base = plain({"x1"});
  ExprMat p_sym = {{parse("1 + x1^2", *base)}};
  ExprMat t = {{parse("x1", *base)}};
  FiberedProduct fp = fibered_product(p_sym, t, cfg);
  CHECK(fp.checks.pass());
  CHECK_FALSE(fp.lambda_symbolic);

  // n = 2 constant case with a symbolic Lagrangian
  ChartPtr base2 = plain({"x1", "x2"});
  ExprMat p2 = {{integer(2), integer(1)}, {integer(1), integer(1)}};
  ExprMat t2 = {{integer(0), integer(0)}, {integer(0), integer(0)}};
  FiberedProduct fp2 = fibered_product(p2, t2, cfg);
  CHECK(fp2.checks.pass());
  CHECK(fp2.lambda_symbolic);
  // Lambda = inverse of [[2,1],[1,1]] = [[1,-1],[-1,2]]
  Point pt{0.0, 0.0, 0.0, 0.0, 1.0, 1.0};  // z1 = z2 = 1
  CHECK(eval(fp2.lagrangian, pt) == doctest::Approx(0.5 * (1.0 - 2.0 + 2.0)));

  // degenerate symmetric tensor is rejected
  ExprMat sing = {{integer(1), integer(1)}, {integer(1), integer(1)}};
  CHECK_THROWS_AS(fibered_product(sing, t2, cfg), DomainError);
}

TEST_CASE("tangent lift") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);
  ChartPtr base = plain({"q1", "q2"});

  // constant W: vanishing fiber-fiber block
  Bivector w0(base);
  w0.set(0, 1, rational(3));
  Bivector lift0 = tangent_lift(w0, cs, cfg);
  CHECK(is_zero(lift0.comp(2, 3)));
  CHECK(is_zero(lift0.comp(2, 0)));                  // P(du1, dq1) = W^{11} = 0
  CHECK(nf_equal(lift0.comp(2, 1), rational(3)));    // P(du1, dq2) = W^{12}
  CHECK(nf_equal(lift0.comp(3, 0), rational(-3)));   // P(du2, dq1) = W^{21}

  // W = q1 dq1^dq2: fiber-fiber block u1 du1^du2
  Bivector w(base);
  w.set(0, 1, coord(*base, 0));
  Bivector lift = tangent_lift(w, cs, cfg);
  CHECK(nf_equal(lift.comp(2, 3), coord(*cs, 2)));
  CHECK(check_jacobi(lift, cfg).pass());
  CHECK(tangent_lift_relations(lift, w, cfg).pass());

  // the lift of a nonzero W fails the symmetry axiom with the canonical S
  TangentStructure ts = canonical_tangent_structure(cs, cfg);
  LLPReport llp = llp_check(lift, ts.S, cfg);
  CHECK_FALSE(llp.checks.find("llp_pairing_symmetry")->pass);

  // a non-Poisson base bivector is rejected on 4-dim bases
  ChartPtr base4 = plain({"q1", "q2", "q3", "q4"});
  ChartPtr cs4 = tangent(4);
  Bivector wbad(base4);
  wbad.set(0, 1, coord(*base4, 0));
  wbad.set(0, 2, rational(1));
  CHECK_THROWS_AS(tangent_lift(wbad, cs4, cfg), DomainError);

  // block-separated coefficients stay Poisson on a 4-dim base
  Bivector wblock(base4);
  wblock.set(0, 1, parse("q1 + q2^2", *base4));
  wblock.set(2, 3, parse("q3*q4", *base4));
  Bivector liftb = tangent_lift(wblock, cs4, cfg);
  CHECK(check_jacobi(liftb, cfg).pass());
  CHECK(tangent_lift_relations(liftb, wblock, cfg).pass());
}

TEST_CASE("tn poisson shape check") {
  RunConfig cfg;
  ChartPtr cs = tangent(2);

  // canonical symplectic bivector: everything passes, rank 2n
  Bivector p(cs);
  p.set(0, 2, rational(1));
  p.set(1, 3, rational(1));
  ComplianceReport r = tn_poisson_check(p, cfg);
  CHECK(r.pass());

  // asymmetric mixed block fails
  Bivector bad(cs);
  bad.set(0, 3, rational(1));  // P(dq1, du2) = 1, P(dq2, du1) = 0
  ComplianceReport rb = tn_poisson_check(bad, cfg);
  CHECK_FALSE(rb.find("tn_mixed_symmetric")->pass);

  // rank-2 example on the 4-dim chart satisfies the rank relation
  Bivector partial(cs);
  partial.set(0, 2, rational(1));
  ComplianceReport rp = tn_poisson_check(partial, cfg);
  CHECK(rp.find("tn_rank_relation")->pass);
  CHECK(rp.find("tn_zero_related")->pass);

  // a nonzero base-base block is not zero-related
  Bivector notzr(cs);
  notzr.set(0, 1, rational(1));
  notzr.set(0, 2, rational(1));
  CHECK_FALSE(tn_poisson_check(notzr, cfg).find("tn_zero_related")->pass);
}
