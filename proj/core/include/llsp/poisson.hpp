#pragma once

#include <vector>

#include "llsp/structures.hpp"
#include "llsp/tensor.hpp"

namespace llsp {

/// sharp through the pairing <sharp_P a, b> = P(a, b): components
/// (sharp a)^m = sum_j P^{jm} a_j.
VectorField sharp_p(const Bivector& p, const PForm& alpha);

/// Jacobi identity through the Schouten square at sample points.
ComplianceReport check_jacobi(const Bivector& p, const RunConfig& cfg);

/// Axiom record for a locally Lagrangian Poisson pair (P, S): symmetry of the
/// S-pairing, isotropy of the S-pullback, the half-rank relation on the image
/// of sharp, the Nijenhuis tensor along that image, and the equivalent
/// anticommutation identity S sharp a = -sharp(a . S).
struct LLPReport {
  ComplianceReport checks;
  /// (rank P, rank S restricted to im sharp_P) per sample point.
  std::vector<std::pair<int, int>> sampled_ranks;

  bool pass() const { return checks.pass(); }
};

LLPReport llp_check(const Bivector& p, const EndField& s, const RunConfig& cfg);

/// Pointwise restriction to the symplectic leaf through x: builds a basis of
/// im sharp_P, the leaf 2-form omega(sharp a, sharp b) = -P(a, b), and the
/// restriction F of S; verifies F^2 = 0, the half-rank relation and leafwise
/// compatibility, and reports whether the rank of P is locally constant.
ComplianceReport leaf_restriction(const Bivector& p, const EndField& s, const Point& x,
                                  const RunConfig& cfg);

/// Fibered product of two copies of a tangent bundle over a common base:
/// chart (x, y, z), bivector on the (y, z) fibers weighted by a symmetric
/// nondegenerate P_sym(x), and the endomorphism sending dy to dz.
struct FiberedProduct {
  ChartPtr chart;       // x_1..x_n, y_1..y_n, z_1..z_n
  ChartPtr base_chart;  // x_1..x_n
  ChartPtr leaf_chart;  // y (base) and z (fiber)
  Bivector pi;
  EndField s;
  /// Global Lagrangian candidate (1/2) Lambda_ij(x) z^i z^j; symbolic exactly
  /// when P_sym has constant entries.
  Expr lagrangian;
  bool lambda_symbolic = false;
  ComplianceReport checks;
};

FiberedProduct fibered_product(const ExprMat& p_sym, const ExprMat& t,
                               const RunConfig& cfg);

/// Poisson structure on the split chart induced by a base bivector W:
/// vanishing base-base block, mixed block W^{ij}, fiber-fiber block
/// u^k dW^{ij}/dq^k.  W must be Poisson on the base.
Bivector tangent_lift(const Bivector& w_base, ChartPtr split_chart, const RunConfig& cfg);

/// The three defining bracket relations of the lift, evaluated at samples on
/// fiberwise-linear functions and base pullbacks.
ComplianceReport tangent_lift_relations(const Bivector& lift, const Bivector& w_base,
                                        const RunConfig& cfg);

/// Shape of Poisson bivectors on a tangent-bundle chart paired with the
/// canonical structure: zero-related base block, symmetric mixed block,
/// the rank relation rank P = 2 rank(mixed block), and whether the full
/// axiom check would pass.
ComplianceReport tn_poisson_check(const Bivector& p, const RunConfig& cfg);

}  // namespace llsp
