#pragma once

#include <map>
#include <optional>
#include <vector>

#include "llsp/expr.hpp"
#include "llsp/verify.hpp"

namespace llsp {

/// Contravariant vector field on a single chart.
struct VectorField {
  ChartPtr chart;
  std::vector<Expr> comps;

  VectorField() = default;
  VectorField(ChartPtr c, std::vector<Expr> v);

  static VectorField zero(ChartPtr c);
  static VectorField basis(ChartPtr c, int index);
  std::vector<double> at(const Point& p) const { return eval_vector(comps, p); }
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField scale(const Expr& s, const VectorField& x);

/// Exterior p-form: strictly increasing index tuples -> coefficient.
/// Degree 0 stores its single coefficient under the empty tuple.
class PForm {
 public:
  PForm() = default;
  PForm(ChartPtr chart, int degree);
  static PForm scalar(ChartPtr chart, const Expr& value);
  /// 1-form from coefficients (one per coordinate).
  static PForm one_form(ChartPtr chart, std::vector<Expr> coeffs);

  ChartPtr chart() const { return chart_; }
  int degree() const { return degree_; }
  const std::map<std::vector<int>, Expr>& terms() const { return terms_; }
  bool is_zero_form() const { return terms_.empty(); }

  /// Adds `coeff * dx^{indices}`; indices need not be sorted, repeated indices
  /// drop the term.
  void accumulate(std::vector<int> indices, const Expr& coeff);
  Expr coefficient(const std::vector<int>& sorted_indices) const;
  void set_coefficient(std::vector<int> sorted_indices, const Expr& coeff);

  /// Structural zero test for every coefficient (after local rewrites).
  bool structurally_zero() const;

 private:
  ChartPtr chart_;
  int degree_ = 0;
  std::map<std::vector<int>, Expr> terms_;
};

PForm operator+(const PForm& a, const PForm& b);
PForm operator-(const PForm& a, const PForm& b);
PForm scale(const Expr& s, const PForm& w);

/// Endomorphism field: m[i][j] is component i of the image of basis vector j.
struct EndField {
  ChartPtr chart;
  ExprMat m;

  EndField() = default;
  EndField(ChartPtr c, ExprMat mat);
  static EndField zero(ChartPtr c);
  static EndField identity(ChartPtr c);

  VectorField apply(const VectorField& x) const;
  VectorField column(int j) const;
  EndField compose(const EndField& other) const;  // this ∘ other
  Mat at(const Point& p) const { return eval_matrix(m, p); }
};

EndField operator+(const EndField& a, const EndField& b);
EndField operator-(const EndField& a, const EndField& b);

/// Antisymmetric bivector; only the upper triangle is stored, so antisymmetry
/// is structural.
class Bivector {
 public:
  Bivector() = default;
  explicit Bivector(ChartPtr chart);

  ChartPtr chart() const { return chart_; }
  int dim() const { return chart_->dim(); }

  Expr comp(int i, int j) const;  // P^{ij}
  void set(int i, int j, const Expr& value);

  /// P(alpha, beta) for 1-forms.
  Expr pair(const PForm& alpha, const PForm& beta) const;
  Mat at(const Point& p) const;

 private:
  ChartPtr chart_;
  std::vector<Expr> upper_;
  int flat_index(int i, int j) const;
};

/// Frames spanning a transversal pair V' ⊕ V of the tangent bundle.
struct Splitting {
  std::vector<VectorField> vprime;
  std::vector<VectorField> v;

  /// Coordinate splitting of a split chart: V' = base frame, V = fiber frame.
  static Splitting coordinate(ChartPtr chart);
  std::vector<VectorField> combined() const;
};

/// Symmetric bilinear block attached to an ordered frame.
struct MetricBlock {
  std::vector<VectorField> frame;
  ExprMat g;

  int size() const { return static_cast<int>(frame.size()); }
};

// ---- exterior calculus -----------------------------------------------------

PForm exterior_d(const PForm& w);
PForm wedge(const PForm& a, const PForm& b);
PForm interior(const VectorField& x, const PForm& w);
/// Full evaluation omega(X_1, ..., X_p) as a scalar expression.
Expr apply_form(const PForm& w, const std::vector<VectorField>& fields);

/// Pullback along a chart map given by target-coordinate expressions over the
/// source chart.
PForm pullback(const PForm& w, ChartPtr source, const std::vector<Expr>& map);

/// d' / d'' on split charts: the part of d taken along base (resp. fiber)
/// coordinates only.
PForm d_base(const PForm& w);
PForm d_fiber(const PForm& w);

// ---- brackets and derivatives -----------------------------------------------

VectorField lie_bracket(const VectorField& x, const VectorField& y);
EndField lie_derivative_end(const VectorField& x, const EndField& a);

/// Nijenhuis tensor of an endomorphism as a bilinear map on vector fields.
struct NijenhuisOperator {
  EndField a;
  VectorField operator()(const VectorField& x, const VectorField& y) const;
};
NijenhuisOperator nijenhuis(const EndField& a);

/// Trivector components T^{ijk} of the Schouten square [P, P]; identically
/// zero exactly when P satisfies the Jacobi identity.
std::map<std::vector<int>, Expr> schouten_square(const Bivector& p);

// ---- musical maps -------------------------------------------------------------

/// X with i(X) omega = alpha; omega must be nondegenerate (checked at sample
/// points before solving).
VectorField sharp_omega(const PForm& omega, const PForm& alpha, const RunConfig& cfg);

/// Theta(X, .) on the block's frame, extended by zero on the complement frame.
PForm flat_metric(const MetricBlock& theta, const VectorField& x,
                  const std::vector<VectorField>& complement);

// ---- bigrading ------------------------------------------------------------------

struct BigradeComponent {
  int p = 0;  // V' arguments
  int q = 0;  // V arguments
  PForm form;
};

std::vector<BigradeComponent> bigrade(const PForm& w, const Splitting& s,
                                      const RunConfig& cfg);

/// Fiberwise primitive of a d''-closed (0,1)-form by the radial homotopy in the
/// fiber coordinates; symbolic term-by-term integration for inputs polynomial
/// in the fibers, Gauss-Legendre nodes otherwise.
Expr leafwise_potential(const PForm& xi, const RunConfig& cfg);

/// {degree, terms:[{indices, expr-string}]} serialization.
std::string form_to_json(const PForm& w);

// ---- pointwise matrices ----------------------------------------------------------

/// Gram matrix W_ij = omega(e_i, e_j) of a 2-form on the coordinate frame.
ExprMat form_gram(const PForm& omega);
Mat form_gram_at(const PForm& omega, const Point& p);

}  // namespace llsp
