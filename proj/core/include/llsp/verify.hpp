#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llsp/expr.hpp"

namespace llsp {

/// Shared verification configuration.  All pointwise checks draw their sample
/// points from a seeded generator over [-box, box]^dim, so every run with the
/// same configuration sees the same points.
struct RunConfig {
  std::uint64_t seed = 42;
  int samples = 100;
  double box = 1.0;
  double residual_tol = 1e-9;
  double rank_tol = 1e-8;
};

/// Deterministic sample points, independent of the platform's distribution
/// implementations (raw 53-bit mantissas from a seeded xorshift-style stream).
std::vector<Point> sample_points(int dim, const RunConfig& cfg);
std::vector<Point> sample_points(int dim, const RunConfig& cfg, int count);

/// Outcome of one named verification.  A witness point is recorded exactly
/// when the check fails.
struct CheckReport {
  std::string name;
  bool pass = true;
  double max_residual = 0.0;
  std::optional<Point> witness;
  double tolerance = 0.0;
  std::string note;  // tolerance provenance / free-form detail
};

/// Collection of sub-checks produced by one operation.
struct ComplianceReport {
  std::vector<CheckReport> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void append(CheckReport c) { checks.push_back(std::move(c)); }
  void append(const ComplianceReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }
  const CheckReport* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Running maximum of |residual| with the point where it happened.
class ResidualScan {
 public:
  void observe(double residual, const Point& at);
  double max() const { return max_; }
  const Point& arg_max() const { return arg_; }
  CheckReport report(const std::string& name, double tol,
                     const std::string& note = "") const;

 private:
  double max_ = 0.0;
  Point arg_;
};

/// Max of |expr| over the sample set.
ResidualScan scan_expr(const Expr& e, const std::vector<Point>& pts);

// ---- dense numeric helpers (Eigen-backed, but Eigen stays out of headers) --

using Mat = std::vector<std::vector<double>>;

int numeric_rank(const Mat& m, double rel_tol);
double smallest_singular_value(const Mat& m);
std::optional<std::vector<double>> solve_dense(const Mat& a, const std::vector<double>& b);
std::optional<Mat> invert_dense(const Mat& a);
/// Independent column indices of m, chosen greedily by pivoted factorization.
std::vector<int> independent_columns(const Mat& m, double rel_tol);
/// All leading principal minors are positive (Sylvester test).
bool positive_definite_minors(const Mat& m);
/// Determinant of a complex matrix given as (real, imag) pair; returns (re, im).
std::pair<double, double> complex_det(const Mat& re, const Mat& im);

// ---- quadrature -------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [0, 1].
std::vector<std::pair<double, double>> gauss_legendre_01(int n);

/// Adaptive Simpson integration with an interval cap.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_intervals = 1000000);

// ---- symbolic dense algebra ---------------------------------------------------

using ExprMat = std::vector<std::vector<Expr>>;

/// Gaussian elimination over expressions.  Pivots prefer nonzero constants;
/// non-constant pivots enter as `pivot^-1` factors.  Entries are compacted to
/// their polynomial normal form when exact.  Returns nullopt when no
/// structurally nonzero pivot can be found in a column.
std::optional<std::vector<Expr>> solve_linear_symbolic(ExprMat a, std::vector<Expr> b);
std::optional<ExprMat> invert_symbolic(const ExprMat& a);

/// Evaluate an expression matrix at a point.
Mat eval_matrix(const ExprMat& m, const Point& p);
std::vector<double> eval_vector(const std::vector<Expr>& v, const Point& p);

}  // namespace llsp
