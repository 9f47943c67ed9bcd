#include "llsp/verify.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "llsp/normal.hpp"

namespace llsp {

namespace {

// splitmix64: deterministic across platforms, unlike the standard library's
// distribution adaptors.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

Eigen::MatrixXd to_eigen(const Mat& m) {
  if (m.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd out(m.size(), m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = m[i][j];
  return out;
}

}  // namespace

std::vector<Point> sample_points(int dim, const RunConfig& cfg, int count) {
  SplitMix64 rng{cfg.seed};
  std::vector<Point> pts(count);
  for (auto& p : pts) {
    p.resize(dim);
    for (int i = 0; i < dim; ++i) p[i] = (2.0 * rng.uniform01() - 1.0) * cfg.box;
  }
  return pts;
}

std::vector<Point> sample_points(int dim, const RunConfig& cfg) {
  return sample_points(dim, cfg, cfg.samples);
}

void ResidualScan::observe(double residual, const Point& at) {
  double r = std::abs(residual);
  if (!std::isfinite(r)) r = 1e300;
  if (r >= max_) {
    max_ = r;
    arg_ = at;
  }
}

CheckReport ResidualScan::report(const std::string& name, double tol,
                                 const std::string& note) const {
  CheckReport r;
  r.name = name;
  r.tolerance = tol;
  r.max_residual = max_;
  r.pass = max_ <= tol;
  if (!r.pass) r.witness = arg_;
  r.note = note;
  return r;
}

ResidualScan scan_expr(const Expr& e, const std::vector<Point>& pts) {
  ResidualScan scan;
  for (const auto& p : pts) scan.observe(eval(e, p), p);
  return scan;
}

int numeric_rank(const Mat& m, double rel_tol) {
  Eigen::MatrixXd a = to_eigen(m);
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double top = sv(0);
  if (top == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * top) ++rank;
  return rank;
}

double smallest_singular_value(const Mat& m) {
  Eigen::MatrixXd a = to_eigen(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  return sv.size() ? sv(sv.size() - 1) : 0.0;
}

std::optional<std::vector<double>> solve_dense(const Mat& a, const std::vector<double>& b) {
  Eigen::MatrixXd m = to_eigen(a);
  Eigen::VectorXd rhs(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i) = b[i];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) return std::nullopt;
  Eigen::VectorXd x = lu.solve(rhs);
  return std::vector<double>(x.data(), x.data() + x.size());
}

std::optional<Mat> invert_dense(const Mat& a) {
  Eigen::MatrixXd m = to_eigen(a);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) return std::nullopt;
  Eigen::MatrixXd inv = lu.inverse();
  Mat out(inv.rows(), std::vector<double>(inv.cols()));
  for (int i = 0; i < inv.rows(); ++i)
    for (int j = 0; j < inv.cols(); ++j) out[i][j] = inv(i, j);
  return out;
}

std::vector<int> independent_columns(const Mat& m, double rel_tol) {
  Eigen::MatrixXd a = to_eigen(m);
  if (a.size() == 0) return {};
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(rel_tol);
  int rank = qr.rank();
  std::vector<int> cols;
  const auto& perm = qr.colsPermutation().indices();
  for (int i = 0; i < rank; ++i) cols.push_back(perm(i));
  std::sort(cols.begin(), cols.end());
  return cols;
}

bool positive_definite_minors(const Mat& m) {
  Eigen::MatrixXd a = to_eigen(m);
  for (int k = 1; k <= a.rows(); ++k) {
    double det = a.topLeftCorner(k, k).determinant();
    if (!(det > 0.0)) return false;
  }
  return true;
}

std::pair<double, double> complex_det(const Mat& re, const Mat& im) {
  std::size_t n = re.size();
  Eigen::MatrixXcd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = std::complex<double>(re[i][j], im[i][j]);
  std::complex<double> d = a.determinant();
  return {d.real(), d.imag()};
}

std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  // Nodes of P_n on [-1, 1] by Newton iteration, then mapped to [0, 1].
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[i] = {0.5 * (x + 1.0), 0.5 * w};
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol,
                     int& budget) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, fa, m, fm, flm);
  double right = simpson(m, fm, b, fb, frm);
  double delta = left + right - whole;
  if (budget <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  budget -= 2;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, budget) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, budget);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_intervals) {
  double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  double whole = simpson(a, fa, b, fb, fm);
  int budget = max_intervals;
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, budget);
}

// ---- symbolic linear algebra ---------------------------------------------------

namespace {

// Pivot preference: nonzero rational constants (smaller magnitude of the
// "spread" |num*den| first, so +-1 wins), then real constants, then any
// structurally nonzero expression.
int pivot_score(const Expr& e) {
  if (is_zero(e)) return -1;
  if (auto r = rational_value(e)) {
    long long spread = std::abs(r->num) * r->den;
    if (spread == 1 && r->den == 1) return 0;  // +-1
    return 1;
  }
  if (is_constant(e)) return 2;
  return 3;
}

Expr reciprocal(const Expr& e) {
  if (auto r = rational_value(e)) return rational(Rational::of(r->den, r->num));
  if (e.kind() == ExprKind::RealConst && e.node().real_name.empty())
    return real_const(1.0 / e.node().real);
  return pow_i(e, -1);
}

Expr tidy(const Expr& e) { return nf_compact(e); }

}  // namespace

std::optional<std::vector<Expr>> solve_linear_symbolic(ExprMat a, std::vector<Expr> b) {
  const int n = static_cast<int>(a.size());
  std::vector<int> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = i;

  for (int col = 0; col < n; ++col) {
    int best = -1, best_score = 4;
    for (int r = col; r < n; ++r) {
      Expr cand = tidy(a[rows[r]][col]);
      a[rows[r]][col] = cand;
      int score = pivot_score(cand);
      if (score >= 0 && score < best_score) {
        best_score = score;
        best = r;
        if (score == 0) break;
      }
    }
    if (best < 0) return std::nullopt;
    std::swap(rows[col], rows[best]);
    int pr = rows[col];
    Expr inv = reciprocal(a[pr][col]);
    for (int j = col; j < n; ++j) a[pr][j] = tidy(mul({inv, a[pr][j]}));
    b[pr] = tidy(mul({inv, b[pr]}));
    for (int r = 0; r < n; ++r) {
      int rr = rows[r];
      if (rr == pr) continue;
      Expr factor = a[rr][col];
      if (is_zero(factor)) continue;
      for (int j = col; j < n; ++j)
        a[rr][j] = tidy(a[rr][j] - mul({factor, a[pr][j]}));
      b[rr] = tidy(b[rr] - mul({factor, b[pr]}));
    }
  }
  std::vector<Expr> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[rows[i]];
  return x;
}

std::optional<ExprMat> invert_symbolic(const ExprMat& a) {
  const int n = static_cast<int>(a.size());
  ExprMat inv(n, std::vector<Expr>(n));
  for (int col = 0; col < n; ++col) {
    std::vector<Expr> e(n, rational(0));
    e[col] = rational(1);
    auto x = solve_linear_symbolic(a, e);
    if (!x) return std::nullopt;
    for (int i = 0; i < n; ++i) inv[i][col] = (*x)[i];
  }
  return inv;
}

Mat eval_matrix(const ExprMat& m, const Point& p) {
  Mat out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i].resize(m[i].size());
    for (std::size_t j = 0; j < m[i].size(); ++j) out[i][j] = eval(m[i][j], p);
  }
  return out;
}

std::vector<double> eval_vector(const std::vector<Expr>& v, const Point& p) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = eval(v[i], p);
  return out;
}

}  // namespace llsp
