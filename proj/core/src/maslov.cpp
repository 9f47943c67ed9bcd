#include "llsp/maslov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "llsp/normal.hpp"

namespace llsp {

namespace {

struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual operator+(const Dual& o) const { return {v + o.v, d + o.d}; }
  Dual operator-(const Dual& o) const { return {v - o.v, d - o.d}; }
  Dual operator*(const Dual& o) const { return {v * o.v, d * o.v + v * o.d}; }
  Dual operator/(const Dual& o) const {
    return {v / o.v, (d * o.v - v * o.d) / (o.v * o.v)};
  }
};

Dual dual_sqrt(const Dual& x) {
  double r = std::sqrt(x.v);
  return {r, x.d / (2.0 * r)};
}

// Gram-Schmidt over dual numbers with a constant metric.
std::vector<std::vector<Dual>> gram_schmidt_dual(std::vector<std::vector<Dual>> v,
                                                 const Mat& g) {
  std::size_t d = g.size();
  auto inner = [&](const std::vector<Dual>& a, const std::vector<Dual>& b) {
    Dual s{0.0, 0.0};
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s = s + a[i] * Dual{g[i][j], 0.0} * b[j];
    return s;
  };
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      Dual c = inner(v[i], v[j]);
      for (std::size_t k = 0; k < d; ++k) v[i][k] = v[i][k] - c * v[j][k];
    }
    Dual norm = dual_sqrt(inner(v[i], v[i]));
    for (std::size_t k = 0; k < d; ++k) v[i][k] = v[i][k] / norm;
  }
  return v;
}

Mat gram_schmidt_plain(Mat v, const Mat& g) {
  std::size_t d = g.size();
  auto inner = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s += a[i] * g[i][j] * b[j];
    return s;
  };
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double c = inner(v[i], v[j]);
      for (std::size_t k = 0; k < d; ++k) v[i][k] -= c * v[j][k];
    }
    double norm = std::sqrt(inner(v[i], v[i]));
    for (std::size_t k = 0; k < d; ++k) v[i][k] /= norm;
  }
  return v;
}

Expr g_pair(const ExprMat& g, const std::vector<Expr>& a, const std::vector<Expr>& b) {
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_zero(a[i])) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (is_zero(b[j]) || is_zero(g[i][j])) continue;
      terms.push_back(a[i] * g[i][j] * b[j]);
    }
  }
  return add(std::move(terms));
}

}  // namespace

// ---- calibration -------------------------------------------------------------

Calibrated calibrate(const EndField& s, const Splitting& split, const PForm& omega,
                     const RunConfig& cfg, bool require_positive) {
  const ChartPtr& chart = omega.chart();
  int d = chart->dim();
  int n = static_cast<int>(split.vprime.size());
  auto pts = sample_points(d, cfg);

  Calibrated out;
  out.omega = omega;
  out.vprime_frame = split.vprime;

  // V' must be omega-Lagrangian; the partner frame is S applied to it.
  {
    ResidualScan scan;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Expr v = apply_form(omega, {split.vprime[i], split.vprime[j]});
        if (is_zero(v)) continue;
        for (const auto& p : pts) scan.observe(eval(v, p), p);
      }
    if (scan.max() > cfg.residual_tol)
      throw DomainError("calibrate: V' is not Lagrangian");
  }
  for (int k = 0; k < n; ++k) out.vertical_frame.push_back(s.apply(split.vprime[k]));

  // Full frame [v', S v'] and its inverse define S' with S'(S v') = v',
  // S'(v') = 0.
  std::vector<VectorField> frame = split.vprime;
  frame.insert(frame.end(), out.vertical_frame.begin(), out.vertical_frame.end());
  ExprMat fm(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int b = 0; b < d; ++b) fm[i][b] = frame[b].comps[i];
  for (const auto& p : pts)
    if (numeric_rank(eval_matrix(fm, p), cfg.rank_tol) < d)
      throw DomainError("calibrate: V' + S V' does not span the chart");
  auto inv = invert_symbolic(fm);
  if (!inv) throw DomainError("calibrate: frame not symbolically invertible");

  ExprMat sprime(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      std::vector<Expr> terms;
      for (int c = 0; c < n; ++c) {
        // image of the (n + c)-th frame vector is v'_c
        if (!is_zero(split.vprime[c].comps[i]) && !is_zero((*inv)[n + c][j]))
          terms.push_back(split.vprime[c].comps[i] * (*inv)[n + c][j]);
      }
      sprime[i][j] = nf_compact(add(std::move(terms)));
    }
  out.Sprime = EndField(chart, std::move(sprime));
  out.J = out.Sprime - s;

  out.g.frame.clear();
  for (int i = 0; i < d; ++i) out.g.frame.push_back(VectorField::basis(chart, i));
  out.g.g.assign(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i) {
    VectorField ei = VectorField::basis(chart, i);
    for (int j = 0; j < d; ++j)
      out.g.g[i][j] = nf_compact(apply_form(omega, {ei, out.J.column(j)}));
  }

  // Invariants: J^2 = -Id, omega(J., J.) = omega, g symmetric.
  {
    ResidualScan scan;
    EndField j2 = out.J.compose(out.J) + EndField::identity(chart);
    for (const auto& row : j2.m)
      for (const Expr& e : row) {
        if (is_zero(e)) continue;
        for (const auto& p : pts) scan.observe(eval(e, p), p);
      }
    out.verification.append(scan.report("J_squared_minus_identity", 1e-10, "tol 1e-10"));
  }
  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        Expr delta = apply_form(omega, {out.J.column(i), out.J.column(j)}) -
                     apply_form(omega, {VectorField::basis(chart, i),
                                        VectorField::basis(chart, j)});
        if (is_zero(delta)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(delta, p), p);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    out.verification.append(scan.report("omega_J_invariant", cfg.residual_tol));
  }
  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        Expr delta = out.g.g[i][j] - out.g.g[j][i];
        if (is_zero(delta)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(delta, p), p);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    out.verification.append(scan.report("g_symmetric", cfg.residual_tol));
  }

  out.elliptic = true;
  for (const auto& p : pts)
    if (!positive_definite_minors(eval_matrix(out.g.g, p))) {
      out.elliptic = false;
      break;
    }
  if (require_positive && !out.elliptic)
    throw DomainError("calibrate: structure is not of elliptic type (g indefinite)");
  return out;
}

// ---- framed Lagrangians ---------------------------------------------------------

FramedLagrangian FramedLagrangian::from_immersion(ChartPtr params, ChartPtr ambient,
                                                  std::vector<Expr> immersion) {
  if (static_cast<int>(immersion.size()) != ambient->dim())
    throw DomainError("immersion must cover every ambient coordinate");
  FramedLagrangian l;
  l.params = std::move(params);
  l.ambient = std::move(ambient);
  l.immersion = std::move(immersion);
  return l;
}

FramedLagrangian FramedLagrangian::with_frame(ChartPtr params, ChartPtr ambient,
                                              std::vector<Expr> immersion,
                                              std::vector<std::vector<Expr>> frame) {
  FramedLagrangian l = from_immersion(std::move(params), std::move(ambient),
                                      std::move(immersion));
  for (const auto& f : frame)
    if (static_cast<int>(f.size()) != l.ambient->dim())
      throw DomainError("frame field must cover every ambient coordinate");
  l.frame = std::move(frame);
  return l;
}

std::vector<std::vector<Expr>> FramedLagrangian::raw_frame() const {
  std::vector<std::vector<Expr>> out(params->dim());
  for (int k = 0; k < params->dim(); ++k) {
    out[k].resize(ambient->dim());
    for (int a = 0; a < ambient->dim(); ++a) out[k][a] = diff(immersion[a], k);
  }
  return out;
}

ComplianceReport validate_framed(const FramedLagrangian& l, const Calibrated& c,
                                 const RunConfig& cfg) {
  ComplianceReport report;
  int np = l.params->dim();
  auto pts = sample_points(np, cfg);
  auto raw = l.raw_frame();

  {
    ResidualScan scan;
    ExprMat jac(l.ambient->dim(), std::vector<Expr>(np));
    for (int a = 0; a < l.ambient->dim(); ++a)
      for (int k = 0; k < np; ++k) jac[a][k] = raw[k][a];
    for (const auto& p : pts)
      scan.observe(static_cast<double>(numeric_rank(eval_matrix(jac, p), cfg.rank_tol) - np),
                   p);
    report.append(scan.report("immersion_rank", 0.0));
  }

  {
    PForm pulled = pullback(c.omega, l.params, l.immersion);
    ResidualScan scan;
    bool any = false;
    for (const auto& [key, coeff] : pulled.terms()) {
      any = true;
      for (const auto& p : pts) scan.observe(eval(coeff, p), p);
    }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("lagrangian_pullback", 1e-10, "tol 1e-10"));
  }

  if (l.has_symbolic_frame()) {
    std::span<const Expr> imm(l.immersion);
    ExprMat g_along(l.ambient->dim(), std::vector<Expr>(l.ambient->dim()));
    for (int a = 0; a < l.ambient->dim(); ++a)
      for (int b = 0; b < l.ambient->dim(); ++b)
        g_along[a][b] = substitute(c.g.g[a][b], imm);
    ResidualScan scan;
    int nl = static_cast<int>(l.frame.size());
    for (int i = 0; i < nl; ++i)
      for (int j = i; j < nl; ++j) {
        Expr delta = g_pair(g_along, l.frame[i], l.frame[j]) -
                     (i == j ? rational(1) : rational(0));
        if (is_zero(delta)) continue;
        for (const auto& p : pts) scan.observe(eval(delta, p), p);
      }
    report.append(scan.report("frame_orthonormal", cfg.residual_tol));
  }
  return report;
}

// ---- form matrices -----------------------------------------------------------------

FormMatrix FormMatrix::zero(ChartPtr chart, int n, int degree) {
  FormMatrix m;
  m.chart = chart;
  m.n = n;
  m.degree = degree;
  m.re.assign(n * n, PForm(chart, degree));
  m.im.assign(n * n, PForm(chart, degree));
  return m;
}

FormMatrix fm_add(const FormMatrix& a, const FormMatrix& b) {
  FormMatrix out = a;
  for (int k = 0; k < a.n * a.n; ++k) {
    out.re[k] = a.re[k] + b.re[k];
    out.im[k] = a.im[k] + b.im[k];
  }
  return out;
}

FormMatrix fm_sub(const FormMatrix& a, const FormMatrix& b) {
  FormMatrix out = a;
  for (int k = 0; k < a.n * a.n; ++k) {
    out.re[k] = a.re[k] - b.re[k];
    out.im[k] = a.im[k] - b.im[k];
  }
  return out;
}

FormMatrix fm_scale(double re, double im, const FormMatrix& a) {
  FormMatrix out = FormMatrix::zero(a.chart, a.n, a.degree);
  Expr cr = real_const(re), ci = real_const(im);
  for (int k = 0; k < a.n * a.n; ++k) {
    out.re[k] = scale(cr, a.re[k]) - scale(ci, a.im[k]);
    out.im[k] = scale(cr, a.im[k]) + scale(ci, a.re[k]);
  }
  return out;
}

FormMatrix fm_mul(const FormMatrix& a, const FormMatrix& b) {
  FormMatrix out = FormMatrix::zero(a.chart, a.n, a.degree + b.degree);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      PForm re_acc(a.chart, out.degree), im_acc(a.chart, out.degree);
      for (int k = 0; k < a.n; ++k) {
        re_acc = re_acc + wedge(a.re_at(i, k), b.re_at(k, j)) -
                 wedge(a.im_at(i, k), b.im_at(k, j));
        im_acc = im_acc + wedge(a.re_at(i, k), b.im_at(k, j)) +
                 wedge(a.im_at(i, k), b.re_at(k, j));
      }
      out.re_at(i, j) = re_acc;
      out.im_at(i, j) = im_acc;
    }
  return out;
}

FormMatrix fm_d(const FormMatrix& a) {
  FormMatrix out = FormMatrix::zero(a.chart, a.n, a.degree + 1);
  for (int k = 0; k < a.n * a.n; ++k) {
    out.re[k] = exterior_d(a.re[k]);
    out.im[k] = exterior_d(a.im[k]);
  }
  return out;
}

FormMatrix fm_transpose(const FormMatrix& a) {
  FormMatrix out = FormMatrix::zero(a.chart, a.n, a.degree);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      out.re_at(i, j) = a.re_at(j, i);
      out.im_at(i, j) = a.im_at(j, i);
    }
  return out;
}

FormMatrix fm_conj(const FormMatrix& a) {
  FormMatrix out = a;
  for (int k = 0; k < a.n * a.n; ++k) out.im[k] = scale(rational(-1), a.im[k]);
  return out;
}

CheckReport skew_hermitian_check(const std::string& name, const FormMatrix& theta,
                                 const std::vector<Point>& pts, double tol) {
  ResidualScan scan;
  bool any = false;
  for (int i = 0; i < theta.n; ++i)
    for (int j = 0; j < theta.n; ++j) {
      PForm re_sum = theta.re_at(i, j) + theta.re_at(j, i);
      PForm im_diff = theta.im_at(i, j) - theta.im_at(j, i);
      for (const auto& [k, c] : re_sum.terms()) {
        any = true;
        for (const auto& p : pts) scan.observe(eval(c, p), p);
      }
      for (const auto& [k, c] : im_diff.terms()) {
        any = true;
        for (const auto& p : pts) scan.observe(eval(c, p), p);
      }
    }
  if (!any && !pts.empty()) scan.observe(0.0, pts.front());
  return scan.report(name, tol);
}

// ---- Gauss-Weingarten ----------------------------------------------------------------

GaussWeingarten gauss_weingarten(const FramedLagrangian& l, const Calibrated& c,
                                 ConnectionMode mode, const RunConfig& cfg,
                                 const std::vector<VectorField>* parallel_frame) {
  if (!l.has_symbolic_frame())
    throw DomainError("gauss_weingarten needs an orthonormal symbolic frame");
  const ChartPtr& params = l.params;
  int np = params->dim();
  int nl = static_cast<int>(l.frame.size());
  int da = l.ambient->dim();
  auto pts = sample_points(np, cfg);

  ComplianceReport frame_ok = validate_framed(l, c, cfg);
  if (const CheckReport* ortho = frame_ok.find("frame_orthonormal"))
    if (!ortho->pass) throw DomainError("gauss_weingarten: frame is not orthonormal");

  std::span<const Expr> imm(l.immersion);
  ExprMat g_along(da, std::vector<Expr>(da));
  ExprMat j_along(da, std::vector<Expr>(da));
  for (int a = 0; a < da; ++a)
    for (int b = 0; b < da; ++b) {
      g_along[a][b] = substitute(c.g.g[a][b], imm);
      j_along[a][b] = substitute(c.J.m[a][b], imm);
    }

  // Covariant derivatives of the frame along each parameter direction.
  std::vector<std::vector<std::vector<Expr>>> de(np);
  if (mode == ConnectionMode::Flat) {
    for (int a = 0; a < da; ++a)
      for (int b = 0; b < da; ++b)
        if (!is_constant(c.g.g[a][b]) && !is_zero(c.g.g[a][b]))
          throw DomainError("gauss_weingarten: flat mode needs a constant ambient metric");
    for (int k = 0; k < np; ++k) {
      de[k].resize(nl);
      for (int i = 0; i < nl; ++i) {
        de[k][i].resize(da);
        for (int a = 0; a < da; ++a) de[k][i][a] = diff(l.frame[i][a], k);
      }
    }
  } else {
    if (!parallel_frame ||
        parallel_frame->size() != c.vertical_frame.size())
      throw DomainError("gauss_weingarten: frame-parallel mode needs the declared vertical frame");
    // Parallel full frame: (S' f_k, f_k); expand e_i there and differentiate
    // the coefficients.
    std::vector<VectorField> pf;
    for (const VectorField& f : *parallel_frame) pf.push_back(c.Sprime.apply(f));
    pf.insert(pf.end(), parallel_frame->begin(), parallel_frame->end());
    ExprMat pmat(da, std::vector<Expr>(da));
    for (int a = 0; a < da; ++a)
      for (int b = 0; b < da; ++b) pmat[a][b] = substitute(pf[b].comps[a], imm);
    for (int k = 0; k < np; ++k) de[k].resize(nl);
    for (int i = 0; i < nl; ++i) {
      auto coeff = solve_linear_symbolic(pmat, l.frame[i]);
      if (!coeff) throw DomainError("gauss_weingarten: parallel frame is degenerate");
      for (int k = 0; k < np; ++k) {
        std::vector<Expr> dc(da);
        for (int b = 0; b < da; ++b) dc[b] = diff((*coeff)[b], k);
        de[k][i].assign(da, rational(0));
        for (int a = 0; a < da; ++a) {
          std::vector<Expr> terms;
          for (int b = 0; b < da; ++b)
            if (!is_zero(pmat[a][b]) && !is_zero(dc[b]))
              terms.push_back(pmat[a][b] * dc[b]);
          de[k][i][a] = add(std::move(terms));
        }
      }
    }
  }

  GaussWeingarten out;
  out.lambda = FormMatrix::zero(params, nl, 1);
  out.b = FormMatrix::zero(params, nl, 1);
  for (int i = 0; i < nl; ++i) {
    for (int j = 0; j < nl; ++j) {
      std::vector<Expr> je_j(da);
      for (int a = 0; a < da; ++a) {
        std::vector<Expr> terms;
        for (int b = 0; b < da; ++b)
          if (!is_zero(j_along[a][b]) && !is_zero(l.frame[j][b]))
            terms.push_back(j_along[a][b] * l.frame[j][b]);
        je_j[a] = add(std::move(terms));
      }
      for (int k = 0; k < np; ++k) {
        Expr lam = nf_compact(g_pair(g_along, de[k][i], l.frame[j]));
        Expr bb = nf_compact(g_pair(g_along, de[k][i], je_j));
        if (!is_zero(lam)) out.lambda.re_at(j, i).accumulate({k}, lam);
        if (!is_zero(bb)) out.b.re_at(j, i).accumulate({k}, bb);
      }
    }
  }

  // Metric character: lambda antisymmetric, b symmetric at samples.
  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j) {
        PForm sum = out.lambda.re_at(i, j) + out.lambda.re_at(j, i);
        for (const auto& [key, coeff] : sum.terms()) {
          any = true;
          for (const auto& p : pts) scan.observe(eval(coeff, p), p);
        }
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    out.verification.append(scan.report("lambda_antisymmetric", 1e-10, "tol 1e-10"));
  }
  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < nl; ++i)
      for (int j = i + 1; j < nl; ++j) {
        PForm delta = out.b.re_at(i, j) - out.b.re_at(j, i);
        for (const auto& [key, coeff] : delta.terms()) {
          any = true;
          for (const auto& p : pts) scan.observe(eval(coeff, p), p);
        }
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    out.verification.append(scan.report("b_symmetric", 1e-10, "tol 1e-10"));
  }
  return out;
}

FormMatrix connection_curvature(const FormMatrix& theta) {
  return fm_add(fm_d(theta), fm_mul(theta, theta));
}

FormMatrix curvature_variation(const FormMatrix& theta0, const FormMatrix& theta1,
                               const FormMatrix& alpha, double t) {
  // With entries multiplied as (a ^ b)^i_j = sum_k a^i_k ^ b^k_j, the curvature
  // of the interpolated connection is (1-t) Theta0 + t Theta1 - t(1-t) a ^ a;
  // this is the sign that makes the transgression forms closed.
  FormMatrix aa = fm_mul(alpha, alpha);
  return fm_add(fm_add(fm_scale(1.0 - t, 0.0, theta0), fm_scale(t, 0.0, theta1)),
                fm_scale(-t * (1.0 - t), 0.0, aa));
}

CwbResult cwb_form(int h, const FormMatrix& theta0_curvature,
                   const FormMatrix& theta1_curvature, const FormMatrix& alpha,
                   const RunConfig& cfg) {
  if (h < 1) throw DomainError("cwb_form: h must be positive");
  const ChartPtr& chart = alpha.chart;
  int n = alpha.n;
  int k = 2 * h - 1;
  int degree = 4 * h - 3;

  CwbResult out;
  if (degree > chart->dim()) {
    out.form = PForm(chart, std::min(degree, chart->dim() + 1));
    out.imag_residual = 0.0;
    out.notice = "degree exceeds the parameter dimension; zero form";
    return out;
  }

  // Permutations of k slots.
  std::vector<std::vector<int>> perms;
  {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    do {
      perms.push_back(idx);
    } while (std::next_permutation(idx.begin(), idx.end()));
  }
  auto perm_sign = [](const std::vector<int>& sigma) {
    int s = 1;
    for (std::size_t i = 0; i < sigma.size(); ++i)
      for (std::size_t j = i + 1; j < sigma.size(); ++j)
        if (sigma[i] > sigma[j]) s = -s;
    return s;
  };

  auto compact_entries = [](FormMatrix m) {
    for (PForm& f : m.re) {
      PForm c(f.chart(), f.degree());
      for (const auto& [key, coeff] : f.terms()) c.set_coefficient(key, nf_compact(coeff));
      f = std::move(c);
    }
    for (PForm& f : m.im) {
      PForm c(f.chart(), f.degree());
      for (const auto& [key, coeff] : f.terms()) c.set_coefficient(key, nf_compact(coeff));
      f = std::move(c);
    }
    return m;
  };
  FormMatrix alpha_c = compact_entries(alpha);

  // Terms are collected per key and summed once; repeated accumulation into a
  // growing sum re-flattens it quadratically.
  std::map<std::vector<int>, std::vector<Expr>> bucket_re, bucket_im;
  auto nodes = gauss_legendre_01(k);
  for (auto [t, w] : nodes) {
    FormMatrix theta_t = compact_entries(
        curvature_variation(theta0_curvature, theta1_curvature, alpha, t));
    Expr weight = real_const(w);
    // sum over index tuples: slot 0 takes alpha, the rest take Theta_t
    std::vector<int> tuple(k, 0);
    while (true) {
      for (const auto& sigma : perms) {
        int sgn = perm_sign(sigma);
        // wedge alpha^{i_0}_{i_sigma(0)} ^ prod theta_t^{i_a}_{i_sigma(a)}
        PForm acc_re = alpha_c.re_at(tuple[0], tuple[sigma[0]]);
        PForm acc_im = alpha_c.im_at(tuple[0], tuple[sigma[0]]);
        bool dead = acc_re.terms().empty() && acc_im.terms().empty();
        for (int a = 1; a < k && !dead; ++a) {
          const PForm& fre = theta_t.re_at(tuple[a], tuple[sigma[a]]);
          const PForm& fim = theta_t.im_at(tuple[a], tuple[sigma[a]]);
          PForm new_re = wedge(acc_re, fre) - wedge(acc_im, fim);
          PForm new_im = wedge(acc_re, fim) + wedge(acc_im, fre);
          acc_re = std::move(new_re);
          acc_im = std::move(new_im);
          dead = acc_re.terms().empty() && acc_im.terms().empty();
        }
        if (dead) continue;
        Expr signed_weight = sgn > 0 ? weight : neg(weight);
        for (const auto& [key, c] : acc_re.terms())
          bucket_re[key].push_back(signed_weight * c);
        for (const auto& [key, c] : acc_im.terms())
          bucket_im[key].push_back(signed_weight * c);
      }
      int pos = k - 1;
      while (pos >= 0 && tuple[pos] == n - 1) {
        tuple[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++tuple[pos];
    }
  }
  PForm total_re(chart, degree), total_im(chart, degree);
  for (auto& [key, terms] : bucket_re) total_re.set_coefficient(key, add(std::move(terms)));
  for (auto& [key, terms] : bucket_im) total_im.set_coefficient(key, add(std::move(terms)));

  // prefactor (-1)^{h+1} * i / ((2 pi)^{2h-1} (2h-2)!)
  double denom = 1.0;
  for (int i = 2; i <= 2 * h - 2; ++i) denom *= i;
  double s = 1.0 / (std::pow(2.0 * M_PI, 2 * h - 1) * denom);
  if (h % 2 == 0) s = -s;
  // (i s) (re + i im) = -s im + i s re
  out.form = scale(real_const(-s), total_im);
  PForm imag_part = scale(real_const(s), total_re);

  auto pts = sample_points(chart->dim(), cfg);
  ResidualScan scan;
  for (const auto& [key, c] : imag_part.terms())
    for (const auto& p : pts) scan.observe(eval(c, p), p);
  out.imag_residual = scan.max();
  return out;
}

// ---- loop integrals -------------------------------------------------------------------

namespace {

struct LoopData {
  int da = 0;
  int nl = 0;
  std::vector<std::vector<Expr>> raw;       // raw frame or supplied frame
  std::vector<std::vector<Expr>> raw_dot;   // parameter derivatives
  Mat g;                                    // constant ambient metric values
  ExprMat j_along;                          // J along the immersion
};

LoopData prepare_loop(const FramedLagrangian& l, const Calibrated& c) {
  if (l.params->dim() != 1)
    throw DomainError("loop operations need a single parameter");
  LoopData data;
  data.da = l.ambient->dim();
  data.raw = l.raw_frame();
  data.nl = static_cast<int>(data.raw.size());

  for (int a = 0; a < data.da; ++a)
    for (int b = 0; b < data.da; ++b)
      if (!is_constant(c.g.g[a][b]) && !is_zero(c.g.g[a][b]))
        throw DomainError("loop operations use the flat connection: constant metric required");
  data.g.assign(data.da, std::vector<double>(data.da, 0.0));
  Point origin(c.omega.chart()->dim(), 0.0);
  for (int a = 0; a < data.da; ++a)
    for (int b = 0; b < data.da; ++b) data.g[a][b] = eval(c.g.g[a][b], origin);

  std::span<const Expr> imm(l.immersion);
  data.j_along.assign(data.da, std::vector<Expr>(data.da));
  for (int a = 0; a < data.da; ++a)
    for (int b = 0; b < data.da; ++b) data.j_along[a][b] = substitute(c.J.m[a][b], imm);

  data.raw_dot.resize(data.nl);
  for (int k = 0; k < data.nl; ++k) {
    data.raw_dot[k].resize(data.da);
    for (int a = 0; a < data.da; ++a) data.raw_dot[k][a] = diff(data.raw[k][a], 0);
  }
  return data;
}

}  // namespace

double first_maslov_loop(const FramedLagrangian& l, const Calibrated& c, double period,
                         const RunConfig& cfg) {
  (void)cfg;  // quadrature tolerances are pinned, not configurable
  LoopData data = prepare_loop(l, c);

  // Periodicity of the immersion.
  for (double t0 : {0.0, 0.37, 1.11}) {
    for (int a = 0; a < data.da; ++a) {
      double lo = eval(l.immersion[a], Point{t0});
      double hi = eval(l.immersion[a], Point{t0 + period});
      if (std::abs(hi - lo) > 1e-9)
        throw DomainError("first_maslov_loop: immersion is not periodic with the given period");
    }
  }

  auto integrand = [&](double t) {
    Point pt{t};
    std::vector<std::vector<Dual>> frame(data.nl, std::vector<Dual>(data.da));
    for (int k = 0; k < data.nl; ++k)
      for (int a = 0; a < data.da; ++a)
        frame[k][a] = Dual{eval(data.raw[k][a], pt), eval(data.raw_dot[k][a], pt)};
    auto ortho = gram_schmidt_dual(std::move(frame), data.g);

    Mat j_at(data.da, std::vector<double>(data.da));
    for (int a = 0; a < data.da; ++a)
      for (int b = 0; b < data.da; ++b) j_at[a][b] = eval(data.j_along[a][b], pt);

    double trace = 0.0;
    for (int i = 0; i < data.nl; ++i) {
      std::vector<double> je(data.da, 0.0);
      for (int a = 0; a < data.da; ++a)
        for (int b = 0; b < data.da; ++b) je[a] += j_at[a][b] * ortho[i][b].v;
      for (int a = 0; a < data.da; ++a)
        for (int b = 0; b < data.da; ++b)
          trace += ortho[i][a].d * data.g[a][b] * je[b];
    }
    return trace / (2.0 * M_PI);
  };
  return adaptive_simpson(integrand, 0.0, period, 1e-8, 1000000);
}

WindingResult winding_oracle(const FramedLagrangian& l, const Calibrated& c, double period,
                             int steps, const RunConfig& cfg) {
  LoopData data = prepare_loop(l, c);
  (void)cfg;
  int n = static_cast<int>(c.vertical_frame.size());

  std::span<const Expr> imm(l.immersion);
  std::vector<std::vector<Expr>> vert(n);
  for (int k = 0; k < n; ++k) {
    vert[k].resize(data.da);
    for (int a = 0; a < data.da; ++a)
      vert[k][a] = substitute(c.vertical_frame[k].comps[a], imm);
  }

  auto frame_at = [&](double t) {
    Point pt{t};
    Mat raw(data.nl, std::vector<double>(data.da));
    for (int k = 0; k < data.nl; ++k)
      for (int a = 0; a < data.da; ++a) raw[k][a] = eval(data.raw[k][a], pt);
    return gram_schmidt_plain(std::move(raw), data.g);
  };

  // Frame periodicity.
  {
    Mat f0 = frame_at(0.0), f1 = frame_at(period);
    for (int k = 0; k < data.nl; ++k)
      for (int a = 0; a < data.da; ++a)
        if (std::abs(f0[k][a] - f1[k][a]) > 1e-8)
          throw DomainError("winding_oracle: tangent frame is not periodic");
  }

  WindingResult out;
  double total_phase = 0.0;
  std::complex<double> prev_det;
  bool have_prev = false;
  for (int m = 0; m <= steps; ++m) {
    double t = period * static_cast<double>(m) / steps;
    Point pt{t};
    Mat e = frame_at(t);

    Mat f(n, std::vector<double>(data.da));
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < data.da; ++a) f[k][a] = eval(vert[k][a], pt);
    f = gram_schmidt_plain(std::move(f), data.g);

    Mat j_at(data.da, std::vector<double>(data.da));
    for (int a = 0; a < data.da; ++a)
      for (int b = 0; b < data.da; ++b) j_at[a][b] = eval(data.j_along[a][b], pt);
    Mat jf(n, std::vector<double>(data.da, 0.0));
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < data.da; ++a)
        for (int b = 0; b < data.da; ++b) jf[k][a] += j_at[a][b] * f[k][b];

    // Solve e_i = sum_m Re(c^m) f_m + Im(c^m) J f_m.
    Mat system(data.da, std::vector<double>(2 * n));
    for (int a = 0; a < data.da; ++a)
      for (int k = 0; k < n; ++k) {
        system[a][k] = f[k][a];
        system[a][n + k] = jf[k][a];
      }
    Mat u_re(n, std::vector<double>(data.nl)), u_im(n, std::vector<double>(data.nl));
    for (int i = 0; i < data.nl; ++i) {
      std::vector<double> rhs(data.da);
      for (int a = 0; a < data.da; ++a) rhs[a] = e[i][a];
      auto sol = solve_dense(system, rhs);
      if (!sol) throw DomainError("winding_oracle: frame system singular");
      for (int k = 0; k < n; ++k) {
        u_re[k][i] = (*sol)[k];
        u_im[k][i] = (*sol)[n + k];
      }
    }

    // Tangency with the vertical: the imaginary block drops rank.
    if (smallest_singular_value(u_im) < 1e-6 && m < steps) out.degeneracies.push_back(t);

    auto [dre, dim_] = complex_det(u_re, u_im);
    std::complex<double> det(dre, dim_);
    if (have_prev) {
      double delta = std::arg(det * std::conj(prev_det));
      total_phase += delta;
    }
    prev_det = det;
    have_prev = true;
  }
  out.winding = total_phase / (2.0 * M_PI);
  return out;
}

}  // namespace llsp
