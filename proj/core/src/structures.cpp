#include "llsp/structures.hpp"

#include <cmath>

#include "llsp/normal.hpp"

namespace llsp {

namespace {

CheckReport scan_matrix_check(const std::string& name, const ExprMat& m,
                              const std::vector<Point>& pts, double tol,
                              const std::string& note = "") {
  ResidualScan scan;
  for (const auto& row : m)
    for (const Expr& e : row)
      for (const auto& p : pts) scan.observe(eval(e, p), p);
  return scan.report(name, tol, note);
}

CheckReport scan_form_check(const std::string& name, const PForm& w,
                            const std::vector<Point>& pts, double tol,
                            const std::string& note = "") {
  ResidualScan scan;
  for (const auto& [k, c] : w.terms())
    for (const auto& p : pts) scan.observe(eval(c, p), p);
  if (w.terms().empty() && !pts.empty()) scan.observe(0.0, pts.front());
  return scan.report(name, tol, note);
}

CheckReport scan_field_check(const std::string& name, const VectorField& x,
                             const std::vector<Point>& pts, double tol,
                             const std::string& note = "") {
  ResidualScan scan;
  for (const Expr& c : x.comps)
    for (const auto& p : pts) scan.observe(eval(c, p), p);
  return scan.report(name, tol, note);
}

}  // namespace

// ---- Lagrangian charts --------------------------------------------------------

LagrangianChart::LagrangianChart(ChartPtr c, Expr lagrangian)
    : chart(std::move(c)), L(std::move(lagrangian)) {
  if (!chart->has_split())
    throw DomainError("Lagrangian chart needs a (base, fiber) split");
}

ExprMat LagrangianChart::fiber_hessian() const {
  int n = chart->half();
  ExprMat h(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i) {
    Expr di = diff(L, chart->fiber_index(i));
    for (int j = 0; j < n; ++j) h[i][j] = diff(di, chart->fiber_index(j));
  }
  return h;
}

ExprMat LagrangianChart::mixed_hessian() const {
  int n = chart->half();
  ExprMat m(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i) {
    Expr di = diff(L, chart->base_index(i));
    for (int j = 0; j < n; ++j) m[i][j] = diff(di, chart->fiber_index(j));
  }
  return m;
}

// ---- tangent structures ---------------------------------------------------------

TangentStructure canonical_tangent_structure(ChartPtr chart, const RunConfig& cfg) {
  if (!chart->has_split()) throw DomainError("canonical structure needs a split chart");
  EndField s = EndField::zero(chart);
  int n = chart->half();
  for (int k = 0; k < n; ++k)
    s.m[chart->fiber_index(k)][chart->base_index(k)] = rational(1);
  TangentStructure out{s, check_tangent(s, cfg)};
  return out;
}

ComplianceReport check_tangent(const EndField& s, const RunConfig& cfg) {
  ComplianceReport report;
  const ChartPtr& chart = s.chart;
  int d = chart->dim();
  auto pts = sample_points(d, cfg);

  EndField s2 = s.compose(s);
  bool structural = true;
  for (const auto& row : s2.m)
    for (const Expr& e : row)
      if (!nf_is_zero(e)) structural = false;
  if (structural) {
    CheckReport c;
    c.name = "S_squared_zero";
    c.pass = true;
    c.tolerance = 0.0;
    c.note = "structural";
    report.append(std::move(c));
  } else {
    report.append(scan_matrix_check("S_squared_zero", s2.m, pts, cfg.residual_tol));
  }

  {
    ResidualScan scan;
    for (const auto& p : pts) {
      int rank = numeric_rank(s.at(p), cfg.rank_tol);
      scan.observe(static_cast<double>(rank - d / 2), p);
    }
    report.append(scan.report("S_rank", 0.0, "rank via singular values"));
  }

  {
    ResidualScan scan;
    auto n_s = nijenhuis(s);
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        VectorField v = n_s(VectorField::basis(chart, i), VectorField::basis(chart, j));
        for (const Expr& c : v.comps) {
          if (is_zero(c)) continue;
          for (const auto& p : pts) scan.observe(eval(c, p), p);
        }
      }
    }
    report.append(scan.report("S_nijenhuis", cfg.residual_tol));
  }
  return report;
}

// ---- Lagrangian forms ---------------------------------------------------------------

PForm lagrangian_form(const LagrangianChart& lc, const RunConfig& cfg) {
  const ChartPtr& chart = lc.chart;
  int n = chart->half();
  ExprMat h = lc.fiber_hessian();
  auto pts = sample_points(chart->dim(), cfg);
  for (const auto& p : pts)
    if (numeric_rank(eval_matrix(h, p), cfg.rank_tol) < n)
      throw DomainError("degenerate fiber Hessian at a sample point");

  ExprMat m = lc.mixed_hessian();
  PForm omega(chart, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        Expr c = rational(1, 2) * (m[i][j] - m[j][i]);
        omega.accumulate({chart->base_index(i), chart->base_index(j)}, c);
      }
      omega.accumulate({chart->fiber_index(i), chart->base_index(j)}, h[i][j]);
    }
  return omega;
}

PForm lagrangian_theta(const LagrangianChart& lc) {
  const ChartPtr& chart = lc.chart;
  int n = chart->half();
  PForm theta(chart, 1);
  for (int i = 0; i < n; ++i)
    theta.accumulate({chart->base_index(i)}, diff(lc.L, chart->fiber_index(i)));
  return theta;
}

// ---- compatibility --------------------------------------------------------------------

ComplianceReport check_compat(const PForm& omega, const EndField& s, const RunConfig& cfg,
                              const std::vector<VectorField>* vprime) {
  ComplianceReport report;
  const ChartPtr& chart = omega.chart();
  int d = chart->dim();
  auto pts = sample_points(d, cfg);

  report.append(scan_form_check("omega_closed", exterior_d(omega), pts, cfg.residual_tol));

  {
    ResidualScan scan;
    for (const auto& p : pts) {
      int rank = numeric_rank(form_gram_at(omega, p), cfg.rank_tol);
      scan.observe(static_cast<double>(rank - d), p);
    }
    report.append(scan.report("omega_nondegenerate", 0.0, "rank via singular values"));
  }

  {
    ResidualScan scan;
    for (int i = 0; i < d; ++i) {
      VectorField ei = VectorField::basis(chart, i);
      VectorField si = s.column(i);
      for (int j = i; j < d; ++j) {
        VectorField ej = VectorField::basis(chart, j);
        VectorField sj = s.column(j);
        Expr delta = apply_form(omega, {ei, sj}) - apply_form(omega, {ej, si});
        if (is_zero(delta)) continue;
        for (const auto& p : pts) scan.observe(eval(delta, p), p);
      }
    }
    report.append(scan.report("compat_frame", cfg.residual_tol,
                              "omega(X,SY)-omega(Y,SX) on coordinate pairs"));
  }

  std::vector<VectorField> frame;
  if (vprime) {
    frame = *vprime;
  } else if (chart->has_split()) {
    frame = Splitting::coordinate(chart).vprime;
  }
  if (!frame.empty()) {
    ResidualScan scan;
    bool any = false;
    int n = static_cast<int>(frame.size());
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) {
        Expr delta = apply_form(omega, {frame[i], s.apply(frame[k])}) -
                     apply_form(omega, {frame[k], s.apply(frame[i])});
        if (is_zero(delta)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(delta, p), p);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("lambda_symmetric", cfg.residual_tol,
                              "pairing matrix omega(v'_i, S v'_k) on the transversal frame"));
  }
  return report;
}

TransversalMetric theta_metric(const PForm& omega, const EndField& s,
                               const std::vector<VectorField>& vprime,
                               const RunConfig& cfg) {
  const ChartPtr& chart = omega.chart();
  int d = chart->dim();
  int k = static_cast<int>(vprime.size());
  auto pts = sample_points(d, cfg);

  {
    ExprMat combined(d, std::vector<Expr>(2 * k));
    for (int i = 0; i < d; ++i)
      for (int b = 0; b < k; ++b) {
        combined[i][b] = vprime[b].comps[i];
        combined[i][k + b] = s.apply(vprime[b]).comps[i];
      }
    for (const auto& p : pts)
      if (numeric_rank(eval_matrix(combined, p), cfg.rank_tol) < 2 * k)
        throw DomainError("theta metric: V' not transversal to im S at a sample point");
  }

  TransversalMetric out;
  out.theta.frame = vprime;
  out.theta.g.assign(k, std::vector<Expr>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      out.theta.g[i][j] = nf_compact(apply_form(omega, {s.apply(vprime[i]), vprime[j]}));

  out.elliptic = true;
  for (const auto& p : pts)
    if (!positive_definite_minors(eval_matrix(out.theta.g, p))) {
      out.elliptic = false;
      break;
    }
  return out;
}

TangentStructure tangent_from_metric(const PForm& omega, const Splitting& split,
                                     const MetricBlock& theta, const RunConfig& cfg) {
  const ChartPtr& chart = omega.chart();
  int d = chart->dim();
  int n = static_cast<int>(split.vprime.size());
  auto pts = sample_points(d, cfg);

  {
    ResidualScan scan;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Expr v = apply_form(omega, {split.vprime[i], split.vprime[j]});
        if (is_zero(v)) continue;
        for (const auto& p : pts) scan.observe(eval(v, p), p);
      }
    if (scan.max() > cfg.residual_tol)
      throw DomainError("tangent_from_metric: V' is not Lagrangian (residual " +
                        std::to_string(scan.max()) + ")");
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!nf_is_zero(theta.g[i][j] - theta.g[j][i])) {
        ResidualScan scan = scan_expr(theta.g[i][j] - theta.g[j][i], pts);
        if (scan.max() > cfg.residual_tol)
          throw DomainError("tangent_from_metric: Theta not symmetric");
      }
  for (const auto& p : pts)
    if (numeric_rank(eval_matrix(theta.g, p), cfg.rank_tol) < n)
      throw DomainError("tangent_from_metric: Theta degenerate at a sample point");

  {
    ResidualScan scan;
    for (const VectorField& v : split.v)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          std::vector<Expr> terms;
          for (int m = 0; m < d; ++m) {
            if (is_zero(v.comps[m])) continue;
            Expr dg = diff(theta.g[i][j], m);
            if (!is_zero(dg)) terms.push_back(v.comps[m] * dg);
          }
          Expr deriv = add(std::move(terms));
          if (is_zero(deriv)) continue;
          for (const auto& p : pts) scan.observe(eval(deriv, p), p);
        }
    if (scan.max() > cfg.residual_tol)
      throw DomainError("tangent_from_metric: Theta not projectable along V (residual " +
                        std::to_string(scan.max()) + ")");
  }

  std::vector<VectorField> images;
  for (int c = 0; c < n; ++c) {
    PForm alpha = flat_metric(theta, split.vprime[c], split.v);
    images.push_back(sharp_omega(omega, alpha, cfg));
  }

  std::vector<VectorField> frame = split.combined();
  ExprMat fm(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int b = 0; b < d; ++b) fm[i][b] = frame[b].comps[i];
  auto inv = invert_symbolic(fm);
  if (!inv) throw DomainError("tangent_from_metric: splitting frame not invertible");

  ExprMat sm(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      std::vector<Expr> terms;
      for (int c = 0; c < n; ++c)
        if (!is_zero(images[c].comps[i]) && !is_zero((*inv)[c][j]))
          terms.push_back(images[c].comps[i] * (*inv)[c][j]);
      sm[i][j] = nf_compact(add(std::move(terms)));
    }
  EndField s(chart, std::move(sm));

  TangentStructure out{s, check_tangent(s, cfg)};
  out.verification.append(check_compat(omega, s, cfg, &split.vprime));

  TransversalMetric recovered = theta_metric(omega, s, split.vprime, cfg);
  ResidualScan scan;
  bool any = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Expr delta = recovered.theta.g[i][j] - theta.g[i][j];
      if (is_zero(delta)) continue;
      any = true;
      for (const auto& p : pts) scan.observe(eval(delta, p), p);
    }
  if (!any && !pts.empty()) scan.observe(0.0, pts.front());
  out.verification.append(scan.report("theta_roundtrip", cfg.residual_tol));
  return out;
}

// ---- transitions ------------------------------------------------------------------------

ComplianceReport transition_check(const LagrangianChart& la, const LagrangianChart& lb,
                                  const std::vector<Expr>& map, const RunConfig& cfg) {
  const ChartPtr& chart = la.chart;
  if (static_cast<int>(map.size()) != lb.chart->dim())
    throw DomainError("transition map must cover the target chart");
  int n = chart->half();
  auto pts = sample_points(chart->dim(), cfg);
  ComplianceReport report;

  {
    ResidualScan scan;
    for (int i = 0; i < n; ++i) {
      const Expr& qmap = map[lb.chart->base_index(i)];
      const Expr& umap = map[lb.chart->fiber_index(i)];
      for (int j = 0; j < n; ++j) {
        Expr base_by_fiber = diff(qmap, chart->fiber_index(j));
        Expr jac_mismatch =
            diff(umap, chart->fiber_index(j)) - diff(qmap, chart->base_index(j));
        for (const auto& p : pts) {
          scan.observe(eval(base_by_fiber, p), p);
          scan.observe(eval(jac_mismatch, p), p);
        }
        for (int k = 0; k < n; ++k) {
          Expr second = diff(diff(umap, chart->fiber_index(j)), chart->fiber_index(k));
          if (is_zero(second)) continue;
          for (const auto& p : pts) scan.observe(eval(second, p), p);
        }
      }
    }
    report.append(scan.report("transition_shape", cfg.residual_tol,
                              "base map fiber-free, fiber map affine with base Jacobian"));
  }

  Expr delta = substitute(lb.L, std::span<const Expr>(map)) - la.L;

  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Expr second = diff(diff(delta, chart->fiber_index(i)), chart->fiber_index(j));
        if (is_zero(second)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(second, p), p);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("delta_fiber_hessian_zero", cfg.residual_tol));
  }

  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Expr asym = diff(diff(delta, chart->fiber_index(i)), chart->base_index(j)) -
                    diff(diff(delta, chart->fiber_index(j)), chart->base_index(i));
        if (is_zero(asym)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(asym, p), p);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("delta_linear_part_closed", cfg.residual_tol));
  }

  {
    PForm omega_a = lagrangian_form(la, cfg);
    PForm omega_b = lagrangian_form(lb, cfg);
    PForm pulled = pullback(omega_b, chart, map);
    report.append(scan_form_check("omega_match", pulled - omega_a, pts, cfg.residual_tol));
  }
  return report;
}

// ---- second order fields -----------------------------------------------------------------

VectorField euler_field(ChartPtr chart) {
  if (!chart->has_split()) throw DomainError("Euler field needs a split chart");
  VectorField e = VectorField::zero(chart);
  int n = chart->half();
  for (int k = 0; k < n; ++k)
    e.comps[chart->fiber_index(k)] = coord(*chart, chart->fiber_index(k));
  return e;
}

ComplianceReport is_second_order(const VectorField& x, const EndField& s,
                                 SecondOrderMode mode, const RunConfig& cfg) {
  const ChartPtr& chart = x.chart;
  if (!chart->has_split()) throw DomainError("second-order check needs a split chart");
  int n = chart->half();
  auto pts = sample_points(chart->dim(), cfg);
  ComplianceReport report;

  VectorField deviation = s.apply(x) - euler_field(chart);
  if (mode == SecondOrderMode::TangentBundle) {
    report.append(scan_field_check("SX_equals_E", deviation, pts, cfg.residual_tol));
    return report;
  }

  {
    ResidualScan scan;
    bool any = false;
    for (int k = 0; k < n; ++k) {
      const Expr& c = deviation.comps[chart->base_index(k)];
      if (is_zero(c)) continue;
      any = true;
      for (const auto& p : pts) scan.observe(eval(c, p), p);
    }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("SX_minus_E_vertical", cfg.residual_tol));
  }
  {
    ResidualScan scan;
    bool any = false;
    for (int k = 0; k < n; ++k) {
      const Expr& c = deviation.comps[chart->fiber_index(k)];
      for (int j = 0; j < n; ++j) {
        Expr dc = diff(c, chart->fiber_index(j));
        if (is_zero(dc)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(dc, p), p);
      }
    }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("alpha_fiber_independent", cfg.residual_tol,
                              "components of SX - E depend on the base only"));
  }
  return report;
}

AlmostProduct almost_product(const VectorField& x, const EndField& s,
                             const RunConfig& cfg) {
  const ChartPtr& chart = x.chart;
  ComplianceReport so = is_second_order(x, s, SecondOrderMode::General, cfg);
  if (!so.pass()) throw DomainError("almost_product: field is not second order");
  int n = chart->half();

  AlmostProduct out;
  out.F = lie_derivative_end(x, s);

  VectorField deviation = s.apply(x) - euler_field(chart);
  for (int i = 0; i < n; ++i) {
    VectorField v = VectorField::basis(chart, chart->base_index(i));
    for (int j = 0; j < n; ++j) {
      Expr alpha_j = deviation.comps[chart->fiber_index(j)];
      Expr beta_j = x.comps[chart->fiber_index(j)];
      Expr coeff = rational(1, 2) * (diff(alpha_j, chart->base_index(i)) -
                                     diff(beta_j, chart->fiber_index(i)));
      v.comps[chart->fiber_index(j)] = neg(coeff);
    }
    out.vprime.push_back(std::move(v));
  }
  return out;
}

EnergyHamiltonian energy_hamiltonian(const LagrangianChart& lc, const RunConfig& cfg) {
  const ChartPtr& chart = lc.chart;
  int n = chart->half();
  auto pts = sample_points(chart->dim(), cfg);

  std::vector<Expr> eterms;
  for (int k = 0; k < n; ++k) {
    int ui = chart->fiber_index(k);
    eterms.push_back(coord(*chart, ui) * diff(lc.L, ui));
  }
  Expr energy = add(std::move(eterms)) - lc.L;

  ExprMat h = lc.fiber_hessian();
  ExprMat m = lc.mixed_hessian();
  for (const auto& p : pts)
    if (numeric_rank(eval_matrix(h, p), cfg.rank_tol) < n)
      throw DomainError("energy_hamiltonian: degenerate fiber Hessian");

  // Base components equal the fiber coordinates; the fiber components solve
  // sum_i H_ij b^i = -dE/dq^j - sum_i u^i (M_ij - M_ji).
  ExprMat system(n, std::vector<Expr>(n));
  std::vector<Expr> rhs(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) system[j][i] = h[i][j];
    std::vector<Expr> terms;
    terms.push_back(neg(diff(energy, chart->base_index(j))));
    for (int i = 0; i < n; ++i) {
      Expr phi_ij = m[i][j] - m[j][i];
      if (!is_zero(phi_ij))
        terms.push_back(neg(coord(*chart, chart->fiber_index(i)) * phi_ij));
    }
    rhs[j] = add(std::move(terms));
  }
  auto b = solve_linear_symbolic(system, rhs);
  if (!b) throw DomainError("energy_hamiltonian: singular Hessian system");

  VectorField x = VectorField::zero(chart);
  for (int k = 0; k < n; ++k) {
    x.comps[chart->base_index(k)] = coord(*chart, chart->fiber_index(k));
    x.comps[chart->fiber_index(k)] = nf_compact((*b)[k]);
  }

  // Hamiltonian residual i(X) omega + dE must vanish.
  PForm omega = lagrangian_form(lc, cfg);
  PForm residual = interior(x, omega);
  for (int i = 0; i < chart->dim(); ++i) residual.accumulate({i}, diff(energy, i));
  for (const auto& [key, c] : residual.terms()) {
    ResidualScan scan = scan_expr(c, pts);
    if (scan.max() > 1e-7)
      throw DomainError("energy_hamiltonian: Hamiltonian equation residual " +
                        std::to_string(scan.max()));
  }
  return EnergyHamiltonian{energy, std::move(x)};
}

VectorField solve_vertical_correction(const PForm& phi, const PForm& zeta,
                                      const VectorField& x, const Expr& f,
                                      const RunConfig& cfg) {
  const ChartPtr& chart = zeta.chart();
  if (!chart->has_split()) throw DomainError("vertical correction needs a split chart");
  int n = chart->half();
  auto pts = sample_points(chart->dim(), cfg);

  for (int k = 0; k < n; ++k)
    if (!nf_is_zero(diff(f, chart->fiber_index(k))))
      throw DomainError("vertical correction: f must depend on the base only");

  ExprMat d(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i) {
    Expr zi = zeta.coefficient({chart->base_index(i)});
    for (int j = 0; j < n; ++j) d[i][j] = diff(zi, chart->fiber_index(j));
  }
  for (const auto& p : pts)
    if (numeric_rank(eval_matrix(d, p), cfg.rank_tol) < n)
      throw DomainError("vertical correction: singular Hessian block at a sample point");

  PForm psi = interior(x, phi);
  std::vector<Expr> rhs(n);
  for (int i = 0; i < n; ++i)
    rhs[i] = diff(f, chart->base_index(i)) - psi.coefficient({chart->base_index(i)});
  auto c = solve_linear_symbolic(d, rhs);
  if (!c) throw DomainError("vertical correction: singular Hessian system");

  VectorField z = VectorField::zero(chart);
  for (int k = 0; k < n; ++k) z.comps[chart->fiber_index(k)] = nf_compact((*c)[k]);
  return z;
}

TNForm assemble_tn_form(const PForm& phi, const PForm& zeta, const RunConfig& cfg) {
  const ChartPtr& chart = zeta.chart();
  if (!chart->has_split()) throw DomainError("tn form assembly needs a split chart");
  int n = chart->half();
  auto pts = sample_points(chart->dim(), cfg);

  for (const auto& [key, c] : phi.terms())
    for (int idx : key)
      if (chart->is_fiber(idx))
        throw DomainError("tn form assembly: Phi must live on the base coordinates");

  TNForm out;
  out.checks.append(scan_form_check("phi_closed", exterior_d(phi), pts, cfg.residual_tol));

  bool symmetric = true;
  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Expr asym =
            diff(zeta.coefficient({chart->base_index(i)}), chart->fiber_index(j)) -
            diff(zeta.coefficient({chart->base_index(j)}), chart->fiber_index(i));
        if (is_zero(asym)) continue;
        any = true;
        for (const auto& p : pts) scan.observe(eval(asym, p), p);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    CheckReport c = scan.report("zeta_fiber_symmetric", cfg.residual_tol);
    symmetric = c.pass;
    out.checks.append(std::move(c));
  }

  out.omega = phi + exterior_d(zeta);

  {
    ResidualScan scan;
    for (const auto& p : pts) {
      int rank = numeric_rank(form_gram_at(out.omega, p), cfg.rank_tol);
      scan.observe(static_cast<double>(rank - chart->dim()), p);
    }
    out.checks.append(scan.report("omega_nondegenerate", 0.0));
  }

  TangentStructure s = canonical_tangent_structure(chart, cfg);
  out.checks.append(check_compat(out.omega, s.S, cfg));

  if (symmetric) {
    PForm xi(chart, 1);
    for (int i = 0; i < n; ++i)
      xi.accumulate({chart->fiber_index(i)}, zeta.coefficient({chart->base_index(i)}));
    out.lagrangian_potential = leafwise_potential(xi, cfg);
    LagrangianChart lag(chart, out.lagrangian_potential);
    PForm omega_phi = lagrangian_form(lag, cfg);
    out.checks.append(scan_form_check("tn_decomposition", (phi + omega_phi) - out.omega,
                                      pts, cfg.residual_tol,
                                      "omega = pi*Phi + omega_potential"));
  } else {
    CheckReport c;
    c.name = "tn_decomposition";
    c.pass = false;
    c.note = "skipped: zeta fiber derivatives not symmetric";
    out.checks.append(std::move(c));
  }
  return out;
}

ComplianceReport global_witness_check(const PForm& eps, const Expr& lagrangian,
                                      const PForm& omega, const EndField& s,
                                      const RunConfig& cfg) {
  const ChartPtr& chart = omega.chart();
  if (!chart->has_split()) throw DomainError("global witness check needs a split chart");
  int n = chart->half();
  int d = chart->dim();
  auto pts = sample_points(d, cfg);
  ComplianceReport report;

  report.append(scan_form_check("omega_equals_d_eps", exterior_d(eps) - omega, pts,
                                cfg.residual_tol));

  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < d; ++i) {
      VectorField si = s.column(i);
      std::vector<Expr> terms;
      for (int m = 0; m < d; ++m) {
        Expr c = eps.coefficient({m});
        if (!is_zero(c) && !is_zero(si.comps[m])) terms.push_back(c * si.comps[m]);
      }
      Expr val = add(std::move(terms));
      if (is_zero(val)) continue;
      any = true;
      for (const auto& p : pts) scan.observe(eval(val, p), p);
    }
    for (int k = 0; k < n; ++k) {
      Expr c = eps.coefficient({chart->fiber_index(k)});
      if (is_zero(c)) continue;
      any = true;
      for (const auto& p : pts) scan.observe(eval(c, p), p);
    }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("eps_vertical", cfg.residual_tol));
  }

  {
    ResidualScan scan;
    bool any = false;
    for (int i = 0; i < n; ++i) {
      Expr delta = eps.coefficient({chart->base_index(i)}) -
                   diff(lagrangian, chart->fiber_index(i));
      if (is_zero(delta)) continue;
      any = true;
      for (const auto& p : pts) scan.observe(eval(delta, p), p);
    }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    report.append(scan.report("eta_equals_leafwise_dL", cfg.residual_tol));
  }
  return report;
}

}  // namespace llsp
