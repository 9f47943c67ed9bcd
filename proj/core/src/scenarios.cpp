#include <cmath>
#include <sstream>

#include <json.hpp>

#include "llsp/harness.hpp"
#include "llsp/maslov.hpp"
#include "llsp/normal.hpp"
#include "llsp/poisson.hpp"
#include "llsp/structures.hpp"

namespace llsp {

namespace {

using nlohmann::json;

json param_json(const std::map<std::string, std::string>& params, const std::string& key,
                const std::string& fallback) {
  auto it = params.find(key);
  const std::string& text = it == params.end() ? fallback : it->second;
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    // bare expression strings arrive unquoted from the command line
    return json(text);
  }
  return parsed;
}

Expr expr_from_json(const json& j, const CoordSystem& chart) {
  if (j.is_number_integer()) return integer(j.get<long long>());
  if (j.is_number_float()) return real_const(j.get<double>());
  if (j.is_string()) return parse(j.get<std::string>(), chart);
  throw DomainError("expected a number or an expression string");
}

ExprMat matrix_from_json(const json& j, const CoordSystem& chart) {
  if (!j.is_array()) throw DomainError("expected a matrix (array of arrays)");
  ExprMat out;
  for (const auto& row : j) {
    if (!row.is_array()) throw DomainError("expected a matrix row");
    std::vector<Expr> r;
    for (const auto& entry : row) r.push_back(expr_from_json(entry, chart));
    out.push_back(std::move(r));
  }
  return out;
}

ChartPtr tangent(int n) {
  return std::make_shared<const CoordSystem>(CoordSystem::tangent_chart(n));
}

CheckReport named(const std::string& name, bool pass, const std::string& note = "") {
  CheckReport c;
  c.name = name;
  c.pass = pass;
  c.note = note;
  return c;
}

CheckReport form_residual_check(const std::string& name, const PForm& w,
                                const std::vector<Point>& pts, double tol,
                                const std::string& note = "") {
  ResidualScan scan;
  bool any = false;
  for (const auto& [k, c] : w.terms()) {
    any = true;
    for (const auto& p : pts) scan.observe(eval(c, p), p);
  }
  if (!any && !pts.empty()) scan.observe(0.0, pts.front());
  return scan.report(name, tol, note);
}

// ---- torus oscillator -------------------------------------------------------

std::vector<CheckReport> run_torus(const RunConfig& cfg,
                                   const std::map<std::string, std::string>& params) {
  json alpha_j = param_json(params, "alpha", "[[2,0],[0,3]]");
  int n = static_cast<int>(alpha_j.size());
  ChartPtr chart = tangent(n);
  ExprMat alpha = matrix_from_json(alpha_j, *chart);

  json m_j = param_json(params, "m", "null");
  json s_j = param_json(params, "s", "null");
  std::vector<long long> m(n, 1), s(n, 1);
  if (m_j.is_array())
    for (int i = 0; i < n; ++i) m[i] = m_j.at(i).get<long long>();
  if (s_j.is_array())
    for (int i = 0; i < n; ++i) s[i] = s_j.at(i).get<long long>();

  std::vector<CheckReport> out;
  std::vector<Expr> lterms;
  for (int i = 0; i < n; ++i) {
    Expr ui = coord(*chart, chart->fiber_index(i));
    lterms.push_back(rational(1, 2) * ui * ui);
    for (int j2 = 0; j2 < n; ++j2)
      lterms.push_back(rational(1, 2) * alpha[i][j2] * coord(*chart, i) *
                       coord(*chart, j2));
  }
  LagrangianChart lc(chart, add(std::move(lterms)));
  auto pts = sample_points(chart->dim(), cfg);

  PForm omega = lagrangian_form(lc, cfg);
  PForm flat(chart, 2);
  for (int i = 0; i < n; ++i)
    flat.accumulate({chart->fiber_index(i), chart->base_index(i)}, rational(1));
  out.push_back(
      form_residual_check("omega_is_flat_symplectic", omega - flat, pts, 1e-12,
                          "the oscillator potential drops out of the 2-form"));

  TangentStructure ts = canonical_tangent_structure(chart, cfg);
  for (auto& c : check_compat(omega, ts.S, cfg).checks) out.push_back(std::move(c));

  // integer lattice shift
  std::vector<Expr> shift(chart->dim());
  for (int i = 0; i < n; ++i) {
    shift[chart->base_index(i)] = coord(*chart, chart->base_index(i)) + integer(m[i]);
    shift[chart->fiber_index(i)] = coord(*chart, chart->fiber_index(i)) + integer(s[i]);
  }
  for (auto& c : transition_check(lc, lc, shift, cfg).checks) out.push_back(std::move(c));

  EnergyHamiltonian eh = energy_hamiltonian(lc, cfg);
  for (auto& c :
       is_second_order(eh.field, ts.S, SecondOrderMode::TangentBundle, cfg).checks)
    out.push_back(std::move(c));
  {
    AlmostProduct ap = almost_product(eh.field, ts.S, cfg);
    EndField f2 = ap.F.compose(ap.F) - EndField::identity(chart);
    ResidualScan scan;
    for (const auto& row : f2.m)
      for (const Expr& e : row) {
        if (is_zero(e)) continue;
        for (const auto& p : pts) scan.observe(eval(e, p), p);
      }
    out.push_back(scan.report("F_squared_identity", 1e-10, "tol 1e-10"));
  }

  for (auto& c : global_witness_check(lagrangian_theta(lc), lc.L, omega, ts.S, cfg).checks)
    out.push_back(std::move(c));
  return out;
}

}  // namespace

// ---- generalized Heisenberg quotients ------------------------------------------

HeisenbergData build_heisenberg(int p, int q, double alpha_val) {
  HeisenbergData h;
  std::vector<std::string> names;
  for (int a = 0; a < p; ++a) names.push_back("X1_" + std::to_string(a + 1));
  names.push_back("y1");
  for (int a = 0; a < p; ++a) names.push_back("Z1_" + std::to_string(a + 1));
  for (int b = 0; b < q; ++b) names.push_back("X2_" + std::to_string(b + 1));
  names.push_back("y2");
  for (int b = 0; b < q; ++b) names.push_back("Z2_" + std::to_string(b + 1));
  h.chart = std::make_shared<const CoordSystem>(CoordSystem(names));
  const CoordSystem& cs = *h.chart;

  auto x1 = [&](int a) { return a; };
  int y1 = p;
  auto z1 = [&](int a) { return p + 1 + a; };
  auto x2 = [&](int b) { return p + 1 + p + b; };
  int y2 = 2 * p + 1 + q;
  auto z2 = [&](int b) { return 2 * p + 2 + q + b; };

  Expr alpha = real_const(alpha_val);

  // omega = sum dX1^(dZ1 - X1 dy1) + sum dX2^(dZ2 - X2 dy2) + dy1^dy2
  h.omega = PForm(h.chart, 2);
  for (int a = 0; a < p; ++a) {
    h.omega.accumulate({x1(a), z1(a)}, rational(1));
    h.omega.accumulate({x1(a), y1}, neg(coord(cs, x1(a))));
  }
  for (int b = 0; b < q; ++b) {
    h.omega.accumulate({x2(b), z2(b)}, rational(1));
    h.omega.accumulate({x2(b), y2}, neg(coord(cs, x2(b))));
  }
  h.omega.accumulate({y1, y2}, rational(1));

  // V: leaves of X1 = const, X2 = const, y1 - alpha y2 = const
  for (int a = 0; a < p; ++a) h.split.v.push_back(VectorField::basis(h.chart, z1(a)));
  for (int b = 0; b < q; ++b) h.split.v.push_back(VectorField::basis(h.chart, z2(b)));
  {
    VectorField w = VectorField::zero(h.chart);
    w.comps[y1] = alpha;
    w.comps[y2] = rational(1);
    h.split.v.push_back(std::move(w));
  }

  // V': X-directions plus the y1-direction corrected to stay Lagrangian
  for (int a = 0; a < p; ++a) h.split.vprime.push_back(VectorField::basis(h.chart, x1(a)));
  for (int b = 0; b < q; ++b) h.split.vprime.push_back(VectorField::basis(h.chart, x2(b)));
  {
    VectorField vy = VectorField::zero(h.chart);
    vy.comps[y1] = rational(1);
    for (int a = 0; a < p; ++a) vy.comps[z1(a)] = coord(cs, x1(a));
    h.split.vprime.push_back(std::move(vy));
  }

  // transversal metric from the covector squares; the source prints one
  // bracket unbalanced in the d(y1 - alpha y2) term, read here as the square
  // of that covector
  int d = cs.dim();
  h.metric.assign(d, std::vector<Expr>(d, rational(0)));
  auto add_square = [&](const std::vector<Expr>& cov) {
    for (int i = 0; i < d; ++i) {
      if (is_zero(cov[i])) continue;
      for (int j = 0; j < d; ++j) {
        if (is_zero(cov[j])) continue;
        h.metric[i][j] = h.metric[i][j] + cov[i] * cov[j];
      }
    }
  };
  for (int a = 0; a < p; ++a) {
    std::vector<Expr> cov(d, rational(0));
    cov[x1(a)] = rational(1);
    add_square(cov);
  }
  for (int b = 0; b < q; ++b) {
    std::vector<Expr> cov(d, rational(0));
    cov[x2(b)] = rational(1);
    add_square(cov);
  }
  {
    std::vector<Expr> cov(d, rational(0));
    cov[y1] = rational(1);
    cov[y2] = neg(alpha);
    add_square(cov);
  }
  for (int a = 0; a < p; ++a) {
    std::vector<Expr> cov(d, rational(0));
    cov[z1(a)] = rational(1);
    cov[y1] = neg(coord(cs, x1(a)));
    add_square(cov);
  }
  for (int b = 0; b < q; ++b) {
    std::vector<Expr> cov(d, rational(0));
    cov[z2(b)] = rational(1);
    cov[y2] = neg(coord(cs, x2(b)));
    add_square(cov);
  }
  {
    std::vector<Expr> cov(d, rational(0));
    cov[y2] = rational(1);
    add_square(cov);
  }

  int k = static_cast<int>(h.split.vprime.size());
  h.theta.frame = h.split.vprime;
  h.theta.g.assign(k, std::vector<Expr>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      std::vector<Expr> terms;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          if (is_zero(h.split.vprime[i].comps[a]) || is_zero(h.metric[a][b]) ||
              is_zero(h.split.vprime[j].comps[b]))
            continue;
          terms.push_back(h.split.vprime[i].comps[a] * h.metric[a][b] *
                          h.split.vprime[j].comps[b]);
        }
      h.theta.g[i][j] = nf_compact(add(std::move(terms)));
    }
  return h;
}

namespace {

std::vector<CheckReport> run_heisenberg(const RunConfig& cfg,
                                        const std::map<std::string, std::string>& params) {
  int p = param_json(params, "p", "1").get<int>();
  int q = param_json(params, "q", "1").get<int>();
  double alpha = param_json(params, "alpha", "1.0").get<double>();
  HeisenbergData h = build_heisenberg(p, q, alpha);
  auto pts = sample_points(h.chart->dim(), cfg);

  std::vector<CheckReport> out;
  out.push_back(form_residual_check("omega_closed", exterior_d(h.omega), pts,
                                    cfg.residual_tol));
  {
    ResidualScan scan;
    for (const auto& pt : pts)
      scan.observe(static_cast<double>(numeric_rank(form_gram_at(h.omega, pt),
                                                    cfg.rank_tol) -
                                       h.chart->dim()),
                   pt);
    out.push_back(scan.report("omega_nondegenerate", 0.0));
  }
  {
    ResidualScan scan;
    bool any = false;
    int nv = static_cast<int>(h.split.v.size());
    for (int i = 0; i < nv; ++i)
      for (int j = i + 1; j < nv; ++j) {
        Expr v = apply_form(h.omega, {h.split.v[i], h.split.v[j]});
        if (is_zero(v)) continue;
        any = true;
        for (const auto& pt : pts) scan.observe(eval(v, pt), pt);
      }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    out.push_back(scan.report("V_lagrangian", 1e-10, "pullback residual, tol 1e-10"));
  }
  {
    // projectability of Theta along the V frame
    ResidualScan scan;
    bool any = false;
    int k = static_cast<int>(h.theta.g.size());
    for (const VectorField& v : h.split.v)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          std::vector<Expr> terms;
          for (int m = 0; m < h.chart->dim(); ++m) {
            if (is_zero(v.comps[m])) continue;
            Expr dg = diff(h.theta.g[i][j], m);
            if (!is_zero(dg)) terms.push_back(v.comps[m] * dg);
          }
          Expr deriv = add(std::move(terms));
          if (is_zero(deriv)) continue;
          any = true;
          for (const auto& pt : pts) scan.observe(eval(deriv, pt), pt);
        }
    if (!any && !pts.empty()) scan.observe(0.0, pts.front());
    out.push_back(scan.report("theta_projectable_along_V", cfg.residual_tol));
  }

  TangentStructure ts = tangent_from_metric(h.omega, h.split, h.theta, cfg);
  for (auto& c : ts.verification.checks) out.push_back(std::move(c));

  TransversalMetric tm = theta_metric(h.omega, ts.S, h.split.vprime, cfg);
  out.push_back(named("elliptic_type", tm.elliptic,
                      "transversal metric positive definite at samples"));

  {
    // invariance of omega under an integer lattice shift of the first factor:
    // X -> X + M, y -> y + m, Z -> Z + M y + K
    const CoordSystem& cs = *h.chart;
    std::vector<Expr> map(cs.dim());
    for (int i = 0; i < cs.dim(); ++i) map[i] = coord(cs, i);
    int y1 = p;
    for (int a = 0; a < p; ++a) {
      map[a] = coord(cs, a) + integer(1);                              // X1 + M
      map[p + 1 + a] = coord(cs, p + 1 + a) + coord(cs, y1) + integer(1);  // Z1 + M y1 + K
    }
    map[y1] = coord(cs, y1) + integer(1);
    PForm pulled = pullback(h.omega, h.chart, map);
    out.push_back(form_residual_check("lattice_invariance", pulled - h.omega, pts,
                                      cfg.residual_tol,
                                      "left translation by an integer group element"));
  }
  return out;
}

// ---- fibered product -----------------------------------------------------------

std::vector<CheckReport> run_fibered(const RunConfig& cfg,
                                     const std::map<std::string, std::string>& params) {
  json psym_j = param_json(params, "p_sym", "[[1]]");
  int n = static_cast<int>(psym_j.size());
  std::vector<std::string> xs;
  for (int i = 1; i <= n; ++i) xs.push_back("x" + std::to_string(i));
  CoordSystem base(xs);
  ExprMat p_sym = matrix_from_json(psym_j, base);
  json t_j = param_json(params, "t", "null");
  ExprMat t(n, std::vector<Expr>(n, rational(0)));
  if (t_j.is_array()) t = matrix_from_json(t_j, base);

  FiberedProduct fp = fibered_product(p_sym, t, cfg);
  return fp.checks.checks;
}

// ---- tangent lift (negative example) ----------------------------------------------

std::vector<CheckReport> run_tangent_lift(const RunConfig& cfg,
                                          const std::map<std::string, std::string>& params) {
  int n = param_json(params, "n", "2").get<int>();
  ChartPtr chart = tangent(n);
  std::vector<std::string> qnames;
  for (int i = 1; i <= n; ++i) qnames.push_back("q" + std::to_string(i));
  auto base = std::make_shared<const CoordSystem>(CoordSystem(qnames));

  json w_j = param_json(params, "w12", "\"q1\"");
  Bivector w(base);
  w.set(0, 1, expr_from_json(w_j, *base));

  std::vector<CheckReport> out;
  Bivector lift = tangent_lift(w, chart, cfg);
  for (auto& c : check_jacobi(lift, cfg).checks) out.push_back(std::move(c));
  for (auto& c : tangent_lift_relations(lift, w, cfg).checks) out.push_back(std::move(c));

  TangentStructure ts = canonical_tangent_structure(chart, cfg);
  LLPReport llp = llp_check(lift, ts.S, cfg);
  for (auto& c : llp.checks.checks) out.push_back(std::move(c));
  for (auto& c : tn_poisson_check(lift, cfg).checks) out.push_back(std::move(c));
  return out;
}

// ---- circle Maslov ------------------------------------------------------------------

std::vector<CheckReport> run_circle_maslov(const RunConfig& cfg,
                                           const std::map<std::string, std::string>& params) {
  double period = param_json(params, "period", "null").is_number()
                      ? param_json(params, "period", "0").get<double>()
                      : 2.0 * M_PI;
  int steps = param_json(params, "resolution", "720").get<int>();

  ChartPtr chart = tangent(1);
  PForm omega(chart, 2);
  omega.accumulate({1, 0}, rational(1));
  TangentStructure ts = canonical_tangent_structure(chart, cfg);
  Calibrated cal = calibrate(ts.S, Splitting::coordinate(chart), omega, cfg);

  auto pchart = std::make_shared<const CoordSystem>(CoordSystem({std::string("t")}));
  Expr t = coord(*pchart, 0);
  FramedLagrangian circle = FramedLagrangian::with_frame(
      pchart, chart, {cos_e(t), sin_e(t)}, {{neg(sin_e(t)), cos_e(t)}});

  std::vector<CheckReport> out;
  for (auto& c : validate_framed(circle, cal, cfg).checks) out.push_back(std::move(c));

  GaussWeingarten gw = gauss_weingarten(circle, cal, ConnectionMode::Flat, cfg);
  for (auto& c : gw.verification.checks) out.push_back(std::move(c));

  {
    // h = 1 transgression reduces to tr b / 2 pi
    FormMatrix alpha = fm_scale(0.0, -1.0, gw.b);
    FormMatrix zero2 = FormMatrix::zero(pchart, 1, 2);
    CwbResult cwb = cwb_form(1, zero2, zero2, alpha, cfg);
    PForm direct = scale(real_const(1.0 / (2.0 * M_PI)), gw.b.re_at(0, 0));
    auto ppts = sample_points(1, cfg);
    ResidualScan scan;
    PForm delta = cwb.form - direct;
    bool any = false;
    for (const auto& [key, c] : delta.terms()) {
      any = true;
      for (const auto& p : ppts) scan.observe(eval(c, p), p);
    }
    if (!any && !ppts.empty()) scan.observe(0.0, ppts.front());
    out.push_back(scan.report("cwb_h1_equals_trace_b", 1e-12, "tol 1e-12"));
  }

  double loop = first_maslov_loop(circle, cal, period, cfg);
  WindingResult oracle = winding_oracle(circle, cal, period, steps, cfg);
  {
    CheckReport c;
    c.name = "maslov_equals_winding";
    c.max_residual = std::abs(loop - oracle.winding);
    c.tolerance = 1e-6;
    c.pass = c.max_residual < 1e-6;
    std::ostringstream note;
    note << "{\"maslov_integral\":" << loop << ",\"winding\":" << oracle.winding
         << ",\"agreement\":" << std::abs(loop - oracle.winding) << "}";
    c.note = note.str();
    out.push_back(std::move(c));
  }
  {
    CheckReport c;
    c.name = "maslov_integer";
    c.max_residual = std::abs(loop - std::round(loop));
    c.tolerance = 1e-6;
    c.pass = c.max_residual < 1e-6;
    out.push_back(std::move(c));
  }

  FramedLagrangian ellipse = FramedLagrangian::from_immersion(
      pchart, chart, {integer(2) * cos_e(t), sin_e(t)});
  double ell = first_maslov_loop(ellipse, cal, period, cfg);
  {
    CheckReport c;
    c.name = "ellipse_invariance";
    c.max_residual = std::abs(ell - loop);
    c.tolerance = 1e-6;
    c.pass = c.max_residual < 1e-6;
    c.note = "homotopy through Lagrangian loops";
    out.push_back(std::move(c));
  }

  FramedLagrangian doubled = FramedLagrangian::from_immersion(
      pchart, chart, {cos_e(integer(2) * t), sin_e(integer(2) * t)});
  double dbl = first_maslov_loop(doubled, cal, period, cfg);
  {
    CheckReport c;
    c.name = "double_traversal";
    c.max_residual = std::abs(dbl - 2.0 * loop);
    c.tolerance = 1e-6;
    c.pass = c.max_residual < 1e-6;
    out.push_back(std::move(c));
  }

  FramedLagrangian reversed = FramedLagrangian::from_immersion(
      pchart, chart, {cos_e(t), neg(sin_e(t))});
  double rev = first_maslov_loop(reversed, cal, period, cfg);
  {
    CheckReport c;
    c.name = "orientation_reversal";
    c.max_residual = std::abs(rev + loop);
    c.tolerance = 1e-6;
    c.pass = c.max_residual < 1e-6;
    out.push_back(std::move(c));
  }
  return out;
}

// ---- compatible forms on a tangent-bundle chart -----------------------------------------

std::vector<CheckReport> run_tn_forms(const RunConfig& cfg,
                                      const std::map<std::string, std::string>& params) {
  int n = param_json(params, "n", "2").get<int>();
  ChartPtr chart = tangent(n);
  const CoordSystem& cs = *chart;

  // Phi = d(alpha_i dq^i) for the exact default alpha = q1 dq2
  PForm base_alpha(chart, 1);
  json alpha_j = param_json(params, "alpha_oneform", "null");
  if (alpha_j.is_array()) {
    for (int i = 0; i < n; ++i) base_alpha.accumulate({i}, expr_from_json(alpha_j.at(i), cs));
  } else if (n >= 2) {
    base_alpha.accumulate({1}, coord(cs, 0));
  }
  PForm phi = exterior_d(base_alpha);

  PForm zeta(chart, 1);
  json zeta_j = param_json(params, "zeta", "null");
  if (zeta_j.is_array()) {
    for (int i = 0; i < n; ++i) zeta.accumulate({i}, expr_from_json(zeta_j.at(i), cs));
  } else {
    for (int i = 0; i < n; ++i)
      zeta.accumulate({i}, coord(cs, cs.fiber_index(i)));
  }
  Expr f = expr_from_json(param_json(params, "f", "\"q1\""), cs);

  std::vector<CheckReport> out;
  TNForm tn = assemble_tn_form(phi, zeta, cfg);
  for (auto& c : tn.checks.checks) out.push_back(std::move(c));
  out.push_back(named("omega_serialized", true, form_to_json(tn.omega)));
  if (!tn.checks.pass()) return out;

  auto pts = sample_points(cs.dim(), cfg);

  // local Lagrangians L = phi_potential + alpha_i u^i generate omega when the
  // base form is exact
  {
    std::vector<Expr> terms = {tn.lagrangian_potential};
    for (int i = 0; i < n; ++i) {
      Expr a = base_alpha.coefficient({i});
      if (!is_zero(a)) terms.push_back(a * coord(cs, cs.fiber_index(i)));
    }
    LagrangianChart lc(chart, add(std::move(terms)));
    PForm omega_l = lagrangian_form(lc, cfg);
    out.push_back(form_residual_check("exact_case_lagrangian", omega_l - tn.omega, pts,
                                      cfg.residual_tol,
                                      "L = potential + alpha_i u^i reproduces omega"));
    TangentStructure ts = canonical_tangent_structure(chart, cfg);
    for (auto& c :
         global_witness_check(lagrangian_theta(lc), lc.L, tn.omega, ts.S, cfg).checks)
      out.push_back(std::move(c));
  }

  // vertical correction closes the Hamiltonian equation for h = E - f
  {
    LagrangianChart pot(chart, tn.lagrangian_potential);
    EnergyHamiltonian eh = energy_hamiltonian(pot, cfg);
    VectorField z = solve_vertical_correction(phi, zeta, eh.field, f, cfg);
    PForm psi = interior(eh.field, phi);
    PForm corr = interior(z, d_fiber(zeta));
    PForm df(chart, 1);
    for (int i = 0; i < n; ++i) df.accumulate({i}, diff(f, i));
    out.push_back(form_residual_check("vertical_correction_closes", psi + corr - df,
                                      pts, cfg.residual_tol));

    Expr h = eh.energy - f;
    PForm residual = interior(eh.field + z, tn.omega);
    for (int i = 0; i < cs.dim(); ++i) residual.accumulate({i}, diff(h, i));
    out.push_back(form_residual_check("corrected_field_hamiltonian", residual, pts,
                                      cfg.residual_tol,
                                      "i(X+Z) omega = -d(E - f)"));
  }
  return out;
}

// ---- synthetic higher transgression -------------------------------------------------------

std::vector<CheckReport> run_cwb_h2(const RunConfig& cfg,
                                    const std::map<std::string, std::string>& params) {
  (void)params;
  RunConfig local = cfg;
  local.samples = std::min(cfg.samples, 10);
  auto p6 = std::make_shared<const CoordSystem>(CoordSystem(
      {std::string("t1"), std::string("t2"), std::string("t3"), std::string("t4"),
       std::string("t5"), std::string("t6")}));
  const CoordSystem& cs = *p6;
  const int rank = 3;

  FormMatrix theta0 = FormMatrix::zero(p6, rank, 1);
  auto set_re = [&](int i, int j, const Expr& coeff, int dt) {
    theta0.re_at(i, j).accumulate({dt}, coeff);
    theta0.re_at(j, i).accumulate({dt}, neg(coeff));
  };
  auto set_im = [&](int i, int j, const Expr& coeff, int dt) {
    theta0.im_at(i, j).accumulate({dt}, coeff);
    if (i != j) theta0.im_at(j, i).accumulate({dt}, coeff);
  };
  set_re(0, 1, coord(cs, 4), 5);
  set_re(1, 2, coord(cs, 3), 2);
  set_re(0, 2, coord(cs, 1), 0);
  set_im(0, 0, coord(cs, 0), 1);
  set_im(1, 1, coord(cs, 2), 3);
  set_im(0, 1, coord(cs, 5), 4);

  auto pts = sample_points(6, local);
  std::vector<CheckReport> out;
  out.push_back(skew_hermitian_check("theta0_skew_hermitian", theta0, pts, 1e-12));

  FormMatrix g = FormMatrix::zero(p6, rank, 0);
  {
    Expr f1 = coord(cs, 0) + integer(2) * coord(cs, 1);
    Expr f2 = coord(cs, 2) - coord(cs, 5);
    Expr c1 = cos_e(f1), s1 = sin_e(f1), c2 = cos_e(f2), s2 = sin_e(f2);
    g.re_at(0, 0) = PForm::scalar(p6, c1);
    g.re_at(0, 1) = PForm::scalar(p6, neg(s1) * c2);
    g.re_at(0, 2) = PForm::scalar(p6, s1 * s2);
    g.re_at(1, 0) = PForm::scalar(p6, s1);
    g.re_at(1, 1) = PForm::scalar(p6, c1 * c2);
    g.re_at(1, 2) = PForm::scalar(p6, neg(c1) * s2);
    g.re_at(2, 1) = PForm::scalar(p6, s2);
    g.re_at(2, 2) = PForm::scalar(p6, c2);
  }
  FormMatrix ginv = fm_transpose(g);
  FormMatrix theta1 = fm_add(fm_mul(ginv, fm_mul(theta0, g)), fm_mul(ginv, fm_d(g)));
  out.push_back(skew_hermitian_check("theta1_skew_hermitian", theta1, pts, 1e-9));

  FormMatrix curv0 = connection_curvature(theta0);
  FormMatrix curv1 = connection_curvature(theta1);
  {
    FormMatrix expect = fm_mul(ginv, fm_mul(curv0, g));
    FormMatrix delta = fm_sub(curv1, expect);
    ResidualScan scan;
    for (const PForm& f : delta.re)
      for (const auto& [key, c] : f.terms())
        for (const auto& p : pts) scan.observe(eval(c, p), p);
    for (const PForm& f : delta.im)
      for (const auto& [key, c] : f.terms())
        for (const auto& p : pts) scan.observe(eval(c, p), p);
    out.push_back(scan.report("curvature_gauge_covariant", 1e-9, "tol 1e-9"));
  }

  FormMatrix alpha = fm_sub(theta1, theta0);
  CwbResult cwb = cwb_form(2, curv0, curv1, alpha, local);
  {
    CheckReport c;
    c.name = "cwb_real";
    c.max_residual = cwb.imag_residual;
    c.tolerance = 1e-8;
    c.pass = cwb.imag_residual < 1e-8;
    out.push_back(std::move(c));
  }
  {
    double magnitude = 0.0;
    for (const auto& [key, c] : cwb.form.terms()) {
      ResidualScan scan = scan_expr(c, pts);
      magnitude = std::max(magnitude, scan.max());
    }
    out.push_back(named("cwb_nonvacuous", magnitude > 1e-10,
                        "the 5-form has a coefficient above 1e-10 at samples"));
  }
  out.push_back(
      form_residual_check("cwb_d_closed", exterior_d(cwb.form), pts, 1e-8, "tol 1e-8"));
  return out;
}

}  // namespace

const std::vector<Scenario>& scenario_registry() {
  static const std::vector<Scenario> registry = [] {
    std::vector<Scenario> r;

    r.push_back(Scenario{
        "torus_oscillator",
        "Modified harmonic oscillator on the 2n-torus fundamental domain: the\n"
        "quadratic potential drops out of the 2-form, integer lattice shifts\n"
        "change the Lagrangian by an admissible affine term, and the energy\n"
        "field is second order.\n"
        "parameters: alpha (symmetric integer matrix, default [[2,0],[0,3]]),\n"
        "            m, s (integer shift vectors, default all ones)",
        {},
        run_torus});

    r.push_back(Scenario{
        "heisenberg",
        "Quotient of a product of generalized Heisenberg groups: the invariant\n"
        "2-form is closed and nondegenerate, the stated foliation is\n"
        "Lagrangian, the transversal metric is projectable, and the metric\n"
        "construction returns a verified elliptic structure.  The printed\n"
        "source for the metric has one unbalanced bracket in the d(y1-a*y2)\n"
        "term; it is read as the square of that covector.\n"
        "parameters: p, q (factor ranks, default 1, 1), alpha (real, default 1)",
        {},
        run_heisenberg});

    r.push_back(Scenario{
        "fibered_product",
        "Fibered product of two copies of a tangent bundle: the fiberwise\n"
        "bivector weighted by a symmetric nondegenerate matrix over the base\n"
        "passes every axiom, restricts to symplectic leaves, and carries the\n"
        "global leafwise Lagrangian (1/2) Lambda_ij(x) z^i z^j.\n"
        "parameters: p_sym (matrix of numbers or expressions in x1.., default\n"
        "            [[1]]), t (matrix, default zero)",
        {},
        run_fibered});

    r.push_back(Scenario{
        "tangent_lift_negative",
        "Tangent lift of a base bivector: the lift satisfies its defining\n"
        "bracket relations and the Jacobi identity, but for any nonzero W the\n"
        "mixed block is antisymmetric, so the symmetry axiom (llp_pairing_symmetry)\n"
        "and the mixed-block symmetry (tn_mixed_symmetric) are expected to\n"
        "fail: the lift admits no second-order Hamiltonian fields.  The\n"
        "anticommutation identity is equivalent to the symmetry axiom and\n"
        "fails with it.\n"
        "parameters: n (base dimension, default 2), w12 (expression, default q1)",
        {{"llp_pairing_symmetry", false},
         {"llp_sharp_anticommute", false},
         {"tn_mixed_symmetric", false},
         {"tn_llp_would_pass", false}},
        run_tangent_lift});

    r.push_back(Scenario{
        "circle_maslov",
        "Loops of Lagrangian lines in the standard chart: the Gauss-Weingarten\n"
        "coefficients have the metric symmetries, the h=1 transgression equals\n"
        "tr b / 2 pi, and the loop integral agrees with the det-phase winding\n"
        "oracle on the circle (regression value -1 under the pinned\n"
        "conventions), its reversal, an ellipse, and a double traversal.\n"
        "parameters: period (default 2 pi), resolution (oracle steps, default 720)",
        {},
        run_circle_maslov});

    r.push_back(Scenario{
        "tn_forms",
        "Compatible symplectic forms on a tangent-bundle chart assembled from\n"
        "a closed base 2-form and a fiber-symmetric 1-form: the local\n"
        "Lagrangian potential is recovered by the radial homotopy, the exact\n"
        "case is globally Lagrangian, and the vertical correction makes the\n"
        "energy field Hamiltonian for h = E - f.\n"
        "parameters: n (default 2), alpha_oneform, zeta (coefficient arrays),\n"
        "            f (base function, default q1)",
        {},
        run_tn_forms});

    r.push_back(Scenario{
        "cwb_h2",
        "Synthetic pair of gauge-equivalent unitary connections on a rank-3\n"
        "bundle over a 6-parameter chart: the degree-5 transgression form is\n"
        "real, nonvacuous, and closed at samples.",
        {},
        run_cwb_h2});
    return r;
  }();
  return registry;
}

}  // namespace llsp
