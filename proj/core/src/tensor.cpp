#include "llsp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "llsp/normal.hpp"

namespace llsp {

namespace {

void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
  if (a.get() != b.get()) throw DomainError("operands live on different charts");
}

// Sorts indices in place, returns the permutation sign, or 0 on repeats.
int sort_sign(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    for (std::size_t j = i; j > 0 && idx[j] < idx[j - 1]; --j) {
      std::swap(idx[j], idx[j - 1]);
      sign = -sign;
    }
  }
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (idx[i] == idx[i - 1]) return 0;
  return sign;
}

Expr expr_det(const ExprMat& m) {
  std::size_t n = m.size();
  if (n == 0) return rational(1);
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  std::vector<Expr> terms;
  for (std::size_t k = 0; k < n; ++k) {
    if (is_zero(m[0][k])) continue;
    ExprMat minor(n - 1, std::vector<Expr>(n - 1));
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t cc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        minor[i - 1][cc++] = m[i][j];
      }
    }
    Expr t = m[0][k] * expr_det(minor);
    terms.push_back(k % 2 == 0 ? t : neg(t));
  }
  return add(std::move(terms));
}

}  // namespace

// ---- VectorField ------------------------------------------------------------

VectorField::VectorField(ChartPtr c, std::vector<Expr> v)
    : chart(std::move(c)), comps(std::move(v)) {
  if (static_cast<int>(comps.size()) != chart->dim())
    throw DomainError("vector field component count does not match chart");
}

VectorField VectorField::zero(ChartPtr c) {
  std::vector<Expr> v(c->dim(), rational(0));
  return VectorField(std::move(c), std::move(v));
}

VectorField VectorField::basis(ChartPtr c, int index) {
  std::vector<Expr> v(c->dim(), rational(0));
  v.at(index) = rational(1);
  return VectorField(std::move(c), std::move(v));
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  require_same_chart(a.chart, b.chart);
  std::vector<Expr> v(a.comps.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.comps[i] + b.comps[i];
  return VectorField(a.chart, std::move(v));
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  require_same_chart(a.chart, b.chart);
  std::vector<Expr> v(a.comps.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.comps[i] - b.comps[i];
  return VectorField(a.chart, std::move(v));
}

VectorField scale(const Expr& s, const VectorField& x) {
  std::vector<Expr> v(x.comps.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * x.comps[i];
  return VectorField(x.chart, std::move(v));
}

// ---- PForm --------------------------------------------------------------------

PForm::PForm(ChartPtr chart, int degree) : chart_(std::move(chart)), degree_(degree) {
  if (degree_ < 0) throw DomainError("negative form degree");
}

PForm PForm::scalar(ChartPtr chart, const Expr& value) {
  PForm f(std::move(chart), 0);
  if (!is_zero(value)) f.terms_.emplace(std::vector<int>{}, value);
  return f;
}

PForm PForm::one_form(ChartPtr chart, std::vector<Expr> coeffs) {
  if (static_cast<int>(coeffs.size()) != chart->dim())
    throw DomainError("one_form needs one coefficient per coordinate");
  PForm f(chart, 1);
  for (int i = 0; i < f.chart_->dim(); ++i)
    if (!is_zero(coeffs[i])) f.terms_.emplace(std::vector<int>{i}, coeffs[i]);
  return f;
}

void PForm::accumulate(std::vector<int> indices, const Expr& coeff) {
  if (static_cast<int>(indices.size()) != degree_)
    throw DomainError("index tuple length does not match form degree");
  if (is_zero(coeff)) return;
  int sign = sort_sign(indices);
  if (sign == 0) return;
  for (int i : indices)
    if (i < 0 || i >= chart_->dim()) throw DomainError("form index out of range");
  Expr addend = sign > 0 ? coeff : neg(coeff);
  auto it = terms_.find(indices);
  if (it == terms_.end()) {
    terms_.emplace(std::move(indices), addend);
  } else {
    Expr next = it->second + addend;
    if (is_zero(next))
      terms_.erase(it);
    else
      it->second = next;
  }
}

Expr PForm::coefficient(const std::vector<int>& key) const {
  auto it = terms_.find(key);
  return it == terms_.end() ? rational(0) : it->second;
}

void PForm::set_coefficient(std::vector<int> key, const Expr& coeff) {
  if (is_zero(coeff))
    terms_.erase(key);
  else
    terms_.insert_or_assign(std::move(key), coeff);
}

bool PForm::structurally_zero() const {
  for (const auto& [k, c] : terms_)
    if (!nf_is_zero(c)) return false;
  return true;
}

PForm operator+(const PForm& a, const PForm& b) {
  require_same_chart(a.chart(), b.chart());
  if (a.degree() != b.degree()) throw DomainError("adding forms of different degree");
  PForm out = a;
  for (const auto& [k, c] : b.terms()) out.accumulate(k, c);
  return out;
}

PForm operator-(const PForm& a, const PForm& b) {
  require_same_chart(a.chart(), b.chart());
  if (a.degree() != b.degree()) throw DomainError("subtracting forms of different degree");
  PForm out = a;
  for (const auto& [k, c] : b.terms()) out.accumulate(k, neg(c));
  return out;
}

PForm scale(const Expr& s, const PForm& w) {
  PForm out(w.chart(), w.degree());
  for (const auto& [k, c] : w.terms()) out.accumulate(k, s * c);
  return out;
}

// ---- EndField --------------------------------------------------------------------

EndField::EndField(ChartPtr c, ExprMat mat) : chart(std::move(c)), m(std::move(mat)) {
  if (static_cast<int>(m.size()) != chart->dim())
    throw DomainError("endomorphism matrix does not match chart dimension");
  for (const auto& row : m)
    if (static_cast<int>(row.size()) != chart->dim())
      throw DomainError("endomorphism matrix is not square");
}

EndField EndField::zero(ChartPtr c) {
  int d = c->dim();
  return EndField(std::move(c), ExprMat(d, std::vector<Expr>(d, rational(0))));
}

EndField EndField::identity(ChartPtr c) {
  EndField e = zero(std::move(c));
  for (int i = 0; i < e.chart->dim(); ++i) e.m[i][i] = rational(1);
  return e;
}

VectorField EndField::apply(const VectorField& x) const {
  require_same_chart(chart, x.chart);
  int d = chart->dim();
  std::vector<Expr> out(d);
  for (int i = 0; i < d; ++i) {
    std::vector<Expr> terms;
    for (int j = 0; j < d; ++j)
      if (!is_zero(m[i][j]) && !is_zero(x.comps[j])) terms.push_back(m[i][j] * x.comps[j]);
    out[i] = add(std::move(terms));
  }
  return VectorField(chart, std::move(out));
}

VectorField EndField::column(int j) const {
  int d = chart->dim();
  std::vector<Expr> out(d);
  for (int i = 0; i < d; ++i) out[i] = m[i][j];
  return VectorField(chart, std::move(out));
}

EndField EndField::compose(const EndField& other) const {
  require_same_chart(chart, other.chart);
  int d = chart->dim();
  ExprMat out(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      std::vector<Expr> terms;
      for (int k = 0; k < d; ++k)
        if (!is_zero(m[i][k]) && !is_zero(other.m[k][j]))
          terms.push_back(m[i][k] * other.m[k][j]);
      out[i][j] = add(std::move(terms));
    }
  }
  return EndField(chart, std::move(out));
}

EndField operator+(const EndField& a, const EndField& b) {
  require_same_chart(a.chart, b.chart);
  int d = a.chart->dim();
  ExprMat out(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i][j] = a.m[i][j] + b.m[i][j];
  return EndField(a.chart, std::move(out));
}

EndField operator-(const EndField& a, const EndField& b) {
  require_same_chart(a.chart, b.chart);
  int d = a.chart->dim();
  ExprMat out(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i][j] = a.m[i][j] - b.m[i][j];
  return EndField(a.chart, std::move(out));
}

// ---- Bivector ---------------------------------------------------------------------

Bivector::Bivector(ChartPtr chart) : chart_(std::move(chart)) {
  int d = chart_->dim();
  upper_.assign(d * (d - 1) / 2, rational(0));
}

int Bivector::flat_index(int i, int j) const {
  int d = chart_->dim();
  return i * d - i * (i + 1) / 2 + (j - i - 1);
}

Expr Bivector::comp(int i, int j) const {
  if (i == j) return rational(0);
  if (i < j) return upper_[flat_index(i, j)];
  return neg(upper_[flat_index(j, i)]);
}

void Bivector::set(int i, int j, const Expr& value) {
  if (i == j) {
    if (!is_zero(value)) throw DomainError("diagonal bivector component must vanish");
    return;
  }
  if (i < j)
    upper_[flat_index(i, j)] = value;
  else
    upper_[flat_index(j, i)] = neg(value);
}

Expr Bivector::pair(const PForm& alpha, const PForm& beta) const {
  require_same_chart(chart_, alpha.chart());
  require_same_chart(chart_, beta.chart());
  if (alpha.degree() != 1 || beta.degree() != 1)
    throw DomainError("bivector pairing expects 1-forms");
  std::vector<Expr> terms;
  int d = chart_->dim();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const Expr& p = upper_[flat_index(i, j)];
      if (is_zero(p)) continue;
      Expr ai = alpha.coefficient({i}), aj = alpha.coefficient({j});
      Expr bi = beta.coefficient({i}), bj = beta.coefficient({j});
      terms.push_back(p * (ai * bj - aj * bi));
    }
  }
  return add(std::move(terms));
}

Mat Bivector::at(const Point& p) const {
  int d = chart_->dim();
  Mat out(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double v = eval(upper_[flat_index(i, j)], p);
      out[i][j] = v;
      out[j][i] = -v;
    }
  return out;
}

// ---- Splitting ----------------------------------------------------------------------

Splitting Splitting::coordinate(ChartPtr chart) {
  if (!chart->has_split()) throw DomainError("coordinate splitting needs a split chart");
  Splitting s;
  int n = chart->half();
  for (int k = 0; k < n; ++k)
    s.vprime.push_back(VectorField::basis(chart, chart->base_index(k)));
  for (int k = 0; k < n; ++k)
    s.v.push_back(VectorField::basis(chart, chart->fiber_index(k)));
  return s;
}

std::vector<VectorField> Splitting::combined() const {
  std::vector<VectorField> all = vprime;
  all.insert(all.end(), v.begin(), v.end());
  return all;
}

// ---- exterior calculus -----------------------------------------------------------------

PForm exterior_d(const PForm& w) {
  PForm out(w.chart(), w.degree() + 1);
  int d = w.chart()->dim();
  for (const auto& [key, coeff] : w.terms()) {
    for (int j = 0; j < d; ++j) {
      Expr dc = diff(coeff, j);
      if (is_zero(dc)) continue;
      std::vector<int> idx;
      idx.reserve(key.size() + 1);
      idx.push_back(j);
      idx.insert(idx.end(), key.begin(), key.end());
      out.accumulate(std::move(idx), dc);
    }
  }
  return out;
}

PForm wedge(const PForm& a, const PForm& b) {
  require_same_chart(a.chart(), b.chart());
  PForm out(a.chart(), a.degree() + b.degree());
  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      std::vector<int> idx = ka;
      idx.insert(idx.end(), kb.begin(), kb.end());
      out.accumulate(std::move(idx), ca * cb);
    }
  }
  return out;
}

PForm interior(const VectorField& x, const PForm& w) {
  require_same_chart(x.chart, w.chart());
  if (w.degree() == 0) return PForm(w.chart(), 0);
  PForm out(w.chart(), w.degree() - 1);
  for (const auto& [key, coeff] : w.terms()) {
    for (std::size_t k = 0; k < key.size(); ++k) {
      const Expr& xc = x.comps[key[k]];
      if (is_zero(xc)) continue;
      std::vector<int> rest;
      rest.reserve(key.size() - 1);
      for (std::size_t m = 0; m < key.size(); ++m)
        if (m != k) rest.push_back(key[m]);
      Expr term = coeff * xc;
      out.accumulate(std::move(rest), k % 2 == 0 ? term : neg(term));
    }
  }
  return out;
}

Expr apply_form(const PForm& w, const std::vector<VectorField>& fields) {
  if (static_cast<int>(fields.size()) != w.degree())
    throw DomainError("field count does not match form degree");
  std::vector<Expr> terms;
  for (const auto& [key, coeff] : w.terms()) {
    std::size_t p = key.size();
    ExprMat m(p, std::vector<Expr>(p));
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = 0; c < p; ++c) m[r][c] = fields[c].comps[key[r]];
    Expr det = expr_det(m);
    if (!is_zero(det)) terms.push_back(coeff * det);
  }
  return add(std::move(terms));
}

PForm pullback(const PForm& w, ChartPtr source, const std::vector<Expr>& map) {
  if (static_cast<int>(map.size()) != w.chart()->dim())
    throw DomainError("pullback map must cover every target coordinate");
  std::span<const Expr> repl(map);
  PForm out(source, w.degree());
  int sd = source->dim();
  for (const auto& [key, coeff] : w.terms()) {
    PForm acc = PForm::scalar(source, substitute(coeff, repl));
    for (int i : key) {
      std::vector<Expr> dcomp(sd);
      for (int j = 0; j < sd; ++j) dcomp[j] = diff(map[i], j);
      acc = wedge(acc, PForm::one_form(source, std::move(dcomp)));
    }
    out = out + acc;
  }
  return out;
}

namespace {

PForm partial_d(const PForm& w, bool fiber_part) {
  const ChartPtr& chart = w.chart();
  if (!chart->has_split()) throw DomainError("d'/d'' need a split chart");
  PForm out(chart, w.degree() + 1);
  int n = chart->half();
  for (const auto& [key, coeff] : w.terms()) {
    for (int k = 0; k < n; ++k) {
      int j = fiber_part ? chart->fiber_index(k) : chart->base_index(k);
      Expr dc = diff(coeff, j);
      if (is_zero(dc)) continue;
      std::vector<int> idx;
      idx.push_back(j);
      idx.insert(idx.end(), key.begin(), key.end());
      out.accumulate(std::move(idx), dc);
    }
  }
  return out;
}

}  // namespace

PForm d_base(const PForm& w) { return partial_d(w, false); }
PForm d_fiber(const PForm& w) { return partial_d(w, true); }

// ---- brackets ---------------------------------------------------------------------------

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  require_same_chart(x.chart, y.chart);
  int d = x.chart->dim();
  std::vector<Expr> out(d);
  for (int i = 0; i < d; ++i) {
    std::vector<Expr> terms;
    for (int j = 0; j < d; ++j) {
      if (!is_zero(x.comps[j])) {
        Expr dy = diff(y.comps[i], j);
        if (!is_zero(dy)) terms.push_back(x.comps[j] * dy);
      }
      if (!is_zero(y.comps[j])) {
        Expr dx = diff(x.comps[i], j);
        if (!is_zero(dx)) terms.push_back(neg(y.comps[j] * dx));
      }
    }
    out[i] = add(std::move(terms));
  }
  return VectorField(x.chart, std::move(out));
}

EndField lie_derivative_end(const VectorField& x, const EndField& a) {
  require_same_chart(x.chart, a.chart);
  int d = a.chart->dim();
  ExprMat out(d, std::vector<Expr>(d));
  for (int j = 0; j < d; ++j) {
    VectorField col = lie_bracket(x, a.column(j));
    // The -A[X, e_j] term contributes +(d_j X^k) A e_k.
    for (int k = 0; k < d; ++k) {
      Expr djxk = diff(x.comps[k], j);
      if (is_zero(djxk)) continue;
      col = col + scale(djxk, a.column(k));
    }
    for (int i = 0; i < d; ++i) out[i][j] = col.comps[i];
  }
  return EndField(a.chart, std::move(out));
}

VectorField NijenhuisOperator::operator()(const VectorField& x,
                                          const VectorField& y) const {
  VectorField ax = a.apply(x), ay = a.apply(y);
  return lie_bracket(ax, ay) - a.apply(lie_bracket(ax, y)) -
         a.apply(lie_bracket(x, ay)) + a.apply(a.apply(lie_bracket(x, y)));
}

NijenhuisOperator nijenhuis(const EndField& a) { return NijenhuisOperator{a}; }

std::map<std::vector<int>, Expr> schouten_square(const Bivector& p) {
  int d = p.dim();
  std::map<std::vector<int>, Expr> out;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      for (int k = j + 1; k < d; ++k) {
        std::vector<Expr> terms;
        for (int l = 0; l < d; ++l) {
          terms.push_back(p.comp(l, i) * diff(p.comp(j, k), l) +
                          p.comp(l, j) * diff(p.comp(k, i), l) +
                          p.comp(l, k) * diff(p.comp(i, j), l));
        }
        Expr total = add(std::move(terms));
        if (!is_zero(total)) out.emplace(std::vector<int>{i, j, k}, total);
      }
    }
  }
  return out;
}

// ---- musical maps -------------------------------------------------------------------------

ExprMat form_gram(const PForm& omega) {
  if (omega.degree() != 2) throw DomainError("gram matrix expects a 2-form");
  int d = omega.chart()->dim();
  ExprMat w(d, std::vector<Expr>(d, rational(0)));
  for (const auto& [key, coeff] : omega.terms()) {
    w[key[0]][key[1]] = coeff;
    w[key[1]][key[0]] = neg(coeff);
  }
  return w;
}

Mat form_gram_at(const PForm& omega, const Point& p) {
  return eval_matrix(form_gram(omega), p);
}

VectorField sharp_omega(const PForm& omega, const PForm& alpha, const RunConfig& cfg) {
  require_same_chart(omega.chart(), alpha.chart());
  if (omega.degree() != 2 || alpha.degree() != 1)
    throw DomainError("sharp expects a 2-form and a 1-form");
  int d = omega.chart()->dim();
  ExprMat gram = form_gram(omega);

  for (const auto& p : sample_points(d, cfg, std::min(cfg.samples, 10)))
    if (numeric_rank(eval_matrix(gram, p), cfg.rank_tol) < d)
      throw DomainError("sharp: 2-form degenerate at a sample point");

  // i(X) omega = alpha reads sum_i X^i W_ij = alpha_j.
  ExprMat system(d, std::vector<Expr>(d));
  std::vector<Expr> rhs(d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) system[j][i] = gram[i][j];
    rhs[j] = alpha.coefficient({j});
  }
  auto x = solve_linear_symbolic(system, rhs);
  if (!x) throw DomainError("sharp: singular linear system");
  return VectorField(omega.chart(), std::move(*x));
}

PForm flat_metric(const MetricBlock& theta, const VectorField& x,
                  const std::vector<VectorField>& complement) {
  if (theta.frame.empty()) throw DomainError("flat: empty frame");
  const ChartPtr& chart = theta.frame[0].chart;
  int d = chart->dim();
  int k = theta.size();
  if (k + static_cast<int>(complement.size()) != d)
    throw DomainError("flat: frame plus complement must span the chart");

  std::vector<VectorField> full = theta.frame;
  full.insert(full.end(), complement.begin(), complement.end());
  ExprMat fm(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int b = 0; b < d; ++b) fm[i][b] = full[b].comps[i];
  auto coeffs = solve_linear_symbolic(fm, x.comps);
  if (!coeffs) throw DomainError("flat: frame is rank deficient");

  // Values of the 1-form on the full frame: Theta-pairings on the block,
  // zero on the complement.
  std::vector<Expr> values(d, rational(0));
  for (int j = 0; j < k; ++j) {
    std::vector<Expr> terms;
    for (int i = 0; i < k; ++i) {
      Expr c = (*coeffs)[i];
      if (!is_zero(c) && !is_zero(theta.g[i][j])) terms.push_back(c * theta.g[i][j]);
    }
    values[j] = add(std::move(terms));
  }

  // Coordinate components a_i from a(frame_b) = values_b.
  ExprMat system(d, std::vector<Expr>(d));
  for (int b = 0; b < d; ++b)
    for (int i = 0; i < d; ++i) system[b][i] = full[b].comps[i];
  auto a = solve_linear_symbolic(system, values);
  if (!a) throw DomainError("flat: frame is rank deficient");
  return PForm::one_form(chart, std::move(*a));
}

// ---- bigrading -------------------------------------------------------------------------------

std::vector<BigradeComponent> bigrade(const PForm& w, const Splitting& s,
                                      const RunConfig& cfg) {
  const ChartPtr& chart = w.chart();
  int d = chart->dim();
  std::vector<VectorField> frame = s.combined();
  if (static_cast<int>(frame.size()) != d)
    throw DomainError("bigrade: splitting does not span the chart");

  ExprMat fm(d, std::vector<Expr>(d));
  for (int i = 0; i < d; ++i)
    for (int b = 0; b < d; ++b) fm[i][b] = frame[b].comps[i];

  for (const auto& p : sample_points(d, cfg, std::min(cfg.samples, 10)))
    if (numeric_rank(eval_matrix(fm, p), cfg.rank_tol) < d)
      throw DomainError("bigrade: rank-deficient splitting at a sample point");

  int p = w.degree();
  if (p == 0) return {{0, 0, w}};

  auto inv = invert_symbolic(fm);
  if (!inv) throw DomainError("bigrade: splitting frame not symbolically invertible");
  std::vector<PForm> dual;
  for (int a = 0; a < d; ++a) {
    std::vector<Expr> row(d);
    for (int i = 0; i < d; ++i) row[i] = (*inv)[a][i];
    dual.push_back(PForm::one_form(chart, std::move(row)));
  }

  int nprime = static_cast<int>(s.vprime.size());
  std::map<std::pair<int, int>, PForm> buckets;

  std::vector<int> key(p);
  std::function<void(int, int)> walk = [&](int pos, int start) {
    if (pos == p) {
      std::vector<VectorField> args;
      for (int i : key) args.push_back(frame[i]);
      Expr c = apply_form(w, args);
      if (is_zero(c)) return;
      int pcnt = 0;
      for (int i : key)
        if (i < nprime) ++pcnt;
      PForm comp = PForm::scalar(chart, c);
      for (int i : key) comp = wedge(comp, dual[i]);
      auto [it, fresh] = buckets.emplace(std::make_pair(pcnt, p - pcnt), PForm(chart, p));
      it->second = fresh ? comp : it->second + comp;
      return;
    }
    for (int i = start; i < d; ++i) {
      key[pos] = i;
      walk(pos + 1, i + 1);
    }
  };
  walk(0, 0);

  std::vector<BigradeComponent> out;
  for (auto& [pq, form] : buckets) out.push_back({pq.first, pq.second, std::move(form)});
  return out;
}

// ---- leafwise potential -----------------------------------------------------------------------

Expr leafwise_potential(const PForm& xi, const RunConfig& cfg) {
  const ChartPtr& chart = xi.chart();
  if (!chart->has_split()) throw DomainError("leafwise potential needs a split chart");
  if (xi.degree() != 1) throw DomainError("leafwise potential expects a (0,1)-form");
  int n = chart->half();
  for (const auto& [key, coeff] : xi.terms())
    if (!chart->is_fiber(key[0]))
      throw DomainError("leafwise potential expects fiber components only");

  PForm closed = d_fiber(xi);
  auto pts = sample_points(chart->dim(), cfg);
  for (const auto& [key, coeff] : closed.terms()) {
    ResidualScan scan = scan_expr(coeff, pts);
    if (scan.max() > cfg.residual_tol)
      throw DomainError("leafwise potential: input is not d''-closed (residual " +
                        std::to_string(scan.max()) + ")");
  }

  // Extended chart with the radial homotopy parameter appended.
  std::vector<std::string> names = chart->names();
  names.push_back("t__radial");
  auto ext = std::make_shared<const CoordSystem>(CoordSystem(names));
  int tau = chart->dim();

  std::vector<Expr> stretch(chart->dim());
  for (int i = 0; i < chart->dim(); ++i)
    stretch[i] = chart->is_fiber(i) ? coord(*ext, tau) * coord(*ext, i) : coord(*ext, i);

  std::vector<Expr> parts;
  for (int k = 0; k < n; ++k) {
    int ui = chart->fiber_index(k);
    Expr c = xi.coefficient({ui});
    if (is_zero(c)) continue;
    parts.push_back(substitute(c, stretch) * coord(*ext, ui));
  }
  Expr integrand = add(std::move(parts));

  std::vector<Expr> at_zero(ext->dim());
  for (int i = 0; i < chart->dim(); ++i) at_zero[i] = coord(*chart, i);
  at_zero[tau] = rational(0);

  // Taylor expansion in the homotopy parameter; exact for inputs polynomial in
  // the fiber coordinates.
  constexpr int kMaxDegree = 64;
  Expr g = integrand;
  std::vector<Expr> phi_terms;
  Rational factorial{1, 1};
  bool polynomial = false;
  for (int k = 0; k <= kMaxDegree; ++k) {
    if (k > 0) {
      auto f = factorial.mul(Rational::of(k));
      if (!f) break;
      factorial = *f;
    }
    if (nf_is_zero(g)) {
      polynomial = true;
      break;
    }
    Expr coeff_k = substitute(g, at_zero);
    if (!is_zero(coeff_k)) {
      // t^k/k! integrated over [0,1] contributes 1/(k!(k+1)).
      auto denom = factorial.mul(Rational::of(k + 1));
      if (!denom) break;
      phi_terms.push_back(rational(Rational::of(denom->den, denom->num)) * coeff_k);
    }
    g = diff(g, tau);
  }
  if (polynomial) return add(std::move(phi_terms));

  // Smooth fallback: fixed-order Gauss-Legendre nodes in the parameter.
  std::vector<Expr> quad_terms;
  for (auto [x, wgt] : gauss_legendre_01(24)) {
    std::vector<Expr> at_node(ext->dim());
    for (int i = 0; i < chart->dim(); ++i) at_node[i] = coord(*chart, i);
    at_node[tau] = real_const(x);
    quad_terms.push_back(real_const(wgt) * substitute(integrand, at_node));
  }
  return add(std::move(quad_terms));
}

std::string form_to_json(const PForm& w) {
  nlohmann::ordered_json j;
  j["degree"] = w.degree();
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& [key, coeff] : w.terms()) {
    nlohmann::ordered_json term;
    term["indices"] = key;
    term["expr"] = to_string(coeff);
    j["terms"].push_back(term);
  }
  return j.dump();
}

}  // namespace llsp
