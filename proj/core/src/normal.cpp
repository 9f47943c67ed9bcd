#include "llsp/normal.hpp"

#include <algorithm>
#include <cmath>

namespace llsp {

int AtomTable::intern(const Expr& atom, const std::string& key) {
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(atoms_.size());
  atoms_.push_back(atom);
  ids_.emplace(key, id);
  return id;
}

NFCoef& NFCoef::operator+=(const NFCoef& o) {
  if (exact && o.exact) {
    if (auto s = rat.add(o.rat)) {
      rat = *s;
      return *this;
    }
  }
  double v = value() + o.value();
  exact = false;
  real = v;
  return *this;
}

NFCoef NFCoef::operator*(const NFCoef& o) const {
  if (exact && o.exact) {
    if (auto p = rat.mul(o.rat)) return NFCoef{*p, 0.0, true};
  }
  return NFCoef{{0, 1}, value() * o.value(), false};
}

NFCoef NFCoef::negated() const {
  if (exact) return NFCoef{rat.negated(), 0.0, true};
  return NFCoef{{0, 1}, -real, false};
}

bool NormalForm::all_exact() const {
  for (const auto& [m, c] : terms)
    if (!c.exact) return false;
  return true;
}

namespace {

void nf_add_term(NormalForm& nf, const Monomial& m, const NFCoef& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = nf.terms.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) nf.terms.erase(it);
  }
}

NormalForm nf_scale(const NormalForm& a, const NFCoef& c) {
  NormalForm out;
  for (const auto& [m, coef] : a.terms) nf_add_term(out, m, coef * c);
  return out;
}

NormalForm nf_add(const NormalForm& a, const NormalForm& b) {
  NormalForm out = a;
  for (const auto& [m, c] : b.terms) nf_add_term(out, m, c);
  return out;
}

NormalForm nf_mul(const NormalForm& a, const NormalForm& b) {
  NormalForm out;
  for (const auto& [ma, ca] : a.terms) {
    for (const auto& [mb, cb] : b.terms) {
      Monomial m = ma;
      for (const auto& [id, k] : mb) {
        int v = (m[id] += k);
        if (v == 0) m.erase(id);
      }
      nf_add_term(out, m, ca * cb);
    }
  }
  return out;
}

NormalForm nf_one() {
  NormalForm out;
  out.terms.emplace(Monomial{}, NFCoef{Rational{1, 1}, 0.0, true});
  return out;
}

NormalForm nf_pow(const NormalForm& base, int k) {
  NormalForm acc = nf_one();
  NormalForm sq = base;
  int e = k;
  while (e > 0) {
    if (e & 1) acc = nf_mul(acc, sq);
    e >>= 1;
    if (e) sq = nf_mul(sq, sq);
  }
  return acc;
}

std::string nf_key(const NormalForm& nf);

NormalForm nf_atom(const Expr& e, const std::string& key, AtomTable& table) {
  int id = table.intern(e, key);
  NormalForm out;
  Monomial m;
  m[id] = 1;
  out.terms.emplace(std::move(m), NFCoef{Rational{1, 1}, 0.0, true});
  return out;
}

struct BuildMemo {
  std::unordered_map<const ExprNode*, NormalForm> cache;
};

NormalForm build_memo(const Expr& e, AtomTable& table, BuildMemo& memo);

NormalForm build(const Expr& e, AtomTable& table) {
  BuildMemo memo;
  return build_memo(e, table, memo);
}

NormalForm build_impl(const Expr& e, AtomTable& table, BuildMemo& memo) {
  switch (e.kind()) {
    case ExprKind::RationalConst: {
      NormalForm out;
      nf_add_term(out, Monomial{}, NFCoef{e.node().rat, 0.0, true});
      return out;
    }
    case ExprKind::RealConst: {
      NormalForm out;
      nf_add_term(out, Monomial{}, NFCoef{{0, 1}, e.node().real, false});
      return out;
    }
    case ExprKind::Coord:
      return nf_atom(e, "#" + std::to_string(e.node().coord), table);
    case ExprKind::Sum: {
      NormalForm out;
      for (const Expr& k : e.node().kids) out = nf_add(out, build_memo(k, table, memo));
      return out;
    }
    case ExprKind::Product: {
      NormalForm out = nf_one();
      for (const Expr& k : e.node().kids) out = nf_mul(out, build_memo(k, table, memo));
      return out;
    }
    case ExprKind::Neg:
      return nf_scale(build_memo(e.node().kids[0], table, memo),
                      NFCoef{Rational{-1, 1}, 0.0, true});
    case ExprKind::IntPower: {
      int k = e.node().exponent;
      NormalForm base = build_memo(e.node().kids[0], table, memo);
      if (k >= 0) return nf_pow(base, k);
      // Negative power: invertible only for a single monomial, otherwise the
      // whole power node becomes an atom.
      if (base.terms.size() == 1) {
        const auto& [m, c] = *base.terms.begin();
        bool unit = c.exact && (c.rat.is_one() || (c.rat.num == -1 && c.rat.den == 1));
        if (unit || c.exact) {
          NFCoef inv;
          if (c.exact) {
            auto p = c.rat.pow(-1);
            if (!p) return nf_atom(e, "!" + to_string(e), table);
            inv = NFCoef{*p, 0.0, true};
          }
          NormalForm mono;
          Monomial mm;
          for (const auto& [id, kk] : m) mm[id] = -kk;
          nf_add_term(mono, mm, inv);
          return nf_pow(mono, -k);
        }
      }
      return nf_atom(e, "!" + to_string(e), table);
    }
    case ExprKind::Sin:
      return nf_atom(e, "sin[" + nf_key(build_memo(e.node().kids[0], table, memo)) + "]",
                     table);
    case ExprKind::Cos:
      return nf_atom(e, "cos[" + nf_key(build_memo(e.node().kids[0], table, memo)) + "]",
                     table);
    case ExprKind::Exp:
      return nf_atom(e, "exp[" + nf_key(build_memo(e.node().kids[0], table, memo)) + "]",
                     table);
  }
  throw DomainError("unreachable expression kind");
}

NormalForm build_memo(const Expr& e, AtomTable& table, BuildMemo& memo) {
  const ExprNode* node = &e.node();
  switch (node->kind) {
    case ExprKind::RationalConst:
    case ExprKind::RealConst:
    case ExprKind::Coord:
      return build_impl(e, table, memo);
    default:
      break;
  }
  auto it = memo.cache.find(node);
  if (it != memo.cache.end()) return it->second;
  NormalForm out = build_impl(e, table, memo);
  memo.cache.emplace(node, out);
  return out;
}

std::string nf_key(const NormalForm& nf) {
  std::string out;
  for (const auto& [m, c] : nf.terms) {
    out += c.exact ? std::to_string(c.rat.num) + "/" + std::to_string(c.rat.den)
                   : std::to_string(c.real);
    for (const auto& [id, k] : m)
      out += "a" + std::to_string(id) + "^" + std::to_string(k);
    out += "+";
  }
  return out;
}

}  // namespace

NormalForm normal_form(const Expr& e, AtomTable& table) { return build(e, table); }

bool nf_is_zero(const Expr& e) {
  AtomTable table;
  NormalForm nf = build(e, table);
  return nf.empty();
}

bool nf_equal(const Expr& a, const Expr& b) { return nf_is_zero(a - b); }

Expr nf_compact(const Expr& e) {
  AtomTable table;
  NormalForm nf = build(e, table);
  std::vector<Expr> terms;
  for (const auto& [m, c] : nf.terms) {
    std::vector<Expr> factors;
    factors.push_back(c.exact ? rational(c.rat) : real_const(c.real));
    for (const auto& [id, k] : m) factors.push_back(pow_i(table.atom(id), k));
    terms.push_back(mul(std::move(factors)));
  }
  return add(std::move(terms));
}

std::optional<int> poly_degree_in(const Expr& e, int c) {
  AtomTable table;
  NormalForm nf = build(e, table);
  std::string key = "#" + std::to_string(c);
  int coord_atom = -1;
  for (int id = 0; id < table.size(); ++id) {
    const Expr& a = table.atom(id);
    if (a.kind() == ExprKind::Coord && a.node().coord == c) {
      coord_atom = id;
    } else if (depends_on(a, c)) {
      return std::nullopt;  // coordinate hidden inside an atom
    }
  }
  int deg = 0;
  for (const auto& [m, coef] : nf.terms) {
    auto it = m.find(coord_atom);
    if (it == m.end()) continue;
    if (it->second < 0) return std::nullopt;
    deg = std::max(deg, it->second);
  }
  return deg;
}

}  // namespace llsp
