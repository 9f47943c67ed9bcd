#include "llsp/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace llsp {

// ---- Rational --------------------------------------------------------------

namespace {
constexpr __int128 kRatLimit = static_cast<__int128>(1) << 62;

bool fits(__int128 v) { return v < kRatLimit && v > -kRatLimit; }
}  // namespace

Rational Rational::of(long long n, long long d) {
  if (d == 0) throw DomainError("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  long long g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  return Rational{n, d};
}

std::optional<Rational> Rational::checked(__int128 n, __int128 d) {
  if (d == 0) return std::nullopt;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 a = n < 0 ? -n : n;
  __int128 b = d;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    n /= a;
    d /= a;
  }
  if (!fits(n) || !fits(d)) return std::nullopt;
  return Rational{static_cast<long long>(n), static_cast<long long>(d)};
}

std::optional<Rational> Rational::add(const Rational& o) const {
  return checked(static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den,
                 static_cast<__int128>(den) * o.den);
}

std::optional<Rational> Rational::mul(const Rational& o) const {
  return checked(static_cast<__int128>(num) * o.num, static_cast<__int128>(den) * o.den);
}

std::optional<Rational> Rational::pow(int k) const {
  if (k == 0) return Rational{1, 1};
  Rational base = *this;
  if (k < 0) {
    if (num == 0) return std::nullopt;
    base = Rational::of(den, num);
    k = -k;
  }
  Rational acc{1, 1};
  for (int i = 0; i < k; ++i) {
    auto next = acc.mul(base);
    if (!next) return std::nullopt;
    acc = *next;
  }
  return acc;
}

// ---- CoordSystem -----------------------------------------------------------

CoordSystem::CoordSystem(std::vector<std::string> names) : names_(std::move(names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DomainError("empty coordinate name");
    if (!seen.insert(n).second) throw DomainError("duplicate coordinate name: " + n);
  }
}

CoordSystem CoordSystem::with_split(std::vector<std::string> base,
                                    std::vector<std::string> fiber) {
  if (base.size() != fiber.size())
    throw DomainError("split chart needs equally sized base and fiber");
  std::vector<std::string> all = base;
  all.insert(all.end(), fiber.begin(), fiber.end());
  CoordSystem cs(std::move(all));
  cs.has_split_ = true;
  return cs;
}

CoordSystem CoordSystem::tangent_chart(int n, const std::string& base_prefix,
                                       const std::string& fiber_prefix) {
  std::vector<std::string> base, fiber;
  for (int i = 1; i <= n; ++i) {
    base.push_back(base_prefix + std::to_string(i));
    fiber.push_back(fiber_prefix + std::to_string(i));
  }
  return with_split(std::move(base), std::move(fiber));
}

std::optional<int> CoordSystem::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

int CoordSystem::half() const {
  if (!has_split_) throw DomainError("chart has no (base, fiber) split");
  return dim() / 2;
}

int CoordSystem::base_index(int k) const {
  if (k < 0 || k >= half()) throw DomainError("base index out of range");
  return k;
}

int CoordSystem::fiber_index(int k) const {
  if (k < 0 || k >= half()) throw DomainError("fiber index out of range");
  return half() + k;
}

bool CoordSystem::is_fiber(int i) const { return has_split_ && i >= half(); }

// ---- node construction -----------------------------------------------------

Expr Expr::make(ExprNode n) {
  Expr e;
  e.node_ = std::make_shared<const ExprNode>(std::move(n));
  return e;
}

Expr rational(const Rational& r) {
  ExprNode n;
  n.kind = ExprKind::RationalConst;
  n.rat = r;
  return Expr::make(std::move(n));
}

Expr rational(long long num, long long den) { return rational(Rational::of(num, den)); }
Expr integer(long long v) { return rational(Rational::of(v, 1)); }

Expr real_const(double v) {
  ExprNode n;
  n.kind = ExprKind::RealConst;
  n.real = v;
  return Expr::make(std::move(n));
}

Expr named_real(const std::string& name, double v) {
  ExprNode n;
  n.kind = ExprKind::RealConst;
  n.real = v;
  n.real_name = name;
  return Expr::make(std::move(n));
}

Expr pi_const() { return named_real("pi", 3.14159265358979323846264338327950288); }

Expr coord(const CoordSystem& cs, int index) {
  if (index < 0 || index >= cs.dim()) throw DomainError("coordinate index out of range");
  ExprNode n;
  n.kind = ExprKind::Coord;
  n.coord = index;
  n.coord_name = cs.name(index);
  return Expr::make(std::move(n));
}

bool is_zero(const Expr& e) {
  return e.kind() == ExprKind::RationalConst && e.node().rat.is_zero();
}

bool is_one(const Expr& e) {
  return e.kind() == ExprKind::RationalConst && e.node().rat.is_one();
}

bool is_constant(const Expr& e) {
  return e.kind() == ExprKind::RationalConst || e.kind() == ExprKind::RealConst;
}

std::optional<double> constant_value(const Expr& e) {
  if (e.kind() == ExprKind::RationalConst) return e.node().rat.value();
  if (e.kind() == ExprKind::RealConst) return e.node().real;
  return std::nullopt;
}

std::optional<Rational> rational_value(const Expr& e) {
  if (e.kind() == ExprKind::RationalConst) return e.node().rat;
  return std::nullopt;
}

namespace {

// Accumulates a constant part exactly while possible, demoting to double
// arithmetic once a real constant or a rational overflow shows up.
struct ConstAcc {
  Rational rat{0, 1};
  double real = 0.0;
  bool exact = true;

  void init_mul() { rat = Rational{1, 1}; }

  void add(const Expr& c) {
    if (c.kind() == ExprKind::RationalConst && exact) {
      if (auto s = rat.add(c.node().rat)) {
        rat = *s;
        return;
      }
    }
    demote();
    real += *constant_value(c);
  }

  void mul(const Expr& c) {
    if (c.kind() == ExprKind::RationalConst && exact) {
      if (auto p = rat.mul(c.node().rat)) {
        rat = *p;
        return;
      }
    }
    demote();
    real *= *constant_value(c);
  }

  void demote() {
    if (exact) {
      real = rat.value();
      exact = false;
    }
  }

  Expr value_add() const { return exact ? rational(rat) : real_const(real); }
  bool is_zero() const { return exact ? rat.is_zero() : real == 0.0; }
  bool is_one() const { return exact ? rat.is_one() : real == 1.0; }
  bool is_minus_one() const {
    return exact ? (rat.num == -1 && rat.den == 1) : real == -1.0;
  }
};

}  // namespace

Expr add(std::vector<Expr> terms) {
  ConstAcc acc;
  std::vector<Expr> rest;
  // Flatten one level of nested sums and fold constants.
  std::vector<Expr> queue = std::move(terms);
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    Expr t = queue[qi];
    if (t.kind() == ExprKind::Sum) {
      for (const Expr& k : t.node().kids) queue.push_back(k);
      continue;
    }
    if (is_constant(t)) {
      acc.add(t);
      continue;
    }
    if (t.kind() == ExprKind::Neg && is_constant(t.node().kids[0])) {
      acc.add(neg(t.node().kids[0]));
      continue;
    }
    rest.push_back(t);
  }
  if (!acc.is_zero()) rest.push_back(acc.value_add());
  if (rest.empty()) return rational(0);
  if (rest.size() == 1) return rest[0];
  ExprNode n;
  n.kind = ExprKind::Sum;
  n.kids = std::move(rest);
  return Expr::make(std::move(n));
}

Expr mul(std::vector<Expr> factors) {
  ConstAcc acc;
  acc.init_mul();
  bool negate = false;
  std::vector<Expr> rest;
  std::vector<Expr> queue = std::move(factors);
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    Expr f = queue[qi];
    if (f.kind() == ExprKind::Product) {
      for (const Expr& k : f.node().kids) queue.push_back(k);
      continue;
    }
    if (f.kind() == ExprKind::Neg) {
      negate = !negate;
      queue.push_back(f.node().kids[0]);
      continue;
    }
    if (is_constant(f)) {
      acc.mul(f);
      continue;
    }
    rest.push_back(f);
  }
  if (acc.is_zero()) return rational(0);
  Expr result;
  if (rest.empty()) {
    result = acc.value_add();
  } else {
    std::vector<Expr> kids;
    if (!acc.is_one()) {
      if (acc.is_minus_one()) {
        negate = !negate;
      } else {
        kids.push_back(acc.value_add());
      }
    }
    for (auto& r : rest) kids.push_back(std::move(r));
    if (kids.size() == 1) {
      result = kids[0];
    } else {
      ExprNode n;
      n.kind = ExprKind::Product;
      n.kids = std::move(kids);
      result = Expr::make(std::move(n));
    }
  }
  return negate ? neg(result) : result;
}

Expr neg(const Expr& e) {
  if (e.kind() == ExprKind::RationalConst) return rational(e.node().rat.negated());
  if (e.kind() == ExprKind::RealConst && e.node().real_name.empty())
    return real_const(-e.node().real);
  if (e.kind() == ExprKind::Neg) return e.node().kids[0];
  ExprNode n;
  n.kind = ExprKind::Neg;
  n.kids = {e};
  return Expr::make(std::move(n));
}

Expr pow_i(const Expr& base, int exponent) {
  if (exponent == 0) return rational(1);
  if (exponent == 1) return base;
  if (base.kind() == ExprKind::RationalConst) {
    if (auto p = base.node().rat.pow(exponent)) return rational(*p);
    // fall through to a symbolic node on overflow or 0^-k
  }
  if (base.kind() == ExprKind::RealConst && base.node().real_name.empty())
    return real_const(std::pow(base.node().real, exponent));
  if (base.kind() == ExprKind::IntPower) {
    long long combined = static_cast<long long>(base.node().exponent) * exponent;
    if (combined >= -1000 && combined <= 1000)
      return pow_i(base.node().kids[0], static_cast<int>(combined));
  }
  ExprNode n;
  n.kind = ExprKind::IntPower;
  n.exponent = exponent;
  n.kids = {base};
  return Expr::make(std::move(n));
}

Expr sin_e(const Expr& e) {
  if (is_zero(e)) return rational(0);
  ExprNode n;
  n.kind = ExprKind::Sin;
  n.kids = {e};
  return Expr::make(std::move(n));
}

Expr cos_e(const Expr& e) {
  if (is_zero(e)) return rational(1);
  ExprNode n;
  n.kind = ExprKind::Cos;
  n.kids = {e};
  return Expr::make(std::move(n));
}

Expr exp_e(const Expr& e) {
  if (is_zero(e)) return rational(1);
  ExprNode n;
  n.kind = ExprKind::Exp;
  n.kids = {e};
  return Expr::make(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, neg(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator-(const Expr& a) { return neg(a); }

// ---- queries ----------------------------------------------------------------

bool depends_on(const Expr& e, int c) {
  switch (e.kind()) {
    case ExprKind::RationalConst:
    case ExprKind::RealConst:
      return false;
    case ExprKind::Coord:
      return e.node().coord == c;
    default:
      for (const Expr& k : e.node().kids)
        if (depends_on(k, c)) return true;
      return false;
  }
}

namespace {

// Shared subtrees are common after matrix algebra; memoizing on node identity
// keeps evaluation and differentiation linear in the DAG size.
using EvalMemo = std::unordered_map<const ExprNode*, double>;

double eval_memo(const Expr& e, std::span<const double> p, EvalMemo& memo) {
  const ExprNode* node = &e.node();
  switch (node->kind) {
    case ExprKind::RationalConst:
      return node->rat.value();
    case ExprKind::RealConst:
      return node->real;
    case ExprKind::Coord: {
      int c = node->coord;
      if (c < 0 || static_cast<std::size_t>(c) >= p.size())
        throw DomainError("point does not cover coordinate " + node->coord_name);
      return p[c];
    }
    default:
      break;
  }
  auto it = memo.find(node);
  if (it != memo.end()) return it->second;
  double out = 0.0;
  switch (node->kind) {
    case ExprKind::Sum: {
      double s = 0.0;
      for (const Expr& k : node->kids) s += eval_memo(k, p, memo);
      out = s;
      break;
    }
    case ExprKind::Product: {
      double s = 1.0;
      for (const Expr& k : node->kids) s *= eval_memo(k, p, memo);
      out = s;
      break;
    }
    case ExprKind::IntPower: {
      double b = eval_memo(node->kids[0], p, memo);
      int k = node->exponent;
      bool inv = k < 0;
      if (inv) k = -k;
      double acc = 1.0;
      double f = b;
      while (k > 0) {
        if (k & 1) acc *= f;
        f *= f;
        k >>= 1;
      }
      out = inv ? 1.0 / acc : acc;
      break;
    }
    case ExprKind::Sin:
      out = std::sin(eval_memo(node->kids[0], p, memo));
      break;
    case ExprKind::Cos:
      out = std::cos(eval_memo(node->kids[0], p, memo));
      break;
    case ExprKind::Exp:
      out = std::exp(eval_memo(node->kids[0], p, memo));
      break;
    case ExprKind::Neg:
      out = -eval_memo(node->kids[0], p, memo);
      break;
    default:
      throw DomainError("unreachable expression kind");
  }
  memo.emplace(node, out);
  return out;
}

}  // namespace

double eval(const Expr& e, std::span<const double> p) {
  EvalMemo memo;
  return eval_memo(e, p, memo);
}

// ---- differentiation ---------------------------------------------------------

namespace {

struct DiffMemo {
  std::unordered_map<const ExprNode*, Expr> derivative;
  std::unordered_map<const ExprNode*, bool> depends;
};

bool depends_memo(const Expr& e, int c, DiffMemo& memo) {
  const ExprNode* node = &e.node();
  switch (node->kind) {
    case ExprKind::RationalConst:
    case ExprKind::RealConst:
      return false;
    case ExprKind::Coord:
      return node->coord == c;
    default:
      break;
  }
  auto it = memo.depends.find(node);
  if (it != memo.depends.end()) return it->second;
  bool out = false;
  for (const Expr& k : node->kids)
    if (depends_memo(k, c, memo)) {
      out = true;
      break;
    }
  memo.depends.emplace(node, out);
  return out;
}

Expr diff_memo(const Expr& e, int c, DiffMemo& memo) {
  if (!depends_memo(e, c, memo)) return rational(0);
  const ExprNode* node = &e.node();
  auto it = memo.derivative.find(node);
  if (it != memo.derivative.end()) return it->second;
  Expr out;
  switch (node->kind) {
    case ExprKind::Coord:
      out = rational(1);
      break;
    case ExprKind::Sum: {
      std::vector<Expr> parts;
      for (const Expr& k : node->kids) parts.push_back(diff_memo(k, c, memo));
      out = add(std::move(parts));
      break;
    }
    case ExprKind::Product: {
      const auto& kids = node->kids;
      std::vector<Expr> parts;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (!depends_memo(kids[i], c, memo)) continue;
        std::vector<Expr> term = kids;
        term[i] = diff_memo(kids[i], c, memo);
        parts.push_back(mul(std::move(term)));
      }
      out = add(std::move(parts));
      break;
    }
    case ExprKind::IntPower: {
      const Expr& b = node->kids[0];
      int k = node->exponent;
      out = mul({integer(k), pow_i(b, k - 1), diff_memo(b, c, memo)});
      break;
    }
    case ExprKind::Sin:
      out = mul({cos_e(node->kids[0]), diff_memo(node->kids[0], c, memo)});
      break;
    case ExprKind::Cos:
      out = neg(mul({sin_e(node->kids[0]), diff_memo(node->kids[0], c, memo)}));
      break;
    case ExprKind::Exp:
      out = mul({e, diff_memo(node->kids[0], c, memo)});
      break;
    case ExprKind::Neg:
      out = neg(diff_memo(node->kids[0], c, memo));
      break;
    default:
      out = rational(0);
      break;
  }
  memo.derivative.emplace(node, out);
  return out;
}

}  // namespace

Expr diff(const Expr& e, int c) {
  DiffMemo memo;
  return diff_memo(e, c, memo);
}

Expr diff(const Expr& e, const CoordSystem& cs, std::string_view name) {
  auto idx = cs.index_of(name);
  if (!idx) throw DomainError("unknown coordinate: " + std::string(name));
  return diff(e, *idx);
}

// ---- substitution -------------------------------------------------------------

namespace {

using SubstMemo = std::unordered_map<const ExprNode*, Expr>;

Expr substitute_memo(const Expr& e, std::span<const Expr> repl, SubstMemo& memo) {
  const ExprNode* node = &e.node();
  switch (node->kind) {
    case ExprKind::RationalConst:
    case ExprKind::RealConst:
      return e;
    case ExprKind::Coord: {
      int c = node->coord;
      if (c < 0 || static_cast<std::size_t>(c) >= repl.size())
        throw DomainError("substitution does not cover coordinate " + node->coord_name);
      return repl[c];
    }
    default:
      break;
  }
  auto it = memo.find(node);
  if (it != memo.end()) return it->second;
  Expr out;
  switch (node->kind) {
    case ExprKind::Sum: {
      std::vector<Expr> parts;
      for (const Expr& k : node->kids) parts.push_back(substitute_memo(k, repl, memo));
      out = add(std::move(parts));
      break;
    }
    case ExprKind::Product: {
      std::vector<Expr> parts;
      for (const Expr& k : node->kids) parts.push_back(substitute_memo(k, repl, memo));
      out = mul(std::move(parts));
      break;
    }
    case ExprKind::IntPower:
      out = pow_i(substitute_memo(node->kids[0], repl, memo), node->exponent);
      break;
    case ExprKind::Sin:
      out = sin_e(substitute_memo(node->kids[0], repl, memo));
      break;
    case ExprKind::Cos:
      out = cos_e(substitute_memo(node->kids[0], repl, memo));
      break;
    case ExprKind::Exp:
      out = exp_e(substitute_memo(node->kids[0], repl, memo));
      break;
    case ExprKind::Neg:
      out = neg(substitute_memo(node->kids[0], repl, memo));
      break;
    default:
      throw DomainError("unreachable expression kind");
  }
  memo.emplace(node, out);
  return out;
}

}  // namespace

Expr substitute(const Expr& e, std::span<const Expr> repl) {
  SubstMemo memo;
  return substitute_memo(e, repl, memo);
}

// ---- printing ------------------------------------------------------------------

namespace {

enum Prec { kAdd = 0, kMul = 1, kUnary = 2, kPow = 3, kAtom = 4 };

void print_expr(const Expr& e, int parent, std::string& out);

void print_wrapped(const Expr& e, int prec, int parent, std::string& out) {
  bool parens = prec < parent;
  if (parens) out += '(';
  print_expr(e, parens ? kAdd : parent, out);
  if (parens) out += ')';
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void print_expr(const Expr& e, int parent, std::string& out) {
  switch (e.kind()) {
    case ExprKind::RationalConst: {
      const Rational& r = e.node().rat;
      std::string s = std::to_string(r.num);
      if (!r.is_integer()) s += "/" + std::to_string(r.den);
      bool parens = (r.num < 0 && parent > kAdd) || (!r.is_integer() && parent > kMul);
      if (parens)
        out += "(" + s + ")";
      else
        out += s;
      break;
    }
    case ExprKind::RealConst: {
      if (!e.node().real_name.empty()) {
        out += e.node().real_name;
        break;
      }
      std::string s = format_real(e.node().real);
      bool parens = (e.node().real < 0 && parent > kAdd) || s.find('e') != std::string::npos;
      if (parens && parent > kMul)
        out += "(" + s + ")";
      else
        out += s;
      break;
    }
    case ExprKind::Coord:
      out += e.node().coord_name;
      break;
    case ExprKind::Sum: {
      bool parens = parent > kAdd;
      if (parens) out += '(';
      bool first = true;
      for (const Expr& k : e.node().kids) {
        if (k.kind() == ExprKind::Neg) {
          out += first ? "-" : " - ";
          print_wrapped(k.node().kids[0], kUnary, kUnary, out);
        } else {
          if (!first) out += " + ";
          print_wrapped(k, kAdd + 1, kAdd + 1, out);
        }
        first = false;
      }
      if (parens) out += ')';
      break;
    }
    case ExprKind::Product: {
      bool parens = parent > kMul;
      if (parens) out += '(';
      bool first = true;
      for (const Expr& k : e.node().kids) {
        if (!first) out += "*";
        print_wrapped(k, kMul + 1, kMul + 1, out);
        first = false;
      }
      if (parens) out += ')';
      break;
    }
    case ExprKind::IntPower: {
      bool parens = parent > kPow;
      if (parens) out += '(';
      print_wrapped(e.node().kids[0], kAtom, kAtom, out);
      out += "^" + std::to_string(e.node().exponent);
      if (parens) out += ')';
      break;
    }
    case ExprKind::Sin:
      out += "sin(";
      print_expr(e.node().kids[0], kAdd, out);
      out += ')';
      break;
    case ExprKind::Cos:
      out += "cos(";
      print_expr(e.node().kids[0], kAdd, out);
      out += ')';
      break;
    case ExprKind::Exp:
      out += "exp(";
      print_expr(e.node().kids[0], kAdd, out);
      out += ')';
      break;
    case ExprKind::Neg: {
      bool parens = parent > kUnary;
      if (parens) out += '(';
      out += '-';
      print_wrapped(e.node().kids[0], kUnary, kUnary + 1, out);
      if (parens) out += ')';
      break;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print_expr(e, kAdd, out);
  return out;
}

// ---- parser ----------------------------------------------------------------------

namespace {

struct Lexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool accept(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
};

struct Parser {
  Lexer lex;
  const CoordSystem& coords;

  Expr parse_sum() {
    Expr acc = parse_term();
    while (true) {
      if (lex.accept('+')) {
        acc = acc + parse_term();
      } else if (lex.accept('-')) {
        acc = acc - parse_term();
      } else {
        return acc;
      }
    }
  }

  Expr parse_term() {
    Expr acc = parse_unary();
    while (true) {
      if (lex.accept('*')) {
        acc = acc * parse_unary();
      } else if (lex.accept('/')) {
        acc = divide(acc, parse_unary());
      } else {
        return acc;
      }
    }
  }

  static Expr divide(const Expr& a, const Expr& b) {
    if (auto r = rational_value(b)) {
      if (r->is_zero()) return mul({a, pow_i(b, -1)});
      return mul({a, rational(Rational::of(r->den, r->num))});
    }
    if (b.kind() == ExprKind::RealConst && b.node().real_name.empty())
      return mul({a, real_const(1.0 / b.node().real)});
    return mul({a, pow_i(b, -1)});
  }

  Expr parse_unary() {
    if (lex.accept('-')) return neg(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (lex.accept('^')) {
      bool negative = lex.accept('-');
      lex.skip_ws();
      std::size_t at = lex.pos;
      if (lex.eof() || !std::isdigit(static_cast<unsigned char>(lex.peek())))
        throw ParseError("expected integer exponent", at);
      long long v = 0;
      while (lex.pos < lex.text.size() &&
             std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
        v = v * 10 + (lex.text[lex.pos] - '0');
        if (v > 1000000) throw ParseError("exponent too large", at);
        ++lex.pos;
      }
      return pow_i(base, static_cast<int>(negative ? -v : v));
    }
    return base;
  }

  Expr parse_primary() {
    lex.skip_ws();
    std::size_t at = lex.pos;
    if (lex.eof()) throw ParseError("expected expression", at);
    char c = lex.text[lex.pos];
    if (c == '(') {
      ++lex.pos;
      Expr inner = parse_sum();
      if (!lex.accept(')')) throw ParseError("expected ')'", lex.pos);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", at);
  }

  Expr parse_number() {
    std::size_t at = lex.pos;
    __int128 mantissa = 0;
    long long frac_digits = 0;
    bool overflow = false;
    bool seen_digit = false;
    while (lex.pos < lex.text.size() &&
           std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
      seen_digit = true;
      mantissa = mantissa * 10 + (lex.text[lex.pos] - '0');
      if (mantissa > (static_cast<__int128>(1) << 100)) overflow = true;
      ++lex.pos;
    }
    if (lex.pos < lex.text.size() && lex.text[lex.pos] == '.') {
      ++lex.pos;
      while (lex.pos < lex.text.size() &&
             std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
        seen_digit = true;
        mantissa = mantissa * 10 + (lex.text[lex.pos] - '0');
        ++frac_digits;
        if (mantissa > (static_cast<__int128>(1) << 100)) overflow = true;
        ++lex.pos;
      }
    }
    if (!seen_digit) throw ParseError("expected number", at);
    long long exp10 = 0;
    bool exp_neg = false;
    if (lex.pos < lex.text.size() && (lex.text[lex.pos] == 'e' || lex.text[lex.pos] == 'E')) {
      std::size_t mark = lex.pos;
      ++lex.pos;
      if (lex.pos < lex.text.size() && (lex.text[lex.pos] == '+' || lex.text[lex.pos] == '-')) {
        exp_neg = lex.text[lex.pos] == '-';
        ++lex.pos;
      }
      if (lex.pos >= lex.text.size() ||
          !std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
        lex.pos = mark;  // not an exponent; leave 'e' for the caller (will error)
      } else {
        while (lex.pos < lex.text.size() &&
               std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
          exp10 = exp10 * 10 + (lex.text[lex.pos] - '0');
          if (exp10 > 400) overflow = true;
          ++lex.pos;
        }
      }
    }
    long long net = (exp_neg ? -exp10 : exp10) - frac_digits;
    if (!overflow && net >= -18 && net <= 18) {
      __int128 num = mantissa, den = 1;
      for (long long i = 0; i < (net < 0 ? -net : net); ++i) {
        if (net > 0)
          num *= 10;
        else
          den *= 10;
      }
      if (auto r = Rational::checked(num, den)) return rational(*r);
    }
    double v = static_cast<double>(mantissa) * std::pow(10.0, static_cast<double>(net));
    return real_const(v);
  }

  Expr parse_identifier() {
    std::size_t at = lex.pos;
    std::string name;
    while (lex.pos < lex.text.size() &&
           (std::isalnum(static_cast<unsigned char>(lex.text[lex.pos])) ||
            lex.text[lex.pos] == '_')) {
      name += lex.text[lex.pos];
      ++lex.pos;
    }
    if (name == "sin" || name == "cos" || name == "exp") {
      if (!lex.accept('(')) throw ParseError("expected '(' after " + name, lex.pos);
      Expr arg = parse_sum();
      if (!lex.accept(')')) throw ParseError("expected ')'", lex.pos);
      if (name == "sin") return sin_e(arg);
      if (name == "cos") return cos_e(arg);
      return exp_e(arg);
    }
    if (name == "pi") return pi_const();
    if (auto idx = coords.index_of(name)) return coord(coords, *idx);
    throw ParseError("unknown identifier '" + name + "'", at);
  }
};

}  // namespace

Expr parse(std::string_view text, const CoordSystem& coords) {
  Parser p{Lexer{text, 0}, coords};
  Expr e = p.parse_sum();
  p.lex.skip_ws();
  if (p.lex.pos < text.size())
    throw ParseError(std::string("unexpected character '") + text[p.lex.pos] + "'",
                     p.lex.pos);
  return e;
}

}  // namespace llsp
