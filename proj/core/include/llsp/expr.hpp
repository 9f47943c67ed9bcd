#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace llsp {

/// Parse failure with the 0-based offset of the offending character.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Precondition violation (unknown coordinate, missing split, degeneracy...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact rational with normalized sign and gcd-reduced terms.
struct Rational {
  long long num = 0;
  long long den = 1;

  static Rational of(long long n, long long d = 1);
  static std::optional<Rational> checked(__int128 n, __int128 d);

  std::optional<Rational> add(const Rational& o) const;
  std::optional<Rational> mul(const Rational& o) const;
  std::optional<Rational> pow(int k) const;
  Rational negated() const { return Rational{-num, den}; }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_zero() const { return num == 0; }
  bool is_one() const { return num == 1 && den == 1; }
  bool is_integer() const { return den == 1; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
};

/// Ordered chart coordinates, optionally partitioned into equal (base, fiber)
/// halves.  Split charts always list base coordinates first.
class CoordSystem {
 public:
  explicit CoordSystem(std::vector<std::string> names);
  static CoordSystem with_split(std::vector<std::string> base,
                                std::vector<std::string> fiber);
  /// Convenience: q1..qn followed by u1..un.
  static CoordSystem tangent_chart(int n, const std::string& base_prefix = "q",
                                   const std::string& fiber_prefix = "u");

  int dim() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> index_of(std::string_view name) const;

  bool has_split() const { return has_split_; }
  int half() const;
  int base_index(int k) const;
  int fiber_index(int k) const;
  bool is_fiber(int i) const;

 private:
  std::vector<std::string> names_;
  bool has_split_ = false;
};

using ChartPtr = std::shared_ptr<const CoordSystem>;
using Point = std::vector<double>;

enum class ExprKind {
  RationalConst,
  RealConst,
  Coord,
  Sum,
  Product,
  IntPower,
  Sin,
  Cos,
  Exp,
  Neg,
};

struct ExprNode;

/// Immutable expression tree over chart coordinates.  Values share structure
/// freely; all mutation happens through the construction helpers below, which
/// apply local rewrites only (constant folding, 0/1 absorption, flattening).
class Expr {
 public:
  Expr() = default;  // empty handle; only valid after assignment

  ExprKind kind() const;
  const ExprNode& node() const { return *node_; }
  bool valid() const { return node_ != nullptr; }

  static Expr make(ExprNode n);

 private:
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  ExprKind kind;
  Rational rat;            // RationalConst
  double real = 0.0;       // RealConst
  std::string real_name;   // optional display name for a named real (pi)
  int coord = -1;          // Coord
  std::string coord_name;  // Coord display name
  int exponent = 0;        // IntPower
  std::vector<Expr> kids;
};

inline ExprKind Expr::kind() const { return node_->kind; }

// ---- constructors ---------------------------------------------------------

Expr rational(long long num, long long den = 1);
Expr rational(const Rational& r);
Expr integer(long long n);
Expr real_const(double v);
Expr named_real(const std::string& name, double v);
Expr pi_const();
Expr coord(const CoordSystem& cs, int index);

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr neg(const Expr& e);
Expr pow_i(const Expr& base, int exponent);
Expr sin_e(const Expr& e);
Expr cos_e(const Expr& e);
Expr exp_e(const Expr& e);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

// ---- queries and operations -----------------------------------------------

bool is_zero(const Expr& e);
bool is_one(const Expr& e);
bool is_constant(const Expr& e);
/// Numeric value of a constant expression (rational or real node).
std::optional<double> constant_value(const Expr& e);
std::optional<Rational> rational_value(const Expr& e);
bool depends_on(const Expr& e, int coord);

/// IEEE double evaluation; the point must cover every coordinate index used.
double eval(const Expr& e, std::span<const double> p);

/// Exact symbolic partial derivative with respect to coordinate `coord`.
Expr diff(const Expr& e, int coord);
Expr diff(const Expr& e, const CoordSystem& cs, std::string_view name);

/// Replace coordinate i by repl[i]; used for chart transitions and pullbacks.
Expr substitute(const Expr& e, std::span<const Expr> repl);

std::string to_string(const Expr& e);

/// Parser for the expression grammar:
///   identifiers  [a-zA-Z][a-zA-Z0-9_]*   (coordinates, pi, sin/cos/exp)
///   literals     decimal (3, 2.5, 1e-3) and rational via division (3/2)
///   operators    binary + - * /, unary -, ^ with an integer literal exponent
///   precedence   ^  >  unary -  >  * /  >  + -
/// Whitespace is insignificant.
Expr parse(std::string_view text, const CoordSystem& coords);

}  // namespace llsp
