#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "llsp/expr.hpp"

namespace llsp {

/// Expanded multilinear normal form over "atoms".  Coordinates and
/// non-arithmetic subtrees (sin, cos, exp, powers with sum bases and negative
/// exponents) are interned as atoms; sums, products and non-negative integer
/// powers are expanded into a canonical monomial map.  Coefficients stay exact
/// rationals as long as no real constant enters.
///
/// Two expressions with equal normal forms are equal functions; an empty
/// normal form with `exact` set is an exact structural zero.  The converse is
/// conservative: distinct atoms may hide equal functions.
class AtomTable {
 public:
  int intern(const Expr& atom, const std::string& key);
  const Expr& atom(int id) const { return atoms_.at(id); }
  int size() const { return static_cast<int>(atoms_.size()); }

 private:
  std::vector<Expr> atoms_;
  std::unordered_map<std::string, int> ids_;
};

using Monomial = std::map<int, int>;  // atom id -> exponent (never zero)

struct NFCoef {
  Rational rat{0, 1};
  double real = 0.0;
  bool exact = true;

  double value() const { return exact ? rat.value() : real; }
  bool is_zero() const { return exact ? rat.is_zero() : real == 0.0; }
  NFCoef& operator+=(const NFCoef& o);
  NFCoef operator*(const NFCoef& o) const;
  NFCoef negated() const;
};

struct NormalForm {
  std::map<Monomial, NFCoef> terms;

  bool empty() const { return terms.empty(); }
  bool all_exact() const;
};

NormalForm normal_form(const Expr& e, AtomTable& table);

/// True when the expression expands to the empty normal form with exact
/// rational coefficients; such an expression is identically zero.
bool nf_is_zero(const Expr& e);

/// Exact equality through the normal form of the difference.
bool nf_equal(const Expr& a, const Expr& b);

/// Rebuild a compact expanded expression from the normal form.  Used to keep
/// the outputs of symbolic linear solves and long wedge chains small.
/// Inexact coefficients rebuild as real constants.
Expr nf_compact(const Expr& e);

/// Degree of `e` as a polynomial in coordinate `c`, or nullopt when `e` is not
/// polynomial in that coordinate (the coordinate occurs inside an atom or with
/// a negative exponent).
std::optional<int> poly_degree_in(const Expr& e, int c);

}  // namespace llsp
