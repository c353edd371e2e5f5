#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "splinegen/rational.hpp"

namespace splinegen {

/// A monomial over spatial variables x_0..x_{s-1} times at most one
/// coefficient symbol c_j (c_index = -1 when absent). Reconstruction is
/// linear in the data, so symbols never carry an exponent above one.
struct Monomial {
  std::vector<int> x_exps;
  int c_index = -1;

  bool operator==(const Monomial&) const = default;
  bool operator<(const Monomial& other) const {
    if (c_index != other.c_index) return c_index < other.c_index;
    return x_exps < other.x_exps;
  }
};

/// Sparse multivariate polynomial with exact rational coefficients.
/// Zero coefficients are never stored.
class Poly {
 public:
  using Terms = std::map<Monomial, Rational>;

  Poly() = default;
  explicit Poly(int dim) : dim_(dim) {}

  static Poly constant(int dim, const Rational& value);
  static Poly variable(int dim, int axis);
  static Poly symbol(int dim, int index);

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  /// Accumulates coeff into the term for `mono`, dropping it if it cancels.
  void add_term(const Monomial& mono, const Rational& coeff);

  /// Sorted, distinct coefficient-symbol indices referenced by any term.
  std::vector<int> symbols() const;
  bool every_term_has_symbol() const;

  Poly operator+(const Poly& other) const;
  Poly operator-(const Poly& other) const;
  /// Throws std::domain_error if the product would square a coefficient symbol.
  Poly operator*(const Poly& other) const;
  Poly operator*(const Rational& scale) const;
  Poly& operator+=(const Poly& other);
  bool operator==(const Poly& other) const { return dim_ == other.dim_ && terms_ == other.terms_; }

  std::string to_string() const;

 private:
  int dim_ = 0;
  Terms terms_;
};

/// Deterministic float64 evaluation: terms are accumulated in Poly::Terms order.
double poly_eval(const Poly& p, std::span<const double> x, std::span<const double> c);

/// Exact partial derivative with respect to x_axis.
Poly differentiate(const Poly& p, int axis);

/// Replaces every coefficient symbol with `value`.
Poly substitute_symbols(const Poly& p, const Rational& value);

struct HornerNode {
  enum class Kind { constant, var, sym, add, mul };
  Kind kind = Kind::constant;
  Rational value;
  int index = -1;  // x axis for var, symbol for sym
  int lhs = -1;
  int rhs = -1;
};

/// Expression tree produced by greedy Horner factorization. Nodes are stored
/// in creation order, so every child precedes its parent.
class HornerForm {
 public:
  HornerForm() = default;
  HornerForm(int dim, std::vector<HornerNode> nodes, int root)
      : dim_(dim), nodes_(std::move(nodes)), root_(root) {}

  int dim() const { return dim_; }
  const std::vector<HornerNode>& nodes() const { return nodes_; }
  int root() const { return root_; }

  Poly expand() const;
  double eval(std::span<const double> x, std::span<const double> c) const;
  /// Number of add/mul nodes.
  int operation_count() const;
  std::string to_string() const;

 private:
  int dim_ = 0;
  std::vector<HornerNode> nodes_;
  int root_ = -1;
};

/// Greedy multivariate Horner factorization. At every level the variable
/// (x_k or c_j) appearing in the most remaining terms is factored out; ties
/// go to the lowest index with x variables ahead of coefficient symbols.
HornerForm horner_factorize(const Poly& p);

struct Chunk {
  Poly poly;
  /// The block of coefficient symbols this chunk is allowed to touch, in
  /// visiting order. A chunk's terms reference only these symbols.
  std::vector<int> symbols;
};

struct ChunkSet {
  std::vector<Chunk> chunks;

  Poly sum() const;
};

/// Splits p into chunks by consecutive blocks of `group_size` symbols of
/// `visit_order`. Symbol-free terms go to chunk 0. Throws
/// std::invalid_argument for group_size == 0 or a visit order that does not
/// cover p's symbols exactly once.
ChunkSet group_polynomial(const Poly& p, int group_size, std::span<const int> visit_order);

}  // namespace splinegen
