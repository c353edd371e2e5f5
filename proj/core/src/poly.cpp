#include "splinegen/poly.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace splinegen {

Poly Poly::constant(int dim, const Rational& value) {
  Poly p(dim);
  p.add_term(Monomial{std::vector<int>(dim, 0), -1}, value);
  return p;
}

Poly Poly::variable(int dim, int axis) {
  if (axis < 0 || axis >= dim) throw std::out_of_range("variable axis out of range");
  Monomial mono{std::vector<int>(dim, 0), -1};
  mono.x_exps[axis] = 1;
  Poly p(dim);
  p.add_term(mono, 1);
  return p;
}

Poly Poly::symbol(int dim, int index) {
  if (index < 0) throw std::out_of_range("symbol index must be non-negative");
  Poly p(dim);
  p.add_term(Monomial{std::vector<int>(dim, 0), index}, 1);
  return p;
}

void Poly::add_term(const Monomial& mono, const Rational& coeff) {
  if (static_cast<int>(mono.x_exps.size()) != dim_) {
    throw std::invalid_argument("monomial exponent vector length does not match dimension");
  }
  if (coeff == 0) return;
  auto [it, inserted] = terms_.try_emplace(mono, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0) terms_.erase(it);
  }
}

std::vector<int> Poly::symbols() const {
  std::set<int> seen;
  for (const auto& [mono, coeff] : terms_)
    if (mono.c_index >= 0) seen.insert(mono.c_index);
  return {seen.begin(), seen.end()};
}

bool Poly::every_term_has_symbol() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const auto& term) { return term.first.c_index >= 0; });
}

Poly Poly::operator+(const Poly& other) const {
  Poly out = *this;
  out += other;
  return out;
}

Poly& Poly::operator+=(const Poly& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("polynomial dimension mismatch");
  for (const auto& [mono, coeff] : other.terms_) add_term(mono, coeff);
  return *this;
}

Poly Poly::operator-(const Poly& other) const { return *this + other * Rational(-1); }

Poly Poly::operator*(const Poly& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("polynomial dimension mismatch");
  Poly out(dim_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) {
      if (ma.c_index >= 0 && mb.c_index >= 0) {
        throw std::domain_error("product of two coefficient symbols is not linear in the data");
      }
      Monomial mono{std::vector<int>(dim_), std::max(ma.c_index, mb.c_index)};
      for (int k = 0; k < dim_; ++k) mono.x_exps[k] = ma.x_exps[k] + mb.x_exps[k];
      out.add_term(mono, ca * cb);
    }
  }
  return out;
}

Poly Poly::operator*(const Rational& scale) const {
  Poly out(dim_);
  if (scale == 0) return out;
  for (const auto& [mono, coeff] : terms_) out.terms_.emplace(mono, coeff * scale);
  return out;
}

std::string Poly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mono, coeff] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << splinegen::to_string(coeff);
    if (mono.c_index >= 0) os << "*c" << mono.c_index;
    for (int k = 0; k < dim_; ++k) {
      if (mono.x_exps[k] == 0) continue;
      os << "*x" << k;
      if (mono.x_exps[k] > 1) os << "^" << mono.x_exps[k];
    }
  }
  return os.str();
}

double poly_eval(const Poly& p, std::span<const double> x, std::span<const double> c) {
  double acc = 0.0;
  for (const auto& [mono, coeff] : p.terms()) {
    double term = to_double(coeff);
    for (int k = 0; k < p.dim(); ++k)
      for (int e = 0; e < mono.x_exps[k]; ++e) term *= x[k];
    if (mono.c_index >= 0) term *= c[mono.c_index];
    acc += term;
  }
  return acc;
}

Poly differentiate(const Poly& p, int axis) {
  if (axis < 0 || axis >= p.dim()) throw std::out_of_range("derivative axis out of range");
  Poly out(p.dim());
  for (const auto& [mono, coeff] : p.terms()) {
    const int e = mono.x_exps[axis];
    if (e == 0) continue;
    Monomial d = mono;
    d.x_exps[axis] = e - 1;
    out.add_term(d, coeff * e);
  }
  return out;
}

Poly substitute_symbols(const Poly& p, const Rational& value) {
  Poly out(p.dim());
  for (const auto& [mono, coeff] : p.terms()) {
    Monomial m = mono;
    const bool had_symbol = m.c_index >= 0;
    m.c_index = -1;
    out.add_term(m, had_symbol ? coeff * value : coeff);
  }
  return out;
}

// --- Horner ---------------------------------------------------------------

namespace {

class HornerBuilder {
 public:
  explicit HornerBuilder(int dim) : dim_(dim) {}

  int build(const Poly& p) {
    if (p.is_zero()) return constant(0);

    // Occurrence counts: x_0..x_{s-1} first, then symbols in increasing order.
    std::vector<int> x_counts(dim_, 0);
    std::map<int, int> c_counts;
    for (const auto& [mono, coeff] : p.terms()) {
      for (int k = 0; k < dim_; ++k)
        if (mono.x_exps[k] > 0) ++x_counts[k];
      if (mono.c_index >= 0) ++c_counts[mono.c_index];
    }
    int best_count = 0;
    bool best_is_x = true;
    int best_index = -1;
    for (int k = 0; k < dim_; ++k) {
      if (x_counts[k] > best_count) {
        best_count = x_counts[k];
        best_index = k;
      }
    }
    for (const auto& [j, count] : c_counts) {
      if (count > best_count) {
        best_count = count;
        best_is_x = false;
        best_index = j;
      }
    }
    if (best_count == 0) {
      // Only the symbol-free constant term remains.
      return constant(p.terms().begin()->second);
    }

    Poly quotient(dim_);
    Poly remainder(dim_);
    for (const auto& [mono, coeff] : p.terms()) {
      if (best_is_x && mono.x_exps[best_index] > 0) {
        Monomial q = mono;
        --q.x_exps[best_index];
        quotient.add_term(q, coeff);
      } else if (!best_is_x && mono.c_index == best_index) {
        Monomial q = mono;
        q.c_index = -1;
        quotient.add_term(q, coeff);
      } else {
        remainder.add_term(mono, coeff);
      }
    }

    const int factor = push({best_is_x ? HornerNode::Kind::var : HornerNode::Kind::sym, 0, best_index});
    int product = factor;
    if (!(quotient == Poly::constant(dim_, 1))) {
      const int q = build(quotient);
      product = push({HornerNode::Kind::mul, 0, -1, q, factor});
    }
    if (remainder.is_zero()) return product;
    const int r = build(remainder);
    return push({HornerNode::Kind::add, 0, -1, product, r});
  }

  std::vector<HornerNode> take() { return std::move(nodes_); }

 private:
  int constant(const Rational& v) { return push({HornerNode::Kind::constant, v, -1}); }
  int push(HornerNode node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int dim_;
  std::vector<HornerNode> nodes_;
};

}  // namespace

HornerForm horner_factorize(const Poly& p) {
  HornerBuilder builder(p.dim());
  const int root = builder.build(p);
  return HornerForm(p.dim(), builder.take(), root);
}

Poly HornerForm::expand() const {
  std::vector<Poly> values(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    switch (n.kind) {
      case HornerNode::Kind::constant: values[i] = Poly::constant(dim_, n.value); break;
      case HornerNode::Kind::var: values[i] = Poly::variable(dim_, n.index); break;
      case HornerNode::Kind::sym: values[i] = Poly::symbol(dim_, n.index); break;
      case HornerNode::Kind::add: values[i] = values[n.lhs] + values[n.rhs]; break;
      case HornerNode::Kind::mul: values[i] = values[n.lhs] * values[n.rhs]; break;
    }
  }
  return root_ < 0 ? Poly(dim_) : values[root_];
}

double HornerForm::eval(std::span<const double> x, std::span<const double> c) const {
  std::vector<double> values(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    switch (n.kind) {
      case HornerNode::Kind::constant: values[i] = to_double(n.value); break;
      case HornerNode::Kind::var: values[i] = x[n.index]; break;
      case HornerNode::Kind::sym: values[i] = c[n.index]; break;
      case HornerNode::Kind::add: values[i] = values[n.lhs] + values[n.rhs]; break;
      case HornerNode::Kind::mul: values[i] = values[n.lhs] * values[n.rhs]; break;
    }
  }
  return root_ < 0 ? 0.0 : values[root_];
}

int HornerForm::operation_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const HornerNode& n) {
    return n.kind == HornerNode::Kind::add || n.kind == HornerNode::Kind::mul;
  }));
}

std::string HornerForm::to_string() const {
  std::vector<std::string> text(nodes_.size());
  std::vector<bool> is_sum(nodes_.size(), false);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    switch (n.kind) {
      case HornerNode::Kind::constant: text[i] = splinegen::to_string(n.value); break;
      case HornerNode::Kind::var: text[i] = "x" + std::to_string(n.index); break;
      case HornerNode::Kind::sym: text[i] = "c" + std::to_string(n.index); break;
      case HornerNode::Kind::add:
        text[i] = text[n.lhs] + " + " + text[n.rhs];
        is_sum[i] = true;
        break;
      case HornerNode::Kind::mul: {
        const std::string lhs = is_sum[n.lhs] ? "(" + text[n.lhs] + ")" : text[n.lhs];
        const std::string rhs = is_sum[n.rhs] ? "(" + text[n.rhs] + ")" : text[n.rhs];
        text[i] = lhs + "*" + rhs;
        break;
      }
    }
  }
  return root_ < 0 ? "0" : text[root_];
}

// --- grouping -------------------------------------------------------------

Poly ChunkSet::sum() const {
  if (chunks.empty()) return Poly();
  Poly total(chunks.front().poly.dim());
  for (const auto& chunk : chunks) total += chunk.poly;
  return total;
}

ChunkSet group_polynomial(const Poly& p, int group_size, std::span<const int> visit_order) {
  if (group_size <= 0) throw std::invalid_argument("group size must be at least 1");

  std::map<int, int> position;
  for (std::size_t i = 0; i < visit_order.size(); ++i) {
    if (!position.emplace(visit_order[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("visit order repeats symbol c" + std::to_string(visit_order[i]));
    }
  }
  for (int sym : p.symbols()) {
    if (!position.contains(sym)) {
      throw std::invalid_argument("visit order does not contain symbol c" + std::to_string(sym));
    }
  }

  const int n = static_cast<int>(visit_order.size());
  const int count = std::max(1, (n + group_size - 1) / group_size);
  ChunkSet set;
  set.chunks.resize(count);
  for (int k = 0; k < count; ++k) {
    set.chunks[k].poly = Poly(p.dim());
    for (int i = k * group_size; i < std::min(n, (k + 1) * group_size); ++i)
      set.chunks[k].symbols.push_back(visit_order[i]);
  }
  for (const auto& [mono, coeff] : p.terms()) {
    const int k = mono.c_index < 0 ? 0 : position.at(mono.c_index) / group_size;
    set.chunks[k].poly.add_term(mono, coeff);
  }
  return set;
}

}  // namespace splinegen
