#include "splinegen/rational.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace splinegen {
namespace {

Integer parse_integer(std::string_view digits, std::string_view whole) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < digits.size() && (digits[pos] == '-' || digits[pos] == '+')) {
    negative = digits[pos] == '-';
    ++pos;
  }
  if (pos >= digits.size()) {
    throw std::invalid_argument("malformed rational '" + std::string(whole) + "'");
  }
  Integer value = 0;
  for (; pos < digits.size(); ++pos) {
    const char ch = digits[pos];
    if (ch < '0' || ch > '9') {
      throw std::invalid_argument("malformed rational '" + std::string(whole) + "'");
    }
    value = value * 10 + (ch - '0');
  }
  return negative ? Integer(-value) : value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// 2^53: integers below this are exact in binary64, so a single IEEE division
// of numerator by denominator is correctly rounded.
const Integer kExactDoubleBound = Integer(1) << 53;

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view body = trim(text);
  const auto slash = body.find('/');
  if (slash == std::string_view::npos) {
    return Rational(parse_integer(body, text));
  }
  const Integer num = parse_integer(trim(body.substr(0, slash)), text);
  const Integer den = parse_integer(trim(body.substr(slash + 1)), text);
  if (den == 0) {
    throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  }
  return Rational(num, den);
}

std::string to_string(const Rational& value) {
  const Integer& num = boost::multiprecision::numerator(value);
  const Integer& den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& value) {
  const Integer num = boost::multiprecision::numerator(value);
  const Integer den = boost::multiprecision::denominator(value);
  if (boost::multiprecision::abs(num) < kExactDoubleBound && den < kExactDoubleBound) {
    return static_cast<double>(num.convert_to<long long>()) /
           static_cast<double>(den.convert_to<long long>());
  }
  return value.convert_to<double>();
}

float to_float(const Rational& value) {
  return value.convert_to<float>();
}

bool is_integer(const Rational& value) {
  return boost::multiprecision::denominator(value) == 1;
}

long long to_int64(const Rational& value) {
  if (!is_integer(value)) {
    throw std::range_error("rational " + to_string(value) + " is not an integer");
  }
  const Integer num = boost::multiprecision::numerator(value);
  if (num > std::numeric_limits<long long>::max() || num < std::numeric_limits<long long>::min()) {
    throw std::range_error("integer " + num.str() + " out of range");
  }
  return num.convert_to<long long>();
}

RationalMatrix::RationalMatrix(int size) : size_(size), entries_(static_cast<std::size_t>(size * size)) {}

RationalMatrix::RationalMatrix(int size, std::vector<Rational> entries)
    : size_(size), entries_(std::move(entries)) {
  if (entries_.size() != static_cast<std::size_t>(size * size)) {
    throw std::invalid_argument("matrix entry count does not match size");
  }
}

RationalMatrix RationalMatrix::identity(int size) {
  RationalMatrix m(size);
  for (int i = 0; i < size; ++i) m(i, i) = 1;
  return m;
}

Rational RationalMatrix::determinant() const {
  RationalMatrix a = *this;
  Rational det = 1;
  for (int col = 0; col < size_; ++col) {
    int pivot = -1;
    for (int row = col; row < size_; ++row) {
      if (a(row, col) != 0) {
        pivot = row;
        break;
      }
    }
    if (pivot < 0) return 0;
    if (pivot != col) {
      for (int k = 0; k < size_; ++k) std::swap(a(pivot, k), a(col, k));
      det = -det;
    }
    det *= a(col, col);
    for (int row = col + 1; row < size_; ++row) {
      if (a(row, col) == 0) continue;
      const Rational factor = a(row, col) / a(col, col);
      for (int k = col; k < size_; ++k) a(row, k) -= factor * a(col, k);
    }
  }
  return det;
}

RationalMatrix RationalMatrix::inverse() const {
  RationalMatrix a = *this;
  RationalMatrix inv = identity(size_);
  for (int col = 0; col < size_; ++col) {
    int pivot = -1;
    for (int row = col; row < size_; ++row) {
      if (a(row, col) != 0) {
        pivot = row;
        break;
      }
    }
    if (pivot < 0) throw std::domain_error("matrix is singular");
    if (pivot != col) {
      for (int k = 0; k < size_; ++k) {
        std::swap(a(pivot, k), a(col, k));
        std::swap(inv(pivot, k), inv(col, k));
      }
    }
    const Rational scale = a(col, col);
    for (int k = 0; k < size_; ++k) {
      a(col, k) /= scale;
      inv(col, k) /= scale;
    }
    for (int row = 0; row < size_; ++row) {
      if (row == col || a(row, col) == 0) continue;
      const Rational factor = a(row, col);
      for (int k = 0; k < size_; ++k) {
        a(row, k) -= factor * a(col, k);
        inv(row, k) -= factor * inv(col, k);
      }
    }
  }
  return inv;
}

RationalMatrix RationalMatrix::transpose() const {
  RationalMatrix t(size_);
  for (int i = 0; i < size_; ++i)
    for (int j = 0; j < size_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool RationalMatrix::is_identity() const { return *this == identity(size_); }

bool RationalMatrix::is_integral() const {
  for (const auto& e : entries_)
    if (!is_integer(e)) return false;
  return true;
}

RationalVector RationalMatrix::operator*(const RationalVector& v) const {
  if (v.size() != static_cast<std::size_t>(size_)) {
    throw std::invalid_argument("matrix-vector dimension mismatch");
  }
  RationalVector out(v.size());
  for (int i = 0; i < size_; ++i) {
    Rational acc = 0;
    for (int j = 0; j < size_; ++j) acc += (*this)(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

RationalMatrix RationalMatrix::operator*(const RationalMatrix& other) const {
  if (other.size_ != size_) throw std::invalid_argument("matrix dimension mismatch");
  RationalMatrix out(size_);
  for (int i = 0; i < size_; ++i)
    for (int j = 0; j < size_; ++j) {
      Rational acc = 0;
      for (int k = 0; k < size_; ++k) acc += (*this)(i, k) * other(k, j);
      out(i, j) = acc;
    }
  return out;
}

RationalVector operator-(const RationalVector& a, const RationalVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector dimension mismatch");
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

RationalVector operator+(const RationalVector& a, const RationalVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector dimension mismatch");
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

RationalVector operator-(const RationalVector& a) {
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
  return out;
}

}  // namespace splinegen
