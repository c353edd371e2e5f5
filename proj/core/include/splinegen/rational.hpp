#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace splinegen {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;
using RationalVector = std::vector<Rational>;

/// Parses "num/den", "num" or a plain integer. Throws std::invalid_argument
/// on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// Canonical text form: "num" for integers, "num/den" otherwise.
std::string to_string(const Rational& value);

/// Correctly rounded conversion to binary64.
double to_double(const Rational& value);
float to_float(const Rational& value);

bool is_integer(const Rational& value);

/// Requires is_integer(value) and a value that fits; throws std::range_error.
long long to_int64(const Rational& value);

/// Dense square matrix over the rationals, row-major.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  explicit RationalMatrix(int size);
  RationalMatrix(int size, std::vector<Rational> entries);

  static RationalMatrix identity(int size);

  int size() const { return size_; }
  const Rational& operator()(int row, int col) const { return entries_[row * size_ + col]; }
  Rational& operator()(int row, int col) { return entries_[row * size_ + col]; }
  const std::vector<Rational>& entries() const { return entries_; }

  Rational determinant() const;
  bool invertible() const { return determinant() != 0; }
  /// Exact inverse by Gauss-Jordan elimination; throws std::domain_error if singular.
  RationalMatrix inverse() const;
  RationalMatrix transpose() const;
  bool is_identity() const;
  bool is_integral() const;

  RationalVector operator*(const RationalVector& v) const;
  RationalMatrix operator*(const RationalMatrix& other) const;
  bool operator==(const RationalMatrix& other) const = default;

 private:
  int size_ = 0;
  std::vector<Rational> entries_;
};

RationalVector operator-(const RationalVector& a, const RationalVector& b);
RationalVector operator+(const RationalVector& a, const RationalVector& b);
RationalVector operator-(const RationalVector& a);

}  // namespace splinegen
