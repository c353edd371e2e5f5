#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "splinegen/ir.hpp"
#include "splinegen/model.hpp"

namespace splinegen::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Direct evaluator of the piecewise definition: per coset, shift the point,
/// find the region anchor, classify by plane tests, map into the reference
/// sub-region and evaluate the untransformed polynomial with poly_eval.
/// The space is lowered to float64 once at construction.
class Reference {
 public:
  explicit Reference(const SplineSpace& space);
  // The space is held by pointer; a temporary would dangle.
  explicit Reference(SplineSpace&&) = delete;

  double eval(std::span<const double> x, const ir::DataSource& data) const;
  /// Value of the basis function at y: reconstruction from a single unit
  /// sample at the origin of coset 0.
  double basis(std::span<const double> y) const;
  /// Sub-region index selected for the coset-0 evaluation of x.
  int classify(std::span<const double> x) const;

  const SplineSpace& space() const { return *space_; }

 private:
  struct Lowered {
    std::vector<double> xform;
    std::vector<double> shift;
  };

  void anchor(const double* x, std::int64_t* k, double* local) const;
  int subregion(const double* local) const;

  const SplineSpace* space_;
  int dim_;
  bool nearest_;
  std::vector<double> inv_basis_;
  std::vector<std::int64_t> basis_;
  std::vector<std::vector<double>> cosets_;
  std::vector<std::vector<double>> normals_;
  std::vector<double> offsets_;
  std::vector<Lowered> subs_;
};

double reference_eval(const SplineSpace& space, std::span<const double> x, const ir::DataSource& data);
double basis_from_delta(const SplineSpace& space, std::span<const double> y);

/// Chebyshev radius beyond which the basis vanishes: the largest stencil
/// offset plus the extent of the region of evaluation, plus one.
double default_support_radius(const SplineSpace& space);

/// Brute-force sum of data[n] * phi(x - n) over lattice sites n within
/// `support_radius` of x (Chebyshev distance).
double convolution_eval(const SplineSpace& space, std::span<const double> x, const ir::DataSource& data,
                        double support_radius);

/// Same as convolution_eval with a prebuilt Reference.
double convolution_eval(const Reference& ref, std::span<const double> x, const ir::DataSource& data,
                        double support_radius);

/// |a - b| / max(|a|, |b|, floor).
double relative_difference(double a, double b, double floor = 1e-12);

}  // namespace splinegen::oracle
