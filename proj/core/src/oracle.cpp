#include "splinegen/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace splinegen::oracle {

namespace {

constexpr int kMax = ir::kMaxDim;

/// Unit sample at the origin of coset 0, zero elsewhere (no wraparound).
class Delta : public ir::DataSource {
 public:
  double fetch(int coset, std::span<const std::int64_t> site) const override {
    if (coset != 0) return 0.0;
    return std::all_of(site.begin(), site.end(), [](std::int64_t z) { return z == 0; }) ? 1.0 : 0.0;
  }
};

}  // namespace

Reference::Reference(const SplineSpace& space) : space_(&space), dim_(space.dim) {
  const int s = dim_;
  const bool voronoi = space.region_map.shape == RegionShape::voronoi;
  nearest_ = voronoi || space.region_map.rounding == Rounding::round_nearest;
  const RationalMatrix p = voronoi ? RationalMatrix::identity(s) : space.region_map.basis;
  const RationalMatrix inv = p.inverse();
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      inv_basis_.push_back(to_double(inv(i, j)));
      basis_.push_back(to_int64(p(i, j)));
    }
  }
  for (const auto& l : space.lattice.cosets) {
    std::vector<double> row;
    for (const auto& v : l) row.push_back(to_double(v));
    cosets_.push_back(std::move(row));
  }
  for (const auto& plane : space.planes) {
    std::vector<double> nrm;
    for (const auto& v : plane.normal) nrm.push_back(to_double(v));
    normals_.push_back(std::move(nrm));
    offsets_.push_back(to_double(plane.offset));
  }
  for (const auto& sub : space.subregions) {
    Lowered low;
    for (const auto& v : sub.transform.entries()) low.xform.push_back(to_double(v));
    for (const auto& v : sub.shift) low.shift.push_back(to_double(v));
    subs_.push_back(std::move(low));
  }
}

void Reference::anchor(const double* x, std::int64_t* k, double* local) const {
  const int s = dim_;
  std::array<std::int64_t, kMax> r{};
  for (int i = 0; i < s; ++i) {
    double u = 0.0;
    for (int j = 0; j < s; ++j) u += inv_basis_[i * s + j] * x[j];
    r[i] = static_cast<std::int64_t>(nearest_ ? std::floor(u + 0.5) : std::floor(u));
  }
  for (int i = 0; i < s; ++i) {
    std::int64_t acc = 0;
    for (int j = 0; j < s; ++j) acc += basis_[i * s + j] * r[j];
    k[i] = acc;
    local[i] = x[i] - static_cast<double>(acc);
  }
}

int Reference::subregion(const double* local) const {
  std::uint64_t q = 0;
  for (std::size_t i = 0; i < normals_.size(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < dim_; ++j) dot += normals_[i][j] * local[j];
    if (dot - offsets_[i] >= 0.0) q |= std::uint64_t{1} << i;
  }
  const auto& indexer = space_->indexer;
  const int sub = indexer.sigma.at(q % static_cast<std::uint64_t>(indexer.modulus));
  if (sub == SubRegionIndexer::kUnreachable) {
    throw OracleError("BSP index q=" + std::to_string(q) + " maps to an unreachable sigma entry");
  }
  return sub;
}

int Reference::classify(std::span<const double> x) const {
  std::array<std::int64_t, kMax> k{};
  std::array<double, kMax> local{};
  anchor(x.data(), k.data(), local.data());
  return subregion(local.data());
}

double Reference::eval(std::span<const double> x, const ir::DataSource& data) const {
  const int s = dim_;
  if (static_cast<int>(x.size()) != s) throw OracleError("point dimension does not match the space");
  double total = 0.0;
  std::array<double, kMax> shifted{};
  std::array<double, kMax> local{};
  std::array<double, kMax> y{};
  std::array<std::int64_t, kMax> k{};
  std::array<std::int64_t, kMax> site{};
  std::vector<double> c(space_->stencil_size());
  for (std::size_t ci = 0; ci < cosets_.size(); ++ci) {
    for (int a = 0; a < s; ++a) shifted[a] = x[a] - cosets_[ci][a];
    anchor(shifted.data(), k.data(), local.data());
    const int sub = subregion(local.data());
    const SubRegion& region = space_->subregions[sub];
    const Lowered& low = subs_[sub];
    for (int i = 0; i < s; ++i) {
      double acc = 0.0;
      for (int j = 0; j < s; ++j) acc += low.xform[i * s + j] * (local[j] - low.shift[j]);
      y[i] = acc;
    }
    for (std::size_t j = 0; j < region.stencil.size(); ++j) {
      for (int a = 0; a < s; ++a) site[a] = k[a] + region.stencil[j][a];
      c[j] = data.fetch(static_cast<int>(ci), std::span<const std::int64_t>(site.data(), s));
    }
    total += poly_eval(space_->ref_polys[region.psi_index].poly, std::span<const double>(y.data(), s), c);
  }
  return total;
}

double Reference::basis(std::span<const double> y) const { return eval(y, Delta{}); }

double reference_eval(const SplineSpace& space, std::span<const double> x, const ir::DataSource& data) {
  return Reference(space).eval(x, data);
}

double basis_from_delta(const SplineSpace& space, std::span<const double> y) { return Reference(space).basis(y); }

double default_support_radius(const SplineSpace& space) {
  double reach = 0.0;
  for (const auto& sub : space.subregions)
    for (const auto& site : sub.stencil)
      for (int v : site) reach = std::max(reach, std::abs(static_cast<double>(v)));
  double extent = 1.0;
  if (space.region_map.shape == RegionShape::parallelepiped) {
    const auto& p = space.region_map.basis;
    for (int i = 0; i < p.size(); ++i) {
      double row = 0.0;
      for (int j = 0; j < p.size(); ++j) row += std::abs(to_double(p(i, j)));
      extent = std::max(extent, row);
    }
  }
  return reach + extent + 1.0;
}

double convolution_eval(const Reference& ref, std::span<const double> x, const ir::DataSource& data,
                        double support_radius) {
  const SplineSpace& space = ref.space();
  const int s = space.dim;
  if (static_cast<int>(x.size()) != s) throw OracleError("point dimension does not match the space");
  double total = 0.0;
  std::array<std::int64_t, kMax> lo{};
  std::array<std::int64_t, kMax> hi{};
  std::array<std::int64_t, kMax> z{};
  std::array<double, kMax> y{};
  for (int ci = 0; ci < space.coset_count(); ++ci) {
    std::array<double, kMax> l{};
    bool empty = false;
    for (int a = 0; a < s; ++a) {
      l[a] = to_double(space.lattice.cosets[ci][a]);
      lo[a] = static_cast<std::int64_t>(std::ceil(x[a] - l[a] - support_radius));
      hi[a] = static_cast<std::int64_t>(std::floor(x[a] - l[a] + support_radius));
      empty = empty || hi[a] < lo[a];
      z[a] = lo[a];
    }
    if (empty) continue;
    for (;;) {
      const double value = data.fetch(ci, std::span<const std::int64_t>(z.data(), s));
      if (value != 0.0) {
        for (int a = 0; a < s; ++a) y[a] = x[a] - (l[a] + static_cast<double>(z[a]));
        total += value * ref.basis(std::span<const double>(y.data(), s));
      }
      int a = 0;
      while (a < s && ++z[a] > hi[a]) {
        z[a] = lo[a];
        ++a;
      }
      if (a == s) break;
    }
  }
  return total;
}

double convolution_eval(const SplineSpace& space, std::span<const double> x, const ir::DataSource& data,
                        double support_radius) {
  return convolution_eval(Reference(space), x, data, support_radius);
}

double relative_difference(double a, double b, double floor) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

}  // namespace splinegen::oracle
