#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "splinegen/poly.hpp"
#include "splinegen/rational.hpp"

namespace splinegen {

struct LatticeSpec {
  RationalMatrix generator;
  /// Cartesian coset offsets l_0..l_{M-1}; l_0 is the origin. The lattice is
  /// the union of l_i + Z^s, and coset i's data array is indexed by Z^s.
  std::vector<RationalVector> cosets;

  bool operator==(const LatticeSpec&) const = default;
};

enum class RegionShape { parallelepiped, voronoi };
enum class Rounding { round_nearest, floor };

struct RegionMap {
  RegionShape shape = RegionShape::parallelepiped;
  RationalMatrix basis;  // parallelepiped only
  Rounding rounding = Rounding::round_nearest;

  bool operator==(const RegionMap&) const = default;
};

/// Plane test: bit i of the BSP index is set iff x.normal - offset >= 0.
struct BspPlane {
  RationalVector normal;
  Rational offset;

  bool operator==(const BspPlane&) const = default;
};

struct SubRegionIndexer {
  static constexpr int kUnreachable = -1;

  int modulus = 1;
  std::vector<int> sigma;

  bool operator==(const SubRegionIndexer&) const = default;
};

/// A piece of the region of evaluation. A point x in this sub-region is
/// carried into its reference sub-region by y = transform * (x - shift), and
/// coefficient symbol c_j reads the lattice site k + stencil[j].
struct SubRegion {
  RationalMatrix transform;
  RationalVector shift;
  std::vector<std::vector<int>> stencil;
  int psi_index = 0;

  bool operator==(const SubRegion&) const = default;
};

struct RefPoly {
  Poly poly;

  bool operator==(const RefPoly&) const = default;
};

struct SplineSpace {
  std::string name;
  int dim = 0;
  LatticeSpec lattice;
  RegionMap region_map;
  std::vector<BspPlane> planes;
  SubRegionIndexer indexer;
  std::vector<SubRegion> subregions;
  std::vector<RefPoly> ref_polys;

  int coset_count() const { return static_cast<int>(lattice.cosets.size()); }
  int plane_count() const { return static_cast<int>(planes.size()); }
  int ref_poly_count() const { return static_cast<int>(ref_polys.size()); }
  int subregion_count() const { return static_cast<int>(subregions.size()); }
  /// Stencil length n shared by every sub-region (0 for an empty space).
  int stencil_size() const { return subregions.empty() ? 0 : static_cast<int>(subregions.front().stencil.size()); }

  bool operator==(const SplineSpace&) const = default;
};

enum class Severity { warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string path;
  std::string message;
};

std::string to_string(const Diagnostic& d);

/// Schema-level failure while reading a description: names the JSON path.
class SpaceError : public std::runtime_error {
 public:
  SpaceError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Reads the JSON description without checking invariants beyond field
/// kinds and vector lengths.
SplineSpace parse_space_unchecked(std::string_view text);

/// parse_space_unchecked followed by validate_space; throws SpaceError for the
/// first error diagnostic.
SplineSpace parse_space(std::string_view text);

/// Reads and parses a description file. Throws std::ios_base::failure if
/// the file cannot be read.
SplineSpace load_space(const std::string& path);
std::string read_text_file(const std::string& path);

/// Canonical JSON serialization; parse_space(serialize_space(s)) == s.
std::string serialize_space(const SplineSpace& space);

std::vector<Diagnostic> validate_space(const SplineSpace& space);
bool has_errors(const std::vector<Diagnostic>& diagnostics);

}  // namespace splinegen
