#include "splinegen/model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace splinegen {
namespace {

using nlohmann::json;

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SpaceError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SpaceError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

int read_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SpaceError(path, "expected an integer");
  return j.get<int>();
}

Rational read_rational(const json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw SpaceError(path, e.what());
    }
  }
  throw SpaceError(path, "expected a rational string \"num/den\" or an integer");
}

const json& read_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SpaceError(path, "expected an array");
  return j;
}

RationalVector read_vector(const json& j, int dim, const std::string& path) {
  read_array(j, path);
  if (static_cast<int>(j.size()) != dim) {
    throw SpaceError(path, "expected " + std::to_string(dim) + " entries, got " + std::to_string(j.size()));
  }
  RationalVector v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(read_rational(j[i], index_path(path, i)));
  return v;
}

RationalMatrix read_matrix(const json& j, int dim, const std::string& path) {
  read_array(j, path);
  if (static_cast<int>(j.size()) != dim) {
    throw SpaceError(path, "expected " + std::to_string(dim) + " rows, got " + std::to_string(j.size()));
  }
  RationalMatrix m(dim);
  for (int r = 0; r < dim; ++r) {
    const RationalVector row = read_vector(j[r], dim, index_path(path, r));
    for (int c = 0; c < dim; ++c) m(r, c) = row[c];
  }
  return m;
}

std::vector<int> read_int_vector(const json& j, int dim, const std::string& path) {
  read_array(j, path);
  if (dim >= 0 && static_cast<int>(j.size()) != dim) {
    throw SpaceError(path, "expected " + std::to_string(dim) + " entries, got " + std::to_string(j.size()));
  }
  std::vector<int> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(read_int(j[i], index_path(path, i)));
  return v;
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SpaceError(path, "expected a string");
  return j.get<std::string>();
}

Poly read_poly(const json& j, int dim, const std::string& path) {
  read_array(j, path);
  Poly p(dim);
  for (std::size_t t = 0; t < j.size(); ++t) {
    const std::string mpath = index_path(path, t);
    const json& mono = j[t];
    Monomial m;
    m.x_exps = read_int_vector(require(mono, "x_exps", mpath), dim, join(mpath, "x_exps"));
    for (std::size_t k = 0; k < m.x_exps.size(); ++k) {
      if (m.x_exps[k] < 0) throw SpaceError(index_path(join(mpath, "x_exps"), k), "negative exponent");
    }
    m.c_index = read_int(require(mono, "c_index", mpath), join(mpath, "c_index"));
    if (m.c_index < -1) throw SpaceError(join(mpath, "c_index"), "expected -1 or a symbol index");
    p.add_term(m, read_rational(require(mono, "coeff", mpath), join(mpath, "coeff")));
  }
  return p;
}

json rational_json(const Rational& r) {
  if (is_integer(r)) {
    const Integer& num = boost::multiprecision::numerator(r);
    if (boost::multiprecision::abs(num) < (Integer(1) << 53)) return json(num.convert_to<long long>());
  }
  return json(to_string(r));
}

json vector_json(const RationalVector& v) {
  json out = json::array();
  for (const auto& r : v) out.push_back(rational_json(r));
  return out;
}

json matrix_json(const RationalMatrix& m) {
  json out = json::array();
  for (int r = 0; r < m.size(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.size(); ++c) row.push_back(rational_json(m(r, c)));
    out.push_back(row);
  }
  return out;
}

const char* shape_name(RegionShape s) { return s == RegionShape::parallelepiped ? "parallelepiped" : "voronoi"; }
const char* rounding_name(Rounding r) { return r == Rounding::round_nearest ? "round_nearest" : "floor"; }

}  // namespace

std::string to_string(const Diagnostic& d) {
  return std::string(d.severity == Severity::error ? "error" : "warning") + ": " + d.path + ": " + d.message;
}

SplineSpace parse_space_unchecked(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpaceError("<document>", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SpaceError("<document>", "expected a JSON object");

  SplineSpace space;
  space.name = root.contains("name") ? read_string(root["name"], "name") : "spline";
  space.dim = read_int(require(root, "dim", ""), "dim");
  if (space.dim < 1 || space.dim > 4) throw SpaceError("dim", "dimension must be in [1, 4]");
  const int s = space.dim;

  const json& lattice = require(root, "lattice", "");
  space.lattice.generator = read_matrix(require(lattice, "generator", "lattice"), s, "lattice.generator");
  const json& cosets = read_array(require(lattice, "cosets", "lattice"), "lattice.cosets");
  for (std::size_t i = 0; i < cosets.size(); ++i)
    space.lattice.cosets.push_back(read_vector(cosets[i], s, index_path("lattice.cosets", i)));

  const json& region = require(root, "region_map", "");
  const std::string shape = read_string(require(region, "shape", "region_map"), "region_map.shape");
  if (shape == "parallelepiped") {
    space.region_map.shape = RegionShape::parallelepiped;
    space.region_map.basis = read_matrix(require(region, "basis", "region_map"), s, "region_map.basis");
  } else if (shape == "voronoi") {
    space.region_map.shape = RegionShape::voronoi;
    space.region_map.basis = region.contains("basis")
                                 ? read_matrix(region["basis"], s, "region_map.basis")
                                 : RationalMatrix::identity(s);
  } else {
    throw SpaceError("region_map.shape", "unknown shape '" + shape + "'");
  }
  const std::string rounding = read_string(require(region, "rounding", "region_map"), "region_map.rounding");
  if (rounding == "round_nearest") {
    space.region_map.rounding = Rounding::round_nearest;
  } else if (rounding == "floor") {
    space.region_map.rounding = Rounding::floor;
  } else {
    throw SpaceError("region_map.rounding", "unknown rounding '" + rounding + "'");
  }

  const json& planes = read_array(require(root, "planes", ""), "planes");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const std::string path = index_path("planes", i);
    BspPlane plane;
    plane.normal = read_vector(require(planes[i], "normal", path), s, join(path, "normal"));
    plane.offset = read_rational(require(planes[i], "offset", path), join(path, "offset"));
    space.planes.push_back(std::move(plane));
  }

  const json& indexer = require(root, "indexer", "");
  space.indexer.modulus = read_int(require(indexer, "modulus", "indexer"), "indexer.modulus");
  space.indexer.sigma = read_int_vector(require(indexer, "sigma", "indexer"), -1, "indexer.sigma");

  const json& subs = read_array(require(root, "subregions", ""), "subregions");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string path = index_path("subregions", i);
    SubRegion sub;
    sub.transform = read_matrix(require(subs[i], "transform", path), s, join(path, "transform"));
    sub.shift = read_vector(require(subs[i], "shift", path), s, join(path, "shift"));
    const json& stencil = read_array(require(subs[i], "stencil", path), join(path, "stencil"));
    for (std::size_t j = 0; j < stencil.size(); ++j)
      sub.stencil.push_back(read_int_vector(stencil[j], s, index_path(join(path, "stencil"), j)));
    sub.psi_index = read_int(require(subs[i], "psi_index", path), join(path, "psi_index"));
    space.subregions.push_back(std::move(sub));
  }

  const json& polys = read_array(require(root, "ref_polys", ""), "ref_polys");
  for (std::size_t i = 0; i < polys.size(); ++i)
    space.ref_polys.push_back(RefPoly{read_poly(polys[i], s, index_path("ref_polys", i))});

  return space;
}

SplineSpace parse_space(std::string_view text) {
  SplineSpace space = parse_space_unchecked(text);
  for (const auto& d : validate_space(space)) {
    if (d.severity == Severity::error) throw SpaceError(d.path, d.message);
  }
  return space;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

SplineSpace load_space(const std::string& path) { return parse_space(read_text_file(path)); }

std::string serialize_space(const SplineSpace& space) {
  json root = json::object();
  root["name"] = space.name;
  root["dim"] = space.dim;
  json cosets = json::array();
  for (const auto& l : space.lattice.cosets) cosets.push_back(vector_json(l));
  root["lattice"] = {{"generator", matrix_json(space.lattice.generator)}, {"cosets", cosets}};
  json region = {{"shape", shape_name(space.region_map.shape)},
                 {"rounding", rounding_name(space.region_map.rounding)}};
  region["basis"] = matrix_json(space.region_map.basis);
  root["region_map"] = region;
  json planes = json::array();
  for (const auto& p : space.planes) planes.push_back({{"normal", vector_json(p.normal)}, {"offset", rational_json(p.offset)}});
  root["planes"] = planes;
  root["indexer"] = {{"modulus", space.indexer.modulus}, {"sigma", space.indexer.sigma}};
  json subs = json::array();
  for (const auto& sub : space.subregions) {
    subs.push_back({{"transform", matrix_json(sub.transform)},
                    {"shift", vector_json(sub.shift)},
                    {"stencil", sub.stencil},
                    {"psi_index", sub.psi_index}});
  }
  root["subregions"] = subs;
  json polys = json::array();
  for (const auto& rp : space.ref_polys) {
    json monos = json::array();
    for (const auto& [mono, coeff] : rp.poly.terms())
      monos.push_back({{"coeff", to_string(coeff)}, {"x_exps", mono.x_exps}, {"c_index", mono.c_index}});
    polys.push_back(monos);
  }
  root["ref_polys"] = polys;
  return root.dump(2) + "\n";
}

// --- validation -----------------------------------------------------------

namespace {

class Validator {
 public:
  explicit Validator(const SplineSpace& space) : space_(space), s_(space.dim) {}

  std::vector<Diagnostic> run() {
    if (s_ < 1 || s_ > 4) {
      error("dim", "dimension must be in [1, 4]");
      return std::move(out_);
    }
    check_lattice();
    check_region_map();
    check_planes();
    check_indexer();
    check_subregions();
    check_ref_polys();
    return std::move(out_);
  }

 private:
  void error(std::string path, std::string message) {
    out_.push_back({Severity::error, std::move(path), std::move(message)});
  }
  void warning(std::string path, std::string message) {
    out_.push_back({Severity::warning, std::move(path), std::move(message)});
  }

  bool square(const RationalMatrix& m, const std::string& path) {
    if (m.size() != s_) {
      error(path, "expected a " + std::to_string(s_) + "x" + std::to_string(s_) + " matrix");
      return false;
    }
    return true;
  }
  bool sized(const RationalVector& v, const std::string& path) {
    if (static_cast<int>(v.size()) != s_) {
      error(path, "expected " + std::to_string(s_) + " entries");
      return false;
    }
    return true;
  }

  static bool integral(const RationalVector& v) {
    return std::all_of(v.begin(), v.end(), [](const Rational& r) { return is_integer(r); });
  }

  void check_lattice() {
    const auto& lat = space_.lattice;
    const bool gen_ok = square(lat.generator, "lattice.generator");
    if (gen_ok && !lat.generator.invertible()) {
      error("lattice.generator", "generator matrix is singular");
      return;
    }
    if (lat.cosets.empty()) {
      error("lattice.cosets", "at least one coset offset is required");
      return;
    }
    bool shapes_ok = true;
    for (std::size_t i = 0; i < lat.cosets.size(); ++i)
      shapes_ok = sized(lat.cosets[i], index_path("lattice.cosets", i)) && shapes_ok;
    if (!shapes_ok) return;
    if (std::any_of(lat.cosets[0].begin(), lat.cosets[0].end(), [](const Rational& r) { return r != 0; })) {
      error("lattice.cosets[0]", "first coset offset must be the origin");
    }
    for (std::size_t i = 0; i < lat.cosets.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (integral(lat.cosets[i] - lat.cosets[j])) {
          error(index_path("lattice.cosets", i),
                "coset offset coincides with coset " + std::to_string(j) + " modulo Z^s");
        }
      }
    }
    if (!gen_ok) return;
    const RationalMatrix inv = lat.generator.inverse();
    if (!inv.is_integral()) {
      error("lattice.generator", "Z^s must be a sub-lattice of the generated lattice (inverse not integral)");
      return;
    }
    for (std::size_t i = 0; i < lat.cosets.size(); ++i) {
      if (!integral(inv * lat.cosets[i])) {
        error(index_path("lattice.cosets", i), "coset offset is not a lattice site");
      }
    }
    const Rational index = abs(inv.determinant());
    if (index != Rational(static_cast<long long>(lat.cosets.size()))) {
      error("lattice.cosets", "lattice has " + to_string(index) + " Cartesian cosets but " +
                                  std::to_string(lat.cosets.size()) + " offsets are listed");
    }
  }

  void check_region_map() {
    const auto& rm = space_.region_map;
    if (rm.shape != RegionShape::parallelepiped) return;
    if (!square(rm.basis, "region_map.basis")) return;
    if (!rm.basis.invertible()) {
      error("region_map.basis", "parallelepiped basis is singular");
    } else if (!rm.basis.is_integral()) {
      error("region_map.basis", "parallelepiped basis must map Z^s into Z^s (integer entries)");
    }
  }

  void check_planes() {
    if (space_.planes.size() > 32) error("planes", "at most 32 planes fit the BSP bitmask");
    for (std::size_t i = 0; i < space_.planes.size(); ++i) {
      const auto& p = space_.planes[i];
      const std::string path = index_path("planes", i);
      if (!sized(p.normal, join(path, "normal"))) continue;
      if (std::all_of(p.normal.begin(), p.normal.end(), [](const Rational& r) { return r == 0; })) {
        error(join(path, "normal"), "plane normal is zero");
      }
    }
  }

  void check_indexer() {
    const auto& ix = space_.indexer;
    const int regions = space_.subregion_count();
    if (ix.modulus < 1) {
      error("indexer.modulus", "modulus must be positive");
      return;
    }
    if (static_cast<int>(ix.sigma.size()) != ix.modulus) {
      error("indexer.sigma", "sigma has " + std::to_string(ix.sigma.size()) + " entries but modulus is " +
                                 std::to_string(ix.modulus));
      return;
    }
    std::set<int> seen;
    for (std::size_t i = 0; i < ix.sigma.size(); ++i) {
      const int v = ix.sigma[i];
      if (v == SubRegionIndexer::kUnreachable) {
        warning(index_path("indexer.sigma", i), "BSP index marked unreachable");
      } else if (v < 0 || v >= regions) {
        error(index_path("indexer.sigma", i), "sub-region index " + std::to_string(v) + " out of range");
      } else {
        seen.insert(v);
      }
    }
    for (int r = 0; r < regions; ++r) {
      if (!seen.contains(r)) error("indexer.sigma", "sub-region " + std::to_string(r) + " is never selected");
    }
  }

  static std::vector<int> transformed_site(const SubRegion& sub, const std::vector<int>& ref_site) {
    RationalVector v;
    for (int c : ref_site) v.emplace_back(c);
    const RationalVector mapped = sub.transform.inverse() * v + sub.shift;
    std::vector<int> out;
    for (const auto& r : mapped) {
      if (!is_integer(r)) return {};
      out.push_back(static_cast<int>(to_int64(r)));
    }
    return out;
  }

  void check_subregions() {
    const int k = space_.ref_poly_count();
    if (space_.subregions.empty()) {
      error("subregions", "at least one sub-region is required");
      return;
    }
    const std::size_t n = space_.subregions.front().stencil.size();
    std::vector<int> reference(k, -1);
    std::vector<bool> transform_ok(space_.subregions.size(), false);
    for (std::size_t i = 0; i < space_.subregions.size(); ++i) {
      const auto& sub = space_.subregions[i];
      const std::string path = index_path("subregions", i);
      if (square(sub.transform, join(path, "transform"))) {
        if (!sub.transform.invertible()) {
          error(join(path, "transform"), "transform is singular");
        } else {
          transform_ok[i] = true;
        }
      }
      const bool shift_ok = sized(sub.shift, join(path, "shift"));
      std::set<std::vector<int>> sites;
      for (std::size_t j = 0; j < sub.stencil.size(); ++j) {
        const std::string spath = index_path(join(path, "stencil"), j);
        if (static_cast<int>(sub.stencil[j].size()) != s_) {
          error(spath, "expected " + std::to_string(s_) + " coordinates");
        } else if (!sites.insert(sub.stencil[j]).second) {
          error(spath, "stencil site repeated");
        }
      }
      if (sub.stencil.size() != n) {
        error(join(path, "stencil"), "all sub-regions must share one stencil length (" + std::to_string(n) + ")");
      }
      if (sub.psi_index < 0 || sub.psi_index >= k) {
        error(join(path, "psi_index"), "reference polynomial index " + std::to_string(sub.psi_index) + " out of range");
        continue;
      }
      const auto symbols = space_.ref_polys[sub.psi_index].poly.symbols();
      const std::size_t symbol_count = symbols.empty() ? 0 : static_cast<std::size_t>(symbols.back() + 1);
      if (sub.stencil.size() != symbol_count) {
        error(join(path, "stencil"), "stencil has " + std::to_string(sub.stencil.size()) + " sites but ref_polys[" +
                                         std::to_string(sub.psi_index) + "] uses " + std::to_string(symbol_count) +
                                         " symbols");
      }
      if (transform_ok[i] && shift_ok && reference[sub.psi_index] < 0 && sub.transform.is_identity() &&
          std::all_of(sub.shift.begin(), sub.shift.end(), [](const Rational& r) { return r == 0; })) {
        reference[sub.psi_index] = static_cast<int>(i);
      }
    }
    for (int p = 0; p < k; ++p) {
      if (reference[p] >= 0) continue;
      const auto it = std::find_if(space_.subregions.begin(), space_.subregions.end(),
                                   [p](const SubRegion& sub) { return sub.psi_index == p; });
      if (it == space_.subregions.end()) {
        warning(index_path("ref_polys", p), "reference polynomial is not used by any sub-region");
      } else {
        error(index_path("subregions", static_cast<std::size_t>(it - space_.subregions.begin())) + ".transform",
              "reference sub-region of ref_polys[" + std::to_string(p) + "] must have identity transform and zero shift");
      }
    }
    // Stencils of symmetric copies should be the reference stencil carried
    // back through the transform: site_j = T^-1 * pi_j + t.
    for (std::size_t i = 0; i < space_.subregions.size(); ++i) {
      const auto& sub = space_.subregions[i];
      if (!transform_ok[i] || sub.psi_index < 0 || sub.psi_index >= k) continue;
      const int ref = reference[sub.psi_index];
      if (ref < 0 || ref == static_cast<int>(i) || sub.shift.size() != static_cast<std::size_t>(s_)) continue;
      const auto& ref_stencil = space_.subregions[ref].stencil;
      if (ref_stencil.size() != sub.stencil.size()) continue;
      for (std::size_t j = 0; j < sub.stencil.size(); ++j) {
        if (ref_stencil[j].size() != static_cast<std::size_t>(s_)) break;
        if (transformed_site(sub, ref_stencil[j]) != sub.stencil[j]) {
          warning(index_path(index_path("subregions", i) + ".stencil", j),
                  "site differs from the reference site mapped through T^-1 and shift");
          break;
        }
      }
    }
  }

  void check_ref_polys() {
    if (space_.ref_polys.empty()) error("ref_polys", "at least one reference polynomial is required");
    for (std::size_t i = 0; i < space_.ref_polys.size(); ++i) {
      const auto& p = space_.ref_polys[i].poly;
      const std::string path = index_path("ref_polys", i);
      if (p.dim() != s_) {
        error(path, "polynomial dimension does not match dim");
        continue;
      }
      const auto symbols = p.symbols();
      for (std::size_t j = 0; j < symbols.size(); ++j) {
        if (symbols[j] != static_cast<int>(j)) {
          error(path, "coefficient symbols must be exactly c0..c" + std::to_string(symbols.size() - 1) +
                          " (c" + std::to_string(j) + " missing)");
          break;
        }
      }
    }
  }

  const SplineSpace& space_;
  int s_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate_space(const SplineSpace& space) { return Validator(space).run(); }

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::error; });
}

}  // namespace splinegen
