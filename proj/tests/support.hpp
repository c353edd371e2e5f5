#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "splinegen/ir.hpp"
#include "splinegen/model.hpp"
#include "splinegen/poly.hpp"
#include "splinegen/schedule.hpp"

namespace splinegen::testing {

inline std::string fixture_path(const std::string& name) { return std::string(SPLINEGEN_FIXTURE_DIR) + "/" + name; }

inline SplineSpace load_fixture(const std::string& name) { return load_space(fixture_path(name)); }

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = {
      "linear1d.json",         "zp_element.json",    "trilinear.json",
      "cubic1d_two_poly.json", "cubic1d_mirror.json", "bcc_two_coset_trilinear.json",
  };
  return names;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline std::vector<double> random_point(std::mt19937_64& rng, int dim, double lo, double hi) {
  std::vector<double> x(dim);
  for (auto& v : x) v = uniform(rng, lo, hi);
  return x;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-12});
}

/// Random polynomial in `dim` variables, total x-degree <= max_degree, over
/// symbols c_0..c_{symbols-1}; optionally includes symbol-free terms.
inline Poly random_poly(std::mt19937_64& rng, int dim, int max_degree, int symbols, int terms, bool constants) {
  Poly p(dim);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<int> sym(constants ? -1 : 0, symbols - 1);
  std::uniform_int_distribution<int> num(-9, 9);
  std::uniform_int_distribution<int> den(1, 8);
  for (int t = 0; t < terms; ++t) {
    Monomial m;
    m.x_exps.assign(dim, 0);
    int budget = deg(rng);
    for (int a = 0; a < dim && budget > 0; ++a) {
      std::uniform_int_distribution<int> take(0, budget);
      m.x_exps[a] = take(rng);
      budget -= m.x_exps[a];
    }
    m.c_index = sym(rng);
    p.add_term(m, Rational(num(rng)) / den(rng));
  }
  // Every symbol appears at least once.
  for (int j = 0; j < symbols; ++j) {
    Monomial m;
    m.x_exps.assign(dim, 0);
    m.c_index = j;
    if (p.terms().count(m) == 0) p.add_term(m, Rational(j + 1, 3));
  }
  return p;
}

// --- plan walker ----------------------------------------------------------------

inline int symbol_count(const ChunkSet& set) {
  int n = 0;
  for (const auto& c : set.chunks) n += static_cast<int>(c.symbols.size());
  return n;
}

/// Replays a plan and reports the first broken invariant, or "" if none.
inline std::string plan_violation(const EvalPlan& plan, const ChunkSet& set, int d) {
  const int n = symbol_count(set);
  std::vector<int> fetched(n, 0);
  std::vector<int> stalled(n, 0);
  std::set<int> computed;
  int in_flight = 0;
  int peak = 0;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const Step& s = plan.steps[i];
    const std::string at = " at step " + std::to_string(i);
    switch (s.kind) {
      case Step::Kind::fetch:
        if (s.index < 0 || s.index >= n) return "fetch of unknown symbol" + at;
        if (fetched[s.index]++) return "symbol fetched twice" + at;
        peak = std::max(peak, ++in_flight);
        if (in_flight > d) return "more than d fetches in flight" + at;
        break;
      case Step::Kind::stall:
        if (s.index < 0 || s.index >= n) return "stall on unknown symbol" + at;
        if (!fetched[s.index]) return "stall before fetch" + at;
        if (stalled[s.index]++) return "symbol stalled twice" + at;
        --in_flight;
        break;
      case Step::Kind::compute: {
        if (s.index < 0 || s.index >= static_cast<int>(set.chunks.size())) return "compute of unknown chunk" + at;
        if (!computed.insert(s.index).second) return "chunk computed twice" + at;
        for (int sym : set.chunks[s.index].symbols)
          if (!stalled[sym]) return "compute before its stalls" + at;
        break;
      }
    }
  }
  for (int j = 0; j < n; ++j)
    if (fetched[j] != 1 || stalled[j] != 1) return "symbol c" + std::to_string(j) + " not fetched and stalled once";
  if (computed.size() != set.chunks.size()) return "chunk never computed";
  if (peak != std::min(d, n)) return "peak in-flight " + std::to_string(peak) + " != min(d, n)";
  if (peak != plan.max_in_flight()) return "max_in_flight disagrees with walker";
  return "";
}

// --- ZP element ground truth --------------------------------------------------

using Vec2 = std::array<double, 2>;

inline double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    twice += a[0] * b[1] - a[1] * b[0];
  }
  return std::abs(twice) / 2.0;
}

/// Clips a convex polygon to the half-plane n.p <= c.
inline std::vector<Vec2> clip(const std::vector<Vec2>& poly, const Vec2& n, double c) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    const double fp = n[0] * p[0] + n[1] * p[1] - c;
    const double fq = n[0] * q[0] + n[1] * q[1] - c;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
      const double t = fp / (fp - fq);
      out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  return out;
}

/// Zwart-Powell element as half the area of the unit square centred at y
/// intersected with the diamond |u| + |v| <= 1.
inline double zp_area_oracle(double y0, double y1) {
  std::vector<Vec2> square = {{y0 - 0.5, y1 - 0.5}, {y0 + 0.5, y1 - 0.5}, {y0 + 0.5, y1 + 0.5}, {y0 - 0.5, y1 + 0.5}};
  for (const Vec2 n : {Vec2{1, 1}, Vec2{1, -1}, Vec2{-1, 1}, Vec2{-1, -1}}) {
    square = clip(square, n, 1.0);
    if (square.size() < 3) return 0.0;
  }
  return polygon_area(square) / 2.0;
}

// --- closed-form reconstructions ------------------------------------------------

inline std::int64_t wrap(std::int64_t z, std::int64_t e) { return ((z % e) + e) % e; }

inline double linear_closed_form(const ir::DataVolume& v, double x) {
  const double f = std::floor(x);
  const double t = x - f;
  const auto k = static_cast<std::int64_t>(f);
  const auto e = v.extents()[0];
  return v.coset(0)[wrap(k, e)] * (1 - t) + v.coset(0)[wrap(k + 1, e)] * t;
}

inline double trilinear_closed_form(const ir::DataVolume& v, int coset, double x, double y, double z) {
  const std::array<double, 3> p = {x, y, z};
  std::array<std::int64_t, 3> k{};
  std::array<double, 3> t{};
  for (int a = 0; a < 3; ++a) {
    k[a] = static_cast<std::int64_t>(std::floor(p[a]));
    t[a] = p[a] - static_cast<double>(k[a]);
  }
  double sum = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    std::array<std::int64_t, 3> site{};
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      const int bit = (corner >> a) & 1;
      site[a] = k[a] + bit;
      w *= bit ? t[a] : 1 - t[a];
    }
    sum += w * v.at(coset, site);
  }
  return sum;
}

inline double cubic_bspline(double t) {
  t = std::abs(t);
  if (t < 1) return 2.0 / 3.0 - t * t + t * t * t / 2.0;
  if (t < 2) return (2 - t) * (2 - t) * (2 - t) / 6.0;
  return 0.0;
}

inline double cubic_closed_form(const ir::DataVolume& v, double x) {
  const auto k = static_cast<std::int64_t>(std::floor(x));
  double sum = 0.0;
  for (std::int64_t j = k - 2; j <= k + 3; ++j) sum += v.coset(0)[wrap(j, v.extents()[0])] * cubic_bspline(x - j);
  return sum;
}

}  // namespace splinegen::testing
