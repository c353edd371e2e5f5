#include <gtest/gtest.h>

#include "json.hpp"
#include "splinegen/bench.hpp"
#include "splinegen/codegen.hpp"
#include "splinegen/oracle.hpp"
#include "support.hpp"

namespace splinegen::codegen {
namespace {

using ir::Op;
using ir::Operand;
using ir::Section;
using splinegen::testing::close_rel;
using splinegen::testing::fixture_path;
using splinegen::testing::load_fixture;
using splinegen::testing::random_point;
using splinegen::testing::uniform;

GenConfig config(int m, int d, BranchMode mode = BranchMode::predicated, bool refetch = false) {
  GenConfig cfg;
  cfg.params = {m, d, mode, refetch};
  return cfg;
}

ir::DataVolume random_volume(const SplineSpace& space, std::int64_t edge, std::uint64_t seed) {
  return bench::make_volume(space, std::vector<std::int64_t>(space.dim, edge), seed);
}

SplineSpace with_rounding(const std::string& fixture, const std::string& rounding) {
  auto doc = nlohmann::json::parse(read_text_file(fixture_path(fixture)));
  doc["region_map"]["rounding"] = rounding;
  return parse_space_unchecked(doc.dump());
}

/// Builds a probe program from the preamble plus `body`, returning one value.
template <class Body>
ir::Program probe(const SplineSpace& space, Body body) {
  GenContext ctx(space, config(1, 1));
  gen_preamble(ctx);
  std::vector<Operand> x;
  for (int a = 0; a < space.dim; ++a) x.push_back(ctx.builder.param(a));
  Operand out = body(ctx, x);
  if (out.kind == Operand::Kind::int_const) out = Operand::of_float(static_cast<double>(out.integer));
  ctx.builder.ret(out);
  return std::move(ctx.builder).build();
}

Operand as_float(GenContext& ctx, Operand v) {
  if (v.kind == Operand::Kind::int_const) return Operand::of_float(static_cast<double>(v.integer));
  return ctx.builder.sitofp(v);
}

double run(const ir::Program& p, std::vector<double> x) {
  const ir::DataVolume v(static_cast<int>(x.size()), p.coset_count(), std::vector<std::int64_t>(x.size(), 4));
  return ir::interpret(p, x, v);
}

TEST(Preamble, ZpTables) {
  const ir::Program p = generate(load_fixture("zp_element.json"), config(2, 4));
  EXPECT_NE(p.find_table("sigma"), nullptr);
  EXPECT_NE(p.find_table("xform"), nullptr);
  EXPECT_NE(p.find_table("stencil"), nullptr);
  EXPECT_EQ(p.find_table("psi_index"), nullptr);
  EXPECT_EQ(p.find_table("shift"), nullptr);
  EXPECT_EQ(p.find_table("xform")->size(), 16u);
  EXPECT_EQ(p.find_table("stencil")->size(), 56u);
}

TEST(Preamble, TrivialSpacesInlineEverything) {
  EXPECT_TRUE(generate(load_fixture("linear1d.json"), config(1, 2)).tables().empty());
  const ir::Program tri = generate(load_fixture("trilinear.json"), config(2, 3));
  EXPECT_EQ(tri.find_table("xform"), nullptr);
  EXPECT_EQ(tri.find_table("shift"), nullptr);
  EXPECT_EQ(tri.find_table("sigma"), nullptr);
}

TEST(Preamble, TwoPolyTables) {
  const ir::Program p = generate(load_fixture("cubic1d_two_poly.json"), config(1, 1));
  EXPECT_NE(p.find_table("psi_index"), nullptr);
  const ir::Program mirror = generate(load_fixture("cubic1d_mirror.json"), config(1, 1));
  EXPECT_EQ(mirror.find_table("psi_index"), nullptr);
  EXPECT_NE(mirror.find_table("xform"), nullptr);
}

TEST(CosetLoop, SingleCosetHasNoLoop) {
  const ir::Program p = generate(load_fixture("trilinear.json"), config(4, 8));
  EXPECT_EQ(p.blocks().size(), 1u);
  EXPECT_EQ(p.count(Op::phi), 0);
}

TEST(CosetLoop, TwoCosetsLoopOrUnroll) {
  const SplineSpace bcc = load_fixture("bcc_two_coset_trilinear.json");
  const ir::Program looped = generate(bcc, config(2, 4));
  EXPECT_EQ(looped.count(Op::condbr, Section::coset_loop), 1);
  EXPECT_EQ(looped.count(Op::condbr), 1);
  EXPECT_NE(looped.find_table("coset_offset"), nullptr);
  GenConfig cfg = config(2, 4);
  cfg.unroll_cosets = true;
  const ir::Program unrolled = generate(bcc, cfg);
  EXPECT_EQ(unrolled.count(Op::condbr), 0);
  EXPECT_EQ(unrolled.count(Op::phi), 0);
  EXPECT_EQ(unrolled.find_table("coset_offset"), nullptr);
  const ir::DataVolume v = random_volume(bcc, 6, 3);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto x = random_point(rng, 3, -3, 9);
    EXPECT_TRUE(close_rel(ir::interpret(looped, x, v), ir::interpret(unrolled, x, v), 1e-14));
  }
}

TEST(Rho, RoundNearest) {
  const SplineSpace s = with_rounding("zp_element.json", "round_nearest");
  for (int a = 0; a < 2; ++a) {
    const auto k = probe(s, [&](GenContext& ctx, const std::vector<Operand>& x) { return as_float(ctx, gen_rho(ctx, x).k[a]); });
    const auto sh = probe(s, [&](GenContext& ctx, const std::vector<Operand>& x) { return gen_rho(ctx, x).shifted[a]; });
    EXPECT_EQ(run(k, {1.3, 2.7}), a == 0 ? 1.0 : 3.0);
    EXPECT_NEAR(run(sh, {1.3, 2.7}), a == 0 ? 0.3 : -0.3, 1e-15);
    // Halfway points go up.
    EXPECT_EQ(run(k, {0.5, -0.5}), a == 0 ? 1.0 : 0.0);
  }
}

TEST(Rho, Floor) {
  const SplineSpace s = with_rounding("zp_element.json", "floor");
  for (int a = 0; a < 2; ++a) {
    const auto k = probe(s, [&](GenContext& ctx, const std::vector<Operand>& x) { return as_float(ctx, gen_rho(ctx, x).k[a]); });
    const auto sh = probe(s, [&](GenContext& ctx, const std::vector<Operand>& x) { return gen_rho(ctx, x).shifted[a]; });
    EXPECT_EQ(run(k, {1.3, 2.7}), a == 0 ? 1.0 : 2.0);
    EXPECT_NEAR(run(sh, {1.3, 2.7}), a == 0 ? 0.3 : 0.7, 1e-15);
    EXPECT_EQ(run(k, {-0.25, -1.0}), a == 0 ? -1.0 : -1.0);
  }
}

TEST(Rho, ZpShiftedPointLiesInUnitCell) {
  const SplineSpace zp = load_fixture("zp_element.json");
  std::vector<ir::Program> sh;
  for (int a = 0; a < 2; ++a)
    sh.push_back(probe(zp, [&](GenContext& ctx, const std::vector<Operand>& x) { return gen_rho(ctx, x).shifted[a]; }));
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_point(rng, 2, -50, 50);
    for (int a = 0; a < 2; ++a) {
      const double v = run(sh[a], x);
      // Exact check: x - v is an integer and v is in [-1/2, 1/2).
      const Rational exact = Rational(x[a]) - Rational(v);
      EXPECT_TRUE(is_integer(exact)) << x[a];
      EXPECT_GE(Rational(v), Rational(-1, 2));
      EXPECT_LT(Rational(v), Rational(1, 2));
    }
  }
}

TEST(Membership, IdentitySigmaGivesRawBspIndex) {
  auto doc = nlohmann::json::parse(read_text_file(fixture_path("zp_element.json")));
  doc["indexer"]["sigma"] = {0, 1, 2, 3};
  const SplineSpace s = parse_space_unchecked(doc.dump());
  const auto p = probe(s, [](GenContext& ctx, const std::vector<Operand>& x) { return as_float(ctx, gen_membership(ctx, x)); });
  EXPECT_EQ(run(p, {0.3, 0.1}), 3.0);
  EXPECT_EQ(run(p, {-0.3, 0.1}), 0.0);
  EXPECT_EQ(run(p, {0.1, 0.3}), 2.0);
  EXPECT_EQ(run(p, {0.1, -0.3}), 1.0);
  EXPECT_EQ(run(p, {0.0, 0.0}), 3.0);  // plane tests are >= 0
}

TEST(Membership, NoPlanesFoldsToConstant) {
  const SplineSpace s = load_fixture("trilinear.json");
  GenContext ctx(s, config(1, 1));
  gen_preamble(ctx);
  std::vector<Operand> x;
  for (int a = 0; a < 3; ++a) x.push_back(ctx.builder.param(a));
  const Operand q = gen_membership(ctx, x);
  EXPECT_EQ(q.kind, Operand::Kind::int_const);
  EXPECT_EQ(q.integer, 0);
  ctx.builder.ret(Operand::of_float(0.0));
  const ir::Program p = std::move(ctx.builder).build();
  EXPECT_EQ(p.count(Op::fcmp), 0);
}

TEST(Membership, ZpMatchesGeometry) {
  const SplineSpace zp = load_fixture("zp_element.json");
  const auto p = probe(zp, [](GenContext& ctx, const std::vector<Operand>& x) { return as_float(ctx, gen_membership(ctx, x)); });
  std::mt19937_64 rng(9);
  for (int i = 0; i < 5000; ++i) {
    const auto x = random_point(rng, 2, -0.5, 0.5);
    if (std::abs(std::abs(x[0]) - std::abs(x[1])) < 1e-9) continue;
    const int j = static_cast<int>(run(p, x));
    ASSERT_GE(j, 0);
    ASSERT_LT(j, 4);
    const auto& t = zp.subregions[j].transform;
    const double y0 = to_double(t(0, 0)) * x[0] + to_double(t(0, 1)) * x[1];
    const double y1 = to_double(t(1, 0)) * x[0] + to_double(t(1, 1)) * x[1];
    EXPECT_GE(y0, std::abs(y1)) << x[0] << "," << x[1] << " -> " << j;
  }
}

TEST(Dispatch, TwoPolyShapes) {
  const SplineSpace s = load_fixture("cubic1d_two_poly.json");
  const ir::Program pred = generate(s, config(2, 3, BranchMode::predicated));
  EXPECT_EQ(pred.count(Op::select, Section::dispatch), 2);
  EXPECT_EQ(pred.count(Op::condbr), 0);
  const ir::Program branchy = generate(s, config(2, 3, BranchMode::branchy));
  EXPECT_EQ(branchy.count(Op::condbr, Section::dispatch), 1);
  EXPECT_EQ(branchy.count(Op::condbr), 1);
  EXPECT_EQ(branchy.count(Op::phi, Section::dispatch), 1);
}

TEST(Dispatch, BranchyBranchesOnlyWhenNeeded) {
  for (const char* name : {"zp_element.json", "linear1d.json", "cubic1d_mirror.json"}) {
    const ir::Program p = generate(load_fixture(name), config(1, 2, BranchMode::branchy));
    EXPECT_EQ(p.count(Op::condbr), 0) << name;
  }
}

TEST(Dispatch, PredicatedIsBranchFree) {
  for (const auto& name : splinegen::testing::fixture_names()) {
    const SplineSpace s = load_fixture(name);
    for (const auto& cell : bench::lower_diagonal_grid(s.stencil_size())) {
      for (bool refetch : {false, true}) {
        const ir::Program p = generate(s, config(cell.m, cell.d, BranchMode::predicated, refetch));
        for (Section sec : {Section::rho, Section::membership, Section::lookup, Section::dispatch, Section::accumulate})
          EXPECT_EQ(p.count(Op::condbr, sec), 0) << name << " m=" << cell.m << " d=" << cell.d;
      }
    }
  }
}

TEST(Refetch, SameValuesMoreTableLoads) {
  const SplineSpace zp = load_fixture("zp_element.json");
  const ir::Program off = generate(zp, config(2, 4, BranchMode::predicated, false));
  const ir::Program on = generate(zp, config(2, 4, BranchMode::predicated, true));
  const ir::DataVolume v = random_volume(zp, 8, 10);
  ir::Interpreter a(off);
  ir::Interpreter b(on);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto x = random_point(rng, 2, -5, 5);
    EXPECT_EQ(a.run(x, v), b.run(x, v));
  }
  EXPECT_GT(b.stats().table_loads, a.stats().table_loads);
  EXPECT_GT(on.count(Op::table_load), off.count(Op::table_load));
}

TEST(Evaluation, FetchesPerPointEqualStencilTimesCosets) {
  for (const auto& name : splinegen::testing::fixture_names()) {
    const SplineSpace s = load_fixture(name);
    for (auto mode : {BranchMode::predicated, BranchMode::branchy}) {
      const ir::Program p = generate(s, config(1, s.stencil_size(), mode));
      const ir::DataVolume v = random_volume(s, 6, 12);
      ir::Interpreter interp(p);
      interp.run(std::vector<double>(s.dim, 0.37), v);
      EXPECT_EQ(interp.stats().fetches, static_cast<std::uint64_t>(s.stencil_size() * s.coset_count())) << name;
    }
  }
}

TEST(Evaluation, ClosedForms) {
  std::mt19937_64 rng(13);
  const auto check = [&](const char* name, auto closed) {
    const SplineSpace s = load_fixture(name);
    const ir::DataVolume v = random_volume(s, 7, 14);
    for (auto mode : {BranchMode::predicated, BranchMode::branchy}) {
      const ir::Program p = generate(s, config(2, s.stencil_size(), mode));
      ir::Interpreter interp(p);
      for (int i = 0; i < 1000; ++i) {
        const auto x = random_point(rng, s.dim, -10, 10);
        const double expected = closed(v, x);
        EXPECT_TRUE(close_rel(interp.run(x, v), expected, 1e-12)) << name << " " << x[0];
      }
    }
  };
  using splinegen::testing::cubic_closed_form;
  using splinegen::testing::linear_closed_form;
  using splinegen::testing::trilinear_closed_form;
  check("linear1d.json", [](const ir::DataVolume& v, const std::vector<double>& x) { return linear_closed_form(v, x[0]); });
  check("trilinear.json",
        [](const ir::DataVolume& v, const std::vector<double>& x) { return trilinear_closed_form(v, 0, x[0], x[1], x[2]); });
  check("cubic1d_two_poly.json", [](const ir::DataVolume& v, const std::vector<double>& x) { return cubic_closed_form(v, x[0]); });
  check("cubic1d_mirror.json", [](const ir::DataVolume& v, const std::vector<double>& x) { return cubic_closed_form(v, x[0]); });
  check("bcc_two_coset_trilinear.json", [](const ir::DataVolume& v, const std::vector<double>& x) {
    // Each coset carries half weight so the two together reproduce constants.
    return 0.5 * (trilinear_closed_form(v, 0, x[0], x[1], x[2]) +
                  trilinear_closed_form(v, 1, x[0] - 0.5, x[1] - 0.5, x[2] - 0.5));
  });
}

TEST(Evaluation, ConfigurationInvariance) {
  const SplineSpace zp = load_fixture("zp_element.json");
  const ir::DataVolume v = random_volume(zp, 9, 15);
  std::mt19937_64 rng(16);
  std::vector<std::vector<double>> points;
  for (int i = 0; i < 50; ++i) points.push_back(random_point(rng, 2, -9, 9));
  const ir::Program base = generate(zp, config(7, 7));
  std::vector<double> expected;
  for (const auto& x : points) expected.push_back(ir::interpret(base, x, v));
  for (const auto& cell : bench::lower_diagonal_grid(7)) {
    for (auto mode : {BranchMode::predicated, BranchMode::branchy}) {
      for (auto width : {FloatWidth::f64}) {
        GenConfig cfg = config(cell.m, cell.d, mode, cell.m % 2 == 0);
        cfg.float_width = width;
        const ir::Program p = generate(zp, cfg);
        ir::Interpreter interp(p);
        for (std::size_t i = 0; i < points.size(); ++i)
          EXPECT_TRUE(close_rel(interp.run(points[i], v), expected[i], 1e-12)) << cell.m << "," << cell.d;
      }
    }
  }
}

TEST(Evaluation, SinglePrecisionIsClose) {
  const SplineSpace zp = load_fixture("zp_element.json");
  const ir::DataVolume v = random_volume(zp, 9, 17);
  GenConfig cfg = config(2, 4);
  cfg.float_width = FloatWidth::f32;
  const ir::Program p = generate(zp, cfg);
  const oracle::Reference ref(zp);
  std::mt19937_64 rng(18);
  for (int i = 0; i < 500; ++i) {
    const auto x = random_point(rng, 2, -4, 4);
    EXPECT_NEAR(ir::interpret(p, x, v), ref.eval(x, v), 1e-5);
  }
}

TEST(Generate, Deterministic) {
  const SplineSpace s = load_fixture("bcc_two_coset_trilinear.json");
  EXPECT_EQ(generate(s, config(3, 5, BranchMode::branchy, true)).to_string(),
            generate(s, config(3, 5, BranchMode::branchy, true)).to_string());
}

TEST(Generate, RejectsInvalidInput) {
  const SplineSpace zp = load_fixture("zp_element.json");
  EXPECT_THROW(generate(zp, config(3, 2)), std::invalid_argument);
  SplineSpace broken = zp;
  broken.subregions[0].stencil.pop_back();
  EXPECT_THROW(generate(broken, config(1, 1)), CodegenError);
}

TEST(Generate, EveryZpConfigVerifies) {
  const SplineSpace zp = load_fixture("zp_element.json");
  for (const auto& cell : bench::lower_diagonal_grid(7))
    for (auto mode : {BranchMode::predicated, BranchMode::branchy})
      for (bool refetch : {false, true})
        for (auto width : {FloatWidth::f64, FloatWidth::f32}) {
          GenConfig cfg = config(cell.m, cell.d, mode, refetch);
          cfg.float_width = width;
          EXPECT_NO_THROW(ir::verify(generate(zp, cfg)));
        }
}

TEST(FloatWidth, Parses) {
  EXPECT_EQ(parse_float_width("f32"), FloatWidth::f32);
  EXPECT_EQ(parse_float_width("double"), FloatWidth::f64);
  EXPECT_THROW(parse_float_width("f16"), std::invalid_argument);
}

}  // namespace
}  // namespace splinegen::codegen
