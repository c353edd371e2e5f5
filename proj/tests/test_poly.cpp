#include <gtest/gtest.h>

#include <numeric>

#include "splinegen/poly.hpp"
#include "support.hpp"

namespace splinegen {
namespace {

using testing::close_rel;
using testing::load_fixture;
using testing::random_point;
using testing::random_poly;

Poly x0(int dim = 1) { return Poly::variable(dim, 0); }
Poly one(int dim = 1) { return Poly::constant(dim, 1); }

Poly quadratic() { return x0() * x0() + x0() * Rational(2) + one(); }

const Poly& zp_psi() {
  static const Poly p = load_fixture("zp_element.json").ref_polys.at(0).poly;
  return p;
}

std::vector<int> iota(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(PolyArithmetic, ZeroCoefficientsAreDropped) {
  Poly p = x0() - x0();
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.size(), 0u);
}

TEST(PolyArithmetic, SquaringASymbolIsRejected) {
  const Poly c = Poly::symbol(1, 0);
  EXPECT_THROW((void)(c * c), std::domain_error);
}

TEST(PolyArithmetic, ProductMatchesExpansion) {
  const Poly p = (x0() + one()) * (x0() + one());
  EXPECT_EQ(p, quadratic());
}

TEST(PolyEval, ZpAtOriginWithCentreSymbolOnly) {
  const std::vector<double> x = {0, 0};
  const std::vector<double> c = {0, 0, 1, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(poly_eval(zp_psi(), x, c), 0.5);
}

TEST(PolyEval, ZpAtOriginWithUnitData) {
  const std::vector<double> x = {0, 0};
  const std::vector<double> c(7, 1.0);
  EXPECT_NEAR(poly_eval(zp_psi(), x, c), 1.0, 1e-15);
}

TEST(PolyEval, ZeroPolynomial) {
  const std::vector<double> x = {0.7, -0.2};
  const std::vector<double> c = {1, 2, 3};
  EXPECT_EQ(poly_eval(Poly(2), x, c), 0.0);
}

TEST(PolyEval, ZpUnitSubstitutionIsExactlyOne) {
  EXPECT_EQ(substitute_symbols(zp_psi(), 1), Poly::constant(2, 1));
}

TEST(Horner, UnivariateQuadratic) {
  const HornerForm h = horner_factorize(quadratic());
  EXPECT_EQ(h.to_string(), "(x0 + 2)*x0 + 1");
  EXPECT_EQ(h.expand(), quadratic());
}

TEST(Horner, ConstantIsASingleNode) {
  const HornerForm h = horner_factorize(Poly::constant(2, 5));
  ASSERT_EQ(h.nodes().size(), 1u);
  EXPECT_EQ(h.nodes()[0].kind, HornerNode::Kind::constant);
  EXPECT_EQ(h.nodes()[0].value, 5);
  EXPECT_EQ(h.operation_count(), 0);
}

TEST(Horner, ZeroPolynomialEvaluatesToZero) {
  const HornerForm h = horner_factorize(Poly(2));
  EXPECT_TRUE(h.expand().is_zero());
  EXPECT_EQ(h.eval(std::vector<double>{0.3, 0.4}, std::vector<double>{}), 0.0);
}

TEST(Horner, GreedyPicksMostFrequentVariable) {
  // c0 occurs in every term, so it is factored out before x0 or x1.
  const Poly c0 = Poly::symbol(2, 0);
  const Poly p = Poly::variable(2, 0) * c0 + Poly::variable(2, 1) * c0 + c0;
  const HornerForm h = horner_factorize(p);
  EXPECT_EQ(h.nodes()[h.root()].kind, HornerNode::Kind::mul);
  const HornerNode& rhs = h.nodes()[h.nodes()[h.root()].rhs];
  EXPECT_EQ(rhs.kind, HornerNode::Kind::sym);
  EXPECT_EQ(h.expand(), p);
}

TEST(Horner, TiesPreferLowerIndexAndXBeforeC) {
  const Poly c0 = Poly::symbol(2, 0);
  const Poly xa = Poly::variable(2, 0);
  const Poly xb = Poly::variable(2, 1);
  // x1 and c0 each occur once, as does x0: x0 wins.
  EXPECT_EQ(horner_factorize(xa + xb + c0).to_string(), "x0 + x1 + c0");
  EXPECT_EQ(horner_factorize(xb * c0 + xa * c0 * Rational(3)).to_string(), "(3*x0 + x1)*c0");
}

TEST(Horner, RandomExpansionIsExact) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Poly p = random_poly(rng, 2, 3, 3, 12, true);
    EXPECT_EQ(horner_factorize(p).expand(), p) << p.to_string();
  }
}

TEST(Horner, FidelityAgainstPolyEval) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Poly p = random_poly(rng, 3, 3, 5, 20, true);
    const HornerForm h = horner_factorize(p);
    for (int i = 0; i < 100; ++i) {
      const auto x = random_point(rng, 3, -1, 1);
      const auto c = random_point(rng, 5, -1, 1);
      EXPECT_TRUE(close_rel(poly_eval(p, x, c), h.eval(x, c), 1e-12));
    }
  }
}

TEST(Grouping, ZpGroupSizeTwoSymbolSets) {
  const ChunkSet set = group_polynomial(zp_psi(), 2, iota(7));
  ASSERT_EQ(set.chunks.size(), 4u);
  EXPECT_EQ(set.chunks[0].symbols, (std::vector<int>{0, 1}));
  EXPECT_EQ(set.chunks[1].symbols, (std::vector<int>{2, 3}));
  EXPECT_EQ(set.chunks[2].symbols, (std::vector<int>{4, 5}));
  EXPECT_EQ(set.chunks[3].symbols, (std::vector<int>{6}));
  EXPECT_EQ(set.sum(), zp_psi());
  for (std::size_t k = 0; k < set.chunks.size(); ++k) {
    for (int s : set.chunks[k].poly.symbols()) {
      EXPECT_NE(std::find(set.chunks[k].symbols.begin(), set.chunks[k].symbols.end(), s), set.chunks[k].symbols.end());
    }
  }
}

TEST(Grouping, LargeGroupIsOneChunk) {
  for (int m : {7, 8, 100}) {
    const ChunkSet set = group_polynomial(zp_psi(), m, iota(7));
    ASSERT_EQ(set.chunks.size(), 1u);
    EXPECT_EQ(set.chunks[0].poly, zp_psi());
  }
}

TEST(Grouping, SymbolFreeTermsGoToFirstChunk) {
  const Poly p = Poly::symbol(1, 1) * x0() + Poly::symbol(1, 0) + x0() + one();
  const ChunkSet set = group_polynomial(p, 1, std::vector<int>{1, 0});
  ASSERT_EQ(set.chunks.size(), 2u);
  EXPECT_EQ(set.chunks[0].symbols, std::vector<int>{1});
  EXPECT_EQ(set.chunks[0].poly, Poly::symbol(1, 1) * x0() + x0() + one());
  EXPECT_EQ(set.chunks[1].poly, Poly::symbol(1, 0));
}

TEST(Grouping, RejectsBadArguments) {
  EXPECT_THROW(group_polynomial(zp_psi(), 0, iota(7)), std::invalid_argument);
  EXPECT_THROW(group_polynomial(zp_psi(), 2, iota(6)), std::invalid_argument);
  EXPECT_THROW(group_polynomial(zp_psi(), 2, std::vector<int>{0, 1, 2, 3, 4, 5, 5}), std::invalid_argument);
}

TEST(Grouping, ChunkCountForSymbolFreePolynomial) {
  EXPECT_EQ(group_polynomial(one(), 3, std::vector<int>{}).chunks.size(), 1u);
}

TEST(Grouping, RandomSumOfChunksIsExact) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 8;
    const Poly p = random_poly(rng, 2, 3, n, 15, trial % 2 == 0);
    std::vector<int> order = iota(n);
    std::shuffle(order.begin(), order.end(), rng);
    for (int m = 1; m <= n; ++m) {
      const ChunkSet set = group_polynomial(p, m, order);
      EXPECT_EQ(static_cast<int>(set.chunks.size()), (n + m - 1) / m);
      EXPECT_EQ(set.sum(), p);
    }
  }
}

TEST(Differentiate, Quadratic) {
  EXPECT_EQ(differentiate(quadratic(), 0), x0() * Rational(2) + Poly::constant(1, 2));
}

TEST(Differentiate, ConstantGivesZero) { EXPECT_TRUE(differentiate(Poly::constant(2, 7), 1).is_zero()); }

TEST(Differentiate, AxisOutOfRange) { EXPECT_THROW(differentiate(quadratic(), 1), std::out_of_range); }

TEST(Differentiate, ZpGradientVanishesForUnitData) {
  const Poly d = differentiate(zp_psi(), 1);
  const std::vector<double> c(7, 1.0);
  EXPECT_NEAR(poly_eval(d, std::vector<double>{0, 0}, c), 0.0, 1e-15);
  const double h = 1e-6;
  const double fd = (poly_eval(zp_psi(), std::vector<double>{0, h}, c) - poly_eval(zp_psi(), std::vector<double>{0, -h}, c)) /
                    (2 * h);
  EXPECT_NEAR(fd, 0.0, 1e-6);
}

TEST(Differentiate, MatchesCentralDifferences) {
  std::mt19937_64 rng(14);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Poly p = random_poly(rng, 2, 3, 3, 10, true);
    for (int axis = 0; axis < 2; ++axis) {
      const Poly d = differentiate(p, axis);
      for (int i = 0; i < 10; ++i) {
        auto x = random_point(rng, 2, -1, 1);
        const auto c = random_point(rng, 3, -1, 1);
        const double exact = poly_eval(d, x, c);
        auto xp = x;
        auto xm = x;
        xp[axis] += h;
        xm[axis] -= h;
        const double fd = (poly_eval(p, xp, c) - poly_eval(p, xm, c)) / (2 * h);
        EXPECT_LE(std::abs(exact - fd), 1e-5 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST(PolyEval, LinearInData) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Poly p = random_poly(rng, 2, 3, 4, 12, false);
    ASSERT_TRUE(p.every_term_has_symbol());
    const auto x = random_point(rng, 2, -1, 1);
    auto c = random_point(rng, 4, -1, 1);
    const double alpha = testing::uniform(rng, -3, 3);
    const double base = poly_eval(p, x, c);
    for (auto& v : c) v *= alpha;
    EXPECT_TRUE(close_rel(poly_eval(p, x, c), alpha * base, 1e-14));
  }
}

}  // namespace
}  // namespace splinegen
