#include <gtest/gtest.h>

#include <numeric>

#include "splinegen/schedule.hpp"
#include "support.hpp"

namespace splinegen {
namespace {

using testing::load_fixture;

ChunkSet zp_chunks(int m) {
  const SplineSpace zp = load_fixture("zp_element.json");
  std::vector<int> order(zp.stencil_size());
  std::iota(order.begin(), order.end(), 0);
  return group_polynomial(zp.ref_polys[0].poly, m, order);
}

/// Synthetic chunk layout: only the symbol blocks matter to the scheduler.
ChunkSet blocks(const std::vector<int>& sizes) {
  ChunkSet set;
  int next = 0;
  for (int size : sizes) {
    Chunk chunk{Poly(1), {}};
    for (int i = 0; i < size; ++i) chunk.symbols.push_back(next++);
    set.chunks.push_back(std::move(chunk));
  }
  return set;
}

TEST(SchedulePipeline, ZpGoldenTrace) {
  const EvalPlan plan = schedule_pipeline(zp_chunks(2), {2, 4, BranchMode::predicated, false});
  EXPECT_EQ(plan.dump(),
            "FETCH c0\nFETCH c1\nFETCH c2\nFETCH c3\n"
            "STALL c0\nSTALL c1\nCOMPUTE 0\n"
            "FETCH c4\nFETCH c5\n"
            "STALL c2\nSTALL c3\nCOMPUTE 1\n"
            "FETCH c6\n"
            "STALL c4\nSTALL c5\nCOMPUTE 2\n"
            "STALL c6\nCOMPUTE 3\n");
  EXPECT_EQ(plan.steps.size(), 18u);
}

TEST(SchedulePipeline, SingleChunkFullDepth) {
  const EvalPlan plan = schedule_pipeline(zp_chunks(7), {7, 7, BranchMode::predicated, false});
  ASSERT_EQ(plan.steps.size(), 15u);
  for (int j = 0; j < 7; ++j) {
    EXPECT_EQ(plan.steps[j], (Step{Step::Kind::fetch, j}));
    EXPECT_EQ(plan.steps[7 + j], (Step{Step::Kind::stall, j}));
  }
  EXPECT_EQ(plan.steps.back(), (Step{Step::Kind::compute, 0}));
}

TEST(SchedulePipeline, DepthOneSerializes) {
  const EvalPlan plan = schedule_pipeline(zp_chunks(1), {1, 1, BranchMode::predicated, false});
  std::string expected;
  for (int j = 0; j < 7; ++j)
    expected += "FETCH c" + std::to_string(j) + "\nSTALL c" + std::to_string(j) + "\nCOMPUTE " + std::to_string(j) + "\n";
  EXPECT_EQ(plan.dump(), expected);
}

TEST(SchedulePipeline, RefetchFlagDoesNotChangePlan) {
  const ChunkSet set = zp_chunks(3);
  EXPECT_EQ(schedule_pipeline(set, {3, 5, BranchMode::predicated, false}).steps,
            schedule_pipeline(set, {3, 5, BranchMode::branchy, true}).steps);
}

TEST(SchedulePipeline, RejectsDepthBelowGroupSize) {
  EXPECT_THROW(schedule_pipeline(zp_chunks(3), {3, 2, BranchMode::predicated, false}), std::invalid_argument);
  EXPECT_THROW(schedule_pipeline(zp_chunks(1), {0, 2, BranchMode::predicated, false}), std::invalid_argument);
}

TEST(SchedulePipeline, EmptyChunkSetGivesEmptyPlan) {
  EXPECT_TRUE(schedule_pipeline(ChunkSet{}, {1, 1, BranchMode::predicated, false}).steps.empty());
}

TEST(SchedulePipeline, ZpInvariantsOverFullGrid) {
  for (int m = 1; m <= 7; ++m) {
    const ChunkSet set = zp_chunks(m);
    for (int d = m; d <= 7; ++d) {
      const EvalPlan plan = schedule_pipeline(set, {m, d, BranchMode::predicated, false});
      EXPECT_EQ(testing::plan_violation(plan, set, d), "") << "m=" << m << " d=" << d;
    }
  }
}

TEST(SchedulePipeline, RandomBlockInvariants) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 6);
    // Chunks hold at most m symbols; symbol-free polynomials give one empty chunk.
    std::vector<int> sizes(1 + rng() % 8);
    for (auto& s : sizes) s = 1 + static_cast<int>(rng() % m);
    const ChunkSet set = blocks(sizes);
    const int d = m + static_cast<int>(rng() % 10);
    const EvalPlan plan = schedule_pipeline(set, {m, d, BranchMode::predicated, false});
    EXPECT_EQ(testing::plan_violation(plan, set, d), "") << "trial " << trial;
  }
}

TEST(SchedulePipeline, Deterministic) {
  const ChunkSet set = zp_chunks(2);
  EXPECT_EQ(schedule_pipeline(set, {2, 5, BranchMode::predicated, false}).dump(),
            schedule_pipeline(set, {2, 5, BranchMode::predicated, false}).dump());
}

TEST(BranchMode, ParsesNames) {
  EXPECT_EQ(parse_branch_mode("predicated"), BranchMode::predicated);
  EXPECT_EQ(parse_branch_mode("branchless"), BranchMode::predicated);
  EXPECT_EQ(parse_branch_mode("branchy"), BranchMode::branchy);
  EXPECT_THROW(parse_branch_mode("sometimes"), std::invalid_argument);
  EXPECT_STREQ(to_string(BranchMode::branchy), "branchy");
}

}  // namespace
}  // namespace splinegen
