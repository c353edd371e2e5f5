#pragma once

#include <string>
#include <vector>

#include "splinegen/poly.hpp"

namespace splinegen {

enum class BranchMode { predicated, branchy };

const char* to_string(BranchMode mode);
/// Accepts "predicated"/"branchless" and "branchy"; throws std::invalid_argument.
BranchMode parse_branch_mode(const std::string& text);

struct ScheduleParams {
  int group_size = 1;      // m
  int pipeline_depth = 1;  // d, at least m
  BranchMode branch_mode = BranchMode::predicated;
  bool refetch_tables = false;  // consumed by codegen only

  /// Throws std::invalid_argument unless 1 <= m <= d.
  void validate() const;
  bool operator==(const ScheduleParams&) const = default;
};

struct Step {
  enum class Kind { fetch, stall, compute };
  Kind kind = Kind::fetch;
  int index = 0;  // symbol for fetch/stall, chunk for compute

  bool operator==(const Step&) const = default;
};

struct EvalPlan {
  std::vector<Step> steps;

  /// One step per line: "FETCH c4", "STALL c2", "COMPUTE 1".
  std::string dump() const;
  int max_in_flight() const;
};

/// Greedy software pipeline over the chunks' symbol blocks: fill up to d
/// fetches, then for each chunk stall on its symbols, compute it, and
/// backfill fetches up to depth d before the next stall run.
EvalPlan schedule_pipeline(const ChunkSet& chunks, const ScheduleParams& params);

}  // namespace splinegen
