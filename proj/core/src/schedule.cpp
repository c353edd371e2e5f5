#include "splinegen/schedule.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace splinegen {

const char* to_string(BranchMode mode) { return mode == BranchMode::predicated ? "predicated" : "branchy"; }

BranchMode parse_branch_mode(const std::string& text) {
  if (text == "predicated" || text == "branchless") return BranchMode::predicated;
  if (text == "branchy") return BranchMode::branchy;
  throw std::invalid_argument("unknown branch mode '" + text + "' (expected predicated or branchy)");
}

void ScheduleParams::validate() const {
  if (group_size < 1) throw std::invalid_argument("group size must be at least 1");
  if (pipeline_depth < group_size) {
    throw std::invalid_argument("pipeline depth (" + std::to_string(pipeline_depth) +
                                ") must be at least the group size (" + std::to_string(group_size) + ")");
  }
}

std::string EvalPlan::dump() const {
  std::ostringstream os;
  for (const auto& step : steps) {
    switch (step.kind) {
      case Step::Kind::fetch: os << "FETCH c" << step.index; break;
      case Step::Kind::stall: os << "STALL c" << step.index; break;
      case Step::Kind::compute: os << "COMPUTE " << step.index; break;
    }
    os << '\n';
  }
  return os.str();
}

int EvalPlan::max_in_flight() const {
  int in_flight = 0;
  int peak = 0;
  for (const auto& step : steps) {
    if (step.kind == Step::Kind::fetch) peak = std::max(peak, ++in_flight);
    if (step.kind == Step::Kind::stall) --in_flight;
  }
  return peak;
}

EvalPlan schedule_pipeline(const ChunkSet& chunks, const ScheduleParams& params) {
  params.validate();
  std::vector<int> order;
  for (const auto& chunk : chunks.chunks) order.insert(order.end(), chunk.symbols.begin(), chunk.symbols.end());

  EvalPlan plan;
  std::size_t issued = 0;
  std::size_t waited = 0;
  const auto backfill = [&] {
    while (issued < order.size() && issued - waited < static_cast<std::size_t>(params.pipeline_depth)) {
      plan.steps.push_back({Step::Kind::fetch, order[issued++]});
    }
  };

  backfill();
  for (std::size_t k = 0; k < chunks.chunks.size(); ++k) {
    for (int sym : chunks.chunks[k].symbols) {
      // Chunk blocks hold at most m <= d symbols, so every symbol of the
      // next chunk has been issued by the preceding backfill.
      plan.steps.push_back({Step::Kind::stall, sym});
      ++waited;
    }
    plan.steps.push_back({Step::Kind::compute, static_cast<int>(k)});
    backfill();
  }
  return plan;
}

}  // namespace splinegen
