#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "splinegen/bench.hpp"
#include "splinegen/codegen.hpp"
#include "splinegen/oracle.hpp"

namespace {

using namespace splinegen;

const SplineSpace& fixture(const std::string& name) {
  static std::map<std::string, SplineSpace> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, load_space(std::string(SPLINEGEN_FIXTURE_DIR) + "/" + name)).first;
  return it->second;
}

codegen::GenConfig config(const benchmark::State& state) {
  codegen::GenConfig cfg;
  cfg.params = {static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                state.range(2) ? BranchMode::branchy : BranchMode::predicated, state.range(3) != 0};
  return cfg;
}

void interpret_zp(benchmark::State& state) {
  const SplineSpace& zp = fixture("zp_element.json");
  const ir::Program p = codegen::generate(zp, config(state));
  const ir::DataVolume v = bench::make_volume(zp, {64, 64}, 1);
  const auto points = bench::sample_points(v, 1024, 2);
  ir::Interpreter interp(p);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(interp.run(points[i++ & 1023], v));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(interpret_zp)
    ->ArgNames({"m", "d", "branchy", "refetch"})
    ->Args({1, 1, 0, 0})
    ->Args({1, 7, 0, 0})
    ->Args({2, 4, 0, 0})
    ->Args({2, 4, 1, 0})
    ->Args({2, 4, 0, 1})
    ->Args({7, 7, 0, 0});

void reference_zp(benchmark::State& state) {
  const SplineSpace& zp = fixture("zp_element.json");
  const oracle::Reference ref(zp);
  const ir::DataVolume v = bench::make_volume(zp, {64, 64}, 1);
  const auto points = bench::sample_points(v, 1024, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ref.eval(points[i++ & 1023], v));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(reference_zp);

void generate_program(benchmark::State& state) {
  const SplineSpace& s = fixture(state.range(0) ? "bcc_two_coset_trilinear.json" : "zp_element.json");
  codegen::GenConfig cfg;
  cfg.params = {2, 4, BranchMode::branchy, false};
  for (auto _ : state) benchmark::DoNotOptimize(codegen::generate(s, cfg).instruction_count());
}
BENCHMARK(generate_program)->ArgName("bcc")->Arg(0)->Arg(1);

void emit_zp(benchmark::State& state) {
  codegen::GenConfig cfg;
  cfg.params = {2, 4, BranchMode::predicated, false};
  const ir::Program p = codegen::generate(fixture("zp_element.json"), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(ir::emit_text(p).size());
}
BENCHMARK(emit_zp);

void horner_zp(benchmark::State& state) {
  const Poly& psi = fixture("zp_element.json").ref_polys[0].poly;
  for (auto _ : state) benchmark::DoNotOptimize(horner_factorize(psi).operation_count());
}
BENCHMARK(horner_zp);

void group_zp(benchmark::State& state) {
  const Poly& psi = fixture("zp_element.json").ref_polys[0].poly;
  std::vector<int> order(7);
  std::iota(order.begin(), order.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(group_polynomial(psi, static_cast<int>(state.range(0)), order).chunks.size());
}
BENCHMARK(group_zp)->Arg(1)->Arg(3)->Arg(7);

}  // namespace

BENCHMARK_MAIN();
