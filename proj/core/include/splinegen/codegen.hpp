#pragma once

#include <functional>
#include <string>
#include <vector>

#include "splinegen/ir.hpp"
#include "splinegen/model.hpp"
#include "splinegen/poly.hpp"
#include "splinegen/schedule.hpp"

namespace splinegen::codegen {

enum class FloatWidth { f64, f32 };

const char* to_string(FloatWidth width);
FloatWidth parse_float_width(const std::string& text);

struct GenConfig {
  ScheduleParams params;
  FloatWidth float_width = FloatWidth::f64;
  bool unroll_cosets = false;

  void validate() const { params.validate(); }
};

class CodegenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Chunked, Horner-factorized form of one reference polynomial together
/// with its pipeline schedule.
struct PsiPlan {
  ChunkSet chunks;
  std::vector<HornerForm> horner;  // one per chunk
  EvalPlan plan;
};

/// Builds a PsiPlan per reference polynomial. The visiting order is the
/// stencil order c_0..c_{n-1}.
std::vector<PsiPlan> prepare_plans(const SplineSpace& space, const ScheduleParams& params);

/// Table ids created by the preamble; -1 where the single entry is inlined.
struct Tables {
  int sigma = -1;
  int xform = -1;    // s*s entries per sub-region, row-major
  int shift = -1;    // t' = -T*t, s entries per sub-region
  int stencil = -1;  // n*s entries per sub-region
  int psi = -1;
  int coset_offset = -1;  // s entries per coset
};

/// Generation state shared by the fragment emitters.
struct GenContext {
  GenContext(const SplineSpace& space, const GenConfig& config);

  const SplineSpace& space;
  GenConfig config;
  ir::Builder builder;
  Tables tables;
  int label_counter = 0;

  ir::Type float_type() const { return builder.float_type(); }
  std::string fresh_label(const std::string& stem);
};

/// Emits the read-only tables, skipping any with a single distinct entry.
void gen_preamble(GenContext& ctx);

/// Shifted point and integer region anchor produced by rho.
struct RhoResult {
  std::vector<ir::Operand> k;        // i32
  std::vector<ir::Operand> shifted;  // x - k
};

RhoResult gen_rho(GenContext& ctx, const std::vector<ir::Operand>& x);

/// Plane tests, bit packing, q mod p and the sigma lookup. Returns the
/// sub-region index (i32), a constant when it is statically known.
ir::Operand gen_membership(GenContext& ctx, const std::vector<ir::Operand>& x);

/// Table lookups for the sub-region, the point transform, and the evaluation
/// of every reference polynomial per the plans. Returns the contribution of
/// one coset.
ir::Operand gen_dispatch_and_eval(GenContext& ctx, ir::Operand subregion, const std::vector<ir::Operand>& x,
                                  const std::vector<ir::Operand>& k, ir::Operand coset,
                                  const std::vector<PsiPlan>& plans);

/// Per-coset body: receives the coset index and the coset-shifted point,
/// returns that coset's contribution.
using CosetBody = std::function<ir::Operand(ir::Operand coset, const std::vector<ir::Operand>& x)>;

/// Emits the coset iteration around `body` and returns the summed value in
/// the block where execution continues.
ir::Operand gen_coset_loop(GenContext& ctx, const CosetBody& body);

/// Composes every fragment into one verified program.
ir::Program generate(const SplineSpace& space, const GenConfig& config);

}  // namespace splinegen::codegen
