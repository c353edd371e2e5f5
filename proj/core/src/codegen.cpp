#include "splinegen/codegen.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>

namespace splinegen::codegen {

using ir::Operand;
using ir::Op;
using ir::Pred;
using ir::Section;
using ir::Type;

const char* to_string(FloatWidth width) { return width == FloatWidth::f32 ? "f32" : "f64"; }

FloatWidth parse_float_width(const std::string& text) {
  if (text == "f64" || text == "double" || text == "64") return FloatWidth::f64;
  if (text == "f32" || text == "float" || text == "32") return FloatWidth::f32;
  throw std::invalid_argument("unknown float width '" + text + "' (expected f64 or f32)");
}

std::vector<PsiPlan> prepare_plans(const SplineSpace& space, const ScheduleParams& params) {
  params.validate();
  const int n = space.stencil_size();
  std::vector<int> visit(n);
  std::iota(visit.begin(), visit.end(), 0);
  std::vector<PsiPlan> plans;
  for (const auto& ref : space.ref_polys) {
    PsiPlan plan;
    plan.chunks = group_polynomial(ref.poly, params.group_size, visit);
    for (const auto& chunk : plan.chunks.chunks) plan.horner.push_back(horner_factorize(chunk.poly));
    plan.plan = schedule_pipeline(plan.chunks, params);
    plans.push_back(std::move(plan));
  }
  return plans;
}

GenContext::GenContext(const SplineSpace& s, const GenConfig& c)
    : space(s), config(c), builder(s.dim, s.coset_count(), c.float_width == FloatWidth::f32 ? Type::f32 : Type::f64) {}

std::string GenContext::fresh_label(const std::string& stem) { return stem + "." + std::to_string(label_counter++); }

namespace {

// --- constant-folding helpers ---------------------------------------------

bool is_fconst(const Operand& o) { return o.kind == Operand::Kind::float_const; }
bool is_iconst(const Operand& o) { return o.kind == Operand::Kind::int_const; }
bool is_fconst(const Operand& o, double v) { return is_fconst(o) && o.real == v; }
bool is_iconst(const Operand& o, std::int64_t v) { return is_iconst(o) && o.integer == v; }

Operand fc(double v) { return Operand::of_float(v); }
Operand ic(std::int64_t v) { return Operand::of_int(v); }

Operand fadd(GenContext& ctx, Operand a, Operand b) {
  if (is_fconst(a) && is_fconst(b)) return fc(a.real + b.real);
  if (is_fconst(a, 0.0)) return b;
  if (is_fconst(b, 0.0)) return a;
  return ctx.builder.fadd(a, b);
}

Operand fsub(GenContext& ctx, Operand a, Operand b) {
  if (is_fconst(a) && is_fconst(b)) return fc(a.real - b.real);
  if (is_fconst(b, 0.0)) return a;
  if (is_fconst(a, 0.0)) return ctx.builder.fneg(b);
  return ctx.builder.fsub(a, b);
}

Operand fmul(GenContext& ctx, Operand a, Operand b) {
  if (is_fconst(a) && is_fconst(b)) return fc(a.real * b.real);
  if (is_fconst(a, 0.0) || is_fconst(b, 0.0)) return fc(0.0);
  if (is_fconst(a, 1.0)) return b;
  if (is_fconst(b, 1.0)) return a;
  if (is_fconst(a, -1.0)) return ctx.builder.fneg(b);
  if (is_fconst(b, -1.0)) return ctx.builder.fneg(a);
  return ctx.builder.fmul(a, b);
}

Operand iadd(GenContext& ctx, Operand a, Operand b) {
  if (is_iconst(a) && is_iconst(b)) return ic(a.integer + b.integer);
  if (is_iconst(a, 0)) return b;
  if (is_iconst(b, 0)) return a;
  return ctx.builder.add(a, b);
}

Operand imul(GenContext& ctx, Operand a, Operand b) {
  if (is_iconst(a) && is_iconst(b)) return ic(a.integer * b.integer);
  if (is_iconst(a, 0) || is_iconst(b, 0)) return ic(0);
  if (is_iconst(a, 1)) return b;
  if (is_iconst(b, 1)) return a;
  return ctx.builder.mul(a, b);
}

/// sum_j coeffs[j] * v[j] (+ bias), folding zero and unit coefficients.
Operand fdot(GenContext& ctx, const std::vector<Operand>& coeffs, const std::vector<Operand>& v,
             Operand bias = fc(0.0)) {
  std::optional<Operand> acc;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const Operand& c = coeffs[j];
    if (is_fconst(c, 0.0)) continue;
    if (is_fconst(c, -1.0) && acc) {
      acc = fsub(ctx, *acc, v[j]);
      continue;
    }
    const Operand term = fmul(ctx, c, v[j]);
    acc = acc ? fadd(ctx, *acc, term) : term;
  }
  if (!acc) return bias;
  return fadd(ctx, *acc, bias);
}

double lower(const GenContext& ctx, const Rational& r) {
  return ctx.float_type() == Type::f32 ? static_cast<double>(to_float(r)) : to_double(r);
}

// --- preamble data ----------------------------------------------------------

std::vector<Rational> xform_entries(const SubRegion& sub) { return sub.transform.entries(); }

std::vector<Rational> shift_entries(const SubRegion& sub) { return -(sub.transform * sub.shift); }

std::vector<std::int64_t> stencil_entries(const SubRegion& sub) {
  std::vector<std::int64_t> out;
  for (const auto& site : sub.stencil) out.insert(out.end(), site.begin(), site.end());
  return out;
}

template <class Fn>
auto per_subregion(const SplineSpace& space, Fn fn) {
  std::vector<decltype(fn(space.subregions.front()))> rows;
  for (const auto& sub : space.subregions) rows.push_back(fn(sub));
  return rows;
}

template <class T>
bool has_distinct(const std::vector<T>& rows) {
  return std::any_of(rows.begin(), rows.end(), [&](const T& r) { return !(r == rows.front()); });
}

/// Reads entry `offset` of row `row` of a per-row table, or the inlined
/// constant when the table was not emitted.
Operand float_entry(GenContext& ctx, int table, const std::vector<Rational>& inline_row, Operand row, int stride,
                    int offset) {
  if (table < 0) return fc(lower(ctx, inline_row[offset]));
  return ctx.builder.table_load(table, iadd(ctx, imul(ctx, row, ic(stride)), ic(offset)));
}

Operand int_entry(GenContext& ctx, int table, const std::vector<std::int64_t>& inline_row, Operand row, int stride,
                  int offset) {
  if (table < 0) return ic(inline_row[offset]);
  if (is_iconst(row)) {
    const auto& t = ctx.builder.table(table);
    const std::int64_t idx = row.integer * stride + offset;
    if (idx >= 0 && static_cast<std::size_t>(idx) < t.size()) return ic(t.ints[idx]);
  }
  return ctx.builder.table_load(table, iadd(ctx, imul(ctx, row, ic(stride)), ic(offset)));
}

// --- polynomial evaluation --------------------------------------------------

Operand emit_horner(GenContext& ctx, const HornerForm& form, const std::vector<Operand>& y,
                    const std::vector<Operand>& c) {
  if (form.root() < 0) return fc(0.0);
  std::vector<std::optional<Operand>> memo(form.nodes().size());
  std::function<Operand(int)> walk = [&](int id) -> Operand {
    if (memo[id]) return *memo[id];
    const HornerNode& node = form.nodes()[id];
    Operand out;
    switch (node.kind) {
      case HornerNode::Kind::constant: out = fc(lower(ctx, node.value)); break;
      case HornerNode::Kind::var: out = y.at(node.index); break;
      case HornerNode::Kind::sym: out = c.at(node.index); break;
      case HornerNode::Kind::add: {
        const Operand l = walk(node.lhs);
        out = fadd(ctx, l, walk(node.rhs));
        break;
      }
      case HornerNode::Kind::mul: {
        const Operand l = walk(node.lhs);
        out = fmul(ctx, l, walk(node.rhs));
        break;
      }
    }
    memo[id] = out;
    return out;
  };
  return walk(form.root());
}

struct SubRegionData {
  std::vector<Rational> xform0;
  std::vector<Rational> shift0;
  std::vector<std::int64_t> stencil0;
  std::vector<std::int64_t> psi0;
};

SubRegionData inline_rows(const SplineSpace& space) {
  SubRegionData d;
  if (space.subregions.empty()) return d;
  const auto& sub = space.subregions.front();
  d.xform0 = xform_entries(sub);
  d.shift0 = shift_entries(sub);
  d.stencil0 = stencil_entries(sub);
  d.psi0 = {sub.psi_index};
  return d;
}

/// Evaluation state for one coset iteration.
class Evaluator {
 public:
  Evaluator(GenContext& ctx, Operand subregion, const std::vector<Operand>& x, const std::vector<Operand>& k,
            Operand coset)
      : ctx_(ctx), s_(ctx.space.dim), n_(ctx.space.stencil_size()), r_(subregion), x_(x), k_(k), coset_(coset),
        rows_(inline_rows(ctx.space)), refetch_(ctx.config.params.refetch_tables) {}

  Operand psi_index() {
    ctx_.builder.set_section(Section::lookup);
    return int_entry(ctx_, ctx_.tables.psi, rows_.psi0, r_, 1, 0);
  }

  /// Loads everything once when table refetching is off.
  void preload() {
    if (refetch_) return;
    ctx_.builder.set_section(Section::lookup);
    y_ = transformed_point();
    pi_.resize(n_);
    for (int j = 0; j < n_; ++j) pi_[j] = stencil_site(j);
  }

  /// Runs the shared plan and returns one accumulated value per polynomial.
  std::vector<Operand> run(const std::vector<const PsiPlan*>& group) {
    const EvalPlan& plan = group.front()->plan;
    std::vector<std::optional<Operand>> acc(group.size());
    std::vector<Operand> c(n_, fc(0.0));
    std::vector<bool> fetched(n_, false);
    for (const Step& step : plan.steps) {
      switch (step.kind) {
        case Step::Kind::fetch: {
          std::vector<Operand> site = refetch_ ? stencil_site(step.index) : pi_.at(step.index);
          ctx_.builder.set_section(Section::dispatch);
          std::vector<Operand> addr(s_);
          for (int a = 0; a < s_; ++a) addr[a] = iadd(ctx_, k_[a], site[a]);
          c[step.index] = ctx_.builder.data_fetch(coset_, addr);
          fetched[step.index] = true;
          break;
        }
        case Step::Kind::stall: break;
        case Step::Kind::compute: {
          std::vector<Operand> y = refetch_ ? relookup_point() : y_;
          ctx_.builder.set_section(Section::dispatch);
          for (std::size_t g = 0; g < group.size(); ++g) {
            const PsiPlan& p = *group[g];
            for (int sym : p.chunks.chunks.at(step.index).symbols) {
              if (!fetched.at(sym)) throw CodegenError("chunk uses c" + std::to_string(sym) + " before it is fetched");
            }
            const Operand v = emit_horner(ctx_, p.horner.at(step.index), y, c);
            acc[g] = acc[g] ? fadd(ctx_, *acc[g], v) : v;
          }
          break;
        }
      }
    }
    std::vector<Operand> out;
    for (auto& a : acc) out.push_back(a.value_or(fc(0.0)));
    return out;
  }

 private:
  std::vector<Operand> relookup_point() {
    ctx_.builder.set_section(Section::lookup);
    return transformed_point();
  }

  std::vector<Operand> transformed_point() {
    std::vector<Operand> y(s_);
    for (int i = 0; i < s_; ++i) {
      std::vector<Operand> row(s_);
      for (int j = 0; j < s_; ++j) row[j] = float_entry(ctx_, ctx_.tables.xform, rows_.xform0, r_, s_ * s_, i * s_ + j);
      const Operand bias = float_entry(ctx_, ctx_.tables.shift, rows_.shift0, r_, s_, i);
      y[i] = fdot(ctx_, row, x_, bias);
    }
    return y;
  }

  std::vector<Operand> stencil_site(int j) {
    ctx_.builder.set_section(Section::lookup);
    std::vector<Operand> site(s_);
    for (int a = 0; a < s_; ++a) site[a] = int_entry(ctx_, ctx_.tables.stencil, rows_.stencil0, r_, n_ * s_, j * s_ + a);
    return site;
  }

  GenContext& ctx_;
  int s_;
  int n_;
  Operand r_;
  std::vector<Operand> x_;
  std::vector<Operand> k_;
  Operand coset_;
  SubRegionData rows_;
  bool refetch_;
  std::vector<Operand> y_;
  std::vector<std::vector<Operand>> pi_;
};

void check_plans(const SplineSpace& space, const std::vector<PsiPlan>& plans) {
  if (static_cast<int>(plans.size()) != space.ref_poly_count()) {
    throw CodegenError("one plan per reference polynomial required");
  }
  const int n = space.stencil_size();
  for (std::size_t i = 0; i < plans.size(); ++i) {
    std::set<int> covered;
    for (const auto& chunk : plans[i].chunks.chunks) covered.insert(chunk.symbols.begin(), chunk.symbols.end());
    std::set<int> fetched;
    for (const auto& step : plans[i].plan.steps)
      if (step.kind == Step::Kind::fetch) fetched.insert(step.index);
    const bool full = static_cast<int>(covered.size()) == n && (n == 0 || (*covered.begin() == 0 && *covered.rbegin() == n - 1));
    if (!full || covered != fetched) {
      throw CodegenError("plan for reference polynomial " + std::to_string(i) + " does not cover the stencil");
    }
    if (plans[i].horner.size() != plans[i].chunks.chunks.size()) {
      throw CodegenError("plan for reference polynomial " + std::to_string(i) + " lacks Horner forms");
    }
    if (plans[i].plan.steps != plans.front().plan.steps) {
      throw CodegenError("reference polynomials must share one fetch schedule");
    }
  }
}

}  // namespace

// --- fragments --------------------------------------------------------------

void gen_preamble(GenContext& ctx) {
  const SplineSpace& space = ctx.space;
  auto& b = ctx.builder;
  const Type ft = ctx.float_type();
  b.set_section(Section::entry);

  const auto& sigma = space.indexer.sigma;
  if (has_distinct(sigma)) {
    ctx.tables.sigma = b.add_table({"sigma", Type::i32, {sigma.begin(), sigma.end()}, {}});
  }
  if (space.subregions.empty()) return;

  auto float_table = [&](const std::string& name, const std::vector<std::vector<Rational>>& rows) {
    ir::Table t{name, ft, {}, {}};
    for (const auto& row : rows)
      for (const auto& v : row) t.reals.push_back(lower(ctx, v));
    return b.add_table(std::move(t));
  };

  const auto xforms = per_subregion(space, xform_entries);
  if (has_distinct(xforms)) ctx.tables.xform = float_table("xform", xforms);
  const auto shifts = per_subregion(space, shift_entries);
  if (has_distinct(shifts)) ctx.tables.shift = float_table("shift", shifts);

  const auto stencils = per_subregion(space, stencil_entries);
  if (has_distinct(stencils)) {
    ir::Table t{"stencil", Type::i32, {}, {}};
    for (const auto& row : stencils) t.ints.insert(t.ints.end(), row.begin(), row.end());
    ctx.tables.stencil = b.add_table(std::move(t));
  }
  const auto psis = per_subregion(space, [](const SubRegion& s) { return static_cast<std::int64_t>(s.psi_index); });
  if (has_distinct(psis)) ctx.tables.psi = b.add_table({"psi_index", Type::i32, psis, {}});

  if (space.coset_count() > 1 && !ctx.config.unroll_cosets) {
    ctx.tables.coset_offset = float_table("coset_offset", space.lattice.cosets);
  }
}

RhoResult gen_rho(GenContext& ctx, const std::vector<Operand>& x) {
  const SplineSpace& space = ctx.space;
  const int s = space.dim;
  auto& b = ctx.builder;
  b.set_section(Section::rho);

  const bool voronoi = space.region_map.shape == RegionShape::voronoi;
  const RationalMatrix basis = voronoi ? RationalMatrix::identity(s) : space.region_map.basis;
  const RationalMatrix inv = basis.inverse();
  const bool nearest = voronoi || space.region_map.rounding == Rounding::round_nearest;

  std::vector<Operand> r(s);
  for (int i = 0; i < s; ++i) {
    std::vector<Operand> row(s);
    for (int j = 0; j < s; ++j) row[j] = fc(lower(ctx, inv(i, j)));
    const Operand u = fdot(ctx, row, x);
    r[i] = nearest ? b.fptosi_round(u) : b.fptosi_floor(u);
  }

  RhoResult out;
  out.k.resize(s);
  out.shifted.resize(s);
  for (int i = 0; i < s; ++i) {
    Operand acc = ic(0);
    for (int j = 0; j < s; ++j) acc = iadd(ctx, acc, imul(ctx, ic(to_int64(basis(i, j))), r[j]));
    out.k[i] = acc;
    out.shifted[i] = fsub(ctx, x[i], is_iconst(acc) ? fc(static_cast<double>(acc.integer)) : Operand(b.sitofp(acc)));
  }
  return out;
}

Operand gen_membership(GenContext& ctx, const std::vector<Operand>& x) {
  const SplineSpace& space = ctx.space;
  auto& b = ctx.builder;
  b.set_section(Section::membership);

  Operand q = ic(0);
  for (int i = 0; i < space.plane_count(); ++i) {
    const BspPlane& plane = space.planes[i];
    std::vector<Operand> normal(space.dim);
    for (int j = 0; j < space.dim; ++j) normal[j] = fc(lower(ctx, plane.normal[j]));
    const Operand side = fdot(ctx, normal, x, fc(-lower(ctx, plane.offset)));
    const Operand bit = b.zext(b.fcmp(Pred::ge, side, fc(0.0)));
    const Operand placed = i == 0 ? bit : Operand(b.shl(bit, ic(i)));
    q = is_iconst(q, 0) ? placed : Operand(b.or_(q, placed));
  }

  const int modulus = space.indexer.modulus;
  const auto& sigma = space.indexer.sigma;
  if (is_iconst(q)) {
    const std::int64_t slot = q.integer % modulus;
    return ic(sigma.at(slot));
  }
  const Operand slot = modulus == 1 ? ic(0) : Operand(b.urem(q, ic(modulus)));
  if (ctx.tables.sigma < 0) return ic(sigma.front());
  if (is_iconst(slot)) return ic(sigma.at(slot.integer));
  return b.table_load(ctx.tables.sigma, slot);
}

Operand gen_dispatch_and_eval(GenContext& ctx, Operand subregion, const std::vector<Operand>& x,
                              const std::vector<Operand>& k, Operand coset, const std::vector<PsiPlan>& plans) {
  check_plans(ctx.space, plans);
  auto& b = ctx.builder;
  const int K = static_cast<int>(plans.size());

  Evaluator eval(ctx, subregion, x, k, coset);
  const Operand psi = eval.psi_index();
  eval.preload();

  if (K == 1) return eval.run({&plans.front()})[0];

  if (ctx.config.params.branch_mode == BranchMode::predicated) {
    std::vector<const PsiPlan*> group;
    for (const auto& p : plans) group.push_back(&p);
    const std::vector<Operand> values = eval.run(group);
    b.set_section(Section::dispatch);
    Operand g = fc(0.0);
    for (int i = 0; i < K; ++i) {
      const Operand live = is_iconst(psi) ? ic(psi.integer == i ? 1 : 0) : Operand(b.icmp(Pred::eq, psi, ic(i)));
      const Operand contribution = b.select(ctx.float_type(), live, values[i], fc(0.0));
      g = fadd(ctx, g, contribution);
    }
    return g;
  }

  // Branchy: a linear if-chain with K-1 conditional branches.
  b.set_section(Section::dispatch);
  std::vector<std::pair<Operand, int>> incoming;
  for (int i = 0; i < K; ++i) {
    if (i < K - 1) {
      const int body = b.create_block(ctx.fresh_label("psi" + std::to_string(i)));
      const int next = b.create_block(ctx.fresh_label(i + 1 < K - 1 ? "psi.test" : "psi" + std::to_string(i + 1)));
      b.set_section(Section::dispatch);
      b.condbr(b.icmp(Pred::eq, psi, ic(i)), body, next);
      b.set_block(body);
      incoming.emplace_back(eval.run({&plans[i]})[0], body);
      b.set_block(next);
    } else {
      incoming.emplace_back(eval.run({&plans[i]})[0], b.current_block());
    }
  }
  const int join = b.create_block(ctx.fresh_label("psi.join"));
  b.set_section(Section::dispatch);
  for (const auto& [value, block] : incoming) {
    b.set_block(block);
    b.br(join);
  }
  b.set_block(join);
  return b.phi(ctx.float_type(), incoming);
}

Operand gen_coset_loop(GenContext& ctx, const CosetBody& body) {
  const SplineSpace& space = ctx.space;
  const int s = space.dim;
  const int M = space.coset_count();
  auto& b = ctx.builder;

  std::vector<Operand> x(s);
  for (int a = 0; a < s; ++a) x[a] = b.param(a);

  if (M == 1) return body(ic(0), x);

  if (ctx.config.unroll_cosets) {
    Operand total = fc(0.0);
    for (int i = 0; i < M; ++i) {
      b.set_section(Section::coset_loop);
      std::vector<Operand> xi(s);
      for (int a = 0; a < s; ++a) xi[a] = fsub(ctx, x[a], fc(lower(ctx, space.lattice.cosets[i][a])));
      const Operand v = body(ic(i), xi);
      b.set_section(Section::accumulate);
      total = fadd(ctx, total, v);
    }
    return total;
  }

  const int entry = b.current_block();
  const int header = b.create_block("coset.loop");
  b.set_section(Section::coset_loop);
  b.br(header);
  b.set_block(header);
  const ir::Value index = b.phi(Type::i32, {{ic(0), entry}});
  const ir::Value acc = b.phi(ctx.float_type(), {{fc(0.0), entry}});
  std::vector<Operand> xi(s);
  for (int a = 0; a < s; ++a) {
    const Operand l = b.table_load(ctx.tables.coset_offset, iadd(ctx, imul(ctx, index, ic(s)), ic(a)));
    xi[a] = b.fsub(x[a], l);
  }
  const Operand v = body(index, xi);
  b.set_section(Section::accumulate);
  const ir::Value next_acc = b.fadd(acc, v);
  b.set_section(Section::coset_loop);
  const ir::Value next_index = b.add(index, ic(1));
  const int latch = b.current_block();
  const int exit = b.create_block("coset.exit");
  b.condbr(b.icmp(Pred::lt, next_index, ic(M)), header, exit);
  b.add_incoming(index, next_index, latch);
  b.add_incoming(acc, next_acc, latch);
  b.set_block(exit);
  return next_acc;
}

ir::Program generate(const SplineSpace& space, const GenConfig& config) {
  config.validate();
  const auto diagnostics = validate_space(space);
  for (const auto& d : diagnostics)
    if (d.severity == Severity::error) throw CodegenError("invalid space: " + to_string(d));

  const std::vector<PsiPlan> plans = prepare_plans(space, config.params);
  GenContext ctx(space, config);
  gen_preamble(ctx);
  const Operand total = gen_coset_loop(ctx, [&](Operand coset, const std::vector<Operand>& x) {
    const RhoResult rho = gen_rho(ctx, x);
    const Operand subregion = gen_membership(ctx, rho.shifted);
    return gen_dispatch_and_eval(ctx, subregion, rho.shifted, rho.k, coset, plans);
  });
  ctx.builder.set_section(Section::accumulate);
  ctx.builder.ret(total);
  return std::move(ctx.builder).build();
}

}  // namespace splinegen::codegen
