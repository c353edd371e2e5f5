#include "splinegen/ir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace splinegen::ir {

const char* to_string(Type type) {
  switch (type) {
    case Type::i1: return "i1";
    case Type::i32: return "i32";
    case Type::f32: return "f32";
    case Type::f64: return "f64";
  }
  return "?";
}

const char* to_string(Op op) {
  switch (op) {
    case Op::fadd: return "fadd";
    case Op::fsub: return "fsub";
    case Op::fmul: return "fmul";
    case Op::fdiv: return "fdiv";
    case Op::fneg: return "fneg";
    case Op::fcmp: return "fcmp";
    case Op::icmp: return "icmp";
    case Op::select: return "select";
    case Op::and_: return "and";
    case Op::or_: return "or";
    case Op::shl: return "shl";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::urem: return "urem";
    case Op::zext: return "zext";
    case Op::sitofp: return "sitofp";
    case Op::fptosi_floor: return "fptosi.floor";
    case Op::fptosi_round: return "fptosi.round";
    case Op::table_load: return "table_load";
    case Op::data_fetch: return "data_fetch";
    case Op::br: return "br";
    case Op::condbr: return "condbr";
    case Op::phi: return "phi";
    case Op::ret: return "ret";
  }
  return "?";
}

const char* to_string(Section section) {
  switch (section) {
    case Section::entry: return "entry";
    case Section::coset_loop: return "coset loop";
    case Section::rho: return "region of evaluation";
    case Section::membership: return "sub-region membership";
    case Section::lookup: return "table lookups";
    case Section::dispatch: return "reference sub-region dispatch";
    case Section::accumulate: return "accumulate";
  }
  return "?";
}

bool is_terminator(Op op) { return op == Op::br || op == Op::condbr || op == Op::ret; }

int Table::storage_bits() const {
  if (is_float(elem)) return elem == Type::f32 ? 32 : 64;
  for (auto v : ints)
    if (v < -128 || v > 127) return 32;
  return 8;
}

// --- Program --------------------------------------------------------------

int Program::count(Op op) const {
  int n = 0;
  for (const auto& b : blocks_)
    for (const auto& inst : b.insts) n += inst.op == op ? 1 : 0;
  return n;
}

int Program::count(Op op, Section section) const {
  int n = 0;
  for (const auto& b : blocks_)
    for (const auto& inst : b.insts) n += (inst.op == op && inst.section == section) ? 1 : 0;
  return n;
}

int Program::instruction_count() const {
  int n = 0;
  for (const auto& b : blocks_) n += static_cast<int>(b.insts.size());
  return n;
}

const Table* Program::find_table(const std::string& name) const {
  for (const auto& t : tables_)
    if (t.name == name) return &t;
  return nullptr;
}

namespace {

std::string operand_text(const Operand& o) {
  std::ostringstream os;
  switch (o.kind) {
    case Operand::Kind::value: os << "%v" << o.id; break;
    case Operand::Kind::int_const: os << o.integer; break;
    case Operand::Kind::float_const: {
      os.precision(17);
      os << o.real;
      break;
    }
  }
  return os.str();
}

const char* pred_text(Pred p) {
  switch (p) {
    case Pred::lt: return "lt";
    case Pred::ge: return "ge";
    case Pred::eq: return "eq";
    case Pred::ne: return "ne";
  }
  return "?";
}

}  // namespace

std::string Program::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "program " << name_ << " dim=" << dim_ << " cosets=" << coset_count_ << " float=" << ir::to_string(float_type_)
     << "\n";
  for (const auto& t : tables_) {
    os << "table " << t.name << " " << ir::to_string(t.elem) << " [";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) os << ", ";
      if (is_float(t.elem)) {
        os << t.reals[i];
      } else {
        os << t.ints[i];
      }
    }
    os << "]\n";
  }
  for (const auto& b : blocks_) {
    os << b.label << ":\n";
    for (const auto& inst : b.insts) {
      os << "  ";
      if (inst.result >= 0) os << "%v" << inst.result << " = ";
      os << ir::to_string(inst.op) << " " << ir::to_string(inst.type);
      if (inst.op == Op::fcmp || inst.op == Op::icmp) os << " " << pred_text(inst.pred);
      if (inst.table >= 0) os << " @" << tables_[inst.table].name;
      for (std::size_t i = 0; i < inst.args.size(); ++i) {
        os << (i ? ", " : " ") << operand_text(inst.args[i]);
        if (inst.op == Op::phi) os << " <- " << blocks_[inst.targets[i]].label;
      }
      if (inst.op == Op::br || inst.op == Op::condbr) {
        for (int t : inst.targets) os << " ->" << blocks_[t].label;
      }
      os << "  ; " << ir::to_string(inst.section) << "\n";
    }
  }
  return os.str();
}

// --- Builder --------------------------------------------------------------

Builder::Builder(int dim, int coset_count, Type float_type) {
  if (!is_float(float_type)) throw IrError("program float type must be f32 or f64");
  if (dim < 1 || dim > kMaxDim) throw IrError("dimension must be in [1, 4]");
  program_.dim_ = dim;
  program_.coset_count_ = coset_count;
  program_.float_type_ = float_type;
  program_.value_types_.assign(dim, float_type);
  current_ = create_block("entry");
}

Value Builder::param(int axis) const {
  if (axis < 0 || axis >= program_.dim_) throw IrError("parameter axis out of range");
  return Value{axis};
}

int Builder::add_table(Table table) {
  for (const auto& t : program_.tables_)
    if (t.name == table.name) throw IrError("duplicate table '" + table.name + "'");
  program_.tables_.push_back(std::move(table));
  return static_cast<int>(program_.tables_.size()) - 1;
}

int Builder::create_block(std::string label) {
  for (const auto& b : program_.blocks_)
    if (b.label == label) throw IrError("duplicate block label '" + label + "'");
  program_.blocks_.push_back(Block{std::move(label), {}});
  return static_cast<int>(program_.blocks_.size()) - 1;
}

void Builder::set_block(int block) {
  if (block < 0 || block >= static_cast<int>(program_.blocks_.size())) throw IrError("no such block");
  current_ = block;
}

Value Builder::emit(Instruction inst) {
  inst.result = static_cast<int>(program_.value_types_.size());
  inst.section = section_;
  program_.value_types_.push_back(inst.type);
  program_.blocks_[current_].insts.push_back(std::move(inst));
  return Value{static_cast<int>(program_.value_types_.size()) - 1};
}

void Builder::terminate(Instruction inst) {
  inst.result = -1;
  inst.section = section_;
  program_.blocks_[current_].insts.push_back(std::move(inst));
}

Value Builder::binary(Op op, Type type, Operand a, Operand b) {
  Instruction inst;
  inst.op = op;
  inst.type = type;
  inst.args = {a, b};
  return emit(std::move(inst));
}

Value Builder::fneg(Operand a) {
  Instruction inst;
  inst.op = Op::fneg;
  inst.type = float_type();
  inst.args = {a};
  return emit(std::move(inst));
}

Value Builder::fcmp(Pred pred, Operand a, Operand b) {
  Instruction inst;
  inst.op = Op::fcmp;
  inst.type = Type::i1;
  inst.pred = pred;
  inst.args = {a, b};
  return emit(std::move(inst));
}

Value Builder::icmp(Pred pred, Operand a, Operand b) {
  Instruction inst;
  inst.op = Op::icmp;
  inst.type = Type::i1;
  inst.pred = pred;
  inst.args = {a, b};
  return emit(std::move(inst));
}

Value Builder::select(Type type, Operand cond, Operand if_true, Operand if_false) {
  Instruction inst;
  inst.op = Op::select;
  inst.type = type;
  inst.args = {cond, if_true, if_false};
  return emit(std::move(inst));
}

Value Builder::zext(Operand a) {
  Instruction inst;
  inst.op = Op::zext;
  inst.type = Type::i32;
  inst.args = {a};
  return emit(std::move(inst));
}

Value Builder::sitofp(Operand a) {
  Instruction inst;
  inst.op = Op::sitofp;
  inst.type = float_type();
  inst.args = {a};
  return emit(std::move(inst));
}

Value Builder::fptosi_floor(Operand a) {
  Instruction inst;
  inst.op = Op::fptosi_floor;
  inst.type = Type::i32;
  inst.args = {a};
  return emit(std::move(inst));
}

Value Builder::fptosi_round(Operand a) {
  Instruction inst;
  inst.op = Op::fptosi_round;
  inst.type = Type::i32;
  inst.args = {a};
  return emit(std::move(inst));
}

Value Builder::table_load(int table, Operand index) {
  if (table < 0 || table >= static_cast<int>(program_.tables_.size())) throw IrError("no such table");
  Instruction inst;
  inst.op = Op::table_load;
  inst.type = program_.tables_[table].elem;
  inst.table = table;
  inst.args = {index};
  return emit(std::move(inst));
}

Value Builder::data_fetch(Operand coset, std::vector<Operand> site) {
  Instruction inst;
  inst.op = Op::data_fetch;
  inst.type = float_type();
  inst.args.push_back(coset);
  inst.args.insert(inst.args.end(), site.begin(), site.end());
  return emit(std::move(inst));
}

Value Builder::phi(Type type, std::vector<std::pair<Operand, int>> incoming) {
  Instruction inst;
  inst.op = Op::phi;
  inst.type = type;
  for (auto& [value, block] : incoming) {
    inst.args.push_back(value);
    inst.targets.push_back(block);
  }
  return emit(std::move(inst));
}

void Builder::add_incoming(Value phi, Operand value, int block) {
  for (auto& b : program_.blocks_) {
    for (auto& inst : b.insts) {
      if (inst.result == phi.id) {
        if (inst.op != Op::phi) throw IrError("%v" + std::to_string(phi.id) + " is not a phi");
        inst.args.push_back(value);
        inst.targets.push_back(block);
        return;
      }
    }
  }
  throw IrError("no phi %v" + std::to_string(phi.id));
}

void Builder::br(int target) {
  Instruction inst;
  inst.op = Op::br;
  inst.type = Type::i1;
  inst.targets = {target};
  terminate(std::move(inst));
}

void Builder::condbr(Operand cond, int if_true, int if_false) {
  Instruction inst;
  inst.op = Op::condbr;
  inst.type = Type::i1;
  inst.args = {cond};
  inst.targets = {if_true, if_false};
  terminate(std::move(inst));
}

void Builder::ret(Operand value) {
  Instruction inst;
  inst.op = Op::ret;
  inst.type = float_type();
  inst.args = {value};
  terminate(std::move(inst));
}

Program Builder::build() && {
  verify(program_);
  return std::move(program_);
}

// --- verification ---------------------------------------------------------

namespace {

class Verifier {
 public:
  explicit Verifier(const Program& p) : p_(p), n_(static_cast<int>(p.blocks().size())) {}

  void run() {
    if (n_ == 0) fail("program has no blocks");
    check_structure();
    compute_dominators();
    check_definitions();
    check_uses();
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw IrError(message); }

  std::string where(int block, std::size_t index) const {
    return p_.blocks()[block].label + "#" + std::to_string(index);
  }

  void check_structure() {
    int rets = 0;
    preds_.assign(n_, {});
    for (int b = 0; b < n_; ++b) {
      const auto& blk = p_.blocks()[b];
      if (blk.insts.empty()) fail("block '" + blk.label + "' is empty");
      bool seen_body = false;
      for (std::size_t i = 0; i < blk.insts.size(); ++i) {
        const auto& inst = blk.insts[i];
        const bool last = i + 1 == blk.insts.size();
        if (is_terminator(inst.op) != last) {
          fail(last ? "block '" + blk.label + "' lacks a terminator" : "terminator in the middle of block at " + where(b, i));
        }
        if (inst.op == Op::phi) {
          if (seen_body) fail("phi after non-phi instruction at " + where(b, i));
        } else {
          seen_body = true;
        }
        if (inst.op == Op::ret) ++rets;
        for (int t : inst.targets) {
          if (t < 0 || t >= n_) fail("branch to unknown block at " + where(b, i));
        }
        if (inst.op == Op::br || inst.op == Op::condbr) {
          const std::size_t expected = inst.op == Op::br ? 1 : 2;
          if (inst.targets.size() != expected) fail("malformed branch at " + where(b, i));
          for (int t : inst.targets) {
            auto& list = preds_[t];
            if (std::find(list.begin(), list.end(), b) == list.end()) list.push_back(b);
          }
          if (inst.targets.front() == 0 || inst.targets.back() == 0) fail("entry block may not be a branch target");
        }
      }
    }
    if (rets != 1) fail("function must contain exactly one ret (found " + std::to_string(rets) + ")");
  }

  void compute_dominators() {
    std::vector<bool> reached(n_, false);
    std::vector<int> work = {0};
    reached[0] = true;
    while (!work.empty()) {
      const int b = work.back();
      work.pop_back();
      for (int t : p_.blocks()[b].insts.back().targets) {
        if (!reached[t]) {
          reached[t] = true;
          work.push_back(t);
        }
      }
    }
    for (int b = 1; b < n_; ++b)
      if (!reached[b]) fail("block '" + p_.blocks()[b].label + "' is unreachable");

    dom_.assign(n_, std::vector<bool>(n_, true));
    dom_[0].assign(n_, false);
    dom_[0][0] = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int b = 1; b < n_; ++b) {
        std::vector<bool> next(n_, true);
        for (int pred : preds_[b])
          for (int k = 0; k < n_; ++k) next[k] = next[k] && dom_[pred][k];
        next[b] = true;
        if (next != dom_[b]) {
          dom_[b] = std::move(next);
          changed = true;
        }
      }
    }
  }

  void check_definitions() {
    const int values = p_.value_count();
    def_block_.assign(values, -1);
    def_index_.assign(values, -1);
    for (int v = 0; v < p_.dim(); ++v) def_block_[v] = 0;
    for (int b = 0; b < n_; ++b) {
      const auto& blk = p_.blocks()[b];
      for (std::size_t i = 0; i < blk.insts.size(); ++i) {
        const int r = blk.insts[i].result;
        if (r < 0) continue;
        if (r >= values) fail("result id out of range at " + where(b, i));
        if (def_block_[r] >= 0) fail("%v" + std::to_string(r) + " assigned more than once");
        def_block_[r] = b;
        def_index_[r] = static_cast<int>(i);
      }
    }
  }

  // True when value v is available at the end of block b or before
  // instruction `index` of b (index < 0 means end of block).
  bool available(int v, int b, int index) const {
    const int db = def_block_[v];
    if (db < 0) return false;
    if (db == b) return index < 0 || def_index_[v] < index;
    return dom_[b][db];
  }

  void check_operand_type(const Operand& o, Type expected, int b, std::size_t i) const {
    if (o.kind == Operand::Kind::value) {
      if (o.id < 0 || o.id >= p_.value_count()) fail("operand refers to unknown value at " + where(b, i));
      if (p_.value_types()[o.id] != expected) {
        fail("type mismatch for %v" + std::to_string(o.id) + " at " + where(b, i) + ": expected " + to_string(expected) +
             ", got " + to_string(p_.value_types()[o.id]));
      }
    } else if (o.kind == Operand::Kind::float_const && !is_float(expected)) {
      fail("float constant used as " + std::string(to_string(expected)) + " at " + where(b, i));
    } else if (o.kind == Operand::Kind::int_const && is_float(expected)) {
      fail("integer constant used as " + std::string(to_string(expected)) + " at " + where(b, i));
    }
  }

  void check_types(const Instruction& inst, int b, std::size_t i) const {
    const Type f = p_.float_type();
    auto want = [&](std::size_t count) {
      if (inst.args.size() != count) fail("wrong operand count for " + std::string(to_string(inst.op)) + " at " + where(b, i));
    };
    switch (inst.op) {
      case Op::fadd:
      case Op::fsub:
      case Op::fmul:
      case Op::fdiv:
        want(2);
        for (const auto& a : inst.args) check_operand_type(a, f, b, i);
        break;
      case Op::fneg:
      case Op::fptosi_floor:
      case Op::fptosi_round:
        want(1);
        check_operand_type(inst.args[0], f, b, i);
        break;
      case Op::fcmp:
        want(2);
        for (const auto& a : inst.args) check_operand_type(a, f, b, i);
        break;
      case Op::icmp:
      case Op::and_:
      case Op::or_:
      case Op::shl:
      case Op::add:
      case Op::sub:
      case Op::mul:
      case Op::urem:
        want(2);
        for (const auto& a : inst.args) check_operand_type(a, Type::i32, b, i);
        break;
      case Op::select:
        want(3);
        check_operand_type(inst.args[0], Type::i1, b, i);
        check_operand_type(inst.args[1], inst.type, b, i);
        check_operand_type(inst.args[2], inst.type, b, i);
        break;
      case Op::zext:
        want(1);
        check_operand_type(inst.args[0], Type::i1, b, i);
        break;
      case Op::sitofp:
        want(1);
        check_operand_type(inst.args[0], Type::i32, b, i);
        break;
      case Op::table_load:
        want(1);
        check_operand_type(inst.args[0], Type::i32, b, i);
        if (inst.table < 0 || inst.table >= static_cast<int>(p_.tables().size())) fail("unknown table at " + where(b, i));
        if (p_.tables()[inst.table].elem != inst.type) fail("table element type mismatch at " + where(b, i));
        break;
      case Op::data_fetch:
        want(static_cast<std::size_t>(p_.dim()) + 1);
        for (const auto& a : inst.args) check_operand_type(a, Type::i32, b, i);
        break;
      case Op::phi:
        if (inst.args.size() != inst.targets.size()) fail("malformed phi at " + where(b, i));
        for (const auto& a : inst.args) check_operand_type(a, inst.type, b, i);
        break;
      case Op::ret:
        want(1);
        check_operand_type(inst.args[0], f, b, i);
        break;
      case Op::condbr:
        want(1);
        check_operand_type(inst.args[0], Type::i1, b, i);
        break;
      case Op::br:
        want(0);
        break;
    }
  }

  void check_uses() const {
    for (int b = 0; b < n_; ++b) {
      const auto& blk = p_.blocks()[b];
      for (std::size_t i = 0; i < blk.insts.size(); ++i) {
        const auto& inst = blk.insts[i];
        check_types(inst, b, i);
        if (inst.op == Op::phi) {
          const auto& preds = preds_[b];
          if (inst.targets.size() != preds.size()) {
            fail("phi %v" + std::to_string(inst.result) + " needs one incoming value per predecessor");
          }
          for (std::size_t k = 0; k < inst.args.size(); ++k) {
            const int from = inst.targets[k];
            if (std::find(preds.begin(), preds.end(), from) == preds.end()) {
              fail("phi %v" + std::to_string(inst.result) + " names a non-predecessor block");
            }
            const auto& a = inst.args[k];
            if (a.is_value() && !available(a.id, from, -1)) {
              fail("use of %v" + std::to_string(a.id) + " before definition (phi at " + where(b, i) + ")");
            }
          }
          continue;
        }
        for (const auto& a : inst.args) {
          if (a.is_value() && !available(a.id, b, static_cast<int>(i))) {
            fail("use of %v" + std::to_string(a.id) + " before definition at " + where(b, i));
          }
        }
      }
    }
  }

  const Program& p_;
  int n_;
  std::vector<std::vector<int>> preds_;
  std::vector<std::vector<bool>> dom_;
  std::vector<int> def_block_;
  std::vector<int> def_index_;
};

}  // namespace

void verify(const Program& program) { Verifier(program).run(); }

// --- data -----------------------------------------------------------------

DataVolume::DataVolume(int dim, int coset_count, std::vector<std::int64_t> extents)
    : dim_(dim), extents_(std::move(extents)) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("volume dimension must be in [1, 4]");
  if (static_cast<int>(extents_.size()) != dim) throw std::invalid_argument("one extent per axis required");
  if (coset_count < 1) throw std::invalid_argument("at least one coset array required");
  for (auto e : extents_)
    if (e <= 0) throw std::invalid_argument("volume extents must be positive");
  data_.assign(coset_count, std::vector<double>(samples_per_coset(), 0.0));
}

std::size_t DataVolume::samples_per_coset() const {
  std::size_t n = 1;
  for (auto e : extents_) n *= static_cast<std::size_t>(e);
  return extents_.empty() ? 0 : n;
}

std::size_t DataVolume::linear_index(std::span<const std::int64_t> site) const {
  std::size_t index = 0;
  for (int a = dim_ - 1; a >= 0; --a) {
    const std::int64_t e = extents_[a];
    std::int64_t z = site[a] % e;
    if (z < 0) z += e;
    index = index * static_cast<std::size_t>(e) + static_cast<std::size_t>(z);
  }
  return index;
}

void DataVolume::fill(double value) {
  for (auto& c : data_) std::fill(c.begin(), c.end(), value);
}

DataVolume DataVolume::scaled(double factor) const {
  DataVolume out = *this;
  for (auto& c : out.data_)
    for (auto& v : c) v *= factor;
  return out;
}

// --- interpreter ----------------------------------------------------------

Interpreter::Interpreter(const Program& program, std::uint64_t instruction_budget)
    : program_(&program), budget_(instruction_budget), slots_(program.value_count()) {}

double Interpreter::read_f(const Operand& o) const {
  switch (o.kind) {
    case Operand::Kind::value: return slots_[o.id].f;
    case Operand::Kind::float_const: return round_float(o.real);
    case Operand::Kind::int_const: break;
  }
  throw ExecError("integer operand where a float was expected");
}

std::int64_t Interpreter::read_i(const Operand& o) const {
  switch (o.kind) {
    case Operand::Kind::value: return slots_[o.id].i;
    case Operand::Kind::int_const: return o.integer;
    case Operand::Kind::float_const: break;
  }
  throw ExecError("float operand where an integer was expected");
}

double Interpreter::round_float(double v) const {
  return program_->float_type() == Type::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

namespace {

std::int64_t wrap32(std::int64_t v) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(v)); }

std::int64_t to_i32(double v) {
  if (!(v >= -2147483648.0 && v < 2147483648.0)) throw ExecError("float to integer conversion out of range");
  return static_cast<std::int64_t>(v);
}

bool compare(Pred p, auto a, auto b) {
  switch (p) {
    case Pred::lt: return a < b;
    case Pred::ge: return a >= b;
    case Pred::eq: return a == b;
    case Pred::ne: return a != b;
  }
  return false;
}

}  // namespace

double Interpreter::run(std::span<const double> x, const DataSource& data) {
  const Program& p = *program_;
  if (static_cast<int>(x.size()) != p.dim()) throw ExecError("point dimension does not match program");
  for (int a = 0; a < p.dim(); ++a) slots_[a].f = round_float(x[a]);

  std::array<std::int64_t, kMaxDim> site{};
  std::vector<Slot> phi_values;
  std::uint64_t executed = 0;
  int prev = -1;
  int cur = 0;
  for (;;) {
    const auto& insts = p.blocks()[cur].insts;
    std::size_t i = 0;
    // Phis read their incoming values simultaneously.
    phi_values.clear();
    for (; i < insts.size() && insts[i].op == Op::phi; ++i) {
      const auto& inst = insts[i];
      const auto it = std::find(inst.targets.begin(), inst.targets.end(), prev);
      if (it == inst.targets.end()) throw ExecError("phi has no incoming value for predecessor");
      const Operand& o = inst.args[it - inst.targets.begin()];
      Slot s;
      if (is_float(inst.type)) {
        s.f = read_f(o);
      } else {
        s.i = read_i(o);
      }
      phi_values.push_back(s);
    }
    for (std::size_t k = 0; k < phi_values.size(); ++k) slots_[insts[k].result] = phi_values[k];
    executed += phi_values.size();

    for (; i < insts.size(); ++i) {
      const auto& inst = insts[i];
      if (++executed > budget_) throw ExecError("instruction budget exceeded");
      Slot& out = inst.result >= 0 ? slots_[inst.result] : slots_[0];
      const auto& args = inst.args;
      switch (inst.op) {
        case Op::fadd: out.f = round_float(read_f(args[0]) + read_f(args[1])); break;
        case Op::fsub: out.f = round_float(read_f(args[0]) - read_f(args[1])); break;
        case Op::fmul: out.f = round_float(read_f(args[0]) * read_f(args[1])); break;
        case Op::fdiv: out.f = round_float(read_f(args[0]) / read_f(args[1])); break;
        case Op::fneg: out.f = -read_f(args[0]); break;
        case Op::fcmp: out.i = compare(inst.pred, read_f(args[0]), read_f(args[1])) ? 1 : 0; break;
        case Op::icmp: out.i = compare(inst.pred, read_i(args[0]), read_i(args[1])) ? 1 : 0; break;
        case Op::select: {
          const bool c = read_i(args[0]) != 0;
          if (is_float(inst.type)) {
            out.f = read_f(args[c ? 1 : 2]);
          } else {
            out.i = read_i(args[c ? 1 : 2]);
          }
          break;
        }
        case Op::and_: out.i = wrap32(read_i(args[0]) & read_i(args[1])); break;
        case Op::or_: out.i = wrap32(read_i(args[0]) | read_i(args[1])); break;
        case Op::shl: {
          const std::int64_t amount = read_i(args[1]);
          if (amount < 0 || amount > 31) throw ExecError("shift amount out of range");
          out.i = wrap32(static_cast<std::int64_t>(static_cast<std::uint32_t>(read_i(args[0])) << amount));
          break;
        }
        case Op::add: out.i = wrap32(read_i(args[0]) + read_i(args[1])); break;
        case Op::sub: out.i = wrap32(read_i(args[0]) - read_i(args[1])); break;
        case Op::mul: out.i = wrap32(read_i(args[0]) * read_i(args[1])); break;
        case Op::urem: {
          const auto b = static_cast<std::uint32_t>(read_i(args[1]));
          if (b == 0) throw ExecError("urem by zero");
          out.i = wrap32(static_cast<std::uint32_t>(read_i(args[0])) % b);
          break;
        }
        case Op::zext: out.i = read_i(args[0]) != 0 ? 1 : 0; break;
        case Op::sitofp: out.f = round_float(static_cast<double>(read_i(args[0]))); break;
        case Op::fptosi_floor: out.i = to_i32(std::floor(read_f(args[0]))); break;
        case Op::fptosi_round: out.i = to_i32(std::floor(round_float(read_f(args[0]) + 0.5))); break;
        case Op::table_load: {
          const Table& t = p.tables()[inst.table];
          const std::int64_t idx = read_i(args[0]);
          if (idx < 0 || static_cast<std::size_t>(idx) >= t.size()) {
            throw ExecError("table '" + t.name + "' index " + std::to_string(idx) + " out of bounds (size " +
                            std::to_string(t.size()) + ")");
          }
          if (is_float(t.elem)) {
            out.f = round_float(t.reals[idx]);
          } else {
            out.i = t.ints[idx];
          }
          ++stats_.table_loads;
          break;
        }
        case Op::data_fetch: {
          const auto coset = static_cast<int>(read_i(args[0]));
          if (coset < 0 || coset >= p.coset_count()) throw ExecError("coset index out of range");
          for (int a = 0; a < p.dim(); ++a) site[a] = read_i(args[a + 1]);
          out.f = round_float(data.fetch(coset, std::span<const std::int64_t>(site.data(), p.dim())));
          ++stats_.fetches;
          break;
        }
        case Op::br:
          prev = cur;
          cur = inst.targets[0];
          break;
        case Op::condbr:
          ++stats_.cond_branches;
          prev = cur;
          cur = inst.targets[read_i(args[0]) != 0 ? 0 : 1];
          break;
        case Op::ret:
          stats_.instructions += executed;
          return read_f(args[0]);
        case Op::phi: throw ExecError("phi after block body");
      }
    }
  }
}

double interpret(const Program& program, std::span<const double> x, const DataSource& data) {
  Interpreter interp(program);
  return interp.run(x, data);
}

}  // namespace splinegen::ir
