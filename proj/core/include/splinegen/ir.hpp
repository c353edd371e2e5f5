#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace splinegen::ir {

enum class Type : std::uint8_t { i1, i32, f32, f64 };

const char* to_string(Type type);
inline bool is_float(Type t) { return t == Type::f32 || t == Type::f64; }

enum class Op : std::uint8_t {
  fadd,
  fsub,
  fmul,
  fdiv,
  fneg,
  fcmp,
  icmp,
  select,
  and_,
  or_,
  shl,
  add,
  sub,
  mul,
  urem,
  zext,
  sitofp,
  fptosi_floor,
  fptosi_round,
  table_load,
  data_fetch,
  br,
  condbr,
  phi,
  ret,
};

const char* to_string(Op op);
bool is_terminator(Op op);

/// fcmp lowers lt/ge/eq to the ordered predicates; icmp uses signed lt/ge.
enum class Pred : std::uint8_t { lt, ge, eq, ne };

/// Which part of the evaluation routine an instruction belongs to. Used for
/// structural checks and for comments in emitted text.
enum class Section : std::uint8_t { entry, coset_loop, rho, membership, lookup, dispatch, accumulate };

const char* to_string(Section section);

struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
  bool operator==(const Value&) const = default;
};

struct Operand {
  enum class Kind : std::uint8_t { value, int_const, float_const };
  Kind kind = Kind::value;
  int id = -1;
  std::int64_t integer = 0;
  double real = 0.0;

  Operand() = default;
  Operand(Value v) : kind(Kind::value), id(v.id) {}  // NOLINT(google-explicit-constructor)
  static Operand of_int(std::int64_t v) {
    Operand o;
    o.kind = Kind::int_const;
    o.integer = v;
    return o;
  }
  static Operand of_float(double v) {
    Operand o;
    o.kind = Kind::float_const;
    o.real = v;
    return o;
  }
  bool is_value() const { return kind == Kind::value; }
  bool operator==(const Operand&) const = default;
};

struct Instruction {
  Op op = Op::ret;
  Type type = Type::f64;  // result type (operand type for ret/condbr)
  int result = -1;
  Pred pred = Pred::lt;
  int table = -1;
  Section section = Section::entry;
  std::vector<Operand> args;
  /// br: {target}; condbr: {if_true, if_false}; phi: incoming block per arg.
  std::vector<int> targets;
};

struct Block {
  std::string label;
  std::vector<Instruction> insts;
};

/// Read-only lookup table. Integer tables hold sigma, stencils and PsiIndex;
/// float tables hold transforms, shifts and coset offsets.
struct Table {
  std::string name;
  Type elem = Type::i32;  // i32 or the program's float type
  std::vector<std::int64_t> ints;
  std::vector<double> reals;

  std::size_t size() const { return is_float(elem) ? reals.size() : ints.size(); }
  /// Narrowest integer storage width (8 or 32) that holds every entry.
  int storage_bits() const;
};

class IrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Verified SSA program for one `reconstruct` function. Values 0..dim-1
/// are the spatial parameters; the lookup handle is implicit in data_fetch.
class Program {
 public:
  int dim() const { return dim_; }
  int coset_count() const { return coset_count_; }
  Type float_type() const { return float_type_; }
  const std::string& name() const { return name_; }
  const std::vector<Table>& tables() const { return tables_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Type>& value_types() const { return value_types_; }
  int value_count() const { return static_cast<int>(value_types_.size()); }

  /// Static instruction count, optionally restricted to one section.
  int count(Op op) const;
  int count(Op op, Section section) const;
  int instruction_count() const;
  const Table* find_table(const std::string& name) const;

  /// Deterministic textual dump of the internal form.
  std::string to_string() const;

 private:
  friend class Builder;

  int dim_ = 0;
  int coset_count_ = 1;
  Type float_type_ = Type::f64;
  std::string name_ = "reconstruct";
  std::vector<Table> tables_;
  std::vector<Block> blocks_;
  std::vector<Type> value_types_;
};

/// Incremental SSA builder. Instructions are appended to the current block;
/// build() verifies def-before-use (by dominance), single assignment,
/// terminators and the single return.
class Builder {
 public:
  Builder(int dim, int coset_count, Type float_type);

  int dim() const { return program_.dim_; }
  Type float_type() const { return program_.float_type_; }
  Value param(int axis) const;

  int add_table(Table table);
  const Table& table(int id) const { return program_.tables_.at(id); }

  int create_block(std::string label);
  void set_block(int block);
  int current_block() const { return current_; }
  void set_section(Section section) { section_ = section; }
  Section section() const { return section_; }

  Value fadd(Operand a, Operand b) { return binary(Op::fadd, float_type(), a, b); }
  Value fsub(Operand a, Operand b) { return binary(Op::fsub, float_type(), a, b); }
  Value fmul(Operand a, Operand b) { return binary(Op::fmul, float_type(), a, b); }
  Value fdiv(Operand a, Operand b) { return binary(Op::fdiv, float_type(), a, b); }
  Value fneg(Operand a);
  Value fcmp(Pred pred, Operand a, Operand b);
  Value icmp(Pred pred, Operand a, Operand b);
  Value select(Type type, Operand cond, Operand if_true, Operand if_false);
  Value and_(Operand a, Operand b) { return binary(Op::and_, Type::i32, a, b); }
  Value or_(Operand a, Operand b) { return binary(Op::or_, Type::i32, a, b); }
  Value shl(Operand a, Operand b) { return binary(Op::shl, Type::i32, a, b); }
  Value add(Operand a, Operand b) { return binary(Op::add, Type::i32, a, b); }
  Value sub(Operand a, Operand b) { return binary(Op::sub, Type::i32, a, b); }
  Value mul(Operand a, Operand b) { return binary(Op::mul, Type::i32, a, b); }
  Value urem(Operand a, Operand b) { return binary(Op::urem, Type::i32, a, b); }
  Value zext(Operand a);
  Value sitofp(Operand a);
  Value fptosi_floor(Operand a);
  Value fptosi_round(Operand a);
  Value table_load(int table, Operand index);
  Value data_fetch(Operand coset, std::vector<Operand> site);
  Value phi(Type type, std::vector<std::pair<Operand, int>> incoming);
  /// Appends an incoming edge to an existing phi (loop back-edges).
  void add_incoming(Value phi, Operand value, int block);
  void br(int target);
  void condbr(Operand cond, int if_true, int if_false);
  void ret(Operand value);

  /// Verifies and returns the program; throws IrError.
  Program build() &&;

 private:
  Value binary(Op op, Type type, Operand a, Operand b);
  Value emit(Instruction inst);
  void terminate(Instruction inst);

  Program program_;
  int current_ = -1;
  Section section_ = Section::entry;
};

/// Throws IrError describing the first violation.
void verify(const Program& program);

constexpr int kMaxDim = 4;

/// Source of lattice data for data_fetch.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual double fetch(int coset, std::span<const std::int64_t> site) const = 0;
};

/// Per-coset Cartesian arrays with periodic wraparound. Linear index has
/// axis 0 fastest.
class DataVolume : public DataSource {
 public:
  DataVolume() = default;
  DataVolume(int dim, int coset_count, std::vector<std::int64_t> extents);

  int dim() const { return dim_; }
  int coset_count() const { return static_cast<int>(data_.size()); }
  const std::vector<std::int64_t>& extents() const { return extents_; }
  std::size_t samples_per_coset() const;
  std::size_t sample_count() const { return samples_per_coset() * data_.size(); }

  std::vector<double>& coset(int i) { return data_.at(i); }
  const std::vector<double>& coset(int i) const { return data_.at(i); }

  std::size_t linear_index(std::span<const std::int64_t> site) const;
  double at(int coset, std::span<const std::int64_t> site) const { return data_[coset][linear_index(site)]; }
  double& at(int coset, std::span<const std::int64_t> site) { return data_[coset][linear_index(site)]; }
  double fetch(int coset, std::span<const std::int64_t> site) const override { return at(coset, site); }

  void fill(double value);
  DataVolume scaled(double factor) const;

 private:
  int dim_ = 0;
  std::vector<std::int64_t> extents_;
  std::vector<std::vector<double>> data_;
};

/// Callable-hook variant of the memory lookup primitive.
class LookupHook : public DataSource {
 public:
  using Fn = std::function<double(int, std::span<const std::int64_t>)>;
  explicit LookupHook(Fn fn) : fn_(std::move(fn)) {}
  double fetch(int coset, std::span<const std::int64_t> site) const override { return fn_(coset, site); }

 private:
  Fn fn_;
};

struct ExecStats {
  std::uint64_t instructions = 0;
  std::uint64_t fetches = 0;
  std::uint64_t table_loads = 0;
  std::uint64_t cond_branches = 0;
};

/// Reusable interpreter state for one program; not thread-safe, but any
/// number of Interpreters may share a Program and a DataSource.
class Interpreter {
 public:
  explicit Interpreter(const Program& program, std::uint64_t instruction_budget = 10'000'000);
  // The program is held by pointer; a temporary would dangle.
  explicit Interpreter(Program&&, std::uint64_t = 0) = delete;

  double run(std::span<const double> x, const DataSource& data);
  const ExecStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

 private:
  struct Slot {
    double f = 0.0;
    std::int64_t i = 0;
  };
  double read_f(const Operand& o) const;
  std::int64_t read_i(const Operand& o) const;
  double round_float(double v) const;

  const Program* program_;
  std::uint64_t budget_;
  std::vector<Slot> slots_;
  ExecStats stats_;
};

double interpret(const Program& program, std::span<const double> x, const DataSource& data);

enum class LookupVariant { arrays, hook };

struct EmitOptions {
  LookupVariant lookup = LookupVariant::arrays;
  std::string module_name = "splinegen";
};

/// LLVM textual assembly for the program. Tables are `constant` globals in
/// addrspace(4); the function is `@reconstruct` taking one scalar per axis
/// and a single lookup handle.
std::string emit_text(const Program& program, const EmitOptions& options = {});

struct SyntaxViolation {
  int line = 0;
  std::string message;
};

/// Minimal line-oriented validator for the subset of LLVM assembly that
/// emit_text produces.
std::vector<SyntaxViolation> check_llvm_syntax(const std::string& text);

}  // namespace splinegen::ir
