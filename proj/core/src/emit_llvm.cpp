#include <bit>
#include <cstdio>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "splinegen/ir.hpp"

namespace splinegen::ir {

namespace {

const char* llvm_type(Type t) {
  switch (t) {
    case Type::i1: return "i1";
    case Type::i32: return "i32";
    case Type::f32: return "float";
    case Type::f64: return "double";
  }
  return "void";
}

std::string hex_float(double v, Type t) {
  if (t == Type::f32) v = static_cast<double>(static_cast<float>(v));
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llX", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return buf;
}

class Emitter {
 public:
  Emitter(const Program& p, const EmitOptions& opts) : p_(p), opts_(opts), ft_(llvm_type(p.float_type())) {}

  std::string run() {
    os_ << "; ModuleID = '" << opts_.module_name << "'\n";
    os_ << "source_filename = \"" << opts_.module_name << "\"\n\n";
    if (opts_.lookup == LookupVariant::arrays) {
      os_ << "%coset.desc = type { ptr, [" << p_.dim() << " x i32] }\n\n";
    }
    emit_tables();
    emit_function();
    if (uses_floor()) {
      os_ << "\ndeclare " << ft_ << " @llvm.floor." << (p_.float_type() == Type::f32 ? "f32" : "f64") << "(" << ft_
          << ")\n";
    }
    return os_.str();
  }

 private:
  bool uses_floor() const { return p_.count(Op::fptosi_floor) + p_.count(Op::fptosi_round) > 0; }

  std::string table_type(const Table& t) const {
    return "[" + std::to_string(t.size()) + " x " + elem_type(t) + "]";
  }

  std::string elem_type(const Table& t) const {
    if (is_float(t.elem)) return ft_;
    return t.storage_bits() == 8 ? "i8" : "i32";
  }

  void emit_tables() {
    for (const auto& t : p_.tables()) {
      const std::string et = elem_type(t);
      os_ << "@" << t.name << " = private unnamed_addr addrspace(4) constant " << table_type(t) << " [";
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) os_ << ", ";
        os_ << et << " ";
        if (is_float(t.elem)) {
          os_ << hex_float(t.reals[i], p_.float_type());
        } else {
          os_ << t.ints[i];
        }
      }
      os_ << "], align " << (et == "i8" ? 1 : et == "i32" || et == "float" ? 4 : 8) << "\n";
    }
    if (!p_.tables().empty()) os_ << "\n";
  }

  std::string name(int id) const {
    if (id < p_.dim()) return "%x" + std::to_string(id);
    return "%v" + std::to_string(id);
  }

  std::string operand(const Operand& o, Type t) const {
    switch (o.kind) {
      case Operand::Kind::value: return name(o.id);
      case Operand::Kind::int_const:
        if (t == Type::i1) return o.integer != 0 ? "true" : "false";
        return std::to_string(o.integer);
      case Operand::Kind::float_const: return hex_float(o.real, p_.float_type());
    }
    return "undef";
  }

  void emit_function() {
    os_ << "define " << ft_ << " @reconstruct(";
    for (int a = 0; a < p_.dim(); ++a) os_ << ft_ << " %x" << a << ", ";
    os_ << "ptr %lookup) {\n";
    bool first = true;
    for (const auto& b : p_.blocks()) {
      if (!first) os_ << "\n";
      first = false;
      os_ << b.label << ":\n";
      Section last = b.insts.empty() ? Section::entry : b.insts.front().section;
      bool started = false;
      for (const auto& inst : b.insts) {
        if (!started || inst.section != last) {
          os_ << "  ; " << to_string(inst.section) << "\n";
          last = inst.section;
          started = true;
        }
        emit(inst);
      }
    }
    os_ << "}\n";
  }

  void emit(const Instruction& inst) {
    const std::string r = inst.result >= 0 ? name(inst.result) : "";
    const Type f = p_.float_type();
    const auto& a = inst.args;
    auto bin = [&](const char* opcode, Type t) {
      os_ << "  " << r << " = " << opcode << " " << llvm_type(t) << " " << operand(a[0], t) << ", " << operand(a[1], t)
          << "\n";
    };
    const char* floor_fn = f == Type::f32 ? "@llvm.floor.f32" : "@llvm.floor.f64";
    switch (inst.op) {
      case Op::fadd: bin("fadd", f); break;
      case Op::fsub: bin("fsub", f); break;
      case Op::fmul: bin("fmul", f); break;
      case Op::fdiv: bin("fdiv", f); break;
      case Op::fneg: os_ << "  " << r << " = fneg " << ft_ << " " << operand(a[0], f) << "\n"; break;
      case Op::fcmp: {
        static const char* preds[] = {"olt", "oge", "oeq", "une"};
        os_ << "  " << r << " = fcmp " << preds[static_cast<int>(inst.pred)] << " " << ft_ << " " << operand(a[0], f)
            << ", " << operand(a[1], f) << "\n";
        break;
      }
      case Op::icmp: {
        static const char* preds[] = {"slt", "sge", "eq", "ne"};
        os_ << "  " << r << " = icmp " << preds[static_cast<int>(inst.pred)] << " i32 " << operand(a[0], Type::i32)
            << ", " << operand(a[1], Type::i32) << "\n";
        break;
      }
      case Op::select: {
        const char* t = llvm_type(inst.type);
        os_ << "  " << r << " = select i1 " << operand(a[0], Type::i1) << ", " << t << " " << operand(a[1], inst.type)
            << ", " << t << " " << operand(a[2], inst.type) << "\n";
        break;
      }
      case Op::and_: bin("and", Type::i32); break;
      case Op::or_: bin("or", Type::i32); break;
      case Op::shl: bin("shl", Type::i32); break;
      case Op::add: bin("add", Type::i32); break;
      case Op::sub: bin("sub", Type::i32); break;
      case Op::mul: bin("mul", Type::i32); break;
      case Op::urem: bin("urem", Type::i32); break;
      case Op::zext: os_ << "  " << r << " = zext i1 " << operand(a[0], Type::i1) << " to i32\n"; break;
      case Op::sitofp: os_ << "  " << r << " = sitofp i32 " << operand(a[0], Type::i32) << " to " << ft_ << "\n"; break;
      case Op::fptosi_floor:
        os_ << "  " << r << ".fl = call " << ft_ << " " << floor_fn << "(" << ft_ << " " << operand(a[0], f) << ")\n";
        os_ << "  " << r << " = fptosi " << ft_ << " " << r << ".fl to i32\n";
        break;
      case Op::fptosi_round:
        os_ << "  " << r << ".h = fadd " << ft_ << " " << operand(a[0], f) << ", " << hex_float(0.5, f) << "\n";
        os_ << "  " << r << ".fl = call " << ft_ << " " << floor_fn << "(" << ft_ << " " << r << ".h)\n";
        os_ << "  " << r << " = fptosi " << ft_ << " " << r << ".fl to i32\n";
        break;
      case Op::table_load: emit_table_load(inst, r); break;
      case Op::data_fetch: emit_fetch(inst, r); break;
      case Op::br: os_ << "  br label %" << p_.blocks()[inst.targets[0]].label << "\n"; break;
      case Op::condbr:
        os_ << "  br i1 " << operand(a[0], Type::i1) << ", label %" << p_.blocks()[inst.targets[0]].label
            << ", label %" << p_.blocks()[inst.targets[1]].label << "\n";
        break;
      case Op::phi: {
        os_ << "  " << r << " = phi " << llvm_type(inst.type) << " ";
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (i) os_ << ", ";
          os_ << "[ " << operand(a[i], inst.type) << ", %" << p_.blocks()[inst.targets[i]].label << " ]";
        }
        os_ << "\n";
        break;
      }
      case Op::ret: os_ << "  ret " << ft_ << " " << operand(a[0], f) << "\n"; break;
    }
  }

  void emit_table_load(const Instruction& inst, const std::string& r) {
    const Table& t = p_.tables()[inst.table];
    const std::string et = elem_type(t);
    os_ << "  " << r << ".p = getelementptr inbounds " << table_type(t) << ", ptr addrspace(4) @" << t.name
        << ", i32 0, i32 " << operand(inst.args[0], Type::i32) << "\n";
    const int align = et == "i8" ? 1 : et == "i32" || et == "float" ? 4 : 8;
    if (et == "i8") {
      os_ << "  " << r << ".b = load i8, ptr addrspace(4) " << r << ".p, align 1\n";
      os_ << "  " << r << " = sext i8 " << r << ".b to i32\n";
    } else {
      os_ << "  " << r << " = load " << et << ", ptr addrspace(4) " << r << ".p, align " << align << "\n";
    }
  }

  void emit_fetch(const Instruction& inst, const std::string& r) {
    const auto& a = inst.args;
    const std::string coset = operand(a[0], Type::i32);
    if (opts_.lookup == LookupVariant::hook) {
      os_ << "  " << r << " = call " << ft_ << " %lookup(i32 " << coset;
      for (int ax = 0; ax < p_.dim(); ++ax) os_ << ", i32 " << operand(a[ax + 1], Type::i32);
      os_ << ")\n";
      return;
    }
    os_ << "  " << r << ".d = getelementptr inbounds %coset.desc, ptr %lookup, i32 " << coset << "\n";
    os_ << "  " << r << ".a = load ptr, ptr " << r << ".d, align 8\n";
    for (int ax = 0; ax < p_.dim(); ++ax) {
      const std::string s = std::to_string(ax);
      os_ << "  " << r << ".ep" << s << " = getelementptr inbounds %coset.desc, ptr %lookup, i32 " << coset
          << ", i32 1, i32 " << s << "\n";
      os_ << "  " << r << ".e" << s << " = load i32, ptr " << r << ".ep" << s << ", align 4\n";
      os_ << "  " << r << ".r" << s << " = srem i32 " << operand(a[ax + 1], Type::i32) << ", " << r << ".e" << s
          << "\n";
      os_ << "  " << r << ".s" << s << " = add i32 " << r << ".r" << s << ", " << r << ".e" << s << "\n";
      os_ << "  " << r << ".w" << s << " = srem i32 " << r << ".s" << s << ", " << r << ".e" << s << "\n";
    }
    std::string index = r + ".w" + std::to_string(p_.dim() - 1);
    for (int ax = p_.dim() - 2; ax >= 0; --ax) {
      const std::string s = std::to_string(ax);
      os_ << "  " << r << ".m" << s << " = mul i32 " << index << ", " << r << ".e" << s << "\n";
      os_ << "  " << r << ".i" << s << " = add i32 " << r << ".m" << s << ", " << r << ".w" << s << "\n";
      index = r + ".i" + s;
    }
    os_ << "  " << r << ".p = getelementptr inbounds " << ft_ << ", ptr " << r << ".a, i32 " << index << "\n";
    os_ << "  " << r << " = load " << ft_ << ", ptr " << r << ".p, align " << (p_.float_type() == Type::f32 ? 4 : 8)
        << "\n";
  }

  const Program& p_;
  const EmitOptions& opts_;
  const char* ft_;
  std::ostringstream os_;
};

}  // namespace

std::string emit_text(const Program& program, const EmitOptions& options) { return Emitter(program, options).run(); }

// --- syntax check ---------------------------------------------------------

namespace {

const std::set<std::string>& known_opcodes() {
  static const std::set<std::string> ops = {
      "fadd", "fsub", "fmul", "fdiv", "fneg", "fcmp", "icmp",   "select", "and",  "or",     "shl",
      "add",  "sub",  "mul",  "urem", "srem", "zext", "sext",   "sitofp", "fptosi", "call", "load",
      "getelementptr", "phi"};
  return ops;
}

const std::set<std::string>& known_types() {
  static const std::set<std::string> types = {"i1", "i8", "i32", "i64", "float", "double", "ptr", "void"};
  return types;
}

bool is_comment_or_blank(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t");
  return pos == std::string::npos || line[pos] == ';';
}

}  // namespace

std::vector<SyntaxViolation> check_llvm_syntax(const std::string& text) {
  std::vector<SyntaxViolation> out;
  auto report = [&](int line, std::string msg) { out.push_back({line, std::move(msg)}); };

  static const std::regex global_re(
      R"(^@([A-Za-z_.][A-Za-z0-9_.]*) = private unnamed_addr addrspace\(4\) constant \[(\d+) x (i8|i32|float|double)\] \[(.*)\], align (1|4|8)$)");
  static const std::regex type_re(R"(^%([A-Za-z_.][A-Za-z0-9_.]*) = type \{ .* \}$)");
  static const std::regex declare_re(R"(^declare (float|double) @(llvm\.floor\.f(32|64))\((float|double)\)$)");
  static const std::regex define_re(R"(^define (float|double) @([A-Za-z_][A-Za-z0-9_]*)\((.*)\) \{$)");
  static const std::regex param_re(R"(^(float|double|ptr) %([A-Za-z_.][A-Za-z0-9_.]*)$)");
  static const std::regex label_re(R"(^([A-Za-z_.][A-Za-z0-9_.]*):$)");
  static const std::regex assign_re(R"(^  %([A-Za-z_.][A-Za-z0-9_.]*) = ([a-z]+) (.*)$)");
  static const std::regex br_re(R"(^  br (label %[A-Za-z0-9_.]+|i1 \S+, label %[A-Za-z0-9_.]+, label %[A-Za-z0-9_.]+)$)");
  static const std::regex ret_re(R"(^  ret (float|double) \S+$)");
  static const std::regex local_ref(R"(%([A-Za-z_.][A-Za-z0-9_.]*))");
  static const std::regex label_ref(R"(label %([A-Za-z_.][A-Za-z0-9_.]*))");
  static const std::regex phi_label_ref(R"(, %([A-Za-z_.][A-Za-z0-9_.]*) \])");
  static const std::regex global_ref(R"(@([A-Za-z_.][A-Za-z0-9_.]*))");
  static const std::regex word_re(R"([A-Za-z_][A-Za-z0-9_]*)");

  std::set<std::string> globals;
  std::set<std::string> declared_functions;
  std::set<std::string> named_types;
  std::vector<std::pair<int, std::string>> global_uses;

  bool in_function = false;
  bool saw_function = false;
  bool block_open = false;
  bool block_terminated = false;
  std::set<std::string> locals;
  std::set<std::string> labels;
  std::vector<std::pair<int, std::string>> local_uses;
  std::vector<std::pair<int, std::string>> label_uses;

  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (is_comment_or_blank(line)) continue;
    if (!line.empty() && line.back() == '\r') {
      report(n, "carriage return in line");
      continue;
    }
    std::smatch m;
    if (!in_function) {
      if (line.rfind("source_filename = \"", 0) == 0 && line.back() == '"') continue;
      if (std::regex_match(line, m, global_re)) {
        if (!globals.insert(m[1]).second) report(n, "global @" + m[1].str() + " redefined");
        const std::size_t count = std::stoul(m[2]);
        const std::string elem = m[3];
        std::string body = m[4];
        std::size_t entries = 0;
        std::istringstream items(body);
        std::string item;
        while (std::getline(items, item, ',')) {
          ++entries;
          const auto first = item.find_first_not_of(' ');
          if (first == std::string::npos || item.compare(first, elem.size() + 1, elem + " ") != 0) {
            report(n, "array element does not carry type " + elem);
            break;
          }
        }
        if (entries != count) report(n, "array length does not match its initializer");
        continue;
      }
      if (std::regex_match(line, m, type_re)) {
        named_types.insert(m[1]);
        continue;
      }
      if (std::regex_match(line, m, declare_re)) {
        if (m[1] != m[4]) report(n, "intrinsic return and argument types differ");
        declared_functions.insert(m[2]);
        continue;
      }
      if (std::regex_match(line, m, define_re)) {
        in_function = true;
        saw_function = true;
        block_open = false;
        locals.clear();
        labels.clear();
        local_uses.clear();
        label_uses.clear();
        std::istringstream params(m[3].str());
        std::string param;
        while (std::getline(params, param, ',')) {
          if (!param.empty() && param.front() == ' ') param.erase(0, 1);
          std::smatch pm;
          if (!std::regex_match(param, pm, param_re)) {
            report(n, "malformed parameter '" + param + "'");
          } else if (!locals.insert(pm[2]).second) {
            report(n, "duplicate parameter %" + pm[2].str());
          }
        }
        continue;
      }
      report(n, "unrecognized top-level line");
      continue;
    }

    if (line == "}") {
      if (block_open && !block_terminated) report(n, "block falls off the end of the function");
      for (const auto& [ln, name] : local_uses)
        if (!locals.count(name) && !named_types.count(name)) report(ln, "use of undefined value %" + name);
      for (const auto& [ln, name] : label_uses)
        if (!labels.count(name)) report(ln, "branch to undefined label %" + name);
      in_function = false;
      continue;
    }
    if (std::regex_match(line, m, label_re)) {
      if (block_open && !block_terminated) report(n, "previous block lacks a terminator");
      if (!labels.insert(m[1]).second) report(n, "label " + m[1].str() + " redefined");
      block_open = true;
      block_terminated = false;
      continue;
    }
    if (!block_open) {
      report(n, "instruction outside a basic block");
      continue;
    }
    if (block_terminated) {
      report(n, "instruction after terminator");
      continue;
    }

    std::string operands;
    if (std::regex_match(line, m, assign_re)) {
      const std::string result = m[1];
      const std::string opcode = m[2];
      operands = m[3];
      if (!known_opcodes().count(opcode)) report(n, "unknown opcode '" + opcode + "'");
      if (!locals.insert(result).second) report(n, "value %" + result + " assigned more than once");
      if (operands.find(",,") != std::string::npos || operands.empty()) report(n, "malformed operand list");
    } else if (std::regex_match(line, m, br_re)) {
      block_terminated = true;
      operands = line.substr(5);
    } else if (std::regex_match(line, m, ret_re)) {
      block_terminated = true;
      operands = line.substr(6);
    } else {
      report(n, "unrecognized instruction");
      continue;
    }

    // Types: every bare lowercase word that looks like a type must be known.
    for (std::sregex_iterator it(operands.begin(), operands.end(), word_re), end; it != end; ++it) {
      const std::string w = it->str();
      if (it->position() > 0 && (operands[it->position() - 1] == '%' || operands[it->position() - 1] == '@' ||
                                 operands[it->position() - 1] == '.'))
        continue;
      if (w.size() > 1 && w[0] == 'i' && std::isdigit(static_cast<unsigned char>(w[1])) && !known_types().count(w)) {
        report(n, "unknown type " + w);
      }
    }
    std::string stripped = operands;
    std::set<std::string> labels_here;
    for (std::sregex_iterator it(operands.begin(), operands.end(), label_ref), end; it != end; ++it) {
      label_uses.emplace_back(n, (*it)[1]);
      labels_here.insert((*it)[1]);
    }
    if (m.size() > 2 && m[2] == "phi") {
      for (std::sregex_iterator it(operands.begin(), operands.end(), phi_label_ref), end; it != end; ++it) {
        label_uses.emplace_back(n, (*it)[1]);
        labels_here.insert((*it)[1]);
      }
    }
    for (std::sregex_iterator it(operands.begin(), operands.end(), local_ref), end; it != end; ++it) {
      const std::string name = (*it)[1];
      if (labels_here.count(name)) continue;
      local_uses.emplace_back(n, name);
    }
    for (std::sregex_iterator it(operands.begin(), operands.end(), global_ref), end; it != end; ++it) {
      global_uses.emplace_back(n, (*it)[1]);
    }
    int depth = 0;
    for (char ch : operands) {
      if (ch == '(' || ch == '[' || ch == '{') ++depth;
      if (ch == ')' || ch == ']' || ch == '}') --depth;
      if (depth < 0) break;
    }
    if (depth != 0) report(n, "unbalanced brackets");
  }
  if (in_function) report(n, "function body not closed");
  if (!saw_function) report(n, "no function definition");
  for (const auto& [ln, name] : global_uses)
    if (!globals.count(name) && !declared_functions.count(name)) report(ln, "use of undeclared global @" + name);
  return out;
}

}  // namespace splinegen::ir
