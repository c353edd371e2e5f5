#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "splinegen/bench.hpp"
#include "splinegen/codegen.hpp"
#include "splinegen/ir.hpp"
#include "splinegen/model.hpp"
#include "splinegen/oracle.hpp"

namespace splinegen::cli {

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUnreadable = 2;

/// Signals an exit code together with a message for standard error.
struct Failure {
  int code;
  std::string message;
};

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::uint64_t default_seed() {
  const char* env = std::getenv("SPLINEGEN_SEED");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(env, &used);
    if (used != std::strlen(env)) throw std::invalid_argument(env);
    return seed;
  } catch (const std::exception&) {
    throw Failure{kInvalid, std::string("SPLINEGEN_SEED is not an unsigned integer: ") + env};
  }
}

std::string read_file(const std::string& path) {
  try {
    return read_text_file(path);
  } catch (const std::exception&) {
    throw Failure{kUnreadable, "cannot read '" + path + "'"};
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Failure{kUnreadable, "cannot write '" + path + "'"};
}

SplineSpace load(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_space(text);
  } catch (const std::exception& e) {
    throw Failure{kInvalid, path + ": " + e.what()};
  }
}

struct ConfigFlags {
  int group_size = 1;
  int pipeline_depth = 1;
  std::string branch_mode = "predicated";
  std::string float_width = "f64";
  bool refetch_tables = false;
  bool unroll_cosets = false;

  void attach(CLI::App& app) {
    app.add_option("-m,--group-size", group_size, "Coefficient symbols per polynomial chunk")->capture_default_str();
    app.add_option("-d,--pipeline-depth", pipeline_depth, "Maximum fetches in flight")->capture_default_str();
    app.add_option("--branch-mode", branch_mode, "predicated or branchy")->capture_default_str();
    app.add_option("--float-width", float_width, "f64 or f32")->capture_default_str();
    app.add_flag("--refetch-tables", refetch_tables, "Reload table entries at every use");
    app.add_flag("--unroll-cosets", unroll_cosets, "Emit one straight-line body per coset");
  }

  codegen::GenConfig config() const {
    codegen::GenConfig cfg;
    try {
      cfg.params.group_size = group_size;
      cfg.params.pipeline_depth = pipeline_depth;
      cfg.params.branch_mode = parse_branch_mode(branch_mode);
      cfg.params.refetch_tables = refetch_tables;
      cfg.float_width = codegen::parse_float_width(float_width);
      cfg.unroll_cosets = unroll_cosets;
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw Failure{kInvalid, e.what()};
    }
    return cfg;
  }
};

// --- validate ---------------------------------------------------------------

int cmd_validate(const std::string& path, std::ostream& err) {
  const std::string text = read_file(path);
  std::vector<Diagnostic> diagnostics;
  try {
    diagnostics = validate_space(parse_space_unchecked(text));
  } catch (const SpaceError& e) {
    diagnostics.push_back({Severity::error, e.path(), e.what()});
  } catch (const std::exception& e) {
    diagnostics.push_back({Severity::error, "", e.what()});
  }
  for (const auto& d : diagnostics) err << path << ": " << to_string(d) << "\n";
  return has_errors(diagnostics) ? kInvalid : kOk;
}

// --- codegen ----------------------------------------------------------------

int cmd_codegen(const std::string& path, const ConfigFlags& flags, const std::string& lookup, const std::string& out_path,
                std::ostream& out) {
  const SplineSpace space = load(path);
  const codegen::GenConfig cfg = flags.config();
  ir::EmitOptions options;
  if (lookup == "arrays") {
    options.lookup = ir::LookupVariant::arrays;
  } else if (lookup == "hook") {
    options.lookup = ir::LookupVariant::hook;
  } else {
    throw Failure{kInvalid, "unknown lookup variant '" + lookup + "' (expected arrays or hook)"};
  }
  options.module_name = space.name.empty() ? "splinegen" : space.name;

  std::string text;
  try {
    text = ir::emit_text(codegen::generate(space, cfg), options);
  } catch (const std::exception& e) {
    throw Failure{kInvalid, e.what()};
  }

  nlohmann::ordered_json manifest;
  manifest["spline"] = space.name;
  manifest["m"] = cfg.params.group_size;
  manifest["d"] = cfg.params.pipeline_depth;
  manifest["branch_mode"] = to_string(cfg.params.branch_mode);
  manifest["float_width"] = codegen::to_string(cfg.float_width);
  manifest["refetch_tables"] = cfg.params.refetch_tables;
  manifest["unroll_cosets"] = cfg.unroll_cosets;
  manifest["lookup"] = lookup;

  if (out_path.empty() || out_path == "-") {
    out << text;
    return kOk;
  }
  write_file(out_path, text);
  write_file(std::filesystem::path(out_path).replace_extension(".json").string(), manifest.dump(2) + "\n");
  return kOk;
}

// --- eval -------------------------------------------------------------------

ir::DataVolume data_from_file(const SplineSpace& space, const std::string& path) {
  const std::string text = read_file(path);
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto extents = doc.at("extents").get<std::vector<std::int64_t>>();
    const auto& cosets = doc.at("cosets");
    if (static_cast<int>(extents.size()) != space.dim) throw std::invalid_argument("extents must have one entry per axis");
    if (static_cast<int>(cosets.size()) != space.coset_count()) {
      throw std::invalid_argument("data must hold one array per coset");
    }
    ir::DataVolume volume(space.dim, space.coset_count(), extents);
    for (int c = 0; c < space.coset_count(); ++c) {
      const auto values = cosets.at(c).get<std::vector<double>>();
      if (values.size() != volume.samples_per_coset()) throw std::invalid_argument("coset array has the wrong length");
      volume.coset(c) = values;
    }
    return volume;
  } catch (const std::exception& e) {
    throw Failure{kInvalid, path + ": " + e.what()};
  }
}

ir::DataVolume make_data(const SplineSpace& space, const std::string& kind, std::vector<std::int64_t> extents,
                         std::uint64_t seed) {
  if (extents.empty()) extents.assign(space.dim, 16);
  if (extents.size() == 1 && space.dim > 1) extents.assign(space.dim, extents.front());
  if (static_cast<int>(extents.size()) != space.dim) throw Failure{kInvalid, "--extents needs one value per axis"};
  if (std::any_of(extents.begin(), extents.end(), [](std::int64_t e) { return e <= 0; })) {
    throw Failure{kInvalid, "--extents must be positive"};
  }
  if (kind == "random") return bench::make_volume(space, extents, seed);
  ir::DataVolume volume(space.dim, space.coset_count(), extents);
  if (kind == "ones") {
    volume.fill(1.0);
  } else if (kind == "zeros") {
    volume.fill(0.0);
  } else if (kind == "delta") {
    volume.coset(0)[0] = 1.0;
  } else {
    return data_from_file(space, kind);
  }
  return volume;
}

int cmd_eval(const std::string& path, const ConfigFlags& flags, const std::vector<double>& point, const std::string& data_kind,
             const std::vector<std::int64_t>& extents, std::uint64_t seed, bool check, std::ostream& out,
             std::ostream& err) {
  const SplineSpace space = load(path);
  if (static_cast<int>(point.size()) != space.dim) {
    throw Failure{kInvalid, "point has " + std::to_string(point.size()) + " coordinates but the space has dimension " +
                                std::to_string(space.dim)};
  }
  const codegen::GenConfig cfg = flags.config();
  const ir::DataVolume data = make_data(space, data_kind, extents, seed);
  double value = 0.0;
  try {
    value = ir::interpret(codegen::generate(space, cfg), point, data);
  } catch (const std::exception& e) {
    throw Failure{kInvalid, e.what()};
  }
  if (!check) {
    out << format_value(value) << "\n";
    return kOk;
  }
  double reference = 0.0;
  double convolution = 0.0;
  try {
    const oracle::Reference ref(space);
    reference = ref.eval(point, data);
    convolution = oracle::convolution_eval(ref, point, data, oracle::default_support_radius(space));
  } catch (const std::exception& e) {
    throw Failure{kInvalid, e.what()};
  }
  const double d_ref = oracle::relative_difference(value, reference);
  const double d_conv = oracle::relative_difference(value, convolution);
  out << "interpreter " << format_value(value) << "\n";
  out << "reference   " << format_value(reference) << " rel_diff " << format_value(d_ref) << "\n";
  out << "convolution " << format_value(convolution) << " rel_diff " << format_value(d_conv) << "\n";
  constexpr double kTolerance = 1e-9;
  if (cfg.float_width == codegen::FloatWidth::f64 && (d_ref > kTolerance || d_conv > kTolerance)) {
    err << "evaluators disagree beyond " << kTolerance << "\n";
    return kInvalid;
  }
  return kOk;
}

// --- bench ------------------------------------------------------------------

struct BenchFlags {
  std::string grid = "full";
  std::int64_t trials = 100000;
  std::int64_t batch = 1000;
  std::string modes = "predicated,branchy";
  std::string backend = "interpreter";
  std::string compiler;
  std::string csv_out;
  std::string matrix_out;
  std::int64_t edge = 64;
  bool refetch_tables = false;
};

int cmd_bench(const std::string& path, const BenchFlags& flags, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  const SplineSpace space = load(path);
  bench::SweepOptions options;
  try {
    options.grid = bench::parse_grid(flags.grid, space.stencil_size());
    options.modes.clear();
    std::istringstream modes(flags.modes);
    std::string mode;
    while (std::getline(modes, mode, ',')) options.modes.push_back(parse_branch_mode(mode));
    options.backend = bench::parse_backend(flags.backend);
  } catch (const std::invalid_argument& e) {
    throw Failure{kInvalid, e.what()};
  }
  if (flags.trials < 1) throw Failure{kInvalid, "--trials must be at least 1"};
  if (flags.batch < 1) throw Failure{kInvalid, "--batch must be at least 1"};
  if (flags.edge < 1) throw Failure{kInvalid, "--edge must be positive"};
  options.trials = flags.trials;
  options.batch = flags.batch;
  options.seed = seed;
  options.refetch_tables = flags.refetch_tables;
  options.compiler = flags.compiler;

  const auto extents = bench::default_extents(space, flags.edge);
  const ir::DataVolume data = bench::make_volume(space, extents, seed);
  std::vector<bench::BenchRecord> records;
  try {
    records = bench::run_sweep(space, data, options);
  } catch (const std::exception& e) {
    throw Failure{kInvalid, e.what()};
  }
  const std::string csv = bench::emit_csv(records);
  if (flags.csv_out.empty() || flags.csv_out == "-") {
    out << csv;
  } else {
    write_file(flags.csv_out, csv);
  }
  if (!flags.matrix_out.empty()) write_file(flags.matrix_out, bench::emit_matrix(records, space.stencil_size()));
  err << records.size() << " cells, " << data.sample_count() << " samples\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generate and evaluate spline reconstruction kernels", "splinegen"};
  app.require_subcommand(1);

  std::string path;
  ConfigFlags config_flags;

  auto* validate = app.add_subcommand("validate", "Check a spline space description");
  validate->add_option("path", path, "Description file")->required();

  auto* codegen_cmd = app.add_subcommand("codegen", "Emit LLVM assembly and a manifest");
  codegen_cmd->add_option("path", path, "Description file")->required();
  config_flags.attach(*codegen_cmd);
  std::string lookup = "arrays";
  std::string out_path;
  codegen_cmd->add_option("--lookup", lookup, "arrays or hook")->capture_default_str();
  codegen_cmd->add_option("-o,--out", out_path, "Output .ll path (manifest written beside it; stdout if omitted)");

  auto* eval = app.add_subcommand("eval", "Reconstruct the value at one point");
  eval->add_option("path", path, "Description file")->required();
  ConfigFlags eval_flags;
  eval_flags.attach(*eval);
  std::vector<double> point;
  std::string data_kind = "ones";
  std::vector<std::int64_t> extents;
  std::optional<std::uint64_t> eval_seed;
  bool check = false;
  eval->add_option("--point", point, "Coordinates, comma separated")->required()->delimiter(',');
  eval->add_option("--data", data_kind, "ones, zeros, delta, random, or a JSON data file")->capture_default_str();
  eval->add_option("--extents", extents, "Per-coset array extents, comma separated")->delimiter(',');
  eval->add_option("--seed", eval_seed, "Seed for --data random (default: SPLINEGEN_SEED or 1)");
  eval->add_flag("--check", check, "Also print both oracle values and their differences");

  auto* bench_cmd = app.add_subcommand("bench", "Sweep group size and pipeline depth");
  bench_cmd->add_option("path", path, "Description file")->required();
  BenchFlags bench_flags;
  std::optional<std::uint64_t> bench_seed;
  bench_cmd->add_option("--grid", bench_flags.grid, "full or m=a..b,d=c..d")->capture_default_str();
  bench_cmd->add_option("--trials", bench_flags.trials, "Timed evaluations per cell")->capture_default_str();
  bench_cmd->add_option("--batch", bench_flags.batch, "Evaluations per timed batch")->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "Seed for data and points (default: SPLINEGEN_SEED or 1)");
  bench_cmd->add_option("--modes", bench_flags.modes, "Branch modes, comma separated")->capture_default_str();
  bench_cmd->add_option("--backend", bench_flags.backend, "interpreter or external")->capture_default_str();
  bench_cmd->add_option("--compiler", bench_flags.compiler, "clang used by the external backend");
  bench_cmd->add_option("--csv-out", bench_flags.csv_out, "CSV output path (stdout if omitted)");
  bench_cmd->add_option("--matrix-out", bench_flags.matrix_out, "Gnuplot matrix output path");
  bench_cmd->add_option("--edge", bench_flags.edge, "Volume edge of the Cartesian equivalent")->capture_default_str();
  bench_cmd->add_flag("--refetch-tables", bench_flags.refetch_tables, "Reload table entries at every use");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    }
    return kInvalid;
  }

  try {
    if (validate->parsed()) return cmd_validate(path, err);
    if (codegen_cmd->parsed()) return cmd_codegen(path, config_flags, lookup, out_path, out);
    if (eval->parsed()) {
      const std::uint64_t seed = eval_seed ? *eval_seed : default_seed();
      return cmd_eval(path, eval_flags, point, data_kind, extents, seed, check, out, err);
    }
    if (bench_cmd->parsed()) {
      const std::uint64_t seed = bench_seed ? *bench_seed : default_seed();
      return cmd_bench(path, bench_flags, seed, out, err);
    }
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace splinegen::cli
