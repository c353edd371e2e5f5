#include "splinegen/bench.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <tuple>

#include "splinegen/oracle.hpp"

namespace splinegen::bench {

const char* to_string(Backend backend) { return backend == Backend::external ? "external" : "interpreter"; }

Backend parse_backend(const std::string& text) {
  if (text == "interpreter") return Backend::interpreter;
  if (text == "external" || text == "native") return Backend::external;
  throw std::invalid_argument("unknown backend '" + text + "' (expected interpreter or external)");
}

std::vector<GridCell> lower_diagonal_grid(int n) {
  std::vector<GridCell> cells;
  for (int m = 1; m <= n; ++m)
    for (int d = m; d <= n; ++d) cells.push_back({m, d});
  return cells;
}

namespace {

std::pair<int, int> parse_range(const std::string& text) {
  static const std::regex range(R"((\d+)(?:\.\.(\d+))?)");
  std::smatch m;
  if (!std::regex_match(text, m, range)) throw std::invalid_argument("bad range '" + text + "'");
  const int lo = std::stoi(m[1]);
  const int hi = m[2].matched ? std::stoi(m[2]) : lo;
  if (hi < lo) throw std::invalid_argument("empty range '" + text + "'");
  return {lo, hi};
}

}  // namespace

std::vector<GridCell> parse_grid(const std::string& text, int n) {
  if (text == "full" || text.empty()) return lower_diagonal_grid(n);
  std::pair<int, int> ms{1, n};
  std::pair<int, int> ds{1, n};
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.rfind("m=", 0) == 0) {
      ms = parse_range(part.substr(2));
    } else if (part.rfind("d=", 0) == 0) {
      ds = parse_range(part.substr(2));
    } else {
      throw std::invalid_argument("bad grid component '" + part + "' (expected m=a..b or d=c..d)");
    }
  }
  std::vector<GridCell> cells;
  for (int m = std::max(1, ms.first); m <= std::min(n, ms.second); ++m)
    for (int d = std::max(m, ds.first); d <= std::min(n, ds.second); ++d) cells.push_back({m, d});
  return cells;
}

ir::DataVolume make_volume(const SplineSpace& space, const std::vector<std::int64_t>& extents, std::uint64_t seed) {
  ir::DataVolume volume(space.dim, space.coset_count(), extents);
  std::mt19937_64 rng(seed);
  for (int c = 0; c < volume.coset_count(); ++c)
    for (double& v : volume.coset(c)) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return volume;
}

std::vector<std::int64_t> default_extents(const SplineSpace& space, std::int64_t cc_edge) {
  const double total = std::pow(static_cast<double>(cc_edge), space.dim);
  const double per_coset = total / space.coset_count();
  const auto edge = std::max<std::int64_t>(1, std::llround(std::pow(per_coset, 1.0 / space.dim)));
  return std::vector<std::int64_t>(space.dim, edge);
}

std::vector<std::vector<double>> sample_points(const ir::DataVolume& volume, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::vector<double>> points(count, std::vector<double>(volume.dim()));
  for (auto& p : points)
    for (int a = 0; a < volume.dim(); ++a)
      p[a] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * static_cast<double>(volume.extents()[a]);
  return points;
}

// --- native backend -----------------------------------------------------------

std::string find_compiler() {
  if (const char* env = std::getenv("SPLINEGEN_CLANG"); env && *env) return env;
  for (const char* candidate : {"/usr/bin/clang", "/usr/local/bin/clang"}) {
    if (::access(candidate, X_OK) == 0) return candidate;
  }
  return {};
}

NativeKernel::NativeKernel(const std::string& text, int dim, const std::string& work_dir, const std::string& compiler)
    : dim_(dim) {
  namespace fs = std::filesystem;
  if (dim < 1 || dim > ir::kMaxDim) throw std::runtime_error("unsupported dimension for native kernel");
  fs::path dir = work_dir.empty() ? fs::temp_directory_path() : fs::path(work_dir);
  fs::create_directories(dir);
  static int counter = 0;
  const std::string stem = "splinegen_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const fs::path ll = dir / (stem + ".ll");
  const fs::path so = dir / (stem + ".so");
  {
    std::ofstream out(ll);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + ll.string());
  }
  const std::string cmd = "'" + compiler + "' -O2 -shared -fPIC -Wno-override-module -Xclang -opaque-pointers -mllvm " +
                          "-opaque-pointers '" + ll.string() + "' -o '" + so.string() + "' 2>&1";
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("native compilation failed: " + cmd);
  handle_ = ::dlopen(so.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (!handle_) throw std::runtime_error(std::string("dlopen failed: ") + ::dlerror());
  fn_ = ::dlsym(handle_, "reconstruct");
  if (!fn_) throw std::runtime_error("reconstruct symbol missing from native build");
}

NativeKernel::~NativeKernel() {
  if (handle_) ::dlclose(handle_);
}

void NativeKernel::bind(const ir::DataVolume& volume) {
  // Layout of { ptr, [s x i32] } on a 64-bit target.
  const std::size_t stride = (8 + 4 * static_cast<std::size_t>(dim_) + 7) & ~std::size_t{7};
  descriptors_.assign(stride * volume.coset_count(), 0);
  for (int c = 0; c < volume.coset_count(); ++c) {
    std::uint8_t* base = descriptors_.data() + stride * c;
    const double* data = volume.coset(c).data();
    std::memcpy(base, &data, sizeof data);
    for (int a = 0; a < dim_; ++a) {
      const auto e = static_cast<std::int32_t>(volume.extents()[a]);
      std::memcpy(base + 8 + 4 * a, &e, sizeof e);
    }
  }
}

double NativeKernel::eval(const double* x) const {
  void* desc = const_cast<std::uint8_t*>(descriptors_.data());
  switch (dim_) {
    case 1: return reinterpret_cast<double (*)(double, void*)>(fn_)(x[0], desc);
    case 2: return reinterpret_cast<double (*)(double, double, void*)>(fn_)(x[0], x[1], desc);
    case 3: return reinterpret_cast<double (*)(double, double, double, void*)>(fn_)(x[0], x[1], x[2], desc);
    default:
      return reinterpret_cast<double (*)(double, double, double, double, void*)>(fn_)(x[0], x[1], x[2], x[3], desc);
  }
}

// --- sweep ------------------------------------------------------------------------

Throughput summarize(const std::vector<double>& per_batch) {
  Throughput t;
  if (per_batch.empty()) return t;
  double sum = 0.0;
  for (double v : per_batch) sum += v;
  t.mean = sum / static_cast<double>(per_batch.size());
  if (per_batch.size() > 1) {
    double sq = 0.0;
    for (double v : per_batch) sq += (v - t.mean) * (v - t.mean);
    t.variance = sq / static_cast<double>(per_batch.size() - 1);
  }
  return t;
}

std::vector<BenchRecord> run_sweep(const SplineSpace& space, const ir::DataVolume& data, const SweepOptions& options) {
  using clock = std::chrono::steady_clock;
  if (options.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (options.batch < 1) throw std::invalid_argument("batch size must be at least 1");

  const std::int64_t batch = std::min(options.batch, options.trials);
  const auto points = sample_points(data, static_cast<std::size_t>(std::max<std::int64_t>(batch, 1)), options.seed);
  const oracle::Reference reference(space);
  const double radius = oracle::default_support_radius(space);
  const std::size_t checked = std::min<std::size_t>(points.size(), static_cast<std::size_t>(options.check_samples));
  std::vector<double> expected(checked);
  for (std::size_t i = 0; i < checked; ++i) {
    expected[i] = reference.eval(points[i], data);
    const double conv = oracle::convolution_eval(reference, points[i], data, radius);
    if (oracle::relative_difference(expected[i], conv) > options.check_tolerance) {
      throw BenchError("oracles disagree at sample " + std::to_string(i));
    }
  }

  std::vector<BenchRecord> records;
  volatile double sink = 0.0;
  for (const BranchMode mode : options.modes) {
    for (const GridCell& cell : options.grid) {
      codegen::GenConfig config;
      config.params = {cell.m, cell.d, mode, options.refetch_tables};
      const ir::Program program = codegen::generate(space, config);

      ir::Interpreter interp(program);
      std::unique_ptr<NativeKernel> native;
      if (options.backend == Backend::external) {
        const std::string compiler = options.compiler.empty() ? find_compiler() : options.compiler;
        if (compiler.empty()) throw BenchError("external backend requested but no clang was found");
        native = std::make_unique<NativeKernel>(ir::emit_text(program), space.dim, options.work_dir, compiler);
        native->bind(data);
      }
      auto evaluate = [&](const std::vector<double>& x) {
        return native ? native->eval(x.data()) : interp.run(x, data);
      };

      for (std::size_t i = 0; i < checked; ++i) {
        const double got = evaluate(points[i]);
        if (oracle::relative_difference(got, expected[i]) > options.check_tolerance) {
          throw BenchError("m=" + std::to_string(cell.m) + " d=" + std::to_string(cell.d) + " " + to_string(mode) +
                           ": result disagrees with the oracle");
        }
      }

      // Warm-up pass, not timed.
      for (std::int64_t i = 0; i < batch; ++i) sink = sink + evaluate(points[i % points.size()]);

      std::vector<double> per_batch;
      std::int64_t done = 0;
      while (done < options.trials) {
        const std::int64_t count = std::min(batch, options.trials - done);
        const auto start = clock::now();
        for (std::int64_t i = 0; i < count; ++i) sink = sink + evaluate(points[(done + i) % points.size()]);
        const std::chrono::duration<double> elapsed = clock::now() - start;
        per_batch.push_back(static_cast<double>(count) / std::max(elapsed.count(), 1e-9));
        done += count;
      }
      const Throughput t = summarize(per_batch);
      records.push_back({space.name, cell.m, cell.d, mode, options.backend, options.trials, t.mean, t.variance});
    }
  }
  (void)sink;
  return records;
}

// --- CSV --------------------------------------------------------------------------

std::string csv_header() { return "spline,m,d,branch_mode,backend,trials,mean_recon_per_sec,variance"; }

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string emit_csv(std::vector<BenchRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
    return std::tie(a.m, a.d, a.branch_mode) < std::tie(b.m, b.d, b.branch_mode);
  });
  std::ostringstream os;
  os << csv_header() << "\n";
  for (const auto& r : records) {
    os << r.spline << "," << r.m << "," << r.d << "," << to_string(r.branch_mode) << "," << to_string(r.backend) << ","
       << r.trials << "," << format_double(r.mean_recon_per_sec) << "," << format_double(r.variance) << "\n";
  }
  return os.str();
}

std::vector<BenchRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw std::invalid_argument("missing or unexpected CSV header");
  std::vector<BenchRecord> records;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream fs(line);
    std::string f;
    while (std::getline(fs, f, ',')) fields.push_back(f);
    if (fields.size() != 8) throw std::invalid_argument("CSV row " + std::to_string(row) + " has the wrong field count");
    try {
      BenchRecord r;
      r.spline = fields[0];
      r.m = std::stoi(fields[1]);
      r.d = std::stoi(fields[2]);
      r.branch_mode = parse_branch_mode(fields[3]);
      r.backend = parse_backend(fields[4]);
      r.trials = std::stoll(fields[5]);
      r.mean_recon_per_sec = std::stod(fields[6]);
      r.variance = std::stod(fields[7]);
      records.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("CSV row " + std::to_string(row) + ": " + e.what());
    }
  }
  return records;
}

std::string emit_matrix(const std::vector<BenchRecord>& records, int n) {
  std::ostringstream os;
  bool first = true;
  for (const BranchMode mode : {BranchMode::predicated, BranchMode::branchy}) {
    const bool any = std::any_of(records.begin(), records.end(), [&](const BenchRecord& r) { return r.branch_mode == mode; });
    if (!any) continue;
    if (!first) os << "\n\n";
    first = false;
    os << "# " << to_string(mode) << ": rows d=1.." << n << ", columns m=1.." << n << ", reconstructions/s\n";
    for (int d = 1; d <= n; ++d) {
      for (int m = 1; m <= n; ++m) {
        if (m > 1) os << ",";
        if (d < m) continue;
        const auto it = std::find_if(records.begin(), records.end(), [&](const BenchRecord& r) {
          return r.branch_mode == mode && r.m == m && r.d == d;
        });
        if (it != records.end()) os << format_double(it->mean_recon_per_sec);
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace splinegen::bench
