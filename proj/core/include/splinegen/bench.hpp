#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splinegen/codegen.hpp"
#include "splinegen/ir.hpp"
#include "splinegen/model.hpp"
#include "splinegen/schedule.hpp"

namespace splinegen::bench {

enum class Backend { interpreter, external };

const char* to_string(Backend backend);
Backend parse_backend(const std::string& text);

struct BenchRecord {
  std::string spline;
  int m = 1;
  int d = 1;
  BranchMode branch_mode = BranchMode::predicated;
  Backend backend = Backend::interpreter;
  std::int64_t trials = 1;
  double mean_recon_per_sec = 0.0;
  double variance = 0.0;

  bool operator==(const BenchRecord&) const = default;
};

struct GridCell {
  int m = 1;
  int d = 1;
  bool operator==(const GridCell&) const = default;
};

/// All (m, d) with 1 <= m <= d <= n, ordered by m then d.
std::vector<GridCell> lower_diagonal_grid(int n);

/// Parses "full" or "m=a..b,d=c..d" (single values allowed, e.g. "m=1,d=4").
/// An omitted axis spans [1, n]. Cells with d < m or outside [1, n] are
/// dropped. Throws std::invalid_argument.
std::vector<GridCell> parse_grid(const std::string& text, int n);

/// Seeded uniform [0, 1) samples, one array per coset.
ir::DataVolume make_volume(const SplineSpace& space, const std::vector<std::int64_t>& extents, std::uint64_t seed);

/// Per-coset extents holding roughly `cc_edge`^s samples in total.
std::vector<std::int64_t> default_extents(const SplineSpace& space, std::int64_t cc_edge = 64);

/// Seeded evaluation points uniform inside the volume.
std::vector<std::vector<double>> sample_points(const ir::DataVolume& volume, std::size_t count, std::uint64_t seed);

/// Natively compiled build of emitted text, loaded as a shared object.
class NativeKernel {
 public:
  /// Compiles `text` with `compiler` into a shared object under `work_dir`.
  /// Throws std::runtime_error on failure.
  NativeKernel(const std::string& text, int dim, const std::string& work_dir, const std::string& compiler = "clang");
  ~NativeKernel();
  NativeKernel(const NativeKernel&) = delete;
  NativeKernel& operator=(const NativeKernel&) = delete;

  /// Binds the coset arrays; the volume must outlive subsequent eval calls.
  void bind(const ir::DataVolume& volume);
  double eval(const double* x) const;

 private:
  int dim_;
  void* handle_ = nullptr;
  void* fn_ = nullptr;
  std::vector<std::uint8_t> descriptors_;
};

/// Locates a usable clang, honoring SPLINEGEN_CLANG. Empty if none.
std::string find_compiler();

struct SweepOptions {
  std::vector<GridCell> grid;
  std::vector<BranchMode> modes = {BranchMode::predicated, BranchMode::branchy};
  std::int64_t trials = 100000;
  std::int64_t batch = 1000;
  std::uint64_t seed = 1;
  bool refetch_tables = false;
  Backend backend = Backend::interpreter;
  std::string compiler;   // external backend only
  std::string work_dir;   // external backend only
  /// Points per cell checked against both oracles before timing.
  int check_samples = 8;
  double check_tolerance = 1e-9;
};

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Times every grid cell in every mode. Throws BenchError if a cell's
/// results disagree with the oracles on the checked subsample.
std::vector<BenchRecord> run_sweep(const SplineSpace& space, const ir::DataVolume& data, const SweepOptions& options);

/// Mean and sample variance of per-batch throughput.
struct Throughput {
  double mean = 0.0;
  double variance = 0.0;
};
Throughput summarize(const std::vector<double>& per_batch);

std::string csv_header();
/// Header plus one row per record ordered by (m, d, branch mode).
std::string emit_csv(std::vector<BenchRecord> records);
std::vector<BenchRecord> parse_csv(const std::string& text);

/// Gnuplot matrix: one block per branch mode, rows d = 1..n, columns
/// m = 1..n, blank cells where d < m or no record exists.
std::string emit_matrix(const std::vector<BenchRecord>& records, int n);

}  // namespace splinegen::bench
