#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpa/engine.hpp"
#include "cpa/synth.hpp"

namespace cpa {

/// Timings for one (dataset, worker count) configuration. Phase and total
/// times are medians over the repetitions.
struct BenchReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t workers = 1;
  Precision precision = Precision::Double;
  PhaseTimes phases;
  double total_s = 0.0;
  double total_min_s = 0.0;
  double total_max_s = 0.0;
  double load_s = 0.0;
  std::size_t repetitions = 0;

  /// Share of each phase in the summed phase time, in percent.
  std::array<double, 4> percentages() const noexcept;
  /// Trace samples (n * m) processed per second of median total time.
  double throughput() const noexcept;
};

struct BenchOptions {
  std::vector<std::size_t> workers{1};
  std::size_t repetitions = 3;
  AttackConfig attack;  // workers field is overridden per configuration
};

std::vector<BenchReport> run_benchmark(const TraceSet& ts, const CiphertextSet& cts,
                                       const BenchOptions& options);

/// Generates the dataset first; generation time is reported as load_s.
std::vector<BenchReport> run_benchmark(const SynthConfig& synth, const BenchOptions& options);

inline constexpr const char* kBenchCsvHeader =
    "n,m,workers,precision,phase1_s,phase2_s,phase3_s,phase4_s,total_s,throughput";

void write_bench_csv(std::ostream& out, const std::vector<BenchReport>& reports);
void write_bench_table(std::ostream& out, const std::vector<BenchReport>& reports);

}  // namespace cpa
