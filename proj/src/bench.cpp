#include "cpa/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <ostream>

namespace cpa {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::array<double, 4> BenchReport::percentages() const noexcept {
  const double sum = phases.total();
  if (sum <= 0.0) return {0.0, 0.0, 0.0, 0.0};
  return {100.0 * phases.phase1 / sum, 100.0 * phases.phase2 / sum, 100.0 * phases.phase3 / sum,
          100.0 * phases.phase4 / sum};
}

double BenchReport::throughput() const noexcept {
  return total_s > 0.0 ? static_cast<double>(n) * static_cast<double>(m) / total_s : 0.0;
}

std::vector<BenchReport> run_benchmark(const TraceSet& ts, const CiphertextSet& cts,
                                       const BenchOptions& options) {
  const std::size_t reps = std::max<std::size_t>(1, options.repetitions);
  std::vector<BenchReport> reports;
  for (std::size_t requested : options.workers) {
    AttackConfig cfg = options.attack;
    cfg.workers = resolve_workers(requested);
    std::vector<double> p1, p2, p3, p4, total;
    for (std::size_t r = 0; r < reps; ++r) {
      PhaseTimes t;
      const auto start = std::chrono::steady_clock::now();
      (void)attack(ts, cts, cfg, &t);
      total.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      p1.push_back(t.phase1);
      p2.push_back(t.phase2);
      p3.push_back(t.phase3);
      p4.push_back(t.phase4);
    }
    BenchReport rep;
    rep.n = ts.n();
    rep.m = ts.m();
    rep.workers = cfg.workers;
    rep.precision = cfg.precision;
    rep.repetitions = reps;
    rep.phases = PhaseTimes{median(p1), median(p2), median(p3), median(p4)};
    rep.total_s = median(total);
    rep.total_min_s = *std::min_element(total.begin(), total.end());
    rep.total_max_s = *std::max_element(total.begin(), total.end());
    reports.push_back(rep);
  }
  return reports;
}

std::vector<BenchReport> run_benchmark(const SynthConfig& synth, const BenchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto [ts, cts] = generate_dataset(synth, resolve_workers(0));
  const double load = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto reports = run_benchmark(ts, cts, options);
  for (auto& r : reports) r.load_s = load;
  return reports;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchReport>& reports) {
  out << kBenchCsvHeader << '\n';
  for (const auto& r : reports) {
    out << r.n << ',' << r.m << ',' << r.workers << ',' << to_string(r.precision) << ','
        << fmt("%.6f", r.phases.phase1) << ',' << fmt("%.6f", r.phases.phase2) << ','
        << fmt("%.6f", r.phases.phase3) << ',' << fmt("%.6f", r.phases.phase4) << ','
        << fmt("%.6f", r.total_s) << ',' << fmt("%.1f", r.throughput()) << '\n';
  }
}

void write_bench_table(std::ostream& out, const std::vector<BenchReport>& reports) {
  for (const auto& r : reports) {
    const auto pct = r.percentages();
    out << "n=" << r.n << " m=" << r.m << " workers=" << r.workers
        << " precision=" << to_string(r.precision) << " reps=" << r.repetitions << '\n';
    const char* names[4] = {"Phase1 (model statistics)", "Phase2 (trace statistics)",
                            "Phase3 (max correlation)", "Phase4 (round key)"};
    const double secs[4] = {r.phases.phase1, r.phases.phase2, r.phases.phase3, r.phases.phase4};
    for (int p = 0; p < 4; ++p)
      out << "  " << std::left << std::setw(26) << names[p] << std::right << fmt("%10.4f", secs[p]) << " s  " << fmt("%5.1f", pct[p])
          << "%\n";
    out << "  total (median)            " << fmt("%10.4f", r.total_s) << " s  [min " << fmt("%.4f", r.total_min_s)
        << ", max " << fmt("%.4f", r.total_max_s) << "]\n";
    if (r.load_s > 0.0) out << "  data generation           " << fmt("%10.4f", r.load_s) << " s\n";
    out << "  throughput                " << fmt("%10.3e", r.throughput()) << " samples/s\n";
  }
}

}  // namespace cpa
