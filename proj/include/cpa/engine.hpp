#pragma once

// Four-phase correlation power analysis against the AES-128 last round.
//
//   Phase1  selection values H and the model sums  SH, SH^2  per (subkey, byte)
//   Phase2  trace sums SW_j, SW_j^2 per sample and SWH per (subkey, byte, sample)
//   Phase3  max |rho| over samples per (subkey, byte), streamed chunk by chunk
//   Phase4  rank subkeys per byte, invert the key schedule
//
// Grid cells are indexed cell = subkey * 16 + byte_pos. Every per-cell sum
// runs over traces i = 0..n-1 in order, so results do not depend on the
// worker count or on how the sample axis is chunked.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cpa/aes.hpp"
#include "cpa/trace_model.hpp"

namespace cpa {

inline constexpr std::size_t kBytePositions = 16;
inline constexpr std::size_t kSubkeys = 256;
inline constexpr std::size_t kCells = kSubkeys * kBytePositions;

constexpr std::size_t cell_index(std::size_t subkey, std::size_t byte_pos) noexcept {
  return subkey * kBytePositions + byte_pos;
}

class AttackError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TableMode { Materialized, OnTheFly, Auto };

TableMode parse_table_mode(const std::string& s);
std::string to_string(TableMode mode);

/// H(i, b, k) for every trace, byte position and subkey guess. Materialized
/// tables hold n * 4096 bytes in (i, b, k) order; on-the-fly tables keep the
/// ciphertexts and recompute on demand.
class SelectionTable {
 public:
  static SelectionTable build(const CiphertextSet& cts, TableMode mode, std::size_t workers = 1,
                              std::size_t budget_bytes = std::size_t{1} << 30);

  std::size_t n() const noexcept { return cts_.n(); }
  TableMode mode() const noexcept { return mode_; }

  std::uint8_t at(std::size_t i, std::size_t byte_pos, std::size_t subkey) const noexcept {
    if (mode_ == TableMode::Materialized) return values_[(i * kBytePositions + byte_pos) * kSubkeys + subkey];
    return static_cast<std::uint8_t>(selection_value(cts_[i], byte_pos, static_cast<std::uint8_t>(subkey)));
  }

  /// Writes H(i, byte_pos, k) for i in [i0, i1) and all 256 k to
  /// out[(i - i0) * 256 + k].
  void fill_rows(std::size_t byte_pos, std::size_t i0, std::size_t i1, std::uint8_t* out) const noexcept;

 private:
  TableMode mode_ = TableMode::Materialized;
  CiphertextSet cts_;
  std::vector<std::uint8_t> values_;
};

struct ModelStats {
  std::size_t n = 0;
  std::vector<std::uint64_t> sum_h;   // kCells
  std::vector<std::uint64_t> sum_h2;  // kCells
};

/// Sums over all n traces for samples [j_begin, j_end).
struct TraceStats {
  std::size_t n = 0;
  std::size_t j_begin = 0;
  std::size_t j_end = 0;
  std::vector<double> sum_w;   // width()
  std::vector<double> sum_w2;  // width()
  std::vector<double> sum_wh;  // kCells * width(), cell-major, sample-minor

  std::size_t width() const noexcept { return j_end - j_begin; }
  double wh(std::size_t subkey, std::size_t byte_pos, std::size_t j) const noexcept {
    return sum_wh[cell_index(subkey, byte_pos) * width() + (j - j_begin)];
  }
};

struct CorrelationSurface {
  std::vector<double> rho;              // kCells, max |rho| over covered samples
  std::vector<std::uint32_t> argmax;    // kCells, sample attaining rho
  std::size_t j_begin = 0;
  std::size_t j_end = 0;                // covered range [j_begin, j_end)

  double at(std::size_t subkey, std::size_t byte_pos) const noexcept {
    return rho[cell_index(subkey, byte_pos)];
  }
  friend bool operator==(const CorrelationSurface&, const CorrelationSurface&) = default;
};

struct Candidate {
  std::uint8_t subkey = 0;
  double rho = 0.0;
  std::uint32_t sample = 0;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Signed rho(j) for one subkey per byte position, over all m samples.
struct CorrelationCurves {
  std::size_t m = 0;
  std::array<std::uint8_t, kBytePositions> subkeys{};
  std::vector<double> rho;  // 16 * m, index byte_pos * m + j
  friend bool operator==(const CorrelationCurves&, const CorrelationCurves&) = default;
};

struct AttackResult {
  RoundKey round10_key;
  MasterKey master_key;
  std::array<std::array<Candidate, kSubkeys>, kBytePositions> ranking{};
  std::array<double, kBytePositions> margin{};
  CorrelationSurface surface;
  std::optional<CorrelationCurves> curves;
  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

struct AttackConfig {
  /// Storage precision of the traces. Accumulation is always double; with
  /// Single the reported rho values are also rounded to float.
  Precision precision = Precision::Double;
  std::size_t chunk = 4096;
  /// 0 selects std::thread::hardware_concurrency().
  std::size_t workers = 1;
  TableMode table_mode = TableMode::Auto;
  std::size_t table_budget_bytes = std::size_t{1} << 30;
  bool export_curves = false;
};

struct PhaseTimes {
  double phase1 = 0.0;
  double phase2 = 0.0;
  double phase3 = 0.0;
  double phase4 = 0.0;
  double total() const noexcept { return phase1 + phase2 + phase3 + phase4; }
};

std::size_t resolve_workers(std::size_t requested) noexcept;

ModelStats phase1_model_stats(const SelectionTable& table, std::size_t workers = 1);

TraceStats phase2_trace_stats(const TraceSet& ts, const SelectionTable& table, std::size_t j_begin,
                              std::size_t j_end, std::size_t workers = 1);

/// Folds the chunk covered by `stats` into `running` (or starts a new
/// surface). Ties keep the lowest sample index.
CorrelationSurface phase3_max_correlation(const ModelStats& ms, const TraceStats& stats,
                                          std::optional<CorrelationSurface> running = std::nullopt,
                                          std::size_t workers = 1);

AttackResult phase4_derive_round_key(const CorrelationSurface& surface);

/// One-pass Pearson estimate from the factored sums, clamped to [-1, 1].
/// Degenerate variance yields 0.
inline double correlation_from_sums(double n, double sum_wh, double sum_w, double sum_w2,
                                    double sum_h, double sum_h2) noexcept {
  const double var_w = n * sum_w2 - sum_w * sum_w;
  const double var_h = n * sum_h2 - sum_h * sum_h;
  if (var_h <= 0.0) return 0.0;
  if (var_w <= 1e-12 * n * sum_w2 || var_w <= 1e-30) return 0.0;
  const double r = (n * sum_wh - sum_w * sum_h) / (std::sqrt(var_w) * std::sqrt(var_h));
  return r > 1.0 ? 1.0 : (r < -1.0 ? -1.0 : r);
}

double correlation_at(std::size_t j, std::size_t subkey, std::size_t byte_pos, const ModelStats& ms,
                      const TraceStats& stats);

/// Single-cell sums computed in isolation (no grid, no chunking).
struct CellSums {
  std::uint64_t sum_h = 0;
  std::uint64_t sum_h2 = 0;
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double sum_wh = 0.0;
};
CellSums cell_sums(const TraceSet& ts, const SelectionTable& table, std::size_t subkey,
                   std::size_t byte_pos, std::size_t j);

/// Signed rho over every sample for the given subkey at each byte position.
CorrelationCurves correlation_curves(const TraceSet& ts, const SelectionTable& table,
                                     const ModelStats& ms,
                                     const std::array<std::uint8_t, kBytePositions>& subkeys,
                                     std::size_t workers = 1);

/// Full pipeline. Throws AttackError on count mismatch or n < 2.
AttackResult attack(const TraceSet& ts, const CiphertextSet& cts, const AttackConfig& config = {},
                    PhaseTimes* times = nullptr);

/// Two-pass textbook Pearson coefficient (means first, then centered
/// products). Returns 0 on zero variance.
double pearson_oracle(std::span<const double> w, std::span<const double> h);

}  // namespace cpa
