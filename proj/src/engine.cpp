#include "cpa/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <numeric>
#include <string>
#include <thread>

#include "parallel.hpp"

namespace cpa {
namespace {

// Phase2 blocking. A work item is one byte position times one block of
// kSampleBlock samples; inside it traces are consumed kTraceBlock at a time
// and the 256 x kSampleBlock accumulator is updated by kSubkeyTile x
// kSampleTile register tiles.
constexpr std::size_t kSampleBlock = 64;
constexpr std::size_t kTraceBlock = 128;
constexpr std::size_t kSubkeyTile = 16;
constexpr std::size_t kSampleTile = 8;
static_assert(kSubkeys % kSubkeyTile == 0 && kSampleBlock % kSampleTile == 0);

// acc[kt][st] += h[ii][kt] * w[ii][st] for ii in [0, len). The loop over ii
// is sequential, so each accumulator sees its terms in trace order.
using Lane = double __attribute__((vector_size(kSampleTile * sizeof(double))));

void wh_tile(const double* __restrict h, const double* __restrict w, std::size_t w_stride,
             std::size_t len, double* __restrict acc, std::size_t acc_stride) noexcept {
  Lane c[kSubkeyTile];
  for (std::size_t kt = 0; kt < kSubkeyTile; ++kt)
    std::memcpy(&c[kt], acc + kt * acc_stride, sizeof(Lane));
  for (std::size_t ii = 0; ii < len; ++ii) {
    Lane wv;
    std::memcpy(&wv, w + ii * w_stride, sizeof(Lane));
    const double* hr = h + ii * kSubkeyTile;
    for (std::size_t kt = 0; kt < kSubkeyTile; ++kt) c[kt] += hr[kt] * wv;
  }
  for (std::size_t kt = 0; kt < kSubkeyTile; ++kt)
    std::memcpy(acc + kt * acc_stride, &c[kt], sizeof(Lane));
}

void check_pair(const TraceSet& ts, const SelectionTable& table) {
  if (ts.n() != table.n())
    throw AttackError("trace count " + std::to_string(ts.n()) + " does not match ciphertext count " +
                      std::to_string(table.n()));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void round_reported(AttackResult& r) {
  auto f = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  for (auto& v : r.surface.rho) v = f(v);
  for (auto& row : r.ranking)
    for (auto& c : row) c.rho = f(c.rho);
  for (auto& v : r.margin) v = f(v);
  if (r.curves)
    for (auto& v : r.curves->rho) v = f(v);
}

}  // namespace

TableMode parse_table_mode(const std::string& s) {
  if (s == "materialized") return TableMode::Materialized;
  if (s == "on-the-fly" || s == "otf") return TableMode::OnTheFly;
  if (s == "auto") return TableMode::Auto;
  throw std::invalid_argument("unknown table mode '" + s + "' (expected materialized|on-the-fly|auto)");
}

std::string to_string(TableMode mode) {
  switch (mode) {
    case TableMode::Materialized: return "materialized";
    case TableMode::OnTheFly: return "on-the-fly";
    case TableMode::Auto: return "auto";
  }
  return "auto";
}

std::size_t resolve_workers(std::size_t requested) noexcept {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

SelectionTable SelectionTable::build(const CiphertextSet& cts, TableMode mode, std::size_t workers,
                                     std::size_t budget_bytes) {
  SelectionTable t;
  t.cts_ = cts;
  if (mode == TableMode::Auto)
    mode = cts.n() * kCells <= budget_bytes ? TableMode::Materialized : TableMode::OnTheFly;
  t.mode_ = mode;
  if (mode == TableMode::OnTheFly) return t;

  t.values_.resize(cts.n() * kCells);
  constexpr std::size_t kRowsPerItem = 256;
  const std::size_t items = (cts.n() + kRowsPerItem - 1) / kRowsPerItem;
  detail::parallel_for(items, resolve_workers(workers), [&](std::size_t item) {
    const std::size_t i0 = item * kRowsPerItem;
    const std::size_t i1 = std::min(cts.n(), i0 + kRowsPerItem);
    const auto& inv = inv_sbox_table();
    const auto& src = shiftrows_source_table();
    for (std::size_t i = i0; i < i1; ++i) {
      const auto c = cts[i];
      std::uint8_t* row = t.values_.data() + i * kCells;
      for (std::size_t b = 0; b < kBytePositions; ++b) {
        const std::uint8_t cb = c[b];
        const std::uint8_t cs = c[src[b]];
        for (std::size_t k = 0; k < kSubkeys; ++k)
          row[b * kSubkeys + k] =
              static_cast<std::uint8_t>(hamming_weight(static_cast<std::uint8_t>(inv[cb ^ k] ^ cs)));
      }
    }
  });
  return t;
}

void SelectionTable::fill_rows(std::size_t byte_pos, std::size_t i0, std::size_t i1,
                               std::uint8_t* out) const noexcept {
  if (mode_ == TableMode::Materialized) {
    for (std::size_t i = i0; i < i1; ++i)
      std::memcpy(out + (i - i0) * kSubkeys, values_.data() + i * kCells + byte_pos * kSubkeys, kSubkeys);
    return;
  }
  const auto& inv = inv_sbox_table();
  const std::size_t src = shiftrows_source_table()[byte_pos];
  for (std::size_t i = i0; i < i1; ++i) {
    const auto c = cts_[i];
    const std::uint8_t cb = c[byte_pos];
    const std::uint8_t cs = c[src];
    std::uint8_t* row = out + (i - i0) * kSubkeys;
    for (std::size_t k = 0; k < kSubkeys; ++k)
      row[k] = static_cast<std::uint8_t>(hamming_weight(static_cast<std::uint8_t>(inv[cb ^ k] ^ cs)));
  }
}

ModelStats phase1_model_stats(const SelectionTable& table, std::size_t workers) {
  ModelStats ms;
  ms.n = table.n();
  ms.sum_h.assign(kCells, 0);
  ms.sum_h2.assign(kCells, 0);
  // One work item per byte position: the column of 256 subkey cells.
  detail::parallel_for(kBytePositions, resolve_workers(workers), [&](std::size_t b) {
    std::array<std::uint64_t, kSubkeys> s{};
    std::array<std::uint64_t, kSubkeys> s2{};
    std::vector<std::uint8_t> rows(kTraceBlock * kSubkeys);
    for (std::size_t i0 = 0; i0 < table.n(); i0 += kTraceBlock) {
      const std::size_t i1 = std::min(table.n(), i0 + kTraceBlock);
      table.fill_rows(b, i0, i1, rows.data());
      for (std::size_t ii = 0; ii < i1 - i0; ++ii) {
        const std::uint8_t* row = rows.data() + ii * kSubkeys;
        for (std::size_t k = 0; k < kSubkeys; ++k) {
          s[k] += row[k];
          s2[k] += static_cast<std::uint64_t>(row[k]) * row[k];
        }
      }
    }
    for (std::size_t k = 0; k < kSubkeys; ++k) {
      ms.sum_h[cell_index(k, b)] = s[k];
      ms.sum_h2[cell_index(k, b)] = s2[k];
    }
  });
  return ms;
}

TraceStats phase2_trace_stats(const TraceSet& ts, const SelectionTable& table, std::size_t j_begin,
                              std::size_t j_end, std::size_t workers) {
  check_pair(ts, table);
  if (j_begin >= j_end || j_end > ts.m())
    throw AttackError("sample chunk [" + std::to_string(j_begin) + ", " + std::to_string(j_end) +
                      ") is not within [0, " + std::to_string(ts.m()) + ")");
  workers = resolve_workers(workers);
  const std::size_t n = ts.n();
  const std::size_t width = j_end - j_begin;
  const std::size_t blocks = (width + kSampleBlock - 1) / kSampleBlock;

  TraceStats out;
  out.n = n;
  out.j_begin = j_begin;
  out.j_end = j_end;
  out.sum_w.assign(width, 0.0);
  out.sum_w2.assign(width, 0.0);
  out.sum_wh.assign(kCells * width, 0.0);

  // Per-sample sums are shared by all 4096 cells.
  detail::parallel_for(blocks, workers, [&](std::size_t blk) {
    const std::size_t s0 = j_begin + blk * kSampleBlock;
    const std::size_t s1 = std::min(j_end, s0 + kSampleBlock);
    const std::size_t bw = s1 - s0;
    std::vector<double> w(kTraceBlock * kSampleBlock);
    double* sw = out.sum_w.data() + (s0 - j_begin);
    double* sw2 = out.sum_w2.data() + (s0 - j_begin);
    for (std::size_t i0 = 0; i0 < n; i0 += kTraceBlock) {
      const std::size_t i1 = std::min(n, i0 + kTraceBlock);
      ts.copy_block(i0, i1, s0, s1, w.data(), kSampleBlock);
      for (std::size_t ii = 0; ii < i1 - i0; ++ii) {
        const double* row = w.data() + ii * kSampleBlock;
        for (std::size_t s = 0; s < bw; ++s) {
          sw[s] += row[s];
          sw2[s] += row[s] * row[s];
        }
      }
    }
  });

  detail::parallel_for(kBytePositions * blocks, workers, [&](std::size_t item) {
    const std::size_t b = item % kBytePositions;
    const std::size_t blk = item / kBytePositions;
    const std::size_t s0 = j_begin + blk * kSampleBlock;
    const std::size_t s1 = std::min(j_end, s0 + kSampleBlock);
    const std::size_t bw = s1 - s0;

    std::vector<double> acc(kSubkeys * kSampleBlock, 0.0);
    std::vector<double> w(kTraceBlock * kSampleBlock, 0.0);
    std::vector<std::uint8_t> hrows(kTraceBlock * kSubkeys);
    // Packed as [subkey tile][trace][kSubkeyTile].
    std::vector<double> hpack(kSubkeys * kTraceBlock);

    for (std::size_t i0 = 0; i0 < n; i0 += kTraceBlock) {
      const std::size_t i1 = std::min(n, i0 + kTraceBlock);
      const std::size_t len = i1 - i0;
      ts.copy_block(i0, i1, s0, s1, w.data(), kSampleBlock);
      table.fill_rows(b, i0, i1, hrows.data());
      for (std::size_t kt = 0; kt < kSubkeys / kSubkeyTile; ++kt) {
        double* dst = hpack.data() + kt * kTraceBlock * kSubkeyTile;
        for (std::size_t ii = 0; ii < len; ++ii)
          for (std::size_t t = 0; t < kSubkeyTile; ++t)
            dst[ii * kSubkeyTile + t] = hrows[ii * kSubkeys + kt * kSubkeyTile + t];
      }
      for (std::size_t kt = 0; kt < kSubkeys / kSubkeyTile; ++kt) {
        const double* h = hpack.data() + kt * kTraceBlock * kSubkeyTile;
        for (std::size_t st = 0; st < bw; st += kSampleTile)
          wh_tile(h, w.data() + st, kSampleBlock, len,
                  acc.data() + kt * kSubkeyTile * kSampleBlock + st, kSampleBlock);
      }
    }
    for (std::size_t k = 0; k < kSubkeys; ++k) {
      double* dst = out.sum_wh.data() + cell_index(k, b) * width + (s0 - j_begin);
      std::copy_n(acc.data() + k * kSampleBlock, bw, dst);
    }
  });
  return out;
}

double correlation_at(std::size_t j, std::size_t subkey, std::size_t byte_pos, const ModelStats& ms,
                      const TraceStats& stats) {
  if (j < stats.j_begin || j >= stats.j_end)
    throw std::out_of_range("sample " + std::to_string(j) + " not covered by trace stats");
  const std::size_t cell = cell_index(subkey, byte_pos);
  const std::size_t s = j - stats.j_begin;
  return correlation_from_sums(static_cast<double>(stats.n), stats.sum_wh[cell * stats.width() + s],
                               stats.sum_w[s], stats.sum_w2[s], static_cast<double>(ms.sum_h[cell]),
                               static_cast<double>(ms.sum_h2[cell]));
}

CorrelationSurface phase3_max_correlation(const ModelStats& ms, const TraceStats& stats,
                                          std::optional<CorrelationSurface> running,
                                          std::size_t workers) {
  if (ms.n != stats.n) throw AttackError("model and trace statistics cover different trace counts");
  CorrelationSurface surf;
  bool fresh = !running.has_value();
  if (fresh) {
    surf.rho.assign(kCells, 0.0);
    surf.argmax.assign(kCells, static_cast<std::uint32_t>(stats.j_begin));
    surf.j_begin = stats.j_begin;
    surf.j_end = stats.j_end;
  } else {
    surf = std::move(*running);
    if (surf.j_end != stats.j_begin && surf.j_begin != stats.j_end)
      throw AttackError("trace statistics chunk is not adjacent to the running surface");
    surf.j_begin = std::min(surf.j_begin, stats.j_begin);
    surf.j_end = std::max(surf.j_end, stats.j_end);
  }
  const double n = static_cast<double>(stats.n);
  const std::size_t width = stats.width();

  constexpr std::size_t kCellsPerItem = 64;
  detail::parallel_for(kCells / kCellsPerItem, resolve_workers(workers), [&](std::size_t item) {
    for (std::size_t cell = item * kCellsPerItem; cell < (item + 1) * kCellsPerItem; ++cell) {
      const double sh = static_cast<double>(ms.sum_h[cell]);
      const double sh2 = static_cast<double>(ms.sum_h2[cell]);
      const double* wh = stats.sum_wh.data() + cell * width;
      double best = surf.rho[cell];
      std::uint32_t best_j = surf.argmax[cell];
      bool have = !fresh;
      for (std::size_t s = 0; s < width; ++s) {
        const double r = std::abs(
            correlation_from_sums(n, wh[s], stats.sum_w[s], stats.sum_w2[s], sh, sh2));
        const auto j = static_cast<std::uint32_t>(stats.j_begin + s);
        // Lowest sample index wins ties regardless of fold order.
        if (!have || r > best || (r == best && j < best_j)) {
          best = r;
          best_j = j;
          have = true;
        }
      }
      surf.rho[cell] = best;
      surf.argmax[cell] = best_j;
    }
  });
  return surf;
}

AttackResult phase4_derive_round_key(const CorrelationSurface& surface) {
  if (surface.rho.size() != kCells || surface.argmax.size() != kCells)
    throw AttackError("correlation surface must hold 4096 cells");
  AttackResult r;
  r.surface = surface;
  for (std::size_t b = 0; b < kBytePositions; ++b) {
    auto& row = r.ranking[b];
    for (std::size_t k = 0; k < kSubkeys; ++k)
      row[k] = Candidate{static_cast<std::uint8_t>(k), surface.at(k, b),
                         surface.argmax[cell_index(k, b)]};
    std::stable_sort(row.begin(), row.end(),
                     [](const Candidate& a, const Candidate& c) { return a.rho > c.rho; });
    r.round10_key.bytes[b] = row[0].subkey;
    r.margin[b] = row[0].rho - row[1].rho;
  }
  r.master_key = invert_key_schedule(r.round10_key, 10);
  return r;
}

CellSums cell_sums(const TraceSet& ts, const SelectionTable& table, std::size_t subkey,
                   std::size_t byte_pos, std::size_t j) {
  check_pair(ts, table);
  CellSums c;
  for (std::size_t i = 0; i < ts.n(); ++i) {
    const std::uint64_t h = table.at(i, byte_pos, subkey);
    const double w = ts.at(i, j);
    c.sum_h += h;
    c.sum_h2 += h * h;
    c.sum_w += w;
    c.sum_w2 += w * w;
    c.sum_wh += static_cast<double>(h) * w;
  }
  return c;
}

CorrelationCurves correlation_curves(const TraceSet& ts, const SelectionTable& table,
                                     const ModelStats& ms,
                                     const std::array<std::uint8_t, kBytePositions>& subkeys,
                                     std::size_t workers) {
  check_pair(ts, table);
  const std::size_t n = ts.n();
  const std::size_t m = ts.m();
  CorrelationCurves curves;
  curves.m = m;
  curves.subkeys = subkeys;
  curves.rho.assign(kBytePositions * m, 0.0);
  std::vector<double> sum_w(m, 0.0), sum_w2(m, 0.0);
  std::vector<double> sum_wh(kBytePositions * m, 0.0);

  const std::size_t blocks = (m + kSampleBlock - 1) / kSampleBlock;
  detail::parallel_for(blocks, resolve_workers(workers), [&](std::size_t blk) {
    const std::size_t s0 = blk * kSampleBlock;
    const std::size_t s1 = std::min(m, s0 + kSampleBlock);
    std::vector<double> w(kTraceBlock * kSampleBlock);
    std::vector<std::uint8_t> hrows(kTraceBlock * kSubkeys);
    for (std::size_t i0 = 0; i0 < n; i0 += kTraceBlock) {
      const std::size_t i1 = std::min(n, i0 + kTraceBlock);
      ts.copy_block(i0, i1, s0, s1, w.data(), kSampleBlock);
      for (std::size_t b = 0; b < kBytePositions; ++b) {
        table.fill_rows(b, i0, i1, hrows.data());
        for (std::size_t ii = 0; ii < i1 - i0; ++ii) {
          const double hv = hrows[ii * kSubkeys + subkeys[b]];
          const double* row = w.data() + ii * kSampleBlock;
          for (std::size_t j = s0; j < s1; ++j) sum_wh[b * m + j] += hv * row[j - s0];
        }
      }
      for (std::size_t ii = 0; ii < i1 - i0; ++ii) {
        const double* row = w.data() + ii * kSampleBlock;
        for (std::size_t j = s0; j < s1; ++j) {
          sum_w[j] += row[j - s0];
          sum_w2[j] += row[j - s0] * row[j - s0];
        }
      }
    }
  });
  for (std::size_t b = 0; b < kBytePositions; ++b) {
    const std::size_t cell = cell_index(subkeys[b], b);
    for (std::size_t j = 0; j < m; ++j)
      curves.rho[b * m + j] = correlation_from_sums(
          static_cast<double>(n), sum_wh[b * m + j], sum_w[j], sum_w2[j],
          static_cast<double>(ms.sum_h[cell]), static_cast<double>(ms.sum_h2[cell]));
  }
  return curves;
}

AttackResult attack(const TraceSet& input, const CiphertextSet& cts, const AttackConfig& config,
                    PhaseTimes* times) {
  if (input.n() != cts.n())
    throw AttackError("trace count " + std::to_string(input.n()) + " does not match ciphertext count " +
                      std::to_string(cts.n()));
  if (input.n() < 2) throw AttackError("at least 2 traces are required, got " + std::to_string(input.n()));
  if (config.chunk == 0) throw AttackError("sample chunk size must be positive");

  const std::size_t workers = resolve_workers(config.workers);
  const TraceSet converted =
      input.precision() == config.precision ? TraceSet{} : input.with_precision(config.precision);
  const TraceSet& ts = input.precision() == config.precision ? input : converted;
  PhaseTimes local;

  auto t0 = std::chrono::steady_clock::now();
  const SelectionTable table =
      SelectionTable::build(cts, config.table_mode, workers, config.table_budget_bytes);
  const ModelStats ms = phase1_model_stats(table, workers);
  local.phase1 = seconds_since(t0);

  std::optional<CorrelationSurface> surface;
  for (std::size_t j0 = 0; j0 < ts.m(); j0 += config.chunk) {
    const std::size_t j1 = std::min(ts.m(), j0 + config.chunk);
    t0 = std::chrono::steady_clock::now();
    const TraceStats stats = phase2_trace_stats(ts, table, j0, j1, workers);
    local.phase2 += seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    surface = phase3_max_correlation(ms, stats, std::move(surface), workers);
    local.phase3 += seconds_since(t0);
  }

  t0 = std::chrono::steady_clock::now();
  AttackResult result = phase4_derive_round_key(*surface);
  local.phase4 = seconds_since(t0);

  if (config.export_curves) {
    std::array<std::uint8_t, kBytePositions> winners{};
    for (std::size_t b = 0; b < kBytePositions; ++b) winners[b] = result.round10_key.bytes[b];
    result.curves = correlation_curves(ts, table, ms, winners, workers);
  }
  if (config.precision == Precision::Single) round_reported(result);
  if (times) *times = local;
  return result;
}

}  // namespace cpa
