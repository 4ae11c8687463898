#pragma once

// Trace and ciphertext datasets plus their file formats.
//
// Binary trace file ("CPA1"), all fields little-endian:
//   offset 0   magic "CPA1"
//   offset 4   u32 n (traces)
//   offset 8   u32 m (samples per trace)
//   offset 12  u8  precision code (4 = single, 8 = double)
//   offset 13  u8  layout code (0 = trace-major, 1 = sample-major)
//   offset 14  2 reserved zero bytes
//   offset 16  n*m IEEE-754 samples in the declared layout
//
// CSV traces: one trace per row, comma-separated decimal values.
// Ciphertexts: one 32-character hex line per trace.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cpa {

enum class Precision : std::uint8_t { Single = 4, Double = 8 };
enum class Layout : std::uint8_t { TraceMajor = 0, SampleMajor = 1 };
enum class TraceFormat { Binary, Csv };

std::string to_string(Precision p);
std::string to_string(Layout l);
Precision parse_precision(const std::string& s);
TraceFormat parse_trace_format(const std::string& s);

enum class DatasetErrc {
  Unreadable,
  MalformedHeader,
  LengthMismatch,
  NonFiniteSample,
  BadNumber,
  BadHex,
  WrongLineLength,
  WriteFailed,
  InvalidShape,
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  DatasetErrc code() const noexcept { return code_; }

 private:
  DatasetErrc code_;
};

/// N power traces of M samples each, stored flat in one of two layouts.
/// Immutable after construction.
class TraceSet {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<double>>;

  TraceSet() = default;

  /// Takes ownership of `samples` laid out per `layout`. Throws
  /// DatasetError(InvalidShape) on size mismatch or zero dimensions and
  /// DatasetError(NonFiniteSample) on NaN/inf.
  TraceSet(std::size_t n, std::size_t m, Layout layout, Storage samples);

  static TraceSet from_rows(std::size_t n, std::size_t m, std::vector<double> trace_major,
                            Precision precision = Precision::Double);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  Layout layout() const noexcept { return layout_; }
  Precision precision() const noexcept;
  const Storage& storage() const noexcept { return samples_; }

  /// Sample j of trace i, independent of layout.
  double at(std::size_t i, std::size_t j) const noexcept {
    const std::size_t idx = layout_ == Layout::TraceMajor ? i * m_ + j : j * n_ + i;
    return std::visit([idx](const auto& v) { return static_cast<double>(v[idx]); }, samples_);
  }

  /// Copies the block [i0, i1) x [j0, j1) into `out` in trace-major order
  /// with row stride `stride` (>= j1 - j0).
  void copy_block(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1, double* out,
                  std::size_t stride) const noexcept;

  TraceSet transposed() const;
  TraceSet with_layout(Layout layout) const;
  TraceSet with_precision(Precision precision) const;

  /// Applies w -> scale * w + offset to every sample (storage type kept).
  TraceSet affine(double scale, double offset) const;

  /// Reorders traces: output trace r is input trace perm[r].
  TraceSet permuted(std::span<const std::size_t> perm) const;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  Layout layout_ = Layout::TraceMajor;
  Storage samples_ = std::vector<double>{};
};

/// N ciphertexts, row i paired with trace i.
class CiphertextSet {
 public:
  CiphertextSet() = default;
  explicit CiphertextSet(std::vector<std::uint8_t> bytes);

  std::size_t n() const noexcept { return bytes_.size() / 16; }
  std::span<const std::uint8_t, 16> operator[](std::size_t i) const noexcept {
    return std::span<const std::uint8_t, 16>(bytes_.data() + 16 * i, 16);
  }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

  CiphertextSet permuted(std::span<const std::size_t> perm) const;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Same logical matrix in the opposite storage layout.
TraceSet transpose_layout(const TraceSet& ts);

TraceSet load_traces(const std::filesystem::path& path, TraceFormat format = TraceFormat::Binary);

/// CSV loads default to double precision.
void save_traces(const TraceSet& ts, const std::filesystem::path& path,
                 TraceFormat format = TraceFormat::Binary);

struct TraceHeader {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  Precision precision = Precision::Double;
  Layout layout = Layout::TraceMajor;
};

/// Reads and validates only the 16-byte header of a binary trace file.
TraceHeader read_trace_header(const std::filesystem::path& path);

CiphertextSet load_ciphertexts(const std::filesystem::path& path);
void save_ciphertexts(const CiphertextSet& cts, const std::filesystem::path& path);

}  // namespace cpa
