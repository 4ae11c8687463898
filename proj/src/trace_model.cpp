#include "cpa/trace_model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cpa/hex.hpp"

namespace cpa {
namespace {

constexpr char kMagic[4] = {'C', 'P', 'A', '1'};
constexpr std::size_t kHeaderSize = 16;

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) p[k] = static_cast<unsigned char>(v >> (8 * k));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

template <typename T>
void check_finite(const std::vector<T>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k]))
      throw DatasetError(DatasetErrc::NonFiniteSample,
                         "non-finite sample at flat index " + std::to_string(k));
  }
}

std::size_t storage_size(const TraceSet::Storage& s) {
  return std::visit([](const auto& v) { return v.size(); }, s);
}

TraceHeader parse_header(const unsigned char* h, const std::string& name) {
  if (std::memcmp(h, kMagic, 4) != 0)
    throw DatasetError(DatasetErrc::MalformedHeader, name + ": bad magic (expected CPA1)");
  TraceHeader hdr;
  hdr.n = get_u32(h + 4);
  hdr.m = get_u32(h + 8);
  if (h[12] != 4 && h[12] != 8)
    throw DatasetError(DatasetErrc::MalformedHeader,
                       name + ": unknown precision code " + std::to_string(h[12]));
  if (h[13] > 1)
    throw DatasetError(DatasetErrc::MalformedHeader,
                       name + ": unknown layout code " + std::to_string(h[13]));
  if (h[14] != 0 || h[15] != 0)
    throw DatasetError(DatasetErrc::MalformedHeader, name + ": reserved bytes are not zero");
  if (hdr.n == 0 || hdr.m == 0)
    throw DatasetError(DatasetErrc::MalformedHeader, name + ": n and m must be positive");
  hdr.precision = static_cast<Precision>(h[12]);
  hdr.layout = static_cast<Layout>(h[13]);
  return hdr;
}

template <typename T>
std::vector<T> read_samples(std::ifstream& in, std::size_t count, const std::string& name) {
  std::vector<T> v(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw DatasetError(DatasetErrc::Unreadable, name + ": read failed");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& x : v) x = byteswap_if_big(x);
  }
  return v;
}

TraceSet load_binary(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetErrc::Unreadable, name + ": cannot open");
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw DatasetError(DatasetErrc::Unreadable, name + ": " + ec.message());
  if (file_size < kHeaderSize)
    throw DatasetError(DatasetErrc::MalformedHeader, name + ": shorter than the 16-byte header");

  unsigned char h[kHeaderSize];
  in.read(reinterpret_cast<char*>(h), kHeaderSize);
  if (!in) throw DatasetError(DatasetErrc::Unreadable, name + ": cannot read header");
  const TraceHeader hdr = parse_header(h, name);

  const std::size_t count = std::size_t{hdr.n} * hdr.m;
  const std::size_t width = static_cast<std::size_t>(hdr.precision);
  const std::uintmax_t expected = kHeaderSize + count * width;
  if (file_size != expected)
    throw DatasetError(DatasetErrc::LengthMismatch,
                       name + ": header implies " + std::to_string(expected) + " bytes, file has " +
                           std::to_string(file_size));

  TraceSet::Storage storage;
  if (hdr.precision == Precision::Single)
    storage = read_samples<float>(in, count, name);
  else
    storage = read_samples<double>(in, count, name);
  return TraceSet(hdr.n, hdr.m, hdr.layout, std::move(storage));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

TraceSet load_csv(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetErrc::Unreadable, name + ": cannot open");
  std::vector<double> values;
  std::size_t m = 0;
  std::size_t n = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::size_t cols = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, err] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || err != std::errc{} || ptr != field.data() + field.size()) {
        // from_chars rejects "inf"/"nan" spellings it does not produce; catch them explicitly.
        const std::string f(field);
        if (f == "nan" || f == "NaN" || f == "inf" || f == "-inf" || f == "Inf" || f == "-Inf")
          throw DatasetError(DatasetErrc::NonFiniteSample,
                             name + ":" + std::to_string(line_no) + ": non-finite sample");
        throw DatasetError(DatasetErrc::BadNumber, name + ":" + std::to_string(line_no) +
                                                       ": cannot parse '" + f + "'");
      }
      if (!std::isfinite(v))
        throw DatasetError(DatasetErrc::NonFiniteSample,
                           name + ":" + std::to_string(line_no) + ": non-finite sample");
      values.push_back(v);
      ++cols;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (n == 0) {
      m = cols;
    } else if (cols != m) {
      throw DatasetError(DatasetErrc::LengthMismatch,
                         name + ":" + std::to_string(line_no) + ": expected " + std::to_string(m) +
                             " columns, found " + std::to_string(cols));
    }
    ++n;
  }
  if (n == 0) throw DatasetError(DatasetErrc::MalformedHeader, name + ": no traces");
  return TraceSet(n, m, Layout::TraceMajor, std::move(values));
}

template <typename T>
void write_samples(std::ofstream& out, const std::vector<T>& v) {
  if constexpr (std::endian::native == std::endian::big) {
    for (T x : v) {
      x = byteswap_if_big(x);
      out.write(reinterpret_cast<const char*>(&x), sizeof(T));
    }
  } else {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
}

}  // namespace

std::string to_string(Precision p) { return p == Precision::Single ? "single" : "double"; }

std::string to_string(Layout l) {
  return l == Layout::TraceMajor ? "trace-major" : "sample-major";
}

Precision parse_precision(const std::string& s) {
  if (s == "single" || s == "float" || s == "f32") return Precision::Single;
  if (s == "double" || s == "f64") return Precision::Double;
  throw std::invalid_argument("unknown precision '" + s + "' (expected single|double)");
}

TraceFormat parse_trace_format(const std::string& s) {
  if (s == "binary" || s == "bin") return TraceFormat::Binary;
  if (s == "csv") return TraceFormat::Csv;
  throw std::invalid_argument("unknown trace format '" + s + "' (expected binary|csv)");
}

TraceSet::TraceSet(std::size_t n, std::size_t m, Layout layout, Storage samples)
    : n_(n), m_(m), layout_(layout), samples_(std::move(samples)) {
  if (n_ == 0 || m_ == 0)
    throw DatasetError(DatasetErrc::InvalidShape, "trace set needs n >= 1 and m >= 1");
  if (storage_size(samples_) != n_ * m_)
    throw DatasetError(DatasetErrc::InvalidShape,
                       "sample count " + std::to_string(storage_size(samples_)) + " != n*m = " +
                           std::to_string(n_ * m_));
  std::visit([](const auto& v) { check_finite(v); }, samples_);
}

TraceSet TraceSet::from_rows(std::size_t n, std::size_t m, std::vector<double> trace_major,
                             Precision precision) {
  TraceSet ts(n, m, Layout::TraceMajor, std::move(trace_major));
  return precision == Precision::Double ? ts : ts.with_precision(precision);
}

Precision TraceSet::precision() const noexcept {
  return std::holds_alternative<std::vector<float>>(samples_) ? Precision::Single
                                                              : Precision::Double;
}

void TraceSet::copy_block(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1,
                          double* out, std::size_t stride) const noexcept {
  std::visit(
      [&](const auto& v) {
        if (layout_ == Layout::TraceMajor) {
          for (std::size_t i = i0; i < i1; ++i) {
            const auto* row = v.data() + i * m_;
            double* o = out + (i - i0) * stride;
            for (std::size_t j = j0; j < j1; ++j) o[j - j0] = static_cast<double>(row[j]);
          }
        } else {
          for (std::size_t j = j0; j < j1; ++j) {
            const auto* col = v.data() + j * n_;
            for (std::size_t i = i0; i < i1; ++i)
              out[(i - i0) * stride + (j - j0)] = static_cast<double>(col[i]);
          }
        }
      },
      samples_);
}

TraceSet TraceSet::transposed() const {
  const Layout target = layout_ == Layout::TraceMajor ? Layout::SampleMajor : Layout::TraceMajor;
  // Storage rows x cols before transposition.
  const std::size_t rows = layout_ == Layout::TraceMajor ? n_ : m_;
  const std::size_t cols = layout_ == Layout::TraceMajor ? m_ : n_;
  Storage out = std::visit(
      [&](const auto& v) -> Storage {
        std::remove_cvref_t<decltype(v)> t(v.size());
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = v[r * cols + c];
        return t;
      },
      samples_);
  return TraceSet(n_, m_, target, std::move(out));
}

TraceSet TraceSet::with_layout(Layout layout) const {
  return layout == layout_ ? *this : transposed();
}

TraceSet TraceSet::with_precision(Precision precision) const {
  if (precision == this->precision()) return *this;
  Storage out = std::visit(
      [&](const auto& v) -> Storage {
        if (precision == Precision::Single) return std::vector<float>(v.begin(), v.end());
        return std::vector<double>(v.begin(), v.end());
      },
      samples_);
  return TraceSet(n_, m_, layout_, std::move(out));
}

TraceSet TraceSet::affine(double scale, double offset) const {
  Storage out = std::visit(
      [&](const auto& v) -> Storage {
        using T = typename std::remove_cvref_t<decltype(v)>::value_type;
        std::vector<T> t(v.size());
        for (std::size_t k = 0; k < v.size(); ++k)
          t[k] = static_cast<T>(scale * static_cast<double>(v[k]) + offset);
        return t;
      },
      samples_);
  return TraceSet(n_, m_, layout_, std::move(out));
}

TraceSet TraceSet::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_)
    throw DatasetError(DatasetErrc::InvalidShape, "permutation length differs from trace count");
  Storage out = std::visit(
      [&](const auto& v) -> Storage {
        std::remove_cvref_t<decltype(v)> t(v.size());
        for (std::size_t r = 0; r < n_; ++r)
          for (std::size_t j = 0; j < m_; ++j) {
            if (layout_ == Layout::TraceMajor)
              t[r * m_ + j] = v[perm[r] * m_ + j];
            else
              t[j * n_ + r] = v[j * n_ + perm[r]];
          }
        return t;
      },
      samples_);
  return TraceSet(n_, m_, layout_, std::move(out));
}

CiphertextSet::CiphertextSet(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() % 16 != 0)
    throw DatasetError(DatasetErrc::InvalidShape, "ciphertext buffer is not a multiple of 16 bytes");
}

CiphertextSet CiphertextSet::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n())
    throw DatasetError(DatasetErrc::InvalidShape, "permutation length differs from ciphertext count");
  std::vector<std::uint8_t> out(bytes_.size());
  for (std::size_t r = 0; r < perm.size(); ++r)
    std::memcpy(out.data() + 16 * r, bytes_.data() + 16 * perm[r], 16);
  return CiphertextSet(std::move(out));
}

TraceSet transpose_layout(const TraceSet& ts) { return ts.transposed(); }

TraceSet load_traces(const std::filesystem::path& path, TraceFormat format) {
  return format == TraceFormat::Binary ? load_binary(path) : load_csv(path);
}

void save_traces(const TraceSet& ts, const std::filesystem::path& path, TraceFormat format) {
  const std::string name = path.string();
  if (format == TraceFormat::Binary) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(DatasetErrc::WriteFailed, name + ": cannot open for writing");
    unsigned char h[kHeaderSize] = {};
    std::memcpy(h, kMagic, 4);
    put_u32(h + 4, static_cast<std::uint32_t>(ts.n()));
    put_u32(h + 8, static_cast<std::uint32_t>(ts.m()));
    h[12] = static_cast<unsigned char>(ts.precision());
    h[13] = static_cast<unsigned char>(ts.layout());
    out.write(reinterpret_cast<const char*>(h), kHeaderSize);
    std::visit([&](const auto& v) { write_samples(out, v); }, ts.storage());
    if (!out) throw DatasetError(DatasetErrc::WriteFailed, name + ": write failed");
    return;
  }

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DatasetError(DatasetErrc::WriteFailed, name + ": cannot open for writing");
  std::string line;
  char buf[64];
  for (std::size_t i = 0; i < ts.n(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < ts.m(); ++j) {
      if (j) line.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, ts.at(i, j), std::chars_format::general, 17);
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw DatasetError(DatasetErrc::WriteFailed, name + ": write failed");
}

TraceHeader read_trace_header(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetErrc::Unreadable, name + ": cannot open");
  unsigned char h[kHeaderSize];
  in.read(reinterpret_cast<char*>(h), kHeaderSize);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
    throw DatasetError(DatasetErrc::MalformedHeader, name + ": shorter than the 16-byte header");
  return parse_header(h, name);
}

CiphertextSet load_ciphertexts(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetErrc::Unreadable, name + ": cannot open");
  std::vector<std::uint8_t> bytes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.size() != 32)
      throw DatasetError(DatasetErrc::WrongLineLength,
                         name + ":" + std::to_string(line_no) + ": expected 32 hex characters, got " +
                             std::to_string(text.size()));
    Block block;
    try {
      block = parse_block_hex(text);
    } catch (const std::invalid_argument& e) {
      throw DatasetError(DatasetErrc::BadHex, name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    bytes.insert(bytes.end(), block.begin(), block.end());
  }
  return CiphertextSet(std::move(bytes));
}

void save_ciphertexts(const CiphertextSet& cts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DatasetError(DatasetErrc::WriteFailed, path.string() + ": cannot open for writing");
  for (std::size_t i = 0; i < cts.n(); ++i) out << to_hex(cts[i]) << '\n';
  if (!out) throw DatasetError(DatasetErrc::WriteFailed, path.string() + ": write failed");
}

}  // namespace cpa
