#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "cpa/aes.hpp"
#include "cpa/bench.hpp"
#include "cpa/engine.hpp"
#include "cpa/hex.hpp"
#include "cpa/synth.hpp"
#include "cpa/trace_model.hpp"

namespace py = pybind11;
using namespace cpa;

namespace {

// Accepts 16 raw bytes or 32 hex characters.
Block to_block(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return parse_block_hex(obj.cast<std::string>());
  const std::string raw = obj.cast<py::bytes>();
  if (raw.size() != 16) throw py::value_error("expected 16 bytes, got " + std::to_string(raw.size()));
  Block b;
  std::memcpy(b.data(), raw.data(), 16);
  return b;
}

py::bytes to_bytes(const Block& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

TraceSet traces_from_array(const py::array& arr) {
  if (arr.ndim() != 2) throw py::value_error("traces must be a 2-D array of shape (n, m)");
  const auto n = static_cast<std::size_t>(arr.shape(0));
  const auto m = static_cast<std::size_t>(arr.shape(1));
  if (arr.dtype().is(py::dtype::of<float>())) {
    const auto a = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(arr);
    return TraceSet(n, m, Layout::TraceMajor, std::vector<float>(a.data(), a.data() + n * m));
  }
  const auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a) throw py::type_error("traces must be numeric");
  return TraceSet(n, m, Layout::TraceMajor, std::vector<double>(a.data(), a.data() + n * m));
}

py::array traces_to_array(const TraceSet& ts) {
  const TraceSet rows = ts.with_layout(Layout::TraceMajor);
  return std::visit(
      [&](const auto& v) -> py::array {
        using T = typename std::decay_t<decltype(v)>::value_type;
        py::array_t<T> out({rows.n(), rows.m()});
        std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(T));
        return out;
      },
      rows.storage());
}

CiphertextSet ciphertexts_from_array(const py::array& arr) {
  const auto a = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a || a.ndim() != 2 || a.shape(1) != 16)
    throw py::value_error("ciphertexts must be a uint8 array of shape (n, 16)");
  return CiphertextSet(std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

py::array ciphertexts_to_array(const CiphertextSet& cts) {
  py::array_t<std::uint8_t> out({cts.n(), std::size_t{16}});
  std::memcpy(out.mutable_data(), cts.bytes().data(), cts.bytes().size());
  return out;
}

py::dict result_to_dict(const AttackResult& r, const PhaseTimes& t) {
  py::array_t<std::uint8_t> subkeys({kBytePositions, kSubkeys});
  py::array_t<double> rho({kBytePositions, kSubkeys});
  py::array_t<std::uint32_t> sample({kBytePositions, kSubkeys});
  auto s = subkeys.mutable_unchecked<2>();
  auto p = rho.mutable_unchecked<2>();
  auto j = sample.mutable_unchecked<2>();
  for (std::size_t b = 0; b < kBytePositions; ++b)
    for (std::size_t k = 0; k < kSubkeys; ++k) {
      s(b, k) = r.ranking[b][k].subkey;
      p(b, k) = r.ranking[b][k].rho;
      j(b, k) = r.ranking[b][k].sample;
    }
  // Cell index is subkey * 16 + byte position, so the surface is (256, 16).
  py::array_t<double> surface({kSubkeys, kBytePositions});
  std::memcpy(surface.mutable_data(), r.surface.rho.data(), kCells * sizeof(double));

  py::dict d;
  d["round10_key"] = to_hex(r.round10_key.bytes);
  d["master_key"] = to_hex(r.master_key.bytes);
  d["ranking_subkeys"] = subkeys;
  d["ranking_rho"] = rho;
  d["ranking_sample"] = sample;
  d["margin"] = std::vector<double>(r.margin.begin(), r.margin.end());
  d["surface"] = surface;
  if (r.curves) {
    py::array_t<double> curves({kBytePositions, r.curves->m});
    std::memcpy(curves.mutable_data(), r.curves->rho.data(), r.curves->rho.size() * sizeof(double));
    d["curves"] = curves;
  }
  py::dict times;
  times["phase1"] = t.phase1;
  times["phase2"] = t.phase2;
  times["phase3"] = t.phase3;
  times["phase4"] = t.phase4;
  d["times"] = times;
  return d;
}

py::dict report_to_dict(const BenchReport& r) {
  py::dict d;
  d["n"] = r.n;
  d["m"] = r.m;
  d["workers"] = r.workers;
  d["precision"] = to_string(r.precision);
  d["phase1_s"] = r.phases.phase1;
  d["phase2_s"] = r.phases.phase2;
  d["phase3_s"] = r.phases.phase3;
  d["phase4_s"] = r.phases.phase4;
  d["total_s"] = r.total_s;
  d["total_min_s"] = r.total_min_s;
  d["total_max_s"] = r.total_max_s;
  d["load_s"] = r.load_s;
  d["throughput"] = r.throughput();
  const auto pct = r.percentages();
  d["percentages"] = std::vector<double>(pct.begin(), pct.end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "AES-128 last-round correlation power analysis";

  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<AttackError>(m, "AttackError", PyExc_ValueError);

  m.def("sbox", &sbox, py::arg("x"));
  m.def("inv_sbox", &inv_sbox, py::arg("x"));

  m.def(
      "expand_key",
      [](const py::object& key) {
        std::vector<py::bytes> out;
        for (const auto& rk : expand_key(MasterKey{to_block(key)})) out.push_back(to_bytes(rk.bytes));
        return out;
      },
      py::arg("key"), "All 11 round keys of an AES-128 key.");

  m.def(
      "invert_key_schedule",
      [](const py::object& round_key, int round_index) {
        return to_bytes(invert_key_schedule(RoundKey{to_block(round_key)}, round_index).bytes);
      },
      py::arg("round_key"), py::arg("round_index") = 10);

  m.def(
      "encrypt_with_states",
      [](const py::object& plaintext, const py::object& key) {
        const auto s = encrypt_with_states(to_block(plaintext), MasterKey{to_block(key)});
        return py::make_tuple(to_bytes(s.ciphertext), to_bytes(s.round9_state));
      },
      py::arg("plaintext"), py::arg("key"), "Returns (ciphertext, state entering round 10).");

  m.def(
      "selection_value",
      [](const py::object& ciphertext, std::size_t byte_pos, std::uint8_t guess) {
        if (byte_pos >= 16) throw py::index_error("byte position must be < 16");
        const Block c = to_block(ciphertext);
        return selection_value(std::span<const std::uint8_t, 16>(c), byte_pos, guess);
      },
      py::arg("ciphertext"), py::arg("byte_pos"), py::arg("guess"));

  m.def(
      "pearson",
      [](const std::vector<double>& w, const std::vector<double>& h) { return pearson_oracle(w, h); },
      py::arg("w"), py::arg("h"), "Two-pass Pearson coefficient.");

  m.def(
      "generate_dataset",
      [](const py::object& key, std::size_t n, std::size_t m_, double sigma, double scale, double offset,
         std::uint64_t seed, std::optional<std::vector<std::size_t>> leaks, const std::string& precision,
         std::size_t workers) {
        auto cfg = synth_config_for(MasterKey{to_block(key)}, n, m_, sigma, seed);
        cfg.signal_scale = scale;
        cfg.offset = offset;
        cfg.precision = parse_precision(precision);
        if (leaks) {
          if (leaks->size() != 16) throw py::value_error("leak_positions needs 16 entries");
          std::copy(leaks->begin(), leaks->end(), cfg.leak_positions.begin());
        }
        std::pair<TraceSet, CiphertextSet> data;
        {
          py::gil_scoped_release release;
          data = generate_dataset(cfg, workers);
        }
        return py::make_tuple(traces_to_array(data.first), ciphertexts_to_array(data.second));
      },
      py::arg("key"), py::arg("n") = 1000, py::arg("m") = 128, py::arg("sigma") = 2.0, py::arg("scale") = 1.0,
      py::arg("offset") = 0.0, py::arg("seed") = 1, py::arg("leak_positions") = py::none(),
      py::arg("precision") = "double", py::arg("workers") = 1,
      "Synthetic Hamming-distance traces. Returns (traces (n, m), ciphertexts (n, 16)).");

  m.def(
      "attack",
      [](const py::array& traces, const py::array& ciphertexts, const std::string& precision,
         std::size_t chunk, std::size_t workers, const std::string& table_mode, bool curves) {
        const TraceSet ts = traces_from_array(traces);
        const CiphertextSet cts = ciphertexts_from_array(ciphertexts);
        AttackConfig cfg;
        cfg.precision = parse_precision(precision);
        cfg.chunk = chunk;
        cfg.workers = workers;
        cfg.table_mode = parse_table_mode(table_mode);
        cfg.export_curves = curves;
        PhaseTimes t;
        AttackResult r;
        {
          py::gil_scoped_release release;
          r = attack(ts, cts, cfg, &t);
        }
        return result_to_dict(r, t);
      },
      py::arg("traces"), py::arg("ciphertexts"), py::arg("precision") = "double", py::arg("chunk") = 4096,
      py::arg("workers") = 1, py::arg("table_mode") = "auto", py::arg("curves") = false);

  m.def(
      "benchmark",
      [](const py::object& key, std::size_t n, std::size_t m_, std::vector<std::size_t> workers,
         std::size_t repetitions, double sigma, std::uint64_t seed, const std::string& precision) {
        BenchOptions opt;
        opt.workers = std::move(workers);
        opt.repetitions = repetitions;
        opt.attack.precision = parse_precision(precision);
        auto cfg = synth_config_for(MasterKey{to_block(key)}, n, m_, sigma, seed);
        cfg.precision = opt.attack.precision;
        std::vector<BenchReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_benchmark(cfg, opt);
        }
        py::list out;
        for (const auto& r : reports) out.append(report_to_dict(r));
        return out;
      },
      py::arg("key"), py::arg("n") = 1000, py::arg("m") = 1000, py::arg("workers") = std::vector<std::size_t>{1},
      py::arg("repetitions") = 3, py::arg("sigma") = 2.0, py::arg("seed") = 1, py::arg("precision") = "double");

  m.def(
      "load_traces",
      [](const std::filesystem::path& path, const std::string& format) {
        return traces_to_array(load_traces(path, parse_trace_format(format)));
      },
      py::arg("path"), py::arg("format") = "binary");
  m.def(
      "save_traces",
      [](const std::filesystem::path& path, const py::array& traces, const std::string& format) {
        save_traces(traces_from_array(traces), path, parse_trace_format(format));
      },
      py::arg("path"), py::arg("traces"), py::arg("format") = "binary");
  m.def(
      "load_ciphertexts",
      [](const std::filesystem::path& path) { return ciphertexts_to_array(load_ciphertexts(path)); },
      py::arg("path"));
  m.def(
      "save_ciphertexts",
      [](const std::filesystem::path& path, const py::array& cts) {
        save_ciphertexts(ciphertexts_from_array(cts), path);
      },
      py::arg("path"), py::arg("ciphertexts"));
}
