// cpa: simulate trace sets, run last-round CPA attacks, benchmark the
// phases and export correlation curves.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "cpa/bench.hpp"
#include "cpa/engine.hpp"
#include "cpa/hex.hpp"
#include "cpa/synth.hpp"
#include "cpa/trace_model.hpp"

namespace {

struct EngineFlags {
  std::string precision = "double";
  std::size_t chunk = 4096;
  std::size_t workers = 1;
  std::string table_mode = "auto";

  void add(CLI::App& app) {
    app.add_option("--precision", precision, "Trace storage precision (single|double)")
        ->check(CLI::IsMember({"single", "double"}));
    app.add_option("--chunk", chunk, "Samples per Phase2/Phase3 chunk")->check(CLI::PositiveNumber);
    app.add_option("--workers", workers, "Worker threads (0 = all hardware threads)");
    app.add_option("--table-mode", table_mode, "Selection table storage")
        ->check(CLI::IsMember({"auto", "materialized", "on-the-fly"}));
  }

  cpa::AttackConfig config() const {
    cpa::AttackConfig cfg;
    cfg.precision = cpa::parse_precision(precision);
    cfg.chunk = chunk;
    cfg.workers = workers;
    cfg.table_mode = cpa::parse_table_mode(table_mode);
    return cfg;
  }
};

struct InputFlags {
  std::string traces;
  std::string ciphertexts;
  std::string format = "binary";

  void add(CLI::App& app) {
    app.add_option("--traces", traces, "Trace file")->required();
    app.add_option("--ciphertexts", ciphertexts, "Ciphertext file (hex lines)")->required();
    app.add_option("--format", format, "Trace file format (binary|csv)")
        ->check(CLI::IsMember({"binary", "csv"}));
  }
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void write_curves_csv(std::ostream& out, const cpa::CorrelationCurves& curves) {
  out << "byte,subkey,sample,rho\n";
  for (std::size_t b = 0; b < cpa::kBytePositions; ++b)
    for (std::size_t j = 0; j < curves.m; ++j)
      out << b << ',' << cpa::to_hex(std::span(&curves.subkeys[b], 1)) << ',' << j << ','
          << fmt("%.17g", curves.rho[b * curves.m + j]) << '\n';
}

void write_curves(const std::string& path, const cpa::CorrelationCurves& curves) {
  if (path == "-") {
    write_curves_csv(std::cout, curves);
    return;
  }
  std::ofstream out(path);
  if (!out) throw cpa::DatasetError(cpa::DatasetErrc::WriteFailed, path + ": cannot open for writing");
  write_curves_csv(out, curves);
  if (!out) throw cpa::DatasetError(cpa::DatasetErrc::WriteFailed, path + ": write failed");
}

nlohmann::json result_json(const cpa::AttackResult& r, std::size_t top) {
  nlohmann::json j;
  j["round10_key"] = cpa::to_hex(r.round10_key.bytes);
  j["master_key"] = cpa::to_hex(r.master_key.bytes);
  auto& bytes = j["bytes"] = nlohmann::json::array();
  for (std::size_t b = 0; b < cpa::kBytePositions; ++b) {
    nlohmann::json entry;
    entry["byte"] = b;
    entry["margin"] = r.margin[b];
    auto& ranking = entry["ranking"] = nlohmann::json::array();
    for (std::size_t k = 0; k < top; ++k) {
      const auto& c = r.ranking[b][k];
      ranking.push_back({{"subkey", c.subkey}, {"rho", c.rho}, {"sample", c.sample}});
    }
    bytes.push_back(std::move(entry));
  }
  return j;
}

void print_result(const cpa::AttackResult& r) {
  std::cout << "byte  subkey  |rho|       margin      sample\n";
  for (std::size_t b = 0; b < cpa::kBytePositions; ++b) {
    const auto& best = r.ranking[b][0];
    std::cout << fmt("%4.0f", static_cast<double>(b)) << "  "
              << "    " << cpa::to_hex(std::span(&best.subkey, 1)) << "  " << fmt("%.8f", best.rho)
              << "  " << fmt("%.8f", r.margin[b]) << "  " << best.sample << '\n';
  }
  std::cout << "round10_key " << cpa::to_hex(r.round10_key.bytes) << '\n';
  std::cout << "master_key " << cpa::to_hex(r.master_key.bytes) << '\n';
}

std::pair<cpa::TraceSet, cpa::CiphertextSet> load_inputs(const InputFlags& in) {
  return {cpa::load_traces(in.traces, cpa::parse_trace_format(in.format)),
          cpa::load_ciphertexts(in.ciphertexts)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation power analysis against the AES-128 last round"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);

  // attack
  InputFlags attack_in;
  EngineFlags attack_engine;
  std::string attack_curves;
  bool attack_json = false;
  std::size_t json_top = 5;
  auto* attack_cmd = app.add_subcommand("attack", "Recover the key from traces and ciphertexts");
  attack_in.add(*attack_cmd);
  attack_engine.add(*attack_cmd);
  attack_cmd->add_option("--export-curves", attack_curves,
                         "Write rho(j) of each byte's best subkey as CSV ('-' for stdout)");
  attack_cmd->add_flag("--json", attack_json, "Emit the result as one JSON document");
  attack_cmd->add_option("--json-top", json_top, "Candidates per byte in JSON output")
      ->check(CLI::Range(1, 256));

  // simulate
  std::string sim_key;
  std::size_t sim_n = 1000;
  std::size_t sim_m = 128;
  double sim_sigma = 2.0;
  double sim_scale = 1.0;
  double sim_offset = 0.0;
  std::uint64_t sim_seed = 1;
  std::size_t sim_stride = 0;
  std::string sim_prefix;
  std::string sim_precision = "double";
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic trace set with a known key");
  sim_cmd->add_option("--key", sim_key, "Master key, 32 hex characters")->required();
  sim_cmd->add_option("--n", sim_n, "Number of traces")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--m", sim_m, "Samples per trace")->check(CLI::Range(16, 1 << 30));
  sim_cmd->add_option("--sigma", sim_sigma, "Gaussian noise standard deviation");
  sim_cmd->add_option("--scale", sim_scale, "Leakage scale a");
  sim_cmd->add_option("--offset", sim_offset, "Baseline offset c");
  sim_cmd->add_option("--seed", sim_seed, "Generator seed");
  sim_cmd->add_option("--leak-stride", sim_stride, "Byte b leaks at sample b*stride (default m/16)");
  sim_cmd->add_option("--precision", sim_precision, "Stored precision (single|double)")
      ->check(CLI::IsMember({"single", "double"}));
  sim_cmd->add_option("--out-prefix", sim_prefix, "Writes <prefix>.traces and <prefix>.ct")->required();

  // bench
  std::size_t bench_n = 1000;
  std::size_t bench_m = 1000;
  std::vector<std::size_t> bench_workers{1};
  std::size_t bench_reps = 3;
  double bench_sigma = 2.0;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  std::string bench_format = "csv";
  EngineFlags bench_engine;
  auto* bench_cmd = app.add_subcommand("bench", "Time each phase on a synthetic data set");
  bench_cmd->add_option("--synth-n", bench_n, "Number of traces")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--synth-m", bench_m, "Samples per trace")->check(CLI::Range(16, 1 << 30));
  bench_cmd->add_option("--workers", bench_workers, "Comma-separated worker counts (0 = all)")
      ->delimiter(',');
  bench_cmd->add_option("--reps", bench_reps, "Repetitions per configuration (median reported)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--sigma", bench_sigma, "Noise standard deviation");
  bench_cmd->add_option("--seed", bench_seed, "Generator seed");
  bench_cmd->add_option("--out", bench_out, "Write the report to a file instead of stdout");
  bench_cmd->add_option("--report", bench_format, "Report style (csv|table)")
      ->check(CLI::IsMember({"csv", "table"}));
  bench_cmd->add_option("--precision", bench_engine.precision, "Trace storage precision")
      ->check(CLI::IsMember({"single", "double"}));
  bench_cmd->add_option("--chunk", bench_engine.chunk, "Samples per chunk")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--table-mode", bench_engine.table_mode, "Selection table storage")
      ->check(CLI::IsMember({"auto", "materialized", "on-the-fly"}));

  // export-curves
  InputFlags curves_in;
  EngineFlags curves_engine;
  std::string curves_out = "-";
  auto* curves_cmd =
      app.add_subcommand("export-curves", "Write rho(j) for each byte's top-ranked subkey as CSV");
  curves_in.add(*curves_cmd);
  curves_engine.add(*curves_cmd);
  curves_cmd->add_option("--out", curves_out, "Output CSV ('-' for stdout)");

  // inspect
  std::string inspect_path;
  std::string inspect_format = "binary";
  auto* inspect_cmd = app.add_subcommand("inspect", "Print trace file metadata");
  inspect_cmd->add_option("--traces", inspect_path, "Trace file")->required();
  inspect_cmd->add_option("--format", inspect_format, "Trace file format (binary|csv)")
      ->check(CLI::IsMember({"binary", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*attack_cmd) {
      auto [ts, cts] = load_inputs(attack_in);
      auto cfg = attack_engine.config();
      cfg.export_curves = !attack_curves.empty();
      const auto result = cpa::attack(ts, cts, cfg);
      if (attack_json)
        std::cout << result_json(result, json_top).dump(2) << '\n';
      else
        print_result(result);
      if (result.curves) write_curves(attack_curves, *result.curves);
    } else if (*sim_cmd) {
      cpa::MasterKey key;
      try {
        key.bytes = cpa::parse_block_hex(sim_key);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("--key: ") + e.what());
      }
      auto cfg = cpa::synth_config_for(key, sim_n, sim_m, sim_sigma, sim_seed);
      if (sim_stride != 0) cfg.spread_leaks(sim_stride);
      cfg.signal_scale = sim_scale;
      cfg.offset = sim_offset;
      cfg.precision = cpa::parse_precision(sim_precision);
      const auto [ts, cts] = cpa::generate_dataset(cfg);
      cpa::save_traces(ts, sim_prefix + ".traces");
      cpa::save_ciphertexts(cts, sim_prefix + ".ct");
      std::cerr << "wrote " << sim_prefix << ".traces and " << sim_prefix << ".ct (n=" << cfg.n
                << ", m=" << cfg.m << ")\n";
    } else if (*bench_cmd) {
      cpa::MasterKey key;
      for (std::size_t i = 0; i < 16; ++i) key.bytes[i] = static_cast<std::uint8_t>(0x11 * i + 0x0f);
      auto synth = cpa::synth_config_for(key, bench_n, bench_m, bench_sigma, bench_seed);
      cpa::BenchOptions options;
      options.workers = bench_workers;
      options.repetitions = bench_reps;
      options.attack = bench_engine.config();
      const auto reports = cpa::run_benchmark(synth, options);
      std::ostringstream text;
      if (bench_format == "csv")
        cpa::write_bench_csv(text, reports);
      else
        cpa::write_bench_table(text, reports);
      if (bench_out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream out(bench_out);
        if (!(out << text.str())) throw std::runtime_error(bench_out + ": cannot write report");
      }
    } else if (*curves_cmd) {
      auto [ts, cts] = load_inputs(curves_in);
      auto cfg = curves_engine.config();
      cfg.export_curves = true;
      const auto result = cpa::attack(ts, cts, cfg);
      write_curves(curves_out, *result.curves);
    } else if (*inspect_cmd) {
      const auto format = cpa::parse_trace_format(inspect_format);
      if (format == cpa::TraceFormat::Binary) {
        const auto h = cpa::read_trace_header(inspect_path);
        std::cout << "n: " << h.n << "\nm: " << h.m << "\nprecision: " << cpa::to_string(h.precision)
                  << "\nlayout: " << cpa::to_string(h.layout) << '\n';
      } else {
        const auto ts = cpa::load_traces(inspect_path, format);
        std::cout << "n: " << ts.n() << "\nm: " << ts.m()
                  << "\nprecision: " << cpa::to_string(ts.precision())
                  << "\nlayout: " << cpa::to_string(ts.layout()) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
