#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cpa/engine.hpp"
#include "oracles.hpp"

using namespace cpa;

namespace {

std::vector<double> column(const TraceSet& ts, std::size_t j) {
  std::vector<double> v(ts.n());
  for (std::size_t i = 0; i < ts.n(); ++i) v[i] = ts.at(i, j);
  return v;
}

std::vector<double> h_column(const CiphertextSet& cts, std::size_t k, std::size_t b) {
  std::vector<double> v(cts.n());
  for (std::size_t i = 0; i < cts.n(); ++i)
    v[i] = selection_value(cts[i], b, static_cast<std::uint8_t>(k));
  return v;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Traces where sample j of trace i equals H_i(k, b) scaled by `sign`.
TraceSet traces_equal_to_model(const CiphertextSet& cts, std::size_t k, std::size_t b, double sign,
                               std::size_t m) {
  std::vector<double> v(cts.n() * m);
  for (std::size_t i = 0; i < cts.n(); ++i)
    for (std::size_t j = 0; j < m; ++j)
      v[i * m + j] = sign * selection_value(cts[i], b, static_cast<std::uint8_t>(k));
  return TraceSet::from_rows(cts.n(), m, std::move(v));
}

}  // namespace

TEST_CASE("build_selection_table") {
  SUBCASE("all-zero ciphertext") {
    const CiphertextSet zero(std::vector<std::uint8_t>(16, 0));
    const auto table = SelectionTable::build(zero, TableMode::Materialized);
    // inv_sbox(0x63) = 0 equals ciphertext byte 0.
    CHECK(table.at(0, 0, 0x63) == 0);
  }
  std::mt19937_64 rng(31);
  const auto cts = oracle::random_ciphertexts(100, rng);
  const auto mat = SelectionTable::build(cts, TableMode::Materialized, 3);
  const auto otf = SelectionTable::build(cts, TableMode::OnTheFly);
  CHECK(mat.mode() == TableMode::Materialized);
  CHECK(otf.mode() == TableMode::OnTheFly);
  SUBCASE("random entries match selection_value") {
    for (int t = 0; t < 10000; ++t) {
      const std::size_t i = rng() % 100, b = rng() % 16, k = rng() % 256;
      REQUIRE(mat.at(i, b, k) == selection_value(cts[i], b, static_cast<std::uint8_t>(k)));
    }
  }
  SUBCASE("materialized and on-the-fly agree everywhere") {
    bool same = true;
    for (std::size_t i = 0; i < 100; ++i)
      for (std::size_t b = 0; b < 16; ++b)
        for (std::size_t k = 0; k < 256; ++k) same = same && mat.at(i, b, k) == otf.at(i, b, k);
    CHECK(same);
    std::vector<std::uint8_t> r1(40 * 256), r2(40 * 256);
    mat.fill_rows(7, 30, 70, r1.data());
    otf.fill_rows(7, 30, 70, r2.data());
    CHECK(r1 == r2);
  }
  SUBCASE("auto mode respects the budget") {
    CHECK(SelectionTable::build(cts, TableMode::Auto, 1, 100 * kCells).mode() == TableMode::Materialized);
    CHECK(SelectionTable::build(cts, TableMode::Auto, 1, 100 * kCells - 1).mode() == TableMode::OnTheFly);
  }
}

TEST_CASE("phase1_model_stats") {
  std::mt19937_64 rng(32);
  SUBCASE("single trace") {
    const auto cts = oracle::random_ciphertexts(1, rng);
    const auto ms = phase1_model_stats(SelectionTable::build(cts, TableMode::Materialized));
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b) {
        const std::uint64_t h = selection_value(cts[0], b, static_cast<std::uint8_t>(k));
        CHECK(ms.sum_h[cell_index(k, b)] == h);
        CHECK(ms.sum_h2[cell_index(k, b)] == h * h);
      }
  }
  SUBCASE("duplicated ciphertexts double every sum") {
    const auto cts = oracle::random_ciphertexts(37, rng);
    auto twice = cts.bytes();
    twice.insert(twice.end(), cts.bytes().begin(), cts.bytes().end());
    const auto a = phase1_model_stats(SelectionTable::build(cts, TableMode::Materialized));
    const auto b = phase1_model_stats(SelectionTable::build(CiphertextSet(twice), TableMode::OnTheFly), 4);
    for (std::size_t c = 0; c < kCells; ++c) {
      CHECK(b.sum_h[c] == 2 * a.sum_h[c]);
      CHECK(b.sum_h2[c] == 2 * a.sum_h2[c]);
    }
  }
  SUBCASE("five-ciphertext fixture against a scalar loop; invariants") {
    const auto cts = oracle::random_ciphertexts(5, rng);
    const auto ms = phase1_model_stats(SelectionTable::build(cts, TableMode::Materialized), 2);
    const std::uint64_t n = 5;
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b) {
        std::uint64_t s = 0, s2 = 0;
        std::vector<std::int64_t> hs;
        for (std::size_t i = 0; i < 5; ++i) {
          const auto h = static_cast<std::uint64_t>(oracle::selection_value(cts[i], b, static_cast<std::uint8_t>(k)));
          s += h;
          s2 += h * h;
          hs.push_back(static_cast<std::int64_t>(h));
        }
        const std::size_t c = cell_index(k, b);
        REQUIRE(ms.sum_h[c] == s);
        REQUIRE(ms.sum_h2[c] == s2);
        CHECK(ms.sum_h[c] <= 8 * n);
        CHECK(ms.sum_h[c] <= ms.sum_h2[c]);
        CHECK(ms.sum_h2[c] <= 8 * ms.sum_h[c]);
        // n * (n*S2 - S^2) == sum_i (n*h_i - S)^2, all in integers.
        const auto S = static_cast<std::int64_t>(ms.sum_h[c]);
        const auto S2 = static_cast<std::int64_t>(ms.sum_h2[c]);
        std::int64_t centered = 0;
        for (auto h : hs) centered += (5 * h - S) * (5 * h - S);
        CHECK(5 * (5 * S2 - S * S) == centered);
        CHECK(5 * S2 - S * S >= 0);
      }
  }
}

TEST_CASE("phase2_trace_stats") {
  std::mt19937_64 rng(33);
  SUBCASE("all-zero traces") {
    const auto cts = oracle::random_ciphertexts(9, rng);
    const auto ts = TraceSet::from_rows(9, 11, std::vector<double>(99, 0.0));
    const auto st = phase2_trace_stats(ts, SelectionTable::build(cts, TableMode::Materialized), 0, 11);
    CHECK(std::all_of(st.sum_w.begin(), st.sum_w.end(), [](double v) { return v == 0.0; }));
    CHECK(std::all_of(st.sum_w2.begin(), st.sum_w2.end(), [](double v) { return v == 0.0; }));
    CHECK(std::all_of(st.sum_wh.begin(), st.sum_wh.end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("single trace") {
    const auto cts = oracle::random_ciphertexts(1, rng);
    const auto ts = oracle::random_traces(1, 5, rng);
    const auto st = phase2_trace_stats(ts, SelectionTable::build(cts, TableMode::OnTheFly), 0, 5);
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b)
        for (std::size_t j = 0; j < 5; ++j)
          REQUIRE(st.wh(k, b, j) == ts.at(0, j) * selection_value(cts[0], b, static_cast<std::uint8_t>(k)));
  }
  SUBCASE("20 x 8 against the triple loop") {
    const auto cts = oracle::random_ciphertexts(20, rng);
    const auto ts = oracle::random_traces(20, 8, rng);
    const auto st = phase2_trace_stats(ts, SelectionTable::build(cts, TableMode::Materialized), 0, 8, 3);
    double worst = 0.0;
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b)
        for (std::size_t j = 0; j < 8; ++j) {
          const auto o = oracle::cell_sums(ts, cts, k, b, j);
          worst = std::max({worst, rel_err(st.wh(k, b, j), o.swh), rel_err(st.sum_w[j], o.sw),
                            rel_err(st.sum_w2[j], o.sw2)});
        }
    CHECK(worst <= 1e-12);
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(20 * st.sum_w2[j] - st.sum_w[j] * st.sum_w[j] >= -1e-6 * 20 * st.sum_w2[j]);
  }
  SUBCASE("an all-zero H column sums to exactly zero") {
    // Force H(k = 0x5a, b = 1) = 0 for every trace.
    auto cts = oracle::random_ciphertexts(50, rng);
    auto bytes = cts.bytes();
    for (std::size_t i = 0; i < 50; ++i)
      bytes[16 * i + shiftrows_source_index(1)] = inv_sbox(static_cast<std::uint8_t>(bytes[16 * i + 1] ^ 0x5a));
    cts = CiphertextSet(bytes);
    const auto ts = oracle::random_traces(50, 70, rng);
    const auto st = phase2_trace_stats(ts, SelectionTable::build(cts, TableMode::Materialized), 0, 70);
    for (std::size_t j = 0; j < 70; ++j) CHECK(st.wh(0x5a, 1, j) == 0.0);
  }
  SUBCASE("sub-chunks are bit-identical to the full range; layout and precision of storage") {
    const auto cts = oracle::random_ciphertexts(300, rng);
    const auto ts = oracle::random_traces(300, 150, rng);
    const auto table = SelectionTable::build(cts, TableMode::Materialized);
    const auto full = phase2_trace_stats(ts, table, 0, 150);
    const auto part = phase2_trace_stats(ts, table, 67, 139, 4);
    const auto sm = phase2_trace_stats(transpose_layout(ts), table, 67, 139, 2);
    bool same = true;
    for (std::size_t j = 67; j < 139; ++j) {
      same = same && part.sum_w[j - 67] == full.sum_w[j] && part.sum_w2[j - 67] == full.sum_w2[j];
      for (std::size_t k = 0; k < 256; ++k)
        for (std::size_t b = 0; b < 16; ++b)
          same = same && part.wh(k, b, j) == full.wh(k, b, j) && sm.wh(k, b, j) == full.wh(k, b, j);
    }
    CHECK(same);
  }
  SUBCASE("errors") {
    const auto cts = oracle::random_ciphertexts(4, rng);
    const auto ts = oracle::random_traces(5, 3, rng);
    const auto table = SelectionTable::build(cts, TableMode::Materialized);
    CHECK_THROWS_AS(phase2_trace_stats(ts, table, 0, 3), AttackError);
    const auto ok = oracle::random_traces(4, 3, rng);
    CHECK_THROWS_AS(phase2_trace_stats(ok, table, 0, 4), AttackError);
    CHECK_THROWS_AS(phase2_trace_stats(ok, table, 2, 2), AttackError);
  }
}

TEST_CASE("correlation_at") {
  std::mt19937_64 rng(34);
  const auto cts = oracle::random_ciphertexts(64, rng);
  const auto table = SelectionTable::build(cts, TableMode::Materialized);
  const auto ms = phase1_model_stats(table);

  SUBCASE("traces equal to the model") {
    const auto st = phase2_trace_stats(traces_equal_to_model(cts, 0x3c, 9, 1.0, 2), table, 0, 2);
    CHECK(std::abs(correlation_at(1, 0x3c, 9, ms, st) - 1.0) <= 1e-12);
    const auto neg = phase2_trace_stats(traces_equal_to_model(cts, 0x3c, 9, -1.0, 2), table, 0, 2);
    CHECK(std::abs(correlation_at(0, 0x3c, 9, ms, neg) + 1.0) <= 1e-12);
  }
  SUBCASE("constant column is degenerate") {
    const auto ts = TraceSet::from_rows(64, 3, std::vector<double>(64 * 3, 4.25));
    const auto st = phase2_trace_stats(ts, table, 0, 3);
    for (std::size_t k = 0; k < 256; k += 17) CHECK(correlation_at(2, k, 3, ms, st) == 0.0);
    CHECK(correlation_from_sums(10, 5, 5, 5, 0, 0) == 0.0);
  }
  SUBCASE("random 50-trace column against the two-pass oracle") {
    const auto c50 = oracle::random_ciphertexts(50, rng);
    const auto t50 = oracle::random_traces(50, 3, rng);
    const auto tab = SelectionTable::build(c50, TableMode::Materialized);
    const auto m50 = phase1_model_stats(tab);
    const auto st = phase2_trace_stats(t50, tab, 0, 3);
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b)
        REQUIRE(std::abs(correlation_at(2, k, b, m50, st) - oracle::pearson(t50, c50, k, b, 2)) <= 1e-9);
  }
  SUBCASE("sample outside the chunk") {
    const auto st = phase2_trace_stats(oracle::random_traces(64, 10, rng), table, 2, 5);
    CHECK_THROWS_AS(correlation_at(5, 0, 0, ms, st), std::out_of_range);
  }
}

TEST_CASE("pearson_oracle") {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> h(40), neg(40);
  for (std::size_t i = 0; i < 40; ++i) {
    h[i] = static_cast<double>(rng() % 9);
    neg[i] = -h[i];
  }
  CHECK(std::abs(pearson_oracle(h, h) - 1.0) <= 1e-12);
  CHECK(std::abs(pearson_oracle(h, neg) + 1.0) <= 1e-12);
  CHECK(pearson_oracle(std::vector<double>(5, 1.0), std::vector<double>{1, 2, 3, 4, 5}) == 0.0);
  CHECK_THROWS(pearson_oracle(std::vector<double>{1.0}, std::vector<double>{1.0}));

  // Agrees with the factored one-pass form on 1000 random columns.
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<double> w(n), hh(n);
    double sw = 0, sw2 = 0, swh = 0, sh = 0, sh2 = 0;
    const double mean = 10.0 * nd(rng);
    for (std::size_t i = 0; i < n; ++i) {
      hh[i] = static_cast<double>(rng() % 9);
      w[i] = mean + 0.3 * hh[i] + nd(rng);
      sw += w[i];
      sw2 += w[i] * w[i];
      swh += w[i] * hh[i];
      sh += hh[i];
      sh2 += hh[i] * hh[i];
    }
    const double fast = correlation_from_sums(static_cast<double>(n), swh, sw, sw2, sh, sh2);
    worst = std::max(worst, std::abs(fast - pearson_oracle(w, hh)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("phase3_max_correlation") {
  std::mt19937_64 rng(36);
  const auto cts = oracle::random_ciphertexts(20, rng);
  const auto ts = oracle::random_traces(20, 8, rng);
  const auto table = SelectionTable::build(cts, TableMode::Materialized);
  const auto ms = phase1_model_stats(table);

  SUBCASE("single-sample chunk") {
    const auto st = phase2_trace_stats(ts, table, 5, 6);
    const auto s = phase3_max_correlation(ms, st);
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b) {
        CHECK(s.at(k, b) == std::abs(correlation_at(5, k, b, ms, st)));
        CHECK(s.argmax[cell_index(k, b)] == 5);
      }
  }
  SUBCASE("folding two halves equals one shot, in either order") {
    const auto one = phase3_max_correlation(ms, phase2_trace_stats(ts, table, 0, 8));
    const auto lo = phase2_trace_stats(ts, table, 0, 4);
    const auto hi = phase2_trace_stats(ts, table, 4, 8);
    const auto fwd = phase3_max_correlation(ms, hi, phase3_max_correlation(ms, lo), 3);
    const auto rev = phase3_max_correlation(ms, lo, phase3_max_correlation(ms, hi));
    CHECK(fwd == one);
    CHECK(rev == one);
    CHECK(one.j_begin == 0);
    CHECK(one.j_end == 8);
  }
  SUBCASE("matches a brute-force sweep") {
    const auto s = phase3_max_correlation(ms, phase2_trace_stats(ts, table, 0, 8));
    for (std::size_t k = 0; k < 256; ++k)
      for (std::size_t b = 0; b < 16; ++b) {
        double best = -1;
        std::uint32_t best_j = 0;
        for (std::uint32_t j = 0; j < 8; ++j) {
          const double r = std::abs(oracle::pearson(ts, cts, k, b, j));
          if (r > best) {
            best = r;
            best_j = j;
          }
        }
        REQUIRE(std::abs(s.at(k, b) - best) <= 1e-9);
        CHECK(s.at(k, b) >= 0.0);
        CHECK(s.at(k, b) <= 1.0);
        if (std::abs(s.at(k, b) - best) < 1e-12) CHECK(s.argmax[cell_index(k, b)] == best_j);
      }
  }
  SUBCASE("ties keep the lowest sample") {
    // Identical columns give identical |rho| at every sample.
    std::vector<double> v(20 * 6);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 6; ++j) v[i * 6 + j] = ts.at(i, 0);
    const auto flat = TraceSet::from_rows(20, 6, v);
    const auto s = phase3_max_correlation(
        ms, phase2_trace_stats(flat, table, 3, 6),
        phase3_max_correlation(ms, phase2_trace_stats(flat, table, 0, 3)));
    for (std::size_t c = 0; c < kCells; ++c) CHECK(s.argmax[c] == 0);
  }
  SUBCASE("non-adjacent chunk is rejected") {
    const auto a = phase3_max_correlation(ms, phase2_trace_stats(ts, table, 0, 2));
    CHECK_THROWS_AS(phase3_max_correlation(ms, phase2_trace_stats(ts, table, 4, 6), a), AttackError);
  }
}

TEST_CASE("phase4_derive_round_key") {
  CorrelationSurface s;
  s.rho.assign(kCells, 0.0);
  s.argmax.assign(kCells, 0);
  SUBCASE("constructed argmax") {
    for (std::size_t b = 0; b < 16; ++b) s.rho[cell_index(b, b)] = 1.0;
    const auto r = phase4_derive_round_key(s);
    for (std::size_t b = 0; b < 16; ++b) {
      CHECK(r.round10_key.bytes[b] == b);
      CHECK(r.margin[b] == 1.0);
    }
    CHECK(r.master_key == invert_key_schedule(r.round10_key, 10));
  }
  SUBCASE("all-equal surface breaks ties toward subkey 0") {
    std::fill(s.rho.begin(), s.rho.end(), 0.25);
    const auto r = phase4_derive_round_key(s);
    for (std::size_t b = 0; b < 16; ++b) {
      CHECK(r.round10_key.bytes[b] == 0);
      CHECK(r.ranking[b][1].subkey == 1);
      CHECK(r.ranking[b][255].subkey == 255);
      CHECK(r.margin[b] == 0.0);
    }
  }
  SUBCASE("ranking is sorted") {
    std::mt19937_64 rng(37);
    for (auto& v : s.rho) v = static_cast<double>(rng() % 1000) / 1000.0;
    const auto r = phase4_derive_round_key(s);
    for (std::size_t b = 0; b < 16; ++b)
      for (std::size_t k = 1; k < 256; ++k) {
        const auto& prev = r.ranking[b][k - 1];
        const auto& cur = r.ranking[b][k];
        CHECK((prev.rho > cur.rho || (prev.rho == cur.rho && prev.subkey < cur.subkey)));
      }
  }
}

TEST_CASE("cells computed in isolation match the grid") {
  std::mt19937_64 rng(38);
  const auto cts = oracle::random_ciphertexts(150, rng);
  const auto ts = oracle::random_traces(150, 40, rng);
  const auto table = SelectionTable::build(cts, TableMode::Materialized);
  const auto ms = phase1_model_stats(table, 4);
  const auto st = phase2_trace_stats(ts, table, 0, 40, 4);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = rng() % 256, b = rng() % 16, j = rng() % 40;
    const auto c = cell_sums(ts, table, k, b, j);
    REQUIRE(c.sum_h == ms.sum_h[cell_index(k, b)]);
    REQUIRE(c.sum_h2 == ms.sum_h2[cell_index(k, b)]);
    REQUIRE(c.sum_w == st.sum_w[j]);
    REQUIRE(c.sum_w2 == st.sum_w2[j]);
    REQUIRE(c.sum_wh == st.wh(k, b, j));
  }
}

TEST_CASE("oracle equivalence on random shapes") {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t n = 2 + rng() % 199, m = 1 + rng() % 64;
    const auto cts = oracle::random_ciphertexts(n, rng);
    const auto ts = oracle::random_traces(n, m, rng);
    const auto table = SelectionTable::build(cts, TableMode::Materialized);
    const auto ms = phase1_model_stats(table);
    const auto st = phase2_trace_stats(ts, table, 0, m);
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto w = column(ts, j);
      for (std::size_t k = 0; k < 256; ++k)
        for (std::size_t b = 0; b < 16; ++b) {
          const double r = correlation_at(j, k, b, ms, st);
          worst = std::max(worst, std::abs(r - pearson_oracle(w, h_column(cts, k, b))));
          REQUIRE(std::abs(r) <= 1.0);
        }
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("attack") {
  std::mt19937_64 rng(40);
  const auto cts = oracle::random_ciphertexts(120, rng);
  const auto ts = oracle::random_traces(120, 70, rng);

  SUBCASE("errors") {
    CHECK_THROWS_AS(attack(oracle::random_traces(119, 70, rng), cts), AttackError);
    const auto one = oracle::random_ciphertexts(1, rng);
    CHECK_THROWS_AS(attack(oracle::random_traces(1, 5, rng), one), AttackError);
    AttackConfig zero;
    zero.chunk = 0;
    CHECK_THROWS_AS(attack(ts, cts, zero), AttackError);
    try {
      (void)attack(oracle::random_traces(119, 70, rng), cts);
    } catch (const AttackError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("119") != std::string::npos);
      CHECK(msg.find("120") != std::string::npos);
    }
  }
  SUBCASE("worker count, table mode, layout and chunking do not change the result") {
    AttackConfig base;
    base.chunk = 16;
    const auto ref = attack(ts, cts, base);
    AttackConfig par = base;
    par.workers = 8;
    par.table_mode = TableMode::OnTheFly;
    CHECK(attack(ts, cts, par) == ref);
    AttackConfig big = base;
    big.chunk = 4096;
    CHECK(attack(transpose_layout(ts), cts, big) == ref);
    CHECK(ref.master_key == invert_key_schedule(ref.round10_key, 10));
  }
  SUBCASE("shuffling traces and ciphertexts together") {
    std::vector<std::size_t> perm(120);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = attack(ts, cts);
    const auto b = attack(ts.permuted(perm), cts.permuted(perm));
    double worst = 0.0;
    for (std::size_t c = 0; c < kCells; ++c) worst = std::max(worst, std::abs(a.surface.rho[c] - b.surface.rho[c]));
    CHECK(worst <= 1e-12);
  }
  SUBCASE("positive and negative affine maps") {
    const auto a = attack(ts, cts);
    const auto pos = attack(ts.affine(3.7, 11.0), cts);
    const auto neg = attack(ts.affine(-1.0, 0.0), cts);
    double worst = 0.0;
    for (std::size_t c = 0; c < kCells; ++c)
      worst = std::max({worst, std::abs(a.surface.rho[c] - pos.surface.rho[c]),
                        std::abs(a.surface.rho[c] - neg.surface.rho[c])});
    CHECK(worst <= 1e-9);
  }
  SUBCASE("curves for the winners") {
    AttackConfig cfg;
    cfg.export_curves = true;
    cfg.chunk = 9;
    const auto r = attack(ts, cts, cfg);
    REQUIRE(r.curves.has_value());
    CHECK(r.curves->m == 70);
    CHECK(r.curves->rho.size() == 16 * 70);
    for (std::size_t b = 0; b < 16; ++b) {
      const auto& best = r.ranking[b][0];
      CHECK(r.curves->subkeys[b] == best.subkey);
      CHECK(std::abs(r.curves->rho[b * 70 + best.sample]) == doctest::Approx(best.rho).epsilon(1e-12));
    }
  }
}
