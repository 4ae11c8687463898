#include "cpa/aes.hpp"

#include <stdexcept>
#include <string>

namespace cpa {
namespace {

constexpr std::uint8_t xtime(std::uint8_t x) {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0x00));
}

constexpr std::uint8_t rotl8(std::uint8_t x, int s) {
  return static_cast<std::uint8_t>((x << s) | (x >> (8 - s)));
}

// Walk the powers of the generator 0x03 to build log/antilog tables, then
// take inverses as g^(255 - log x) and apply the affine map.
constexpr std::array<std::uint8_t, 256> make_sbox() {
  std::array<std::uint8_t, 256> exp{};
  std::array<std::uint8_t, 256> log{};
  std::uint8_t p = 1;
  for (int i = 0; i < 255; ++i) {
    exp[i] = p;
    log[p] = static_cast<std::uint8_t>(i);
    p = static_cast<std::uint8_t>(p ^ xtime(p));
  }
  std::array<std::uint8_t, 256> box{};
  for (int x = 0; x < 256; ++x) {
    const std::uint8_t inv = x == 0 ? 0 : exp[(255 - log[x]) % 255];
    box[x] = static_cast<std::uint8_t>(inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^ rotl8(inv, 3) ^
                                       rotl8(inv, 4) ^ 0x63);
  }
  return box;
}

constexpr std::array<std::uint8_t, 256> invert(const std::array<std::uint8_t, 256>& box) {
  std::array<std::uint8_t, 256> out{};
  for (int x = 0; x < 256; ++x) out[box[x]] = static_cast<std::uint8_t>(x);
  return out;
}

constexpr auto kSbox = make_sbox();
constexpr auto kInvSbox = invert(kSbox);
static_assert(kSbox[0x00] == 0x63 && kSbox[0x53] == 0xed && kInvSbox[0x63] == 0x00);

// Output position r + 4c reads input row r, column (c + r) mod 4.
constexpr std::array<std::uint8_t, 16> make_shiftrows_source() {
  std::array<std::uint8_t, 16> src{};
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) src[r + 4 * c] = static_cast<std::uint8_t>(r + 4 * ((c + r) % 4));
  return src;
}

constexpr auto kShiftRowsSource = make_shiftrows_source();

std::uint8_t rcon(int round) {
  // rcon[i] = x^(i-1) in GF(2^8)
  std::uint8_t r = 1;
  for (int i = 1; i < round; ++i) r = xtime(r);
  return r;
}

RoundKey next_round_key(const RoundKey& prev, int round) {
  RoundKey out;
  const auto& p = prev.bytes;
  auto& o = out.bytes;
  // word 0: prev w0 ^ SubWord(RotWord(prev w3)) ^ rcon
  o[0] = static_cast<std::uint8_t>(p[0] ^ kSbox[p[13]] ^ rcon(round));
  o[1] = static_cast<std::uint8_t>(p[1] ^ kSbox[p[14]]);
  o[2] = static_cast<std::uint8_t>(p[2] ^ kSbox[p[15]]);
  o[3] = static_cast<std::uint8_t>(p[3] ^ kSbox[p[12]]);
  for (int i = 4; i < 16; ++i) o[i] = static_cast<std::uint8_t>(p[i] ^ o[i - 4]);
  return out;
}

RoundKey prev_round_key(const RoundKey& next, int round) {
  RoundKey out;
  const auto& n = next.bytes;
  auto& o = out.bytes;
  for (int i = 15; i >= 4; --i) o[i] = static_cast<std::uint8_t>(n[i] ^ n[i - 4]);
  o[0] = static_cast<std::uint8_t>(n[0] ^ kSbox[o[13]] ^ rcon(round));
  o[1] = static_cast<std::uint8_t>(n[1] ^ kSbox[o[14]]);
  o[2] = static_cast<std::uint8_t>(n[2] ^ kSbox[o[15]]);
  o[3] = static_cast<std::uint8_t>(n[3] ^ kSbox[o[12]]);
  return out;
}

void add_round_key(Block& s, const RoundKey& rk) {
  for (int i = 0; i < 16; ++i) s[i] ^= rk.bytes[i];
}

void sub_bytes(Block& s) {
  for (auto& x : s) x = kSbox[x];
}

void shift_rows(Block& s) {
  Block in = s;
  for (int i = 0; i < 16; ++i) s[i] = in[kShiftRowsSource[i]];
}

void mix_columns(Block& s) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t* col = &s[4 * c];
    const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    const std::uint8_t all = static_cast<std::uint8_t>(a0 ^ a1 ^ a2 ^ a3);
    col[0] = static_cast<std::uint8_t>(a0 ^ all ^ xtime(static_cast<std::uint8_t>(a0 ^ a1)));
    col[1] = static_cast<std::uint8_t>(a1 ^ all ^ xtime(static_cast<std::uint8_t>(a1 ^ a2)));
    col[2] = static_cast<std::uint8_t>(a2 ^ all ^ xtime(static_cast<std::uint8_t>(a2 ^ a3)));
    col[3] = static_cast<std::uint8_t>(a3 ^ all ^ xtime(static_cast<std::uint8_t>(a3 ^ a0)));
  }
}

}  // namespace

std::uint8_t sbox(std::uint8_t x) noexcept { return kSbox[x]; }
std::uint8_t inv_sbox(std::uint8_t x) noexcept { return kInvSbox[x]; }
const std::array<std::uint8_t, 256>& sbox_table() noexcept { return kSbox; }
const std::array<std::uint8_t, 256>& inv_sbox_table() noexcept { return kInvSbox; }
const std::array<std::uint8_t, 16>& shiftrows_source_table() noexcept { return kShiftRowsSource; }

std::size_t shiftrows_source_index(std::size_t pos) {
  if (pos > 15) throw std::out_of_range("byte position " + std::to_string(pos) + " not in 0..15");
  return kShiftRowsSource[pos];
}

KeySchedule expand_key(const MasterKey& key) noexcept {
  KeySchedule ks;
  ks[0].bytes = key.bytes;
  for (int r = 1; r <= 10; ++r) ks[r] = next_round_key(ks[r - 1], r);
  return ks;
}

MasterKey invert_key_schedule(const RoundKey& rk, int round_index) {
  if (round_index < 0 || round_index > 10)
    throw std::out_of_range("round index " + std::to_string(round_index) + " not in 0..10");
  RoundKey cur = rk;
  for (int r = round_index; r >= 1; --r) cur = prev_round_key(cur, r);
  return MasterKey{cur.bytes};
}

Block final_round(const Block& state, const RoundKey& rk) noexcept {
  Block s = state;
  sub_bytes(s);
  shift_rows(s);
  add_round_key(s, rk);
  return s;
}

StateTrace encrypt_with_states(const Block& plaintext, const MasterKey& key) noexcept {
  const KeySchedule ks = expand_key(key);
  Block s = plaintext;
  add_round_key(s, ks[0]);
  for (int r = 1; r <= 9; ++r) {
    sub_bytes(s);
    shift_rows(s);
    mix_columns(s);
    add_round_key(s, ks[r]);
  }
  StateTrace out;
  out.round9_state = s;
  out.ciphertext = final_round(s, ks[10]);
  return out;
}

}  // namespace cpa
