#pragma once

// AES-128 primitives used by the last-round correlation attack and by the
// synthetic trace generator. State bytes use the column-major convention:
// byte index = row + 4 * column, so ciphertext byte i is state byte i.

#include <array>
#include <cstdint>
#include <span>

namespace cpa {

using Block = std::array<std::uint8_t, 16>;

struct RoundKey {
  Block bytes{};
  friend bool operator==(const RoundKey&, const RoundKey&) = default;
};

struct MasterKey {
  Block bytes{};
  friend bool operator==(const MasterKey&, const MasterKey&) = default;
};

using KeySchedule = std::array<RoundKey, 11>;

/// Ciphertext together with the state that entered the final round.
struct StateTrace {
  Block ciphertext{};
  Block round9_state{};
};

std::uint8_t sbox(std::uint8_t x) noexcept;
std::uint8_t inv_sbox(std::uint8_t x) noexcept;

const std::array<std::uint8_t, 256>& sbox_table() noexcept;
const std::array<std::uint8_t, 256>& inv_sbox_table() noexcept;

/// Position in the pre-ShiftRows state that ShiftRows moves to output
/// position `pos`. Throws std::out_of_range for pos > 15.
std::size_t shiftrows_source_index(std::size_t pos);

const std::array<std::uint8_t, 16>& shiftrows_source_table() noexcept;

KeySchedule expand_key(const MasterKey& key) noexcept;

/// Runs the key schedule backwards from the round key at `round_index`
/// (0..10). Throws std::out_of_range for larger indices.
MasterKey invert_key_schedule(const RoundKey& rk, int round_index);

inline int hamming_weight(std::uint8_t x) noexcept {
  return __builtin_popcount(x);
}

/// Predicted register transition at `byte_pos` for the final round:
/// HW(inv_sbox(c[b] ^ guess) ^ c[shiftrows_source_index(b)]).
inline int selection_value(std::span<const std::uint8_t, 16> cipher, std::size_t byte_pos,
                           std::uint8_t key_guess) noexcept {
  const auto& src = shiftrows_source_table();
  return hamming_weight(static_cast<std::uint8_t>(
      inv_sbox_table()[cipher[byte_pos] ^ key_guess] ^ cipher[src[byte_pos]]));
}

StateTrace encrypt_with_states(const Block& plaintext, const MasterKey& key) noexcept;

/// Applies SubBytes, ShiftRows and AddRoundKey (no MixColumns).
Block final_round(const Block& state, const RoundKey& rk) noexcept;

}  // namespace cpa
