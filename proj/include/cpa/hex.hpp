#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "cpa/aes.hpp"

namespace cpa {

/// Lowercase hex, no separators.
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Parses exactly 32 hex characters (either case). Throws
/// std::invalid_argument naming the problem.
Block parse_block_hex(std::string_view text);

}  // namespace cpa
