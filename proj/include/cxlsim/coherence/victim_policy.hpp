#pragma once

#include <cctype>
#include <cstdint>
#include <string>

#include "cxlsim/sim/error.hpp"

namespace cxlsim {

enum class VictimKind : std::uint8_t { fifo, lru, lfi, lifo, mru, block_length };

struct VictimPolicy {
  VictimKind kind = VictimKind::fifo;
  std::uint32_t max_len = 1;  // block_length only: longest InvBlk run

  static constexpr std::uint32_t kMaxBlock = 4;

  bool operator==(const VictimPolicy&) const = default;

  void validate() const {
    if (kind == VictimKind::block_length && (max_len < 1 || max_len > kMaxBlock)) {
      throw ConfigError("invblk_max_len must be in [1, 4], got " + std::to_string(max_len));
    }
  }

  std::uint32_t block_limit() const noexcept { return kind == VictimKind::block_length ? max_len : 1; }
};

inline const char* to_string(VictimKind k) {
  switch (k) {
    case VictimKind::fifo: return "fifo";
    case VictimKind::lru: return "lru";
    case VictimKind::lfi: return "lfi";
    case VictimKind::lifo: return "lifo";
    case VictimKind::mru: return "mru";
    case VictimKind::block_length: return "block_length";
  }
  return "?";
}

inline VictimKind parse_victim_kind(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "fifo") return VictimKind::fifo;
  if (s == "lru") return VictimKind::lru;
  if (s == "lfi") return VictimKind::lfi;
  if (s == "lifo") return VictimKind::lifo;
  if (s == "mru") return VictimKind::mru;
  if (s == "block_length" || s == "blocklength" || s == "block-length") return VictimKind::block_length;
  throw ConfigError("unknown victim_policy '" + s + "' (expected fifo, lru, lfi, lifo, mru, block_length)");
}

}  // namespace cxlsim
