#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "cxlsim/sim/error.hpp"
#include "cxlsim/sim/rng.hpp"

namespace cxlsim {

enum class TraceOp : std::uint8_t { R, W };

struct TraceRecord {
  TraceOp op = TraceOp::R;
  std::uint64_t address = 0;
  bool operator==(const TraceRecord&) const = default;
};

struct TraceLoad {
  std::vector<TraceRecord> records;
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
};

// One record per line: `R <hex>` or `W <hex>`, `0x` optional; `#` starts a
// comment. Addresses are aligned down to 64 B.
inline TraceLoad parse_trace(std::istream& in, const std::string& name = "trace") {
  TraceLoad out;
  std::string line;
  std::size_t lineno = 0, data_lines = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string op, addr, extra;
    if (!(ls >> op)) continue;
    ++data_lines;
    bool ok = (op == "R" || op == "W") && static_cast<bool>(ls >> addr) && !(ls >> extra);
    std::uint64_t value = 0;
    if (ok) {
      std::size_t used = 0;
      try {
        value = std::stoull(addr, &used, 16);
      } catch (const std::exception&) {
        ok = false;
      }
      ok = ok && used == addr.size();
    }
    if (!ok) {
      ++out.malformed;
      if (out.warnings.size() < 10) out.warnings.push_back(name + ":" + std::to_string(lineno) + ": malformed record");
      continue;
    }
    out.records.push_back({op == "R" ? TraceOp::R : TraceOp::W, value & ~std::uint64_t{63}});
  }
  if (data_lines == 0) out.warnings.push_back(name + ": empty trace");
  if (out.malformed * 100 > data_lines) {
    throw ConfigError(name + ": " + std::to_string(out.malformed) + " of " + std::to_string(data_lines) +
                      " records malformed (limit 1%)");
  }
  return out;
}

inline TraceLoad load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trace file '" + path + "'");
  return parse_trace(in, path);
}

inline double mix_degree(const std::vector<TraceRecord>& records) {
  if (records.empty()) throw ConfigError("mix degree of an empty trace is undefined");
  const auto writes = static_cast<double>(
      std::count_if(records.begin(), records.end(), [](const TraceRecord& r) { return r.op == TraceOp::W; }));
  const auto total = static_cast<double>(records.size());
  return std::min(writes / total, (total - writes) / total);
}

// `count` records over `footprint_bytes` with exactly round(count * writes)
// writes in random order.
inline std::vector<TraceRecord> synthetic_trace(std::size_t count, double write_fraction,
                                                std::uint64_t footprint_bytes, Rng& rng) {
  std::vector<TraceRecord> out(count);
  const auto writes = static_cast<std::size_t>(static_cast<double>(count) * write_fraction + 0.5);
  const auto lines = std::max<std::uint64_t>(1, footprint_bytes / 64);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].op = i < writes ? TraceOp::W : TraceOp::R;
  }
  for (std::size_t i = count; i > 1; --i) std::swap(out[i - 1].op, out[rng.below(i)].op);
  for (auto& r : out) r.address = rng.below(lines) * 64;
  return out;
}

inline void write_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) {
    os << (r.op == TraceOp::R ? 'R' : 'W') << " 0x" << std::hex << r.address << std::dec << '\n';
  }
}

}  // namespace cxlsim
