#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cxlsim/devices/packet.hpp"
#include "cxlsim/sim/error.hpp"
#include "cxlsim/sim/rng.hpp"
#include "cxlsim/workload/trace.hpp"

namespace cxlsim {

enum class PatternKind : std::uint8_t { stream, uniform, skewed, trace };

inline const char* to_string(PatternKind k) {
  switch (k) {
    case PatternKind::stream: return "stream";
    case PatternKind::uniform: return "uniform";
    case PatternKind::skewed: return "skewed";
    case PatternKind::trace: return "trace";
  }
  return "?";
}

inline PatternKind parse_pattern_kind(const std::string& s) {
  if (s == "stream" || s == "sequential") return PatternKind::stream;
  if (s == "uniform" || s == "random") return PatternKind::uniform;
  if (s == "skewed") return PatternKind::skewed;
  if (s == "trace") return PatternKind::trace;
  throw ConfigError("unknown workload pattern '" + s + "' (expected stream, uniform, skewed, trace)");
}

struct PatternSpec {
  PatternKind kind = PatternKind::uniform;
  std::uint64_t footprint_bytes = 1ull << 20;
  double hot_fraction = 0.10;
  double hot_prob = 0.90;
  double read_ratio = 1.0;
  std::uint64_t total_requests = 4000;   // measured requests per requester
  std::uint64_t warmup_requests = 0;     // issued first, excluded from metrics
  bool partition = false;                // split the footprint evenly between requesters
  std::string trace_path;                // trace kind only

  bool operator==(const PatternSpec&) const = default;

  void validate() const {
    auto ratio = [](double v, const char* key) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("workload.") + key + " must be in [0, 1]");
    };
    ratio(hot_fraction, "hot_fraction");
    ratio(hot_prob, "hot_prob");
    ratio(read_ratio, "read_ratio");
    if (kind != PatternKind::trace && footprint_bytes < kLineBytes) {
      throw ConfigError("workload.footprint_bytes must cover at least one 64 B line");
    }
  }
};

struct Request {
  bool is_write = false;
  std::uint64_t address = 0;
};

// Per-requester request source over the line range [base, base + bytes).
class RequestGenerator {
 public:
  RequestGenerator(const PatternSpec& spec, std::uint64_t base, std::uint64_t bytes, Rng rng,
                   std::vector<TraceRecord> trace = {})
      : spec_(spec), base_(base), lines_(std::max<std::uint64_t>(1, bytes / kLineBytes)), rng_(rng),
        trace_(std::move(trace)) {
    hot_lines_ = std::clamp<std::uint64_t>(
        static_cast<std::uint64_t>(static_cast<double>(lines_) * spec_.hot_fraction), 1, lines_);
    if (spec_.kind == PatternKind::trace && trace_.empty()) {
      throw ConfigError("trace workload has no records");
    }
  }

  Request next() {
    Request r;
    switch (spec_.kind) {
      case PatternKind::stream:
        r.address = base_ + (cursor_++ % lines_) * kLineBytes;
        break;
      case PatternKind::uniform:
        r.address = base_ + rng_.below(lines_) * kLineBytes;
        break;
      case PatternKind::skewed: {
        const bool hot = hot_lines_ == lines_ || rng_.bernoulli(spec_.hot_prob);
        const auto line = hot ? rng_.below(hot_lines_) : hot_lines_ + rng_.below(lines_ - hot_lines_);
        r.address = base_ + line * kLineBytes;
        break;
      }
      case PatternKind::trace: {
        const auto& rec = trace_[cursor_++ % trace_.size()];
        r.address = rec.address;
        r.is_write = rec.op == TraceOp::W;
        return r;
      }
    }
    r.is_write = !(spec_.read_ratio >= 1.0 || rng_.uniform01() < spec_.read_ratio);
    return r;
  }

  std::uint64_t hot_lines() const noexcept { return hot_lines_; }
  std::uint64_t lines() const noexcept { return lines_; }
  std::uint64_t base() const noexcept { return base_; }

 private:
  PatternSpec spec_;
  std::uint64_t base_;
  std::uint64_t lines_;
  std::uint64_t hot_lines_ = 1;
  Rng rng_;
  std::vector<TraceRecord> trace_;
  std::uint64_t cursor_ = 0;
};

}  // namespace cxlsim
