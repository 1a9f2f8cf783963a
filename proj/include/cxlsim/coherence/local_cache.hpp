#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>

namespace cxlsim {

// Fully associative LRU cache of line addresses with a dirty bit.
class LocalCache {
 public:
  struct Evicted {
    std::uint64_t line;
    bool dirty;
  };

  explicit LocalCache(std::size_t capacity_lines) : capacity_(capacity_lines) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return map_.size(); }
  bool contains(std::uint64_t line) const { return map_.count(line) != 0; }

  // Hit check; a hit becomes most recently used and, for writes, dirty.
  bool access(std::uint64_t line, bool is_write) {
    auto it = map_.find(line);
    if (it == map_.end()) return false;
    order_.splice(order_.begin(), order_, it->second);
    if (is_write) it->second->dirty = true;
    return true;
  }

  // Inserts a filled line; returns the LRU victim when the cache was full.
  std::optional<Evicted> install(std::uint64_t line, bool dirty) {
    if (capacity_ == 0) return std::nullopt;
    if (auto it = map_.find(line); it != map_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      it->second->dirty = it->second->dirty || dirty;
      return std::nullopt;
    }
    std::optional<Evicted> out;
    if (map_.size() == capacity_) {
      const auto& victim = order_.back();
      out = Evicted{victim.line, victim.dirty};
      map_.erase(victim.line);
      order_.pop_back();
    }
    order_.push_front({line, dirty});
    map_[line] = order_.begin();
    return out;
  }

  // Drops the line; returns its dirty bit if it was present.
  std::optional<bool> invalidate(std::uint64_t line) {
    auto it = map_.find(line);
    if (it == map_.end()) return std::nullopt;
    const bool dirty = it->second->dirty;
    order_.erase(it->second);
    map_.erase(it);
    return dirty;
  }

  template <typename Fn>
  void for_each_line(Fn&& fn) const {
    for (const auto& e : order_) fn(e.line);
  }

 private:
  struct Line {
    std::uint64_t line;
    bool dirty;
  };

  std::size_t capacity_;
  std::list<Line> order_;  // front = most recently used
  std::unordered_map<std::uint64_t, std::list<Line>::iterator> map_;
};

}  // namespace cxlsim
