#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "cxlsim/sim/error.hpp"
#include "cxlsim/sim/time.hpp"

namespace cxlsim {

// Anything that can be the target of a scheduled event. `kind` and `arg` are
// opaque to the engine; devices use them to select an action and a payload
// (usually a packet or transaction index).
class EventHandler {
 public:
  virtual ~EventHandler() = default;
  virtual void on_event(std::uint32_t kind, std::uint64_t arg) = 0;
};

struct Event {
  SimTime fire_at = 0;
  std::uint64_t seq = 0;
  EventHandler* target = nullptr;
  std::uint32_t kind = 0;
  std::uint64_t arg = 0;
};

// Single-threaded discrete-event loop. Events fire in (fire_at, seq) order,
// so simultaneous events run in the order they were scheduled.
class Engine {
 public:
  Engine() : closures_(*this) {}
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  SimTime now() const noexcept { return now_; }
  std::uint64_t fired() const noexcept { return fired_; }
  std::size_t pending() const noexcept { return queue_.size(); }

  void schedule(SimTime at, EventHandler& target, std::uint32_t kind = 0,
                std::uint64_t arg = 0) {
    if (at < now_) {
      throw SimulationError("event scheduled in the past for t=" +
                                std::to_string(at),
                            now_);
    }
    queue_.push(Event{at, next_seq_++, &target, kind, arg});
  }

  void schedule_after(SimTime delay, EventHandler& target,
                      std::uint32_t kind = 0, std::uint64_t arg = 0) {
    schedule(now_ + delay, target, kind, arg);
  }

  // Convenience for tests and infrequent control actions; device hot paths
  // use the handler form, which does not allocate.
  void schedule(SimTime at, std::function<void()> fn) {
    std::uint64_t slot;
    if (!free_slots_.empty()) {
      slot = free_slots_.back();
      free_slots_.pop_back();
      closures_.fns[slot] = std::move(fn);
    } else {
      slot = closures_.fns.size();
      closures_.fns.push_back(std::move(fn));
    }
    schedule(at, closures_, 0, slot);
  }

  // Runs every event with fire_at <= t_end, then advances the clock to t_end.
  SimTime run_until(SimTime t_end) {
    while (!queue_.empty() && queue_.top().fire_at <= t_end) step();
    if (t_end != kNever && t_end > now_) now_ = t_end;
    return now_;
  }

  // Runs until the queue drains; the clock stays at the last fired event.
  SimTime run() {
    while (!queue_.empty()) step();
    return now_;
  }

  // Observer for every fired event, used by determinism tests.
  void set_trace(std::function<void(const Event&)> trace) {
    trace_ = std::move(trace);
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  struct Closures final : EventHandler {
    explicit Closures(Engine& e) : engine(e) {}
    void on_event(std::uint32_t, std::uint64_t slot) override {
      auto fn = std::move(fns[slot]);
      fns[slot] = nullptr;
      engine.free_slots_.push_back(slot);
      fn();
    }
    Engine& engine;
    std::vector<std::function<void()>> fns;
  };

  void step() {
    const Event ev = queue_.top();
    queue_.pop();
    now_ = ev.fire_at;
    ++fired_;
    if (trace_) trace_(ev);
    ev.target->on_event(ev.kind, ev.arg);
  }

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t fired_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  Closures closures_;
  std::vector<std::uint64_t> free_slots_;
  std::function<void(const Event&)> trace_;
};

}  // namespace cxlsim
