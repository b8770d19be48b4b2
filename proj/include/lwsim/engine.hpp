// Discrete-event core: millisecond clock, time-ordered event queue with
// FIFO tie-break, and seeded per-purpose random streams.
#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace lwsim {

// Simulation time in fractional milliseconds. Airtimes are sub-second while
// runs span weeks; one unit for both avoids conversion bugs.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime ms(double v) { return SimTime{v}; }
  static constexpr SimTime seconds(double v) { return SimTime{v * 1000.0}; }
  static constexpr SimTime minutes(double v) { return SimTime{v * 60'000.0}; }
  static constexpr SimTime days(double v) { return SimTime{v * 86'400'000.0}; }

  constexpr double to_ms() const { return ms_; }
  constexpr double to_seconds() const { return ms_ / 1000.0; }
  constexpr double to_days() const { return ms_ / 86'400'000.0; }

  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ms_ + b.ms_}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.ms_ - b.ms_}; }
  friend constexpr SimTime operator*(SimTime a, double k) { return SimTime{a.ms_ * k}; }
  friend constexpr SimTime operator*(double k, SimTime a) { return SimTime{a.ms_ * k}; }
  constexpr SimTime& operator+=(SimTime o) { ms_ += o.ms_; return *this; }
  constexpr SimTime& operator-=(SimTime o) { ms_ -= o.ms_; return *this; }

  friend constexpr bool operator==(SimTime a, SimTime b) { return a.ms_ == b.ms_; }
  friend constexpr bool operator!=(SimTime a, SimTime b) { return a.ms_ != b.ms_; }
  friend constexpr bool operator<(SimTime a, SimTime b) { return a.ms_ < b.ms_; }
  friend constexpr bool operator<=(SimTime a, SimTime b) { return a.ms_ <= b.ms_; }
  friend constexpr bool operator>(SimTime a, SimTime b) { return a.ms_ > b.ms_; }
  friend constexpr bool operator>=(SimTime a, SimTime b) { return a.ms_ >= b.ms_; }

 private:
  explicit constexpr SimTime(double v) : ms_(v) {}
  double ms_ = 0.0;
};

enum class EventKind : uint8_t {
  UplinkDue,    // traffic arrival (payload 0) or transmit attempt trigger (payload 1)
  TxEnd,        // subject >= 0: device uplink end; subject == kGateway: downlink end
  Rx1Open,
  Rx2Open,
  AckTimeout,
  DownlinkDue,  // downlink-data generator tick
  SimEnd,
};

const char* to_string(EventKind k);

inline constexpr int32_t kGateway = -1;

struct Event {
  SimTime fire_at;
  EventKind kind = EventKind::SimEnd;
  int32_t subject = kGateway;  // device index, or kGateway
  int64_t payload = 0;         // kind-specific index / flag
  uint64_t id = 0;             // insertion order; also the cancellation handle
};

struct EventHandle {
  uint64_t id = 0;
  explicit operator bool() const { return id != 0; }
};

// Time-ordered queue. Equal fire times dispatch in insertion order; events may
// be scheduled at the current clock (dispatched after the current one) but
// never in the past. cancel() is lazy: cancelled events are skipped on pop and
// do not count as dispatched.
class EventQueue {
 public:
  SimTime now() const { return clock_; }
  size_t pending() const { return pending_.size(); }

  EventHandle schedule(SimTime at, EventKind kind, int32_t subject, int64_t payload = 0) {
    if (at < clock_)
      throw std::invalid_argument("EventQueue::schedule: event in the past");
    Event ev{at, kind, subject, payload, ++next_id_};
    heap_.push(ev);
    pending_.insert(ev.id);
    return EventHandle{ev.id};
  }

  // True if the event was still pending; dispatched or already-cancelled
  // events return false.
  bool cancel(EventHandle h) {
    if (pending_.erase(h.id) == 0) return false;
    cancelled_.insert(h.id);
    return true;
  }

  // Dispatches every pending event with fire_at <= end, in time order, then
  // advances the clock to end. Returns the number of events dispatched.
  template <typename Sink>
  size_t run_until(SimTime end, Sink&& sink) {
    size_t dispatched = 0;
    while (!heap_.empty() && heap_.top().fire_at <= end) {
      Event ev = heap_.top();
      heap_.pop();
      if (cancelled_.erase(ev.id)) continue;
      pending_.erase(ev.id);
      clock_ = ev.fire_at;
      ++dispatched;
      sink(ev);
    }
    if (end > clock_) clock_ = end;
    return dispatched;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.id > b.id;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::unordered_set<uint64_t> pending_;
  std::unordered_set<uint64_t> cancelled_;
  SimTime clock_{};
  uint64_t next_id_ = 0;
};

// Deterministic random stream, one per purpose (placement, shadowing, traffic,
// backoff, downlink) so that changing one consumer never perturbs another.
// splitmix64 with the purpose label and index folded into the seed; draws are
// hand-rolled (inverse CDF / Box-Muller) so sequences are identical across
// standard libraries.
class RngStream {
 public:
  RngStream() : RngStream(1, "default") {}
  RngStream(uint64_t seed, std::string_view purpose, uint64_t index = 0);

  uint64_t next_u64();
  double uniform01();                      // [0, 1)
  double uniform(double a, double b);      // [a, b)
  uint32_t uniform_int(uint32_t n);        // [0, n)
  double exponential(double mean);
  double normal(double mu, double sigma);

  uint64_t seed() const { return seed_; }
  const std::string& stream_id() const { return stream_id_; }

 private:
  uint64_t state_ = 0;
  uint64_t seed_ = 0;
  std::string stream_id_;
};

}  // namespace lwsim
