#include "lwsim/engine.hpp"

#include <cmath>

namespace lwsim {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::UplinkDue:   return "UplinkDue";
    case EventKind::TxEnd:       return "TxEnd";
    case EventKind::Rx1Open:     return "Rx1Open";
    case EventKind::Rx2Open:     return "Rx2Open";
    case EventKind::AckTimeout:  return "AckTimeout";
    case EventKind::DownlinkDue: return "DownlinkDue";
    case EventKind::SimEnd:      return "SimEnd";
  }
  return "?";
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

uint64_t splitmix64(uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(uint64_t seed, std::string_view purpose, uint64_t index)
    : seed_(seed), stream_id_(purpose) {
  if (index != 0) {
    stream_id_ += '#';
    stream_id_ += std::to_string(index);
  }
  // Run the mixer a few times so nearby (seed, index) pairs decorrelate.
  uint64_t s = seed ^ fnv1a64(stream_id_);
  splitmix64(s);
  splitmix64(s);
  state_ = s;
}

uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform01() {
  // 53 high bits -> double in [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform01(); }

uint32_t RngStream::uniform_int(uint32_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::uniform_int: n must be > 0");
  return static_cast<uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RngStream::exponential(double mean) {
  if (mean <= 0.0) throw std::invalid_argument("RngStream::exponential: mean must be > 0");
  return -mean * std::log1p(-uniform01());
}

double RngStream::normal(double mu, double sigma) {
  // Box-Muller, first branch only; exactly two draws per call keeps streams replayable.
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  return mu + sigma * r * std::cos(kTwoPi * u2);
}

}  // namespace lwsim
