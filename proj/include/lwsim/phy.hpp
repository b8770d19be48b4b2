// LoRa physical layer: time-on-air, log-distance path loss with optional
// shadowing, receiver sensitivity, minimum usable spreading factor, and the
// same-channel capture/collision rule.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lwsim/engine.hpp"

namespace lwsim {

struct RadioParams {
  int sf = 7;                  // spreading factor, 7..12
  int bw_khz = 125;            // 125, 250 or 500
  int cr = 1;                  // coding rate 4/(4+cr), 1..4
  double freq_mhz = 868.1;
  double tx_power_dbm = 14.0;
};

enum class Ldro : uint8_t { Off, On, Auto };

// Time on air for one frame. Symbol-count formula from the SX1272/76
// datasheets; CRC on and explicit header by default (LoRaWAN uplink framing).
// Auto LDRO engages for SF11/SF12 at 125 kHz.
SimTime airtime(const RadioParams& params, int payload_len, int preamble_syms = 8,
                bool explicit_header = true, Ldro ldro = Ldro::Auto, bool crc_on = true);

// Receiver sensitivity defaults, dBm, transcribed from the SX1272 datasheet;
// rows SF7..SF12, columns 125/250/500 kHz. Strictly more sensitive as SF grows,
// ~3 dB less sensitive per bandwidth doubling.
using SensitivityTable = std::array<std::array<double, 3>, 6>;
SensitivityTable default_sensitivity_table();

struct LinkModel {
  double ref_distance_m = 40.0;
  double ref_loss_db = 127.47;
  double path_loss_exponent = 2.08;
  double shadow_sigma_db = 0.0;  // log-normal shadowing; draw passed per call
  SensitivityTable sensitivity = default_sensitivity_table();

  double sensitivity_dbm(int sf, int bw_khz) const;
};

// Deterministic log-distance loss plus an additive shadow draw (pass 0 for the
// zero-shadow loss). distance must be > 0.
double path_loss_db(const LinkModel& model, double distance_m, double shadow_db);

// Smallest SF whose sensitivity the zero-shadow link budget clears, or nullopt
// when even SF12 cannot reach.
std::optional<int> min_spreading_factor(const LinkModel& model, double distance_m,
                                        double tx_power_dbm, int bw_khz);

// Zero-shadow range at which tx_power still clears sensitivity(sf, bw).
double max_range_m(const LinkModel& model, double tx_power_dbm, int bw_khz, int sf = 12);

enum class Direction : uint8_t { Uplink, Downlink };

enum class FrameKind : uint8_t { Data, Ack, DataWithAck, MacCommand };

const char* to_string(Direction d);
const char* to_string(FrameKind k);

struct Transmission {
  int32_t source = 0;
  int32_t destination = kGateway;
  Direction direction = Direction::Uplink;
  FrameKind kind = FrameKind::Data;
  RadioParams radio;
  SimTime start;
  SimTime airtime;
  int payload_len = 0;
  int attempt = 1;
  uint64_t frame_id = 0;

  SimTime end() const { return start + airtime; }
};

struct Reception {
  Transmission tx;
  double rssi_dbm = 0.0;
  bool decodable = false;
};

inline bool overlaps(const Transmission& a, const Transmission& b) {
  return a.start < b.end() && b.start < a.end();
}

// Collision resolution at one receiver. Below-sensitivity receptions are
// dropped first and do not interfere. Within each (frequency, SF, direction)
// group, a reception survives a time overlap only when it is at least
// capture_db stronger than every overlapping group member; otherwise the
// overlapping frames destroy each other. Different SFs are orthogonal and
// opposite directions never interfere (I/Q inversion). Returns the decodable
// subset with the flag set.
std::vector<Reception> resolve_receptions(std::vector<Reception> receptions,
                                          const LinkModel& model, double capture_db);

}  // namespace lwsim
