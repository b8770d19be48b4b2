#include "lwsim/phy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lwsim {

namespace {

int bw_column(int bw_khz) {
  switch (bw_khz) {
    case 125: return 0;
    case 250: return 1;
    case 500: return 2;
    default:  return -1;
  }
}

void check_radio(const RadioParams& p) {
  if (p.sf < 7 || p.sf > 12)
    throw std::invalid_argument("radio: sf must be 7..12, got " + std::to_string(p.sf));
  if (bw_column(p.bw_khz) < 0)
    throw std::invalid_argument("radio: bw must be 125/250/500 kHz, got " +
                                std::to_string(p.bw_khz));
  if (p.cr < 1 || p.cr > 4)
    throw std::invalid_argument("radio: cr must be 1..4 (4/5..4/8), got " +
                                std::to_string(p.cr));
}

}  // namespace

const char* to_string(Direction d) {
  return d == Direction::Uplink ? "up" : "down";
}

const char* to_string(FrameKind k) {
  switch (k) {
    case FrameKind::Data:        return "data";
    case FrameKind::Ack:         return "ack";
    case FrameKind::DataWithAck: return "data+ack";
    case FrameKind::MacCommand:  return "mac-cmd";
  }
  return "?";
}

SimTime airtime(const RadioParams& params, int payload_len, int preamble_syms,
                bool explicit_header, Ldro ldro, bool crc_on) {
  check_radio(params);
  if (payload_len < 0 || payload_len > 255)
    throw std::invalid_argument("airtime: payload must be 0..255 bytes");
  if (preamble_syms < 6)
    throw std::invalid_argument("airtime: preamble must be >= 6 symbols");

  bool de = ldro == Ldro::On ||
            (ldro == Ldro::Auto && params.sf >= 11 && params.bw_khz == 125);
  int ih = explicit_header ? 0 : 1;
  int crc = crc_on ? 1 : 0;

  double t_sym_ms = std::ldexp(1.0, params.sf) / params.bw_khz;

  int num = 8 * payload_len - 4 * params.sf + 28 + 16 * crc - 20 * ih;
  int den = 4 * (params.sf - 2 * (de ? 1 : 0));
  int payload_syms = 8;
  if (num > 0) payload_syms += ((num + den - 1) / den) * (params.cr + 4);

  double t_preamble_ms = (preamble_syms + 4.25) * t_sym_ms;
  double t_payload_ms = payload_syms * t_sym_ms;
  return SimTime::ms(t_preamble_ms + t_payload_ms);
}

SensitivityTable default_sensitivity_table() {
  //            125     250     500  kHz
  return {{{{-124.0, -121.0, -118.0}},   // SF7
           {{-127.0, -124.0, -121.0}},   // SF8
           {{-130.0, -127.0, -124.0}},   // SF9
           {{-133.0, -130.0, -127.0}},   // SF10
           {{-135.0, -132.0, -129.0}},   // SF11
           {{-137.0, -134.0, -131.0}}}}; // SF12
}

double LinkModel::sensitivity_dbm(int sf, int bw_khz) const {
  int col = bw_column(bw_khz);
  if (sf < 7 || sf > 12 || col < 0)
    throw std::invalid_argument("sensitivity: unsupported (sf, bw) pair");
  return sensitivity[sf - 7][col];
}

double path_loss_db(const LinkModel& model, double distance_m, double shadow_db) {
  if (distance_m <= 0.0)
    throw std::invalid_argument("path_loss: distance must be > 0");
  return model.ref_loss_db +
         10.0 * model.path_loss_exponent * std::log10(distance_m / model.ref_distance_m) +
         shadow_db;
}

std::optional<int> min_spreading_factor(const LinkModel& model, double distance_m,
                                        double tx_power_dbm, int bw_khz) {
  double rssi = tx_power_dbm - path_loss_db(model, distance_m, 0.0);
  for (int sf = 7; sf <= 12; ++sf)
    if (rssi >= model.sensitivity_dbm(sf, bw_khz)) return sf;
  return std::nullopt;
}

double max_range_m(const LinkModel& model, double tx_power_dbm, int bw_khz, int sf) {
  double budget = tx_power_dbm - model.sensitivity_dbm(sf, bw_khz);
  double exp10 = (budget - model.ref_loss_db) / (10.0 * model.path_loss_exponent);
  return model.ref_distance_m * std::pow(10.0, exp10);
}

std::vector<Reception> resolve_receptions(std::vector<Reception> receptions,
                                          const LinkModel& model, double capture_db) {
  auto same_group = [](const Transmission& a, const Transmission& b) {
    return a.radio.sf == b.radio.sf && a.direction == b.direction &&
           std::abs(a.radio.freq_mhz - b.radio.freq_mhz) < 1e-6;
  };

  std::vector<bool> above(receptions.size());
  for (size_t i = 0; i < receptions.size(); ++i) {
    const auto& r = receptions[i];
    above[i] = r.rssi_dbm >= model.sensitivity_dbm(r.tx.radio.sf, r.tx.radio.bw_khz);
  }

  std::vector<Reception> decodable;
  for (size_t i = 0; i < receptions.size(); ++i) {
    if (!above[i]) continue;
    bool survives = true;
    for (size_t j = 0; j < receptions.size() && survives; ++j) {
      if (j == i || !above[j]) continue;
      if (!same_group(receptions[i].tx, receptions[j].tx)) continue;
      if (!overlaps(receptions[i].tx, receptions[j].tx)) continue;
      if (receptions[i].rssi_dbm < receptions[j].rssi_dbm + capture_db) survives = false;
    }
    if (survives) {
      Reception out = receptions[i];
      out.decodable = true;
      decodable.push_back(out);
    }
  }
  return decodable;
}

}  // namespace lwsim
