#include "lwsim/mac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lwsim {

const char* to_string(MacCommand c) {
  switch (c) {
    case MacCommand::None:             return "none";
    case MacCommand::LinkCheckReq:     return "LinkCheckReq";
    case MacCommand::LinkCheckAns:     return "LinkCheckAns";
    case MacCommand::LinkAdrReq:       return "LinkAdrReq";
    case MacCommand::LinkAdrAns:       return "LinkAdrAns";
    case MacCommand::DutyCycleReq:     return "DutyCycleReq";
    case MacCommand::DutyCycleAns:     return "DutyCycleAns";
    case MacCommand::RxParamSetupReq:  return "RxParamSetupReq";
    case MacCommand::RxParamSetupAns:  return "RxParamSetupAns";
    case MacCommand::DevStatusReq:     return "DevStatusReq";
    case MacCommand::DevStatusAns:     return "DevStatusAns";
    case MacCommand::NewChannelReq:    return "NewChannelReq";
    case MacCommand::NewChannelAns:    return "NewChannelAns";
    case MacCommand::RxTimingSetupReq: return "RxTimingSetupReq";
    case MacCommand::RxTimingSetupAns: return "RxTimingSetupAns";
  }
  return "?";
}

std::optional<SubBand> sub_band_for(double freq_mhz) {
  if (freq_mhz >= 868.0 && freq_mhz <= 868.6) return SubBand::G1;
  if (freq_mhz >= 869.4 && freq_mhz <= 869.65) return SubBand::G3;
  return std::nullopt;
}

DutyCycleGate duty_cycle_advance(DutyCycleGate gate, SimTime tx_end, SimTime airtime) {
  if (gate.limit <= 0.0 || gate.limit > 1.0)
    throw std::invalid_argument("duty cycle limit must be in (0, 1]");
  SimTime off = airtime * (1.0 / gate.limit - 1.0);
  SimTime until = tx_end + off;
  if (until > gate.blocked_until) gate.blocked_until = until;
  return gate;
}

RxWindows open_rx_windows(const RadioParams& uplink, SimTime tx_end, const MacParams& mac) {
  RxWindows w;
  w.rx1.opens_at = tx_end + mac.rx1_delay;
  w.rx1.radio = uplink;
  w.rx2.opens_at = tx_end + mac.rx2_delay;
  w.rx2.radio = mac.rx2_radio;
  if (mac.rx2_mode == Rx2Mode::SameAsRx1) {
    w.rx2.radio.sf = uplink.sf;
    w.rx2.radio.bw_khz = uplink.bw_khz;
    w.rx2.radio.cr = uplink.cr;
  }
  return w;
}

int sf_for_attempt(int base_sf, int attempt, bool dr_decay) {
  if (attempt < 1) throw std::invalid_argument("attempt index starts at 1");
  if (!dr_decay) return base_sf;
  return std::min(12, base_sf + (attempt - 1) / 2);
}

double tx_energy_mj(const RadioParams& params, SimTime airtime, const EnergyModel& energy) {
  int key = static_cast<int>(std::lround(params.tx_power_dbm));
  auto it = energy.tx_current_ma.find(key);
  if (it == energy.tx_current_ma.end())
    throw std::invalid_argument("no TX current entry for " + std::to_string(key) + " dBm");
  // V * mA * ms / 1000 = mJ
  return energy.supply_voltage * it->second * airtime.to_ms() / 1000.0;
}

}  // namespace lwsim
