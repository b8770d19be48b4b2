// Class-A MAC building blocks: frame taxonomy, per-sub-band duty-cycle gates,
// receive-window timing, transmit energy, and the data-rate decay schedule.
// The event-driven protocol logic that ties these together lives in
// simulation.hpp.
#pragma once

#include <map>
#include <string>

#include "lwsim/phy.hpp"

namespace lwsim {

// MAC command names (LoRaWAN 1.0 set). Carried for traffic taxonomy only; the
// simulator executes Data/Ack/DataWithAck end to end and treats command frames
// as payload bytes like any other.
enum class MacCommand : uint8_t {
  None,
  LinkCheckReq, LinkCheckAns,
  LinkAdrReq, LinkAdrAns,
  DutyCycleReq, DutyCycleAns,
  RxParamSetupReq, RxParamSetupAns,
  DevStatusReq, DevStatusAns,
  NewChannelReq, NewChannelAns,
  RxTimingSetupReq, RxTimingSetupAns,
};

const char* to_string(MacCommand c);

struct Frame {
  Direction direction = Direction::Uplink;
  FrameKind kind = FrameKind::Data;
  MacCommand command = MacCommand::None;
  bool confirmed = false;
  int payload_len = 0;     // airtime formula input, bytes
  int32_t target = kGateway;
  int attempt = 1;
  uint64_t frame_id = 0;
};

// EU868 sub-bands the simulator uses: the 1% band holding the three default
// uplink channels, and the 10% band holding the default RX2 frequency.
enum class SubBand : uint8_t { G1, G3 };

std::optional<SubBand> sub_band_for(double freq_mhz);

// One transmitter's budget in one sub-band. A transmission may not start
// before blocked_until; finishing a frame of length T at t blocks the band
// until t + T*(1/limit - 1), i.e. 99 T for the 1% band.
struct DutyCycleGate {
  double limit = 0.01;
  SimTime blocked_until{};

  bool open_at(SimTime t) const { return t >= blocked_until; }
};

DutyCycleGate duty_cycle_advance(DutyCycleGate gate, SimTime tx_end, SimTime airtime);

enum class Rx2Mode : uint8_t { Default, SameAsRx1 };

struct MacParams {
  SimTime rx1_delay = SimTime::seconds(1);
  SimTime rx2_delay = SimTime::seconds(2);
  RadioParams rx2_radio{12, 125, 1, 869.545, 14.0};
  Rx2Mode rx2_mode = Rx2Mode::Default;
  int max_attempts = 8;
  bool dr_decay = false;       // SF + 1 every two failed attempts when on
  int ack_payload_len = 0;     // application bytes in a bare ACK
  int mac_overhead_bytes = 13; // header+MIC bytes a bare ACK still occupies
  SimTime backoff_min = SimTime::seconds(1);
  SimTime backoff_max = SimTime::seconds(3);
  int dl_retry_cycles = 1;     // window pairs a queued downlink may wait for
  double g1_duty_limit = 0.01;
  double g3_duty_limit = 0.10;

  int ack_airtime_payload() const { return ack_payload_len + mac_overhead_bytes; }
  double duty_limit(SubBand b) const { return b == SubBand::G1 ? g1_duty_limit : g3_duty_limit; }
};

struct RxWindow {
  SimTime opens_at;
  RadioParams radio;
};

struct RxWindows {
  RxWindow rx1;
  RxWindow rx2;
};

// Window timing and parameters for an uplink that ended at tx_end: RX1 mirrors
// the uplink frequency and data rate one second later; RX2 is fixed-parameter
// two seconds later (or reuses the uplink data rate in SameAsRx1 mode).
RxWindows open_rx_windows(const RadioParams& uplink, SimTime tx_end, const MacParams& mac);

// SF used for the k-th transmission attempt of a frame first sent at base_sf.
// With decay on, the data rate drops (SF rises) one step every two failed
// attempts, saturating at SF12. Each new frame starts back at base_sf.
int sf_for_attempt(int base_sf, int attempt, bool dr_decay);

struct EnergyModel {
  double supply_voltage = 3.3;
  std::map<int, double> tx_current_ma = {
      {2, 24.0}, {5, 27.0}, {8, 31.0}, {11, 38.0}, {14, 44.0}, {17, 90.0}, {20, 125.0}};
};

// Transmit energy in millijoules for one frame. The current table is keyed by
// integer dBm; a missing entry is a configuration error.
double tx_energy_mj(const RadioParams& params, SimTime airtime, const EnergyModel& energy);

}  // namespace lwsim
