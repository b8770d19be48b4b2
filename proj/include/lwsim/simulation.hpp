// One simulated network: devices with stop-and-wait confirmed traffic, a
// full-duplex single-radio gateway answering in two receive windows, sub-band
// duty-cycle gates on both sides, and capture-based uplink contention.
#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "lwsim/engine.hpp"
#include "lwsim/mac.hpp"
#include "lwsim/metrics.hpp"
#include "lwsim/phy.hpp"
#include "lwsim/scenario.hpp"

namespace lwsim {

struct SimResult {
  MetricsLedger ledger;
  std::vector<TransmissionRecord> log;  // empty unless cfg.record_event_log
  Topology topology;
  uint64_t dispatched = 0;
  uint64_t run_seed = 0;
};

class Simulation {
 public:
  // Validates the config and lays out the topology. All randomness derives
  // from run_seed through purpose-labeled streams, so equal (config, seed)
  // pairs replay identically.
  Simulation(ScenarioConfig cfg, uint64_t run_seed);

  SimResult run();

 private:
  struct PendingFrame {
    bool confirmed = false;
    int attempt = 1;    // attempt number of the next (or current) transmission
    bool delivered = false;  // decoded at the gateway at least once
    uint32_t id = 0;
    int payload_len = 0;
  };

  enum class Phase : uint8_t { Idle, WaitGate, Tx, WaitAck };

  struct Device {
    NodePlacement place;
    Phase phase = Phase::Idle;
    std::optional<PendingFrame> frame;
    std::deque<uint8_t> backlog;  // confirmed flags of queued fresh frames
    DutyCycleGate gate;
    EventHandle ack_timeout{};
    SimTime ack_deadline{};
    RngStream traffic_rng;
    RngStream backoff_rng;
    double energy_mj = 0.0;
    // In-flight uplink context, valid while phase == Tx.
    Transmission current_tx{};
    size_t log_idx = 0;
    double rssi_dbm = 0.0;
    bool above_sensitivity = false;
    double strongest_rival_dbm = 0.0;

    Device(RngStream traffic, RngStream backoff)
        : traffic_rng(std::move(traffic)), backoff_rng(std::move(backoff)) {}
  };

  struct QueuedDownlink {
    uint32_t id = 0;
    int cycles_left = 0;
  };

  struct CommittedDownlink {
    Transmission tx{};
    int32_t target = 0;
    int uplink_attempt = 0;     // attempt being acked; 0 when no ACK rides along
    uint32_t uplink_frame = 0;  // frame being acked
    bool has_ack = false;
    bool has_data = false;
    bool above_sensitivity = false;
    size_t log_idx = 0;
  };

  struct Gateway {
    DutyCycleGate g1;
    DutyCycleGate g3;
    std::vector<int32_t> in_flight;            // devices currently on air
    std::vector<CommittedDownlink> committed;  // indexed by TxEnd payload
    std::vector<size_t> busy;                  // committed entries that may still be on air
    std::vector<std::deque<QueuedDownlink>> data_queue;  // per device
  };

  void on_event(const Event& ev);
  void on_arrival(int32_t d);
  void start_wait_gate(int32_t d);
  void on_trigger(int32_t d);
  void on_uplink_end(int32_t d);
  void gateway_respond(int32_t d, bool need_ack, bool have_data);
  void on_downlink_end(size_t committed_idx);
  void on_ack_timeout(int32_t d);
  void on_downlink_due();
  void complete_frame(int32_t d);
  void append_log(const Transmission& tx, bool confirmed, double rssi, size_t* idx_out);
  DutyCycleGate& gw_gate(SubBand band);

  ScenarioConfig cfg_;
  uint64_t run_seed_;
  Topology topo_;
  EventQueue queue_;
  std::vector<Device> devices_;
  Gateway gw_;
  RngStream shadow_rng_;
  RngStream downlink_rng_;
  MetricsLedger ledger_;
  std::vector<TransmissionRecord> log_;
  TrafficProcess traffic_;
  SimTime horizon_;
  uint32_t next_uplink_id_ = 0;
  uint32_t next_downlink_id_ = 0;
  bool ran_ = false;
};

// Convenience wrapper: construct, run, return.
SimResult simulate(const ScenarioConfig& cfg, uint64_t run_seed);

}  // namespace lwsim
