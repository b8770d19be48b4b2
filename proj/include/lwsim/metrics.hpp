// Run accounting: the append-only transmission log, the counter ledger kept in
// lockstep with it, derived metrics (goodput, downlink delivery, ACK CDF),
// replay audits, and the results CSV schema.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lwsim/scenario.hpp"

namespace lwsim {

enum class TxOutcome : uint8_t {
  Pending,    // still on air the moment the record was written
  Decoded,    // uplink decoded at the gateway
  Collided,   // uplink destroyed by same-channel traffic
  LinkLost,   // below sensitivity at the receiver
  Delivered,  // downlink decoded at the device
};

const char* to_string(TxOutcome o);

// One transmission that actually went on air. Blocked downlinks never appear
// here; they only show up in the ledger's failure counters.
struct TransmissionRecord {
  double start_ms = 0.0;
  double airtime_ms = 0.0;
  float freq_mhz = 0.0f;
  float rssi_dbm = 0.0f;      // at the intended receiver
  float tx_power_dbm = 0.0f;
  uint32_t frame_id = 0;
  int32_t actor = kGateway;   // transmitter: device index or kGateway
  int32_t target = kGateway;  // receiver
  uint8_t sf = 0;
  uint8_t attempt = 0;        // uplink: attempt index; downlink: acked uplink attempt, 0 if none
  uint8_t confirmed = 0;      // uplink records only
  Direction direction = Direction::Uplink;
  FrameKind kind = FrameKind::Data;
  TxOutcome outcome = TxOutcome::Pending;

  double end_ms() const { return start_ms + airtime_ms; }
};

// Downlink-data frame ids carry this bit so uplink and downlink id spaces
// never collide in the log.
inline constexpr uint32_t kDownlinkIdBit = 0x80000000u;

struct MetricsLedger {
  uint64_t sent_total = 0;        // uplink transmissions incl. retransmissions
  uint64_t sent_fresh = 0;        // first attempts
  uint64_t received_unique = 0;   // fresh uplinks decoded at least once
  uint64_t confirmed_fresh = 0;   // fresh uplinks that requested an ACK

  uint64_t downlink_generated = 0;  // downlink-data frames created
  uint64_t downlink_attempted = 0;  // logical downlink messages resolved (ACK needs + data frames)
  uint64_t downlink_delivered = 0;
  uint64_t dl_fail_duty_cycle = 0;
  uint64_t dl_fail_busy = 0;
  uint64_t dl_fail_collision = 0;   // structurally zero with one gateway; kept for schema honesty
  uint64_t dl_fail_link = 0;

  std::vector<uint64_t> acked_by_attempt;  // [k] = frames acked on attempt k+1
  uint64_t gave_up = 0;
  uint64_t received_unconfirmed = 0;
  uint64_t lost_unconfirmed = 0;
  uint64_t censored = 0;  // fresh uplinks still unresolved at the horizon

  uint64_t rx_windows_opened = 0;
  std::vector<double> energy_mj_per_node;

  uint64_t acked_total() const {
    uint64_t n = 0;
    for (uint64_t a : acked_by_attempt) n += a;
    return n;
  }
  // Confirmed frames whose retry cycle finished before the horizon.
  uint64_t confirmed_completed() const { return acked_total() + gave_up; }
};

// received_unique / sent_total. Throws std::domain_error on an empty ledger.
double goodput(const MetricsLedger& ledger);

// downlink_delivered / downlink_attempted. Throws std::domain_error when no
// downlink was ever attempted.
double downlink_delivery_ratio(const MetricsLedger& ledger);

// Entry k (0-based) = fraction of completed confirmed frames acked within
// k+1 attempts. Nondecreasing; the last entry stays below 1 when frames gave
// up. Throws std::domain_error when no confirmed frame completed.
std::vector<double> ack_cdf_by_attempt(const MetricsLedger& ledger);

struct DutyViolation {
  int32_t actor;
  double at_ms;            // start of the offending transmission
  double required_gap_ms;  // off period demanded by the previous frame
  double actual_gap_ms;
};

// Replays the transmission log against the sub-band duty-cycle rules: after a
// frame of airtime T, the same transmitter stays silent in that band for
// T*(1/limit - 1). Returns every violation found (empty = compliant).
std::vector<DutyViolation> audit_duty_cycle(const std::vector<TransmissionRecord>& log,
                                            const MacParams& mac);

struct AuditReport {
  bool ok = true;
  std::vector<std::string> problems;

  void fail(std::string msg) {
    ok = false;
    problems.push_back(std::move(msg));
  }
};

// Recomputes every log-derivable ledger quantity from the transmission log and
// checks the fresh-uplink outcome partition. Zero tolerance on counters;
// energy is recomputed through the identical arithmetic path.
AuditReport reconcile(const MetricsLedger& ledger, const std::vector<TransmissionRecord>& log,
                      const ScenarioConfig& cfg);

// One line per transmission: time, actor, direction, freq, sf, airtime, outcome.
void write_event_log(const std::vector<TransmissionRecord>& log, std::ostream& out);

// Flat per-run metrics row for the results CSV. NaN marks metrics that are
// undefined for the run (e.g. ACK CDF with no confirmed traffic) and becomes
// an empty CSV field.
struct RunMetrics {
  // point parameters
  int n_nodes = 0;
  double sim_days = 0;
  double confirmed_fraction = 0;
  double downlink_fraction = 0;
  int max_attempts = 0;
  bool dr_decay = false;
  double mean_send_interval_s = 0;
  int payload_len = 0;
  int replication = 0;
  uint64_t seed = 0;

  // metrics
  double sent_total = 0, sent_fresh = 0, received_unique = 0, goodput = 0;
  double downlink_generated = 0, downlink_attempted = 0, downlink_delivered = 0;
  double downlink_delivery_ratio = 0;
  double dl_fail_duty_cycle = 0, dl_fail_busy = 0, dl_fail_collision = 0, dl_fail_link = 0;
  double confirmed_completed = 0, acked_total = 0, gave_up = 0;
  double received_unconfirmed = 0, lost_unconfirmed = 0, censored = 0;
  double ack_cdf_1 = 0, ack_cdf_2 = 0, ack_cdf_3 = 0, ack_cdf_final = 0;
  double energy_mean_mj_per_node = 0;
  double dispatched_events = 0;

  static RunMetrics from(const ScenarioConfig& cfg, int replication, uint64_t run_seed,
                         const MetricsLedger& ledger, uint64_t dispatched);
};

// Metric column table shared by the CSV writer and the aggregator.
struct MetricColumn {
  const char* name;
  double RunMetrics::* field;
};
const std::vector<MetricColumn>& metric_columns();

// Per-replication rows plus one aggregate row per point; the aggregate row
// carries the mean in each metric column and the sample standard deviation in
// the matching *_std column (0 for a single replication). Deterministic bytes
// for identical inputs.
void write_results(const std::vector<std::vector<RunMetrics>>& points, std::ostream& out);

}  // namespace lwsim
