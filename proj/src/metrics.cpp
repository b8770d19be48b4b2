#include "lwsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "lwsim/mac.hpp"

namespace lwsim {

const char* to_string(TxOutcome o) {
  switch (o) {
    case TxOutcome::Pending: return "pending";
    case TxOutcome::Decoded: return "decoded";
    case TxOutcome::Collided: return "collided";
    case TxOutcome::LinkLost: return "link_lost";
    case TxOutcome::Delivered: return "delivered";
  }
  return "?";
}

double goodput(const MetricsLedger& ledger) {
  if (ledger.sent_total == 0) throw std::domain_error("goodput undefined: no uplink was sent");
  return static_cast<double>(ledger.received_unique) / static_cast<double>(ledger.sent_total);
}

double downlink_delivery_ratio(const MetricsLedger& ledger) {
  if (ledger.downlink_attempted == 0)
    throw std::domain_error("downlink delivery ratio undefined: no downlink was attempted");
  return static_cast<double>(ledger.downlink_delivered) /
         static_cast<double>(ledger.downlink_attempted);
}

std::vector<double> ack_cdf_by_attempt(const MetricsLedger& ledger) {
  const uint64_t completed = ledger.confirmed_completed();
  if (completed == 0)
    throw std::domain_error("ACK CDF undefined: no confirmed frame completed its retry cycle");
  std::vector<double> cdf(ledger.acked_by_attempt.size());
  uint64_t cum = 0;
  for (size_t k = 0; k < cdf.size(); ++k) {
    cum += ledger.acked_by_attempt[k];
    cdf[k] = static_cast<double>(cum) / static_cast<double>(completed);
  }
  return cdf;
}

namespace {

// Log indexes ordered by on-air start time (ties by insertion order).
std::vector<size_t> order_by_start(const std::vector<TransmissionRecord>& log) {
  std::vector<size_t> idx(log.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return log[a].start_ms < log[b].start_ms; });
  return idx;
}

}  // namespace

std::vector<DutyViolation> audit_duty_cycle(const std::vector<TransmissionRecord>& log,
                                            const MacParams& mac) {
  constexpr double kEpsMs = 1e-6;
  struct LastTx {
    double end_ms;
    double off_ms;  // silence the frame demands after its end
  };
  std::map<std::pair<int32_t, SubBand>, LastTx> last;
  std::vector<DutyViolation> violations;

  for (size_t i : order_by_start(log)) {
    const TransmissionRecord& r = log[i];
    const auto band = sub_band_for(r.freq_mhz);
    if (!band) continue;  // outside the regulated sub-bands; nothing to enforce
    const double limit = mac.duty_limit(*band);
    const auto key = std::make_pair(r.actor, *band);
    const auto it = last.find(key);
    if (it != last.end()) {
      const double required = it->second.off_ms;
      const double actual = r.start_ms - it->second.end_ms;
      if (actual < required - kEpsMs)
        violations.push_back({r.actor, r.start_ms, required, actual});
    }
    last[key] = {r.end_ms(), r.airtime_ms * (1.0 / limit - 1.0)};
  }
  return violations;
}

namespace {

bool carries_ack(FrameKind k) { return k == FrameKind::Ack || k == FrameKind::DataWithAck; }

void check_count(AuditReport& report, const char* what, uint64_t ledger_value,
                 uint64_t log_value) {
  if (ledger_value == log_value) return;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s: ledger says %llu, log replay says %llu", what,
                static_cast<unsigned long long>(ledger_value),
                static_cast<unsigned long long>(log_value));
  report.fail(buf);
}

}  // namespace

AuditReport reconcile(const MetricsLedger& ledger, const std::vector<TransmissionRecord>& log,
                      const ScenarioConfig& cfg) {
  AuditReport report;
  const double horizon_ms = SimTime::days(cfg.sim_days).to_ms();

  uint64_t up_total = 0, up_fresh = 0, up_confirmed_fresh = 0;
  uint64_t up_unconfirmed_decoded = 0, up_unconfirmed_lost = 0;
  uint64_t dl_delivered = 0, dl_link_lost = 0;
  std::vector<uint64_t> acked(ledger.acked_by_attempt.size(), 0);
  std::set<uint32_t> decoded_ids;
  std::vector<double> energy(ledger.energy_mj_per_node.size(), 0.0);

  for (size_t i = 0; i < log.size(); ++i) {
    const TransmissionRecord& r = log[i];
    const bool ended = r.end_ms() <= horizon_ms;
    if (ended && r.outcome == TxOutcome::Pending) {
      char buf[120];
      std::snprintf(buf, sizeof buf, "record %zu ended at %.3f ms but was never resolved", i,
                    r.end_ms());
      report.fail(buf);
    }
    if (!ended && r.outcome != TxOutcome::Pending) {
      char buf[120];
      std::snprintf(buf, sizeof buf, "record %zu ends past the horizon yet has outcome %s", i,
                    to_string(r.outcome));
      report.fail(buf);
    }

    if (r.direction == Direction::Uplink) {
      ++up_total;
      if (r.attempt == 1) {
        ++up_fresh;
        if (r.confirmed) ++up_confirmed_fresh;
      }
      if (r.outcome == TxOutcome::Decoded) decoded_ids.insert(r.frame_id);
      if (!r.confirmed && ended) {
        if (r.outcome == TxOutcome::Decoded)
          ++up_unconfirmed_decoded;
        else
          ++up_unconfirmed_lost;
      }
      if (r.actor >= 0 && static_cast<size_t>(r.actor) < energy.size()) {
        RadioParams radio;
        radio.sf = r.sf;
        radio.bw_khz = cfg.bw_khz;
        radio.cr = cfg.cr;
        radio.freq_mhz = r.freq_mhz;
        radio.tx_power_dbm = r.tx_power_dbm;
        energy[static_cast<size_t>(r.actor)] +=
            tx_energy_mj(radio, SimTime::ms(r.airtime_ms), cfg.energy);
      } else {
        report.fail("uplink record with an out-of-range actor index");
      }
    } else {
      const uint64_t logical = r.kind == FrameKind::DataWithAck ? 2 : 1;
      if (r.outcome == TxOutcome::Delivered) {
        dl_delivered += logical;
        if (carries_ack(r.kind)) {
          if (r.attempt >= 1 && r.attempt <= acked.size())
            ++acked[r.attempt - 1];
          else
            report.fail("delivered ACK with an attempt index outside 1..max_attempts");
        }
      } else if (r.outcome == TxOutcome::LinkLost) {
        dl_link_lost += logical;
      } else if (ended) {
        report.fail("downlink record resolved to an uplink-only outcome");
      }
    }
  }

  check_count(report, "sent_total", ledger.sent_total, up_total);
  check_count(report, "sent_fresh", ledger.sent_fresh, up_fresh);
  check_count(report, "confirmed_fresh", ledger.confirmed_fresh, up_confirmed_fresh);
  check_count(report, "received_unique", ledger.received_unique, decoded_ids.size());
  check_count(report, "received_unconfirmed", ledger.received_unconfirmed,
              up_unconfirmed_decoded);
  check_count(report, "lost_unconfirmed", ledger.lost_unconfirmed, up_unconfirmed_lost);
  check_count(report, "downlink_delivered", ledger.downlink_delivered, dl_delivered);
  check_count(report, "dl_fail_link", ledger.dl_fail_link, dl_link_lost);
  for (size_t k = 0; k < acked.size(); ++k) {
    char what[48];
    std::snprintf(what, sizeof what, "acked_by_attempt[%zu]", k + 1);
    check_count(report, what, ledger.acked_by_attempt[k], acked[k]);
  }

  const uint64_t fails = ledger.dl_fail_duty_cycle + ledger.dl_fail_busy +
                         ledger.dl_fail_collision + ledger.dl_fail_link;
  check_count(report, "downlink_attempted = delivered + failures", ledger.downlink_attempted,
              ledger.downlink_delivered + fails);

  const uint64_t resolved = ledger.acked_total() + ledger.gave_up + ledger.received_unconfirmed +
                            ledger.lost_unconfirmed + ledger.censored;
  check_count(report, "fresh-uplink outcome partition", ledger.sent_fresh, resolved);

  for (size_t i = 0; i < energy.size(); ++i) {
    const double a = ledger.energy_mj_per_node[i];
    const double b = energy[i];
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a))) {
      char buf[120];
      std::snprintf(buf, sizeof buf, "node %zu energy: ledger %.12g mJ, log replay %.12g mJ", i,
                    a, b);
      report.fail(buf);
    }
  }

  // One radio on the gateway: committed downlinks must never overlap.
  std::vector<const TransmissionRecord*> down;
  for (const TransmissionRecord& r : log)
    if (r.direction == Direction::Downlink) down.push_back(&r);
  std::stable_sort(down.begin(), down.end(), [](const TransmissionRecord* a,
                                                const TransmissionRecord* b) {
    return a->start_ms < b->start_ms;
  });
  for (size_t i = 1; i < down.size(); ++i) {
    if (down[i]->start_ms < down[i - 1]->end_ms() - 1e-9) {
      char buf[120];
      std::snprintf(buf, sizeof buf, "gateway transmits two downlinks at once around %.3f ms",
                    down[i]->start_ms);
      report.fail(buf);
    }
  }

  // Stop-and-wait per device: serialized uplinks, attempt counters that step
  // by one within a frame and restart at one on a fresh frame.
  std::map<int32_t, std::pair<double, const TransmissionRecord*>> last_up;  // end, record
  for (size_t i : order_by_start(log)) {
    const TransmissionRecord& r = log[i];
    if (r.direction != Direction::Uplink) continue;
    const auto it = last_up.find(r.actor);
    if (it != last_up.end()) {
      if (r.start_ms < it->second.first - 1e-9) {
        char buf[120];
        std::snprintf(buf, sizeof buf, "device %d transmits two uplinks at once around %.3f ms",
                      r.actor, r.start_ms);
        report.fail(buf);
      }
      const TransmissionRecord& prev = *it->second.second;
      const bool same_frame = prev.frame_id == r.frame_id;
      if (same_frame && r.attempt != prev.attempt + 1)
        report.fail("retransmission attempt counter did not advance by one");
      if (!same_frame && r.attempt != 1)
        report.fail("fresh frame did not start at attempt 1");
    } else if (r.attempt != 1) {
      report.fail("device's first uplink is not attempt 1");
    }
    last_up[r.actor] = {r.end_ms(), &r};
  }

  return report;
}

void write_event_log(const std::vector<TransmissionRecord>& log, std::ostream& out) {
  out << "#        start_ms    actor  dir   kind           freq_mhz  sf  attempt"
         "   airtime_ms   rssi_dbm  frame      outcome\n";
  char buf[192];
  for (const TransmissionRecord& r : log) {
    std::snprintf(buf, sizeof buf,
                  "%16.3f %8d  %-4s  %-13s  %8.3f  %2u  %7u  %11.3f  %9.2f  %08x  %s\n",
                  r.start_ms, r.actor, r.direction == Direction::Uplink ? "up" : "down",
                  to_string(r.kind), static_cast<double>(r.freq_mhz), r.sf, r.attempt,
                  r.airtime_ms, static_cast<double>(r.rssi_dbm), r.frame_id,
                  to_string(r.outcome));
    out << buf;
  }
}

RunMetrics RunMetrics::from(const ScenarioConfig& cfg, int replication, uint64_t run_seed,
                            const MetricsLedger& ledger, uint64_t dispatched) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RunMetrics m;
  m.n_nodes = cfg.n_nodes;
  m.sim_days = cfg.sim_days;
  m.confirmed_fraction = cfg.confirmed_fraction;
  m.downlink_fraction = cfg.downlink_fraction;
  m.max_attempts = cfg.mac.max_attempts;
  m.dr_decay = cfg.mac.dr_decay;
  m.mean_send_interval_s = cfg.mean_send_interval_s;
  m.payload_len = cfg.payload_len;
  m.replication = replication;
  m.seed = run_seed;

  m.sent_total = static_cast<double>(ledger.sent_total);
  m.sent_fresh = static_cast<double>(ledger.sent_fresh);
  m.received_unique = static_cast<double>(ledger.received_unique);
  m.goodput = ledger.sent_total ? lwsim::goodput(ledger) : nan;
  m.downlink_generated = static_cast<double>(ledger.downlink_generated);
  m.downlink_attempted = static_cast<double>(ledger.downlink_attempted);
  m.downlink_delivered = static_cast<double>(ledger.downlink_delivered);
  m.downlink_delivery_ratio =
      ledger.downlink_attempted ? lwsim::downlink_delivery_ratio(ledger) : nan;
  m.dl_fail_duty_cycle = static_cast<double>(ledger.dl_fail_duty_cycle);
  m.dl_fail_busy = static_cast<double>(ledger.dl_fail_busy);
  m.dl_fail_collision = static_cast<double>(ledger.dl_fail_collision);
  m.dl_fail_link = static_cast<double>(ledger.dl_fail_link);
  m.confirmed_completed = static_cast<double>(ledger.confirmed_completed());
  m.acked_total = static_cast<double>(ledger.acked_total());
  m.gave_up = static_cast<double>(ledger.gave_up);
  m.received_unconfirmed = static_cast<double>(ledger.received_unconfirmed);
  m.lost_unconfirmed = static_cast<double>(ledger.lost_unconfirmed);
  m.censored = static_cast<double>(ledger.censored);

  m.ack_cdf_1 = m.ack_cdf_2 = m.ack_cdf_3 = m.ack_cdf_final = nan;
  if (ledger.confirmed_completed() > 0) {
    const std::vector<double> cdf = ack_cdf_by_attempt(ledger);
    if (cdf.size() >= 1) m.ack_cdf_1 = cdf[0];
    if (cdf.size() >= 2) m.ack_cdf_2 = cdf[1];
    if (cdf.size() >= 3) m.ack_cdf_3 = cdf[2];
    if (!cdf.empty()) m.ack_cdf_final = cdf.back();
  }

  double total_energy = 0.0;
  for (double e : ledger.energy_mj_per_node) total_energy += e;
  m.energy_mean_mj_per_node =
      ledger.energy_mj_per_node.empty()
          ? nan
          : total_energy / static_cast<double>(ledger.energy_mj_per_node.size());
  m.dispatched_events = static_cast<double>(dispatched);
  return m;
}

const std::vector<MetricColumn>& metric_columns() {
  static const std::vector<MetricColumn> cols = {
      {"sent_total", &RunMetrics::sent_total},
      {"sent_fresh", &RunMetrics::sent_fresh},
      {"received_unique", &RunMetrics::received_unique},
      {"goodput", &RunMetrics::goodput},
      {"downlink_generated", &RunMetrics::downlink_generated},
      {"downlink_attempted", &RunMetrics::downlink_attempted},
      {"downlink_delivered", &RunMetrics::downlink_delivered},
      {"downlink_delivery_ratio", &RunMetrics::downlink_delivery_ratio},
      {"dl_fail_duty_cycle", &RunMetrics::dl_fail_duty_cycle},
      {"dl_fail_busy", &RunMetrics::dl_fail_busy},
      {"dl_fail_collision", &RunMetrics::dl_fail_collision},
      {"dl_fail_link", &RunMetrics::dl_fail_link},
      {"confirmed_completed", &RunMetrics::confirmed_completed},
      {"acked_total", &RunMetrics::acked_total},
      {"gave_up", &RunMetrics::gave_up},
      {"received_unconfirmed", &RunMetrics::received_unconfirmed},
      {"lost_unconfirmed", &RunMetrics::lost_unconfirmed},
      {"censored", &RunMetrics::censored},
      {"ack_cdf_1", &RunMetrics::ack_cdf_1},
      {"ack_cdf_2", &RunMetrics::ack_cdf_2},
      {"ack_cdf_3", &RunMetrics::ack_cdf_3},
      {"ack_cdf_final", &RunMetrics::ack_cdf_final},
      {"energy_mean_mj_per_node", &RunMetrics::energy_mean_mj_per_node},
      {"dispatched_events", &RunMetrics::dispatched_events},
  };
  return cols;
}

namespace {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_params(std::ostream& out, const RunMetrics& m, bool aggregate) {
  out << (aggregate ? "aggregate" : "rep") << ',' << m.n_nodes << ',' << fmt_num(m.sim_days)
      << ',' << fmt_num(m.confirmed_fraction) << ',' << fmt_num(m.downlink_fraction) << ','
      << m.max_attempts << ',' << (m.dr_decay ? 1 : 0) << ','
      << fmt_num(m.mean_send_interval_s) << ',' << m.payload_len << ',';
  if (!aggregate) out << m.replication;
  out << ',';
  if (!aggregate) out << m.seed;
}

}  // namespace

void write_results(const std::vector<std::vector<RunMetrics>>& points, std::ostream& out) {
  const auto& cols = metric_columns();
  out << "row_type,n_nodes,sim_days,confirmed_fraction,downlink_fraction,max_attempts,"
         "dr_decay,mean_send_interval_s,payload_len,replication,seed";
  for (const MetricColumn& c : cols) out << ',' << c.name;
  for (const MetricColumn& c : cols) out << ',' << c.name << "_std";
  out << '\n';

  for (const std::vector<RunMetrics>& reps : points) {
    if (reps.empty()) continue;
    for (const RunMetrics& m : reps) {
      write_params(out, m, false);
      for (const MetricColumn& c : cols) out << ',' << fmt_num(m.*(c.field));
      for (size_t i = 0; i < cols.size(); ++i) out << ',';
      out << '\n';
    }
    // Aggregate row: mean and sample standard deviation over the defined
    // (non-NaN) replications of each metric.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> mean(cols.size(), nan), stdev(cols.size(), nan);
    for (size_t ci = 0; ci < cols.size(); ++ci) {
      double sum = 0.0;
      size_t n = 0;
      for (const RunMetrics& m : reps) {
        const double v = m.*(cols[ci].field);
        if (!std::isnan(v)) {
          sum += v;
          ++n;
        }
      }
      if (n == 0) continue;
      mean[ci] = sum / static_cast<double>(n);
      double ss = 0.0;
      for (const RunMetrics& m : reps) {
        const double v = m.*(cols[ci].field);
        if (!std::isnan(v)) ss += (v - mean[ci]) * (v - mean[ci]);
      }
      stdev[ci] = n >= 2 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    write_params(out, reps.front(), true);
    for (size_t ci = 0; ci < cols.size(); ++ci) out << ',' << fmt_num(mean[ci]);
    for (size_t ci = 0; ci < cols.size(); ++ci) out << ',' << fmt_num(stdev[ci]);
    out << '\n';
  }
}

}  // namespace lwsim
