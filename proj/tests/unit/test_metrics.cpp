// Metrics checks: derived ratios, the duty-cycle replay audit, ledger/log
// reconciliation, and the results CSV writer.
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lwsim/metrics.hpp"

using namespace lwsim;

namespace {

TransmissionRecord rec(double start_ms, double airtime_ms, int32_t actor, Direction dir,
                       FrameKind kind, uint32_t frame_id, int attempt, bool confirmed,
                       TxOutcome outcome, double freq = 868.1, int sf = 7,
                       double tx_power = 14.0) {
  TransmissionRecord r;
  r.start_ms = start_ms;
  r.airtime_ms = airtime_ms;
  r.freq_mhz = static_cast<float>(freq);
  r.rssi_dbm = -100.0f;
  r.tx_power_dbm = static_cast<float>(tx_power);
  r.frame_id = frame_id;
  r.actor = actor;
  r.target = actor >= 0 ? kGateway : 0;
  r.sf = static_cast<uint8_t>(sf);
  r.attempt = static_cast<uint8_t>(attempt);
  r.confirmed = confirmed ? 1 : 0;
  r.direction = dir;
  r.kind = kind;
  r.outcome = outcome;
  return r;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

bool problems_mention(const AuditReport& report, const std::string& needle) {
  for (const std::string& p : report.problems)
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("derived ratios and their undefined cases") {
  MetricsLedger ledger;
  CHECK_THROWS_AS(goodput(ledger), std::domain_error);
  CHECK_THROWS_AS(downlink_delivery_ratio(ledger), std::domain_error);
  CHECK_THROWS_AS(ack_cdf_by_attempt(ledger), std::domain_error);

  ledger.sent_total = 100;
  ledger.received_unique = 40;
  CHECK(goodput(ledger) == doctest::Approx(0.4));

  ledger.downlink_attempted = 8;
  ledger.downlink_delivered = 6;
  CHECK(downlink_delivery_ratio(ledger) == doctest::Approx(0.75));

  ledger.acked_by_attempt = {5, 3, 2};
  ledger.gave_up = 2;
  auto cdf = ack_cdf_by_attempt(ledger);
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0] == doctest::Approx(5.0 / 12.0));
  CHECK(cdf[1] == doctest::Approx(8.0 / 12.0));
  CHECK(cdf[2] == doctest::Approx(10.0 / 12.0));  // gave_up keeps the tail below 1
  CHECK(ledger.confirmed_completed() == 12);
  CHECK(ledger.acked_total() == 10);
}

TEST_CASE("duty-cycle audit replays the log") {
  MacParams mac;  // 1% G1, 10% G3

  SUBCASE("a 99-airtime gap in the 1% band is compliant, a shorter one is not") {
    std::vector<TransmissionRecord> ok_log = {
        rec(0, 100, 0, Direction::Uplink, FrameKind::Data, 1, 1, false, TxOutcome::Decoded),
        rec(10000, 100, 0, Direction::Uplink, FrameKind::Data, 2, 1, false, TxOutcome::Decoded),
    };
    CHECK(audit_duty_cycle(ok_log, mac).empty());

    std::vector<TransmissionRecord> bad_log = ok_log;
    bad_log[1].start_ms = 9999.9;
    auto v = audit_duty_cycle(bad_log, mac);
    REQUIRE(v.size() == 1);
    CHECK(v[0].actor == 0);
    CHECK(v[0].at_ms == doctest::Approx(9999.9));
    CHECK(v[0].required_gap_ms == doctest::Approx(9900.0));
    CHECK(v[0].actual_gap_ms == doctest::Approx(9899.9));
  }
  SUBCASE("the 10% band only demands 9 airtimes") {
    std::vector<TransmissionRecord> log = {
        rec(0, 100, -1, Direction::Downlink, FrameKind::Ack, 1, 1, false, TxOutcome::Delivered,
            869.545),
        rec(1000, 100, -1, Direction::Downlink, FrameKind::Ack, 2, 1, false,
            TxOutcome::Delivered, 869.545),
    };
    CHECK(audit_duty_cycle(log, mac).empty());
    log[1].start_ms = 999.0;
    CHECK(audit_duty_cycle(log, mac).size() == 1);
  }
  SUBCASE("bands are tracked separately") {
    std::vector<TransmissionRecord> log = {
        rec(0, 100, -1, Direction::Downlink, FrameKind::Ack, 1, 1, false, TxOutcome::Delivered,
            868.1),
        rec(150, 100, -1, Direction::Downlink, FrameKind::Ack, 2, 1, false,
            TxOutcome::Delivered, 869.545),
    };
    CHECK(audit_duty_cycle(log, mac).empty());
  }
  SUBCASE("actors are tracked separately") {
    std::vector<TransmissionRecord> log = {
        rec(0, 100, 0, Direction::Uplink, FrameKind::Data, 1, 1, false, TxOutcome::Decoded),
        rec(10, 100, 1, Direction::Uplink, FrameKind::Data, 2, 1, false, TxOutcome::Collided),
    };
    CHECK(audit_duty_cycle(log, mac).empty());
  }
  SUBCASE("detection does not depend on log order") {
    std::vector<TransmissionRecord> log = {
        rec(9999.9, 100, 0, Direction::Uplink, FrameKind::Data, 2, 1, false, TxOutcome::Decoded),
        rec(0, 100, 0, Direction::Uplink, FrameKind::Data, 1, 1, false, TxOutcome::Decoded),
    };
    CHECK(audit_duty_cycle(log, mac).size() == 1);
  }
  SUBCASE("unregulated frequencies are ignored") {
    std::vector<TransmissionRecord> log = {
        rec(0, 100, 0, Direction::Uplink, FrameKind::Data, 1, 1, false, TxOutcome::Decoded,
            867.0),
        rec(101, 100, 0, Direction::Uplink, FrameKind::Data, 2, 1, false, TxOutcome::Decoded,
            867.0),
    };
    CHECK(audit_duty_cycle(log, mac).empty());
  }
}

namespace {

// Two decoded fresh uplinks (one confirmed), plus the delivered ACK for the
// confirmed one, with a ledger that matches exactly.
struct ConsistentRun {
  ScenarioConfig cfg;
  std::vector<TransmissionRecord> log;
  MetricsLedger ledger;

  ConsistentRun() {
    cfg.n_nodes = 2;
    cfg.sim_days = 1.0;

    log.push_back(
        rec(0, 56.576, 0, Direction::Uplink, FrameKind::Data, 1, 1, false, TxOutcome::Decoded));
    log.push_back(rec(100000, 56.576, 1, Direction::Uplink, FrameKind::Data, 2, 1, true,
                      TxOutcome::Decoded, 868.3));
    log.push_back(rec(100000 + 56.576 + 1000, 46.336, kGateway, Direction::Downlink,
                      FrameKind::Ack, 2, 1, false, TxOutcome::Delivered, 868.3));

    ledger.sent_total = 2;
    ledger.sent_fresh = 2;
    ledger.received_unique = 2;
    ledger.confirmed_fresh = 1;
    ledger.received_unconfirmed = 1;
    ledger.downlink_attempted = 1;
    ledger.downlink_delivered = 1;
    ledger.acked_by_attempt.assign(cfg.mac.max_attempts, 0);
    ledger.acked_by_attempt[0] = 1;

    RadioParams up{7, 125, 1, 868.1, 14.0};
    double e = tx_energy_mj(up, SimTime::ms(56.576), cfg.energy);
    ledger.energy_mj_per_node = {e, e};
  }
};

}  // namespace

TEST_CASE("reconcile accepts a consistent run") {
  ConsistentRun run;
  AuditReport report = reconcile(run.ledger, run.log, run.cfg);
  CHECK(report.ok);
  CHECK(report.problems.empty());
}

TEST_CASE("reconcile catches tampered counters and logs") {
  SUBCASE("wrong sent_total") {
    ConsistentRun run;
    run.ledger.sent_total = 3;
    run.ledger.received_unconfirmed = 2;  // keep the partition identity intact
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "sent_total"));
  }
  SUBCASE("an ended record left pending") {
    ConsistentRun run;
    run.log[0].outcome = TxOutcome::Pending;
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "never resolved"));
  }
  SUBCASE("an outcome stamped past the horizon") {
    ConsistentRun run;
    run.log[0].start_ms = SimTime::days(run.cfg.sim_days).to_ms() - 1.0;  // ends after the end
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "past the horizon"));
  }
  SUBCASE("wrong per-node energy") {
    ConsistentRun run;
    run.ledger.energy_mj_per_node[1] += 1e-6;
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "energy"));
  }
  SUBCASE("attempted != delivered + failures") {
    ConsistentRun run;
    run.ledger.downlink_attempted = 2;
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "downlink_attempted"));
  }
  SUBCASE("broken fresh-uplink partition") {
    ConsistentRun run;
    run.ledger.censored = 1;
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "partition"));
  }
  SUBCASE("overlapping gateway downlinks") {
    ConsistentRun run;
    run.log.push_back(rec(run.log[2].start_ms + 1.0, 46.336, kGateway, Direction::Downlink,
                          FrameKind::Ack, 3, 1, false, TxOutcome::Delivered, 869.545));
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "two downlinks at once"));
  }
  SUBCASE("overlapping uplinks from one device") {
    ConsistentRun run;
    run.log.push_back(
        rec(10, 56.576, 0, Direction::Uplink, FrameKind::Data, 9, 1, false, TxOutcome::Collided));
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "two uplinks at once"));
  }
  SUBCASE("attempt counter skipping a step") {
    ConsistentRun run;
    run.log.push_back(rec(200000, 56.576, 1, Direction::Uplink, FrameKind::Data, 2, 3, true,
                          TxOutcome::Collided, 868.3));
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "did not advance by one"));
  }
  SUBCASE("fresh frame starting above attempt 1") {
    ConsistentRun run;
    run.log.push_back(rec(200000, 56.576, 1, Direction::Uplink, FrameKind::Data, 7, 2, true,
                          TxOutcome::Collided, 868.3));
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "did not start at attempt 1"));
  }
  SUBCASE("downlink with an uplink outcome") {
    ConsistentRun run;
    run.log[2].outcome = TxOutcome::Decoded;
    auto report = reconcile(run.ledger, run.log, run.cfg);
    CHECK(!report.ok);
    CHECK(problems_mention(report, "uplink-only outcome"));
  }
}

TEST_CASE("reconcile counts data+ack downlinks as two logical messages") {
  ConsistentRun run;
  run.log[2].kind = FrameKind::DataWithAck;
  // The honest ledger books the piggybacked data message too.
  run.ledger.downlink_attempted = 2;
  run.ledger.downlink_delivered = 2;
  CHECK(reconcile(run.ledger, run.log, run.cfg).ok);

  run.ledger.downlink_delivered = 1;
  run.ledger.downlink_attempted = 1;
  CHECK(!reconcile(run.ledger, run.log, run.cfg).ok);
}

TEST_CASE("reconcile accepts a frame still on air at the horizon") {
  ScenarioConfig cfg;
  cfg.n_nodes = 1;
  cfg.sim_days = 1.0 / 86400.0;  // one-second horizon
  std::vector<TransmissionRecord> log = {
      rec(990, 56.576, 0, Direction::Uplink, FrameKind::Data, 1, 1, true, TxOutcome::Pending)};
  MetricsLedger ledger;
  ledger.sent_total = 1;
  ledger.sent_fresh = 1;
  ledger.confirmed_fresh = 1;
  ledger.censored = 1;
  ledger.acked_by_attempt.assign(cfg.mac.max_attempts, 0);
  RadioParams up{7, 125, 1, 868.1, 14.0};
  ledger.energy_mj_per_node = {tx_energy_mj(up, SimTime::ms(56.576), cfg.energy)};
  CHECK(reconcile(ledger, log, cfg).ok);
}

TEST_CASE("event log rendering") {
  ConsistentRun run;
  std::ostringstream out;
  write_event_log(run.log, out);
  auto lines = split_lines(out.str());
  REQUIRE(lines.size() == 4);
  CHECK(lines[0][0] == '#');
  CHECK(lines[0].find("start_ms") != std::string::npos);
  CHECK(lines[1].find("up") != std::string::npos);
  CHECK(lines[1].find("decoded") != std::string::npos);
  CHECK(lines[1].find("00000001") != std::string::npos);
  CHECK(lines[3].find("down") != std::string::npos);
  CHECK(lines[3].find("ack") != std::string::npos);
  CHECK(lines[3].find("delivered") != std::string::npos);
}

TEST_CASE("run metrics flattening handles undefined values") {
  ScenarioConfig cfg;
  MetricsLedger ledger;
  ledger.sent_total = 10;
  ledger.sent_fresh = 10;
  ledger.received_unique = 9;
  ledger.received_unconfirmed = 9;
  ledger.lost_unconfirmed = 1;
  ledger.acked_by_attempt.assign(cfg.mac.max_attempts, 0);
  ledger.energy_mj_per_node = {1.0, 2.0, 3.0};

  RunMetrics m = RunMetrics::from(cfg, 4, 99, ledger, 1234);
  CHECK(m.replication == 4);
  CHECK(m.seed == 99);
  CHECK(m.goodput == doctest::Approx(0.9));
  CHECK(std::isnan(m.downlink_delivery_ratio));  // nothing attempted
  CHECK(std::isnan(m.ack_cdf_1));                // nothing confirmed
  CHECK(std::isnan(m.ack_cdf_final));
  CHECK(m.energy_mean_mj_per_node == doctest::Approx(2.0));
  CHECK(m.dispatched_events == doctest::Approx(1234.0));
}

TEST_CASE("results CSV layout") {
  const auto& cols = metric_columns();
  REQUIRE(cols.size() == 24);

  RunMetrics a;
  a.n_nodes = 100;
  a.sim_days = 2;
  a.max_attempts = 8;
  a.mean_send_interval_s = 1000;
  a.payload_len = 20;
  a.replication = 0;
  a.seed = 1;
  a.goodput = 0.5;
  a.ack_cdf_1 = std::numeric_limits<double>::quiet_NaN();
  RunMetrics b = a;
  b.replication = 1;
  b.seed = 2;
  b.goodput = 0.7;

  std::ostringstream out;
  write_results({{a, b}}, out);
  auto lines = split_lines(out.str());
  REQUIRE(lines.size() == 4);  // header + 2 reps + aggregate

  auto header = split_csv(lines[0]);
  REQUIRE(header.size() == 11 + 24 + 24);
  CHECK(header[0] == "row_type");
  CHECK(header[9] == "replication");
  CHECK(header[10] == "seed");

  size_t goodput_col = 0, goodput_std_col = 0, ack1_col = 0;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "goodput") goodput_col = i;
    if (header[i] == "goodput_std") goodput_std_col = i;
    if (header[i] == "ack_cdf_1") ack1_col = i;
  }
  REQUIRE(goodput_col > 0);
  REQUIRE(goodput_std_col > goodput_col);

  auto rep0 = split_csv(lines[1]);
  auto rep1 = split_csv(lines[2]);
  auto agg = split_csv(lines[3]);
  REQUIRE(rep0.size() == header.size());
  REQUIRE(agg.size() == header.size());

  CHECK(rep0[0] == "rep");
  CHECK(rep0[9] == "0");
  CHECK(rep0[10] == "1");
  CHECK(rep0[goodput_col] == "0.5");
  CHECK(rep0[ack1_col] == "");               // NaN renders empty
  CHECK(rep0[goodput_std_col] == "");        // rep rows carry no std
  CHECK(rep1[goodput_col] == "0.7");

  CHECK(agg[0] == "aggregate");
  CHECK(agg[9] == "");  // no single replication/seed
  CHECK(agg[10] == "");
  CHECK(std::stod(agg[goodput_col]) == doctest::Approx(0.6));
  CHECK(std::stod(agg[goodput_std_col]) == doctest::Approx(std::sqrt(0.02)));
  CHECK(agg[ack1_col] == "");  // undefined in every rep stays undefined

  SUBCASE("single replication gets a zero std") {
    std::ostringstream solo;
    write_results({{a}}, solo);
    auto solo_lines = split_lines(solo.str());
    REQUIRE(solo_lines.size() == 3);
    auto solo_agg = split_csv(solo_lines[2]);
    CHECK(std::stod(solo_agg[goodput_std_col]) == doctest::Approx(0.0));
  }
  SUBCASE("identical input produces identical bytes") {
    std::ostringstream again;
    write_results({{a, b}}, again);
    CHECK(again.str() == out.str());
  }
  SUBCASE("no points produces just the header") {
    std::ostringstream empty;
    write_results({}, empty);
    CHECK(split_lines(empty.str()).size() == 1);
  }
}
