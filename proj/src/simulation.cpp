#include "lwsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lwsim {

namespace {

// Small slack after the last moment an ACK can finish arriving, so the
// delivery event always resolves before the retransmission timer.
constexpr SimTime kAckGuard = SimTime::ms(1.0);

SimTime later(SimTime a, SimTime b) { return a < b ? b : a; }

}  // namespace

Simulation::Simulation(ScenarioConfig cfg, uint64_t run_seed)
    : cfg_(std::move(cfg)),
      run_seed_(run_seed),
      shadow_rng_(run_seed, "shadowing"),
      downlink_rng_(run_seed, "downlink"),
      traffic_(cfg_),
      horizon_(SimTime::days(cfg_.sim_days)) {
  cfg_.validate();
  RngStream placement(run_seed, "placement");
  topo_ = generate_topology(cfg_, placement);

  devices_.reserve(static_cast<size_t>(cfg_.n_nodes));
  for (int i = 0; i < cfg_.n_nodes; ++i) {
    devices_.emplace_back(RngStream(run_seed, "traffic", static_cast<uint64_t>(i)),
                          RngStream(run_seed, "backoff", static_cast<uint64_t>(i)));
    devices_.back().place = topo_.nodes[static_cast<size_t>(i)];
    devices_.back().gate.limit = cfg_.mac.g1_duty_limit;  // uplink channels live in G1
  }
  gw_.g1.limit = cfg_.mac.g1_duty_limit;
  gw_.g3.limit = cfg_.mac.g3_duty_limit;
  gw_.data_queue.resize(static_cast<size_t>(cfg_.n_nodes));
  ledger_.acked_by_attempt.assign(static_cast<size_t>(cfg_.mac.max_attempts), 0);
  ledger_.energy_mj_per_node.assign(static_cast<size_t>(cfg_.n_nodes), 0.0);
}

SimResult Simulation::run() {
  if (ran_) throw std::logic_error("Simulation::run may only be called once");
  ran_ = true;

  for (int i = 0; i < cfg_.n_nodes; ++i) {
    const SimTime first = traffic_.next_uplink_time(SimTime{}, devices_[i].traffic_rng);
    queue_.schedule(first, EventKind::UplinkDue, i, 0);
  }
  if (cfg_.downlink_fraction > 0.0) {
    const double mean_s =
        cfg_.mean_send_interval_s / (cfg_.downlink_fraction * cfg_.n_nodes);
    queue_.schedule(SimTime::seconds(downlink_rng_.exponential(mean_s)),
                    EventKind::DownlinkDue, kGateway, 0);
  }
  queue_.schedule(horizon_, EventKind::SimEnd, kGateway, 0);

  const uint64_t dispatched =
      queue_.run_until(horizon_, [this](const Event& ev) { on_event(ev); });

  for (int i = 0; i < cfg_.n_nodes; ++i) {
    if (devices_[i].frame) ++ledger_.censored;  // retry cycle cut off by the horizon
    ledger_.energy_mj_per_node[static_cast<size_t>(i)] = devices_[i].energy_mj;
  }

  SimResult res;
  res.ledger = std::move(ledger_);
  res.log = std::move(log_);
  res.topology = std::move(topo_);
  res.dispatched = dispatched;
  res.run_seed = run_seed_;
  return res;
}

void Simulation::on_event(const Event& ev) {
  switch (ev.kind) {
    case EventKind::UplinkDue:
      if (ev.payload == 0)
        on_arrival(ev.subject);
      else
        on_trigger(ev.subject);
      break;
    case EventKind::TxEnd:
      if (ev.subject >= 0)
        on_uplink_end(ev.subject);
      else
        on_downlink_end(static_cast<size_t>(ev.payload));
      break;
    case EventKind::Rx1Open:
    case EventKind::Rx2Open:
      ++ledger_.rx_windows_opened;
      break;
    case EventKind::AckTimeout:
      on_ack_timeout(ev.subject);
      break;
    case EventKind::DownlinkDue:
      on_downlink_due();
      break;
    case EventKind::SimEnd:
      break;
  }
}

void Simulation::on_arrival(int32_t d) {
  Device& dev = devices_[static_cast<size_t>(d)];
  dev.backlog.push_back(traffic_.draw_confirmed(dev.traffic_rng) ? 1 : 0);
  const SimTime next = traffic_.next_uplink_time(queue_.now(), dev.traffic_rng);
  queue_.schedule(next, EventKind::UplinkDue, d, 0);
  if (dev.phase == Phase::Idle) start_wait_gate(d);
}

void Simulation::start_wait_gate(int32_t d) {
  Device& dev = devices_[static_cast<size_t>(d)];
  dev.phase = Phase::WaitGate;
  queue_.schedule(later(queue_.now(), dev.gate.blocked_until), EventKind::UplinkDue, d, 1);
}

void Simulation::on_trigger(int32_t d) {
  Device& dev = devices_[static_cast<size_t>(d)];
  const SimTime now = queue_.now();
  if (!dev.gate.open_at(now)) {  // retry backoff may land inside the off period
    queue_.schedule(dev.gate.blocked_until, EventKind::UplinkDue, d, 1);
    return;
  }

  if (!dev.frame) {
    const bool confirmed = dev.backlog.front() != 0;
    dev.backlog.pop_front();
    dev.frame = PendingFrame{confirmed, 1, false, ++next_uplink_id_, cfg_.payload_len};
  }
  PendingFrame& frame = *dev.frame;

  RadioParams radio = dev.place.radio;
  radio.sf = sf_for_attempt(dev.place.radio.sf, frame.attempt, cfg_.mac.dr_decay);
  const SimTime air = airtime(radio, frame.payload_len, cfg_.preamble_syms);

  Transmission tx;
  tx.source = d;
  tx.destination = kGateway;
  tx.direction = Direction::Uplink;
  tx.kind = FrameKind::Data;
  tx.radio = radio;
  tx.start = now;
  tx.airtime = air;
  tx.payload_len = frame.payload_len;
  tx.attempt = frame.attempt;
  tx.frame_id = frame.id;

  // Reception as seen by the gateway; the shadow draw is consumed even at
  // sigma 0 so event sequences match across shadowing settings.
  const double shadow = shadow_rng_.normal(0.0, cfg_.link.shadow_sigma_db);
  const double rssi =
      radio.tx_power_dbm - path_loss_db(cfg_.link, dev.place.distance_m, shadow);
  dev.current_tx = tx;
  dev.rssi_dbm = rssi;
  dev.above_sensitivity = rssi >= cfg_.link.sensitivity_dbm(radio.sf, radio.bw_khz);
  dev.strongest_rival_dbm = -std::numeric_limits<double>::infinity();

  // Mutual interference marking against everything already on air in the
  // same (frequency, SF) group; below-sensitivity frames never interfere.
  if (dev.above_sensitivity) {
    for (int32_t other : gw_.in_flight) {
      Device& o = devices_[static_cast<size_t>(other)];
      if (!o.above_sensitivity) continue;
      if (o.current_tx.radio.sf != radio.sf) continue;
      if (std::abs(o.current_tx.radio.freq_mhz - radio.freq_mhz) > 1e-6) continue;
      if (!overlaps(o.current_tx, tx)) continue;
      o.strongest_rival_dbm = std::max(o.strongest_rival_dbm, rssi);
      dev.strongest_rival_dbm = std::max(dev.strongest_rival_dbm, o.rssi_dbm);
    }
  }
  gw_.in_flight.push_back(d);
  dev.phase = Phase::Tx;

  ++ledger_.sent_total;
  if (frame.attempt == 1) {
    ++ledger_.sent_fresh;
    if (frame.confirmed) ++ledger_.confirmed_fresh;
  }
  dev.energy_mj += tx_energy_mj(radio, air, cfg_.energy);
  append_log(tx, frame.confirmed, rssi, &dev.log_idx);

  const SimTime tx_end = now + air;
  dev.gate = duty_cycle_advance(dev.gate, tx_end, air);
  queue_.schedule(tx_end, EventKind::TxEnd, d, 0);

  const RxWindows win = open_rx_windows(radio, tx_end, cfg_.mac);
  queue_.schedule(win.rx1.opens_at, EventKind::Rx1Open, d, 0);
  queue_.schedule(win.rx2.opens_at, EventKind::Rx2Open, d, 0);

  if (frame.confirmed) {
    // Give up on this attempt only once the slowest possible ACK (an RX2
    // frame) could have finished arriving.
    const SimTime ack_air =
        airtime(win.rx2.radio, cfg_.mac.ack_airtime_payload(), cfg_.preamble_syms);
    dev.ack_deadline = tx_end + cfg_.mac.rx2_delay + ack_air + kAckGuard;
    dev.ack_timeout = queue_.schedule(dev.ack_deadline, EventKind::AckTimeout, d, 0);
  }
}

void Simulation::on_uplink_end(int32_t d) {
  Device& dev = devices_[static_cast<size_t>(d)];
  PendingFrame& frame = *dev.frame;

  gw_.in_flight.erase(std::find(gw_.in_flight.begin(), gw_.in_flight.end(), d));

  TxOutcome outcome;
  if (!dev.above_sensitivity)
    outcome = TxOutcome::LinkLost;
  else if (dev.rssi_dbm < dev.strongest_rival_dbm + cfg_.capture_threshold_db)
    outcome = TxOutcome::Collided;
  else
    outcome = TxOutcome::Decoded;
  if (cfg_.record_event_log) log_[dev.log_idx].outcome = outcome;

  const bool decoded = outcome == TxOutcome::Decoded;
  if (decoded) {
    if (!frame.delivered) {
      frame.delivered = true;
      ++ledger_.received_unique;
    }
    const bool need_ack = frame.confirmed;
    const bool have_data = !gw_.data_queue[static_cast<size_t>(d)].empty();
    if (need_ack || have_data) gateway_respond(d, need_ack, have_data);
  }

  if (frame.confirmed) {
    dev.phase = Phase::WaitAck;  // resolves via ACK delivery or AckTimeout
  } else {
    if (decoded)
      ++ledger_.received_unconfirmed;
    else
      ++ledger_.lost_unconfirmed;
    complete_frame(d);
  }
}

void Simulation::gateway_respond(int32_t d, bool need_ack, bool have_data) {
  Device& dev = devices_[static_cast<size_t>(d)];
  const Transmission& up = dev.current_tx;
  const FrameKind kind = need_ack
                             ? (have_data ? FrameKind::DataWithAck : FrameKind::Ack)
                             : FrameKind::Data;
  const int payload = have_data ? cfg_.payload_len : cfg_.mac.ack_airtime_payload();

  const SimTime now = queue_.now();
  gw_.busy.erase(std::remove_if(gw_.busy.begin(), gw_.busy.end(),
                                [&](size_t ci) { return gw_.committed[ci].tx.end() <= now; }),
                 gw_.busy.end());

  const RxWindows win = open_rx_windows(up.radio, up.end(), cfg_.mac);
  bool gate_blocked = false;
  bool committed = false;
  RadioParams dl_radio;
  SimTime dl_start{}, dl_air{};
  for (const RxWindow* w : {&win.rx1, &win.rx2}) {
    RadioParams radio = w->radio;
    radio.tx_power_dbm = cfg_.gw_tx_power_dbm;
    const SimTime air = airtime(radio, payload, cfg_.preamble_syms);
    const auto band = sub_band_for(radio.freq_mhz);
    DutyCycleGate& gate = gw_gate(*band);
    if (!gate.open_at(w->opens_at)) {
      gate_blocked = true;
      continue;
    }
    bool busy = false;
    for (size_t ci : gw_.busy) {
      const Transmission& c = gw_.committed[ci].tx;
      if (w->opens_at < c.end() && c.start < w->opens_at + air) {
        busy = true;
        break;
      }
    }
    if (busy) continue;
    gate = duty_cycle_advance(gate, w->opens_at + air, air);  // reserve at commit
    dl_radio = radio;
    dl_start = w->opens_at;
    dl_air = air;
    committed = true;
    break;
  }

  if (!committed) {
    // Nothing goes on air; each blocked logical message is accounted once.
    if (need_ack) {
      ++ledger_.downlink_attempted;
      if (gate_blocked)
        ++ledger_.dl_fail_duty_cycle;
      else
        ++ledger_.dl_fail_busy;
    }
    if (have_data) {
      QueuedDownlink& q = gw_.data_queue[static_cast<size_t>(d)].front();
      if (--q.cycles_left <= 0) {
        gw_.data_queue[static_cast<size_t>(d)].pop_front();
        ++ledger_.downlink_attempted;
        if (gate_blocked)
          ++ledger_.dl_fail_duty_cycle;
        else
          ++ledger_.dl_fail_busy;
      }
    }
    return;
  }

  CommittedDownlink cd;
  cd.target = d;
  cd.has_ack = need_ack;
  cd.has_data = have_data;
  cd.uplink_attempt = need_ack ? up.attempt : 0;
  cd.uplink_frame = need_ack ? static_cast<uint32_t>(up.frame_id) : 0;

  uint32_t record_frame_id;
  if (have_data) {
    record_frame_id = gw_.data_queue[static_cast<size_t>(d)].front().id;
    gw_.data_queue[static_cast<size_t>(d)].pop_front();
  } else {
    record_frame_id = static_cast<uint32_t>(up.frame_id);
  }

  Transmission& tx = cd.tx;
  tx.source = kGateway;
  tx.destination = d;
  tx.direction = Direction::Downlink;
  tx.kind = kind;
  tx.radio = dl_radio;
  tx.start = dl_start;
  tx.airtime = dl_air;
  tx.payload_len = payload;
  tx.attempt = cd.uplink_attempt;
  tx.frame_id = record_frame_id;

  const double shadow = shadow_rng_.normal(0.0, cfg_.link.shadow_sigma_db);
  const double rssi =
      dl_radio.tx_power_dbm - path_loss_db(cfg_.link, dev.place.distance_m, shadow);
  cd.above_sensitivity = rssi >= cfg_.link.sensitivity_dbm(dl_radio.sf, dl_radio.bw_khz);
  append_log(tx, false, rssi, &cd.log_idx);

  gw_.committed.push_back(cd);
  const size_t idx = gw_.committed.size() - 1;
  gw_.busy.push_back(idx);
  queue_.schedule(tx.end(), EventKind::TxEnd, kGateway, static_cast<int64_t>(idx));

  if (need_ack) {
    const SimTime resolve = tx.end() + kAckGuard;
    if (resolve > dev.ack_deadline) {  // slower than the stock RX2 ACK, e.g. piggybacked data
      queue_.cancel(dev.ack_timeout);
      dev.ack_deadline = resolve;
      dev.ack_timeout = queue_.schedule(resolve, EventKind::AckTimeout, d, 0);
    }
  }
}

void Simulation::on_downlink_end(size_t committed_idx) {
  CommittedDownlink& cd = gw_.committed[committed_idx];
  const TxOutcome outcome =
      cd.above_sensitivity ? TxOutcome::Delivered : TxOutcome::LinkLost;
  if (cfg_.record_event_log) log_[cd.log_idx].outcome = outcome;

  const auto busy_it = std::find(gw_.busy.begin(), gw_.busy.end(), committed_idx);
  if (busy_it != gw_.busy.end()) gw_.busy.erase(busy_it);

  Device& dev = devices_[static_cast<size_t>(cd.target)];
  if (cd.has_ack) {
    ++ledger_.downlink_attempted;
    if (outcome == TxOutcome::Delivered) {
      ++ledger_.downlink_delivered;
      if (dev.phase != Phase::WaitAck || !dev.frame || dev.frame->id != cd.uplink_frame)
        throw std::logic_error("ACK delivered to a device that is not waiting for it");
      ++ledger_.acked_by_attempt[static_cast<size_t>(cd.uplink_attempt - 1)];
      queue_.cancel(dev.ack_timeout);
      dev.ack_timeout = {};
      complete_frame(cd.target);
    } else {
      ++ledger_.dl_fail_link;  // device retries off its own timer
    }
  }
  if (cd.has_data) {
    ++ledger_.downlink_attempted;
    if (outcome == TxOutcome::Delivered)
      ++ledger_.downlink_delivered;
    else
      ++ledger_.dl_fail_link;
  }
}

void Simulation::on_ack_timeout(int32_t d) {
  Device& dev = devices_[static_cast<size_t>(d)];
  dev.ack_timeout = {};
  PendingFrame& frame = *dev.frame;
  if (frame.attempt >= cfg_.mac.max_attempts) {
    ++ledger_.gave_up;
    complete_frame(d);
    return;
  }
  ++frame.attempt;
  const SimTime backoff = SimTime::ms(
      dev.backoff_rng.uniform(cfg_.mac.backoff_min.to_ms(), cfg_.mac.backoff_max.to_ms()));
  dev.phase = Phase::WaitGate;
  queue_.schedule(later(queue_.now(), dev.gate.blocked_until) + backoff, EventKind::UplinkDue, d,
                  1);
}

void Simulation::on_downlink_due() {
  const auto target = static_cast<int32_t>(
      downlink_rng_.uniform_int(static_cast<uint32_t>(cfg_.n_nodes)));
  gw_.data_queue[static_cast<size_t>(target)].push_back(
      {kDownlinkIdBit | ++next_downlink_id_, cfg_.mac.dl_retry_cycles});
  ++ledger_.downlink_generated;
  const double mean_s = cfg_.mean_send_interval_s / (cfg_.downlink_fraction * cfg_.n_nodes);
  queue_.schedule(queue_.now() + SimTime::seconds(downlink_rng_.exponential(mean_s)),
                  EventKind::DownlinkDue, kGateway, 0);
}

void Simulation::complete_frame(int32_t d) {
  Device& dev = devices_[static_cast<size_t>(d)];
  dev.frame.reset();
  dev.phase = Phase::Idle;
  if (!dev.backlog.empty()) start_wait_gate(d);
}

void Simulation::append_log(const Transmission& tx, bool confirmed, double rssi,
                            size_t* idx_out) {
  if (!cfg_.record_event_log) {
    *idx_out = 0;
    return;
  }
  TransmissionRecord r;
  r.start_ms = tx.start.to_ms();
  r.airtime_ms = tx.airtime.to_ms();
  r.freq_mhz = static_cast<float>(tx.radio.freq_mhz);
  r.rssi_dbm = static_cast<float>(rssi);
  r.tx_power_dbm = static_cast<float>(tx.radio.tx_power_dbm);
  r.frame_id = static_cast<uint32_t>(tx.frame_id);
  r.actor = tx.source;
  r.target = tx.destination;
  r.sf = static_cast<uint8_t>(tx.radio.sf);
  r.attempt = static_cast<uint8_t>(tx.attempt);
  r.confirmed = confirmed ? 1 : 0;
  r.direction = tx.direction;
  r.kind = tx.kind;
  r.outcome = TxOutcome::Pending;
  *idx_out = log_.size();
  log_.push_back(r);
}

DutyCycleGate& Simulation::gw_gate(SubBand band) {
  return band == SubBand::G1 ? gw_.g1 : gw_.g3;
}

SimResult simulate(const ScenarioConfig& cfg, uint64_t run_seed) {
  Simulation sim(cfg, run_seed);
  return sim.run();
}

}  // namespace lwsim
