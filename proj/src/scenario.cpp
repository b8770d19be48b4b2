#include "lwsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lwsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<int>(n);
  } catch (...) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return n;
  } catch (...) {
    throw ConfigError(key, "expected an unsigned integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key, "empty list element");
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
  return out;
}

// "sensitivity_sf<sf>_bw<bw>" -> (sf, bw column) or false
bool parse_sensitivity_key(const std::string& key, int& sf, int& col) {
  int bw = 0;
  if (std::sscanf(key.c_str(), "sensitivity_sf%d_bw%d", &sf, &bw) != 2) return false;
  if (sf < 7 || sf > 12) return false;
  col = bw == 125 ? 0 : bw == 250 ? 1 : bw == 500 ? 2 : -1;
  return col >= 0;
}

bool parse_current_key(const std::string& key, int& dbm) {
  return std::sscanf(key.c_str(), "tx_current_ma_%d", &dbm) == 1;
}

std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void apply_key(ScenarioConfig& c, const std::string& key, const std::string& value) {
  if (key == "n_nodes") c.n_nodes = parse_int(key, value);
  else if (key == "sim_days") c.sim_days = parse_double(key, value);
  else if (key == "replications") c.replications = parse_int(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "channels") c.channels_mhz = parse_list(key, value);
  else if (key == "bw_khz") c.bw_khz = parse_int(key, value);
  else if (key == "cr") c.cr = parse_int(key, value);
  else if (key == "tx_power_dbm") c.tx_power_dbm = parse_double(key, value);
  else if (key == "gw_tx_power_dbm") c.gw_tx_power_dbm = parse_double(key, value);
  else if (key == "payload_len") c.payload_len = parse_int(key, value);
  else if (key == "preamble_syms") c.preamble_syms = parse_int(key, value);
  else if (key == "capture_threshold_db") c.capture_threshold_db = parse_double(key, value);
  else if (key == "mean_send_interval_s") c.mean_send_interval_s = parse_double(key, value);
  else if (key == "traffic_model") {
    if (value == "exponential") c.traffic_model = TrafficModel::Exponential;
    else if (value == "periodic") c.traffic_model = TrafficModel::Periodic;
    else throw ConfigError(key, "expected exponential|periodic, got '" + value + "'");
  }
  else if (key == "period_jitter_frac") c.period_jitter_frac = parse_double(key, value);
  else if (key == "confirmed_fraction") c.confirmed_fraction = parse_double(key, value);
  else if (key == "downlink_fraction") c.downlink_fraction = parse_double(key, value);
  else if (key == "record_event_log") c.record_event_log = parse_bool(key, value);
  else if (key == "max_attempts") c.mac.max_attempts = parse_int(key, value);
  else if (key == "dr_decay") c.mac.dr_decay = parse_bool(key, value);
  else if (key == "rx1_delay_s") c.mac.rx1_delay = SimTime::seconds(parse_double(key, value));
  else if (key == "rx2_delay_s") c.mac.rx2_delay = SimTime::seconds(parse_double(key, value));
  else if (key == "rx2_freq_mhz") c.mac.rx2_radio.freq_mhz = parse_double(key, value);
  else if (key == "rx2_sf") c.mac.rx2_radio.sf = parse_int(key, value);
  else if (key == "rx2_bw_khz") c.mac.rx2_radio.bw_khz = parse_int(key, value);
  else if (key == "rx2_mode") {
    if (value == "default") c.mac.rx2_mode = Rx2Mode::Default;
    else if (value == "same_as_rx1") c.mac.rx2_mode = Rx2Mode::SameAsRx1;
    else throw ConfigError(key, "expected default|same_as_rx1, got '" + value + "'");
  }
  else if (key == "ack_payload_len") c.mac.ack_payload_len = parse_int(key, value);
  else if (key == "mac_overhead_bytes") c.mac.mac_overhead_bytes = parse_int(key, value);
  else if (key == "backoff_min_s") c.mac.backoff_min = SimTime::seconds(parse_double(key, value));
  else if (key == "backoff_max_s") c.mac.backoff_max = SimTime::seconds(parse_double(key, value));
  else if (key == "dl_retry_cycles") c.mac.dl_retry_cycles = parse_int(key, value);
  else if (key == "g1_duty_limit") c.mac.g1_duty_limit = parse_double(key, value);
  else if (key == "g3_duty_limit") c.mac.g3_duty_limit = parse_double(key, value);
  else if (key == "ref_distance_m") c.link.ref_distance_m = parse_double(key, value);
  else if (key == "ref_loss_db") c.link.ref_loss_db = parse_double(key, value);
  else if (key == "path_loss_exponent") c.link.path_loss_exponent = parse_double(key, value);
  else if (key == "shadow_sigma_db") c.link.shadow_sigma_db = parse_double(key, value);
  else if (key == "supply_voltage") c.energy.supply_voltage = parse_double(key, value);
  else {
    int sf = 0, col = 0, dbm = 0;
    if (parse_sensitivity_key(key, sf, col))
      c.link.sensitivity[sf - 7][col] = parse_double(key, value);
    else if (parse_current_key(key, dbm))
      c.energy.tx_current_ma[dbm] = parse_double(key, value);
    else
      throw ConfigError(key, "unknown key");
  }
}

void apply_scenario_text(ScenarioConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno),
                        "expected 'key = value', got '" + line + "'");
    apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  ScenarioConfig cfg;
  apply_scenario_text(cfg, buf.str());
  return cfg;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw ConfigError(key, msg);
  };
  if (n_nodes < 1) fail("n_nodes", "must be >= 1");
  if (sim_days <= 0) fail("sim_days", "must be > 0");
  if (replications < 1) fail("replications", "must be >= 1");
  if (channels_mhz.empty()) fail("channels", "need at least one uplink channel");
  for (double f : channels_mhz)
    if (sub_band_for(f) != SubBand::G1)
      fail("channels", format_num(f) + " MHz is outside the 1% uplink sub-band (868.0-868.6)");
  if (bw_khz != 125 && bw_khz != 250 && bw_khz != 500) fail("bw_khz", "must be 125, 250 or 500");
  if (cr < 1 || cr > 4) fail("cr", "must be 1..4 (4/5..4/8)");
  if (payload_len < 0 || payload_len > 255) fail("payload_len", "must be 0..255");
  if (preamble_syms < 6) fail("preamble_syms", "must be >= 6");
  if (capture_threshold_db < 0) fail("capture_threshold_db", "must be >= 0");
  if (mean_send_interval_s <= 0) fail("mean_send_interval_s", "must be > 0");
  if (period_jitter_frac < 0 || period_jitter_frac >= 1)
    fail("period_jitter_frac", "must be in [0, 1)");
  if (confirmed_fraction < 0 || confirmed_fraction > 1)
    fail("confirmed_fraction", "must be in [0, 1]");
  if (downlink_fraction < 0 || downlink_fraction > 1)
    fail("downlink_fraction", "must be in [0, 1]");
  if (mac.max_attempts < 1 || mac.max_attempts > 64)
    fail("max_attempts", "must be 1..64");
  if (mac.rx1_delay < SimTime::ms(0)) fail("rx1_delay_s", "must be >= 0");
  if (mac.rx2_delay <= mac.rx1_delay) fail("rx2_delay_s", "must be after rx1_delay_s");
  if (!sub_band_for(mac.rx2_radio.freq_mhz))
    fail("rx2_freq_mhz", "not in a known EU868 sub-band");
  if (mac.rx2_radio.sf < 7 || mac.rx2_radio.sf > 12) fail("rx2_sf", "must be 7..12");
  if (mac.rx2_radio.bw_khz != 125 && mac.rx2_radio.bw_khz != 250 && mac.rx2_radio.bw_khz != 500)
    fail("rx2_bw_khz", "must be 125, 250 or 500");
  if (mac.ack_payload_len < 0) fail("ack_payload_len", "must be >= 0");
  if (mac.mac_overhead_bytes < 0) fail("mac_overhead_bytes", "must be >= 0");
  if (mac.backoff_min < SimTime::ms(0) || mac.backoff_max < mac.backoff_min)
    fail("backoff_min_s", "need 0 <= backoff_min_s <= backoff_max_s");
  if (mac.dl_retry_cycles < 1) fail("dl_retry_cycles", "must be >= 1");
  if (mac.g1_duty_limit <= 0 || mac.g1_duty_limit > 1) fail("g1_duty_limit", "must be in (0, 1]");
  if (mac.g3_duty_limit <= 0 || mac.g3_duty_limit > 1) fail("g3_duty_limit", "must be in (0, 1]");
  if (link.ref_distance_m <= 0) fail("ref_distance_m", "must be > 0");
  if (link.path_loss_exponent <= 0) fail("path_loss_exponent", "must be > 0");
  if (link.shadow_sigma_db < 0) fail("shadow_sigma_db", "must be >= 0");
  if (energy.supply_voltage <= 0) fail("supply_voltage", "must be > 0");
  int key = static_cast<int>(std::lround(tx_power_dbm));
  if (!energy.tx_current_ma.count(key))
    fail("tx_power_dbm", "no tx_current_ma_" + std::to_string(key) + " entry for this power");
}

std::string to_config_text(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "n_nodes = " << c.n_nodes << "\n";
  out << "sim_days = " << format_num(c.sim_days) << "\n";
  out << "replications = " << c.replications << "\n";
  out << "seed = " << c.seed << "\n";
  out << "channels = ";
  for (size_t i = 0; i < c.channels_mhz.size(); ++i)
    out << (i ? ", " : "") << format_num(c.channels_mhz[i]);
  out << "\n";
  out << "bw_khz = " << c.bw_khz << "\n";
  out << "cr = " << c.cr << "\n";
  out << "tx_power_dbm = " << format_num(c.tx_power_dbm) << "\n";
  out << "gw_tx_power_dbm = " << format_num(c.gw_tx_power_dbm) << "\n";
  out << "payload_len = " << c.payload_len << "\n";
  out << "preamble_syms = " << c.preamble_syms << "\n";
  out << "capture_threshold_db = " << format_num(c.capture_threshold_db) << "\n";
  out << "mean_send_interval_s = " << format_num(c.mean_send_interval_s) << "\n";
  out << "traffic_model = "
      << (c.traffic_model == TrafficModel::Exponential ? "exponential" : "periodic") << "\n";
  out << "period_jitter_frac = " << format_num(c.period_jitter_frac) << "\n";
  out << "confirmed_fraction = " << format_num(c.confirmed_fraction) << "\n";
  out << "downlink_fraction = " << format_num(c.downlink_fraction) << "\n";
  out << "record_event_log = " << (c.record_event_log ? "true" : "false") << "\n";
  out << "max_attempts = " << c.mac.max_attempts << "\n";
  out << "dr_decay = " << (c.mac.dr_decay ? "true" : "false") << "\n";
  out << "rx1_delay_s = " << format_num(c.mac.rx1_delay.to_seconds()) << "\n";
  out << "rx2_delay_s = " << format_num(c.mac.rx2_delay.to_seconds()) << "\n";
  out << "rx2_freq_mhz = " << format_num(c.mac.rx2_radio.freq_mhz) << "\n";
  out << "rx2_sf = " << c.mac.rx2_radio.sf << "\n";
  out << "rx2_bw_khz = " << c.mac.rx2_radio.bw_khz << "\n";
  out << "rx2_mode = " << (c.mac.rx2_mode == Rx2Mode::Default ? "default" : "same_as_rx1") << "\n";
  out << "ack_payload_len = " << c.mac.ack_payload_len << "\n";
  out << "mac_overhead_bytes = " << c.mac.mac_overhead_bytes << "\n";
  out << "backoff_min_s = " << format_num(c.mac.backoff_min.to_seconds()) << "\n";
  out << "backoff_max_s = " << format_num(c.mac.backoff_max.to_seconds()) << "\n";
  out << "dl_retry_cycles = " << c.mac.dl_retry_cycles << "\n";
  out << "g1_duty_limit = " << format_num(c.mac.g1_duty_limit) << "\n";
  out << "g3_duty_limit = " << format_num(c.mac.g3_duty_limit) << "\n";
  out << "ref_distance_m = " << format_num(c.link.ref_distance_m) << "\n";
  out << "ref_loss_db = " << format_num(c.link.ref_loss_db) << "\n";
  out << "path_loss_exponent = " << format_num(c.link.path_loss_exponent) << "\n";
  out << "shadow_sigma_db = " << format_num(c.link.shadow_sigma_db) << "\n";
  out << "supply_voltage = " << format_num(c.energy.supply_voltage) << "\n";
  static const int bws[3] = {125, 250, 500};
  for (int sf = 7; sf <= 12; ++sf)
    for (int col = 0; col < 3; ++col)
      out << "sensitivity_sf" << sf << "_bw" << bws[col] << " = "
          << format_num(c.link.sensitivity[sf - 7][col]) << "\n";
  for (const auto& [dbm, ma] : c.energy.tx_current_ma)
    out << "tx_current_ma_" << dbm << " = " << format_num(ma) << "\n";
  return out.str();
}

Topology generate_topology(const ScenarioConfig& cfg, RngStream& placement) {
  Topology topo;
  topo.max_range_m = max_range_m(cfg.link, cfg.tx_power_dbm, cfg.bw_khz);
  topo.nodes.reserve(cfg.n_nodes);
  for (int i = 0; i < cfg.n_nodes; ++i) {
    double r = topo.max_range_m * std::sqrt(placement.uniform01());
    if (r < 1.0) r = 1.0;  // keep the loss model away from its d -> 0 pole
    double theta = placement.uniform(0.0, 2.0 * kPi);
    NodePlacement n;
    n.x_m = r * std::cos(theta);
    n.y_m = r * std::sin(theta);
    n.distance_m = r;
    auto sf = min_spreading_factor(cfg.link, r, cfg.tx_power_dbm, cfg.bw_khz);
    if (!sf)
      throw std::runtime_error("topology: node placed out of range; check link model");
    n.radio.sf = *sf;
    n.radio.bw_khz = cfg.bw_khz;
    n.radio.cr = cfg.cr;
    n.radio.freq_mhz = cfg.channels_mhz[placement.uniform_int(
        static_cast<uint32_t>(cfg.channels_mhz.size()))];
    n.radio.tx_power_dbm = cfg.tx_power_dbm;
    topo.nodes.push_back(n);
  }
  return topo;
}

SimTime TrafficProcess::next_uplink_time(SimTime prev_arrival, RngStream& rng) const {
  if (model_ == TrafficModel::Exponential)
    return prev_arrival + SimTime::ms(rng.exponential(mean_.to_ms()));
  // Periodic: the jitter draw is consumed even at zero jitter so sequences
  // stay aligned across jitter settings.
  double u = rng.uniform(-1.0, 1.0);
  return prev_arrival + mean_ * (1.0 + jitter_ * u);
}

bool TrafficProcess::draw_confirmed(RngStream& rng) const {
  return rng.uniform01() < confirmed_fraction_;
}

}  // namespace lwsim
