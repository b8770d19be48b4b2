// Experiment description: scenario configuration (defaults, flat key=value
// file format), node placement over the coverage disc, and per-node traffic
// generation.
#pragma once

#include <string>
#include <vector>

#include "lwsim/mac.hpp"

namespace lwsim {

enum class TrafficModel : uint8_t { Exponential, Periodic };

struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& msg)
      : std::runtime_error("config key '" + k + "': " + msg), key(std::move(k)) {}
};

struct ScenarioConfig {
  int n_nodes = 100;
  double sim_days = 57.0;
  int replications = 15;
  uint64_t seed = 1;

  std::vector<double> channels_mhz = {868.1, 868.3, 868.5};
  int bw_khz = 125;
  int cr = 1;  // 4/5
  double tx_power_dbm = 14.0;
  double gw_tx_power_dbm = 14.0;
  int payload_len = 20;
  int preamble_syms = 8;
  double capture_threshold_db = 6.0;

  double mean_send_interval_s = 1000.0;
  TrafficModel traffic_model = TrafficModel::Exponential;
  double period_jitter_frac = 0.1;  // periodic mode only
  double confirmed_fraction = 0.0;
  double downlink_fraction = 0.0;

  bool record_event_log = true;

  MacParams mac;
  LinkModel link;
  EnergyModel energy;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Applies one key/value pair; throws ConfigError on unknown keys or malformed
// values. The same table backs the file loader, CLI overrides and the
// serializer, so documented keys stay in sync.
void apply_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);

// Flat text format: one `key = value` per line, `#` starts a comment.
void apply_scenario_text(ScenarioConfig& cfg, const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

// Effective configuration as scenario-file text (round-trips through the
// parser; useful for reproducing runs).
std::string to_config_text(const ScenarioConfig& cfg);

struct NodePlacement {
  double x_m = 0.0;
  double y_m = 0.0;
  double distance_m = 0.0;  // from the gateway at the origin
  RadioParams radio;
};

struct Topology {
  std::vector<NodePlacement> nodes;
  double max_range_m = 0.0;
};

// Uniform placement over the disc whose radius is the zero-shadow SF12 range;
// every node gets the smallest SF its link budget clears and a uniformly
// chosen channel. Same (seed, stream) in, same topology out.
Topology generate_topology(const ScenarioConfig& cfg, RngStream& placement);

// Fresh-uplink arrival process, chained off previous arrival times so the
// aggregate rate stays n_nodes / mean_send_interval regardless of MAC
// backpressure. The confirmed draw is consumed even for fractions 0 and 1 so
// arrival sequences stay identical across confirmed_fraction settings.
class TrafficProcess {
 public:
  explicit TrafficProcess(const ScenarioConfig& cfg)
      : model_(cfg.traffic_model),
        mean_(SimTime::seconds(cfg.mean_send_interval_s)),
        jitter_(cfg.period_jitter_frac),
        confirmed_fraction_(cfg.confirmed_fraction) {}

  SimTime next_uplink_time(SimTime prev_arrival, RngStream& rng) const;
  bool draw_confirmed(RngStream& rng) const;

 private:
  TrafficModel model_;
  SimTime mean_;
  double jitter_;
  double confirmed_fraction_;
};

}  // namespace lwsim
