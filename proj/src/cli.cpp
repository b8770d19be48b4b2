#include "lwsim/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lwsim/runner.hpp"

namespace lwsim {
namespace {

struct CliOptions {
  std::string config_path;
  bool paper = false;
  std::vector<int> nodes;
  double days = 0.0;
  int replications = 0;
  std::vector<double> confirmed;
  std::vector<double> downlink;
  std::vector<int> max_attempts;
  bool dr_decay = false;
  double mean_interval_s = 0.0;
  int payload = 0;
  uint64_t seed = 0;
  std::string out_dir;
  int parallel = 0;
  bool event_log = false;
  bool quiet = false;
};

void add_flags(CLI::App* cmd, CliOptions& o, bool axes) {
  const char* many = axes ? " (comma-separated list sweeps the axis)" : "";
  cmd->add_option("--config", o.config_path, "Scenario file, one `key = value` per line")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--paper", o.paper,
                "Full-scale profile (57 days, 15 replications) instead of the quick default "
                "(2 days, 5 replications)");
  cmd->add_option("--nodes", o.nodes, std::string("Deployed end devices") + many)
      ->delimiter(',');
  cmd->add_option("--days", o.days, "Simulated duration in days");
  cmd->add_option("--replications", o.replications, "Independent replications per point");
  cmd->add_option("--confirmed", o.confirmed,
                  std::string("Fraction of uplinks requesting an ACK, 0..1") + many)
      ->delimiter(',');
  cmd->add_option("--downlink", o.downlink,
                  std::string("Downlink-data rate as a fraction of the uplink rate, 0..1") +
                      many)
      ->delimiter(',');
  cmd->add_option("--max-attempts", o.max_attempts,
                  std::string("Transmissions allowed per confirmed frame") + many)
      ->delimiter(',');
  cmd->add_flag("--dr-decay,!--no-dr-decay", o.dr_decay,
                "Drop the data rate (raise SF) every two failed attempts");
  cmd->add_option("--mean-interval", o.mean_interval_s,
                  "Mean seconds between fresh uplinks per device");
  cmd->add_option("--payload", o.payload, "Uplink application payload, bytes");
  cmd->add_option("--seed", o.seed, "Base seed; replication r runs with seed + r");
  cmd->add_option("--out", o.out_dir,
                  "Output directory (default: $LWSIM_OUT, else ./results)");
  cmd->add_option("--parallel", o.parallel,
                  "Worker threads, 0 = all hardware threads");
  cmd->add_flag("--event-log", o.event_log,
                "Also write one transmission log per run (events_p<P>_r<R>.txt)");
  cmd->add_flag("--quiet", o.quiet, "Suppress per-run progress lines");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Precedence, lowest to highest: quick profile, --paper, --config file,
// explicit flags.
ScenarioConfig effective_base(const CLI::App& cmd, const CliOptions& o) {
  ScenarioConfig base;
  base.sim_days = 2.0;
  base.replications = 5;
  if (o.paper) {
    base.sim_days = 57.0;
    base.replications = 15;
  }
  if (cmd.count("--config")) apply_scenario_text(base, read_file(o.config_path));
  if (cmd.count("--days")) base.sim_days = o.days;
  if (cmd.count("--replications")) base.replications = o.replications;
  if (cmd.count("--dr-decay")) base.mac.dr_decay = o.dr_decay;
  if (cmd.count("--mean-interval")) base.mean_send_interval_s = o.mean_interval_s;
  if (cmd.count("--payload")) base.payload_len = o.payload;
  if (cmd.count("--seed")) base.seed = o.seed;
  return base;
}

void require_scalar_axes(const CliOptions& o) {
  if (o.nodes.size() > 1 || o.confirmed.size() > 1 || o.downlink.size() > 1 ||
      o.max_attempts.size() > 1)
    throw ConfigError("run", "multiple axis values need the sweep subcommand");
}

// Applies single-valued axis flags onto the base config.
void fold_scalar_axes(ScenarioConfig& cfg, const CliOptions& o) {
  if (!o.nodes.empty()) cfg.n_nodes = o.nodes.front();
  if (!o.confirmed.empty()) cfg.confirmed_fraction = o.confirmed.front();
  if (!o.downlink.empty()) cfg.downlink_fraction = o.downlink.front();
  if (!o.max_attempts.empty()) cfg.mac.max_attempts = o.max_attempts.front();
}

double mean_of(const std::vector<RunMetrics>& reps, double RunMetrics::* field) {
  double sum = 0.0;
  size_t n = 0;
  for (const RunMetrics& m : reps) {
    const double v = m.*field;
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

int execute(const CLI::App& cmd, const CliOptions& o, bool axes, std::ostream& out,
            std::ostream& err) {
  ScenarioConfig base = effective_base(cmd, o);
  SweepSpec spec;
  if (axes) {
    spec.base = std::move(base);
    spec.n_nodes = o.nodes;
    spec.confirmed_fraction = o.confirmed;
    spec.downlink_fraction = o.downlink;
    spec.max_attempts = o.max_attempts;
  } else {
    require_scalar_axes(o);
    fold_scalar_axes(base, o);
    spec.base = std::move(base);
  }
  const std::vector<ScenarioConfig> points = expand_sweep(spec);

  std::string out_dir = o.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("LWSIM_OUT");
    out_dir = (env && *env) ? env : "results";
  }
  std::filesystem::create_directories(out_dir);

  RunHook hook;
  if (o.event_log) {
    hook = [&out_dir](size_t p, int r, const SimResult& res) {
      char name[64];
      std::snprintf(name, sizeof name, "events_p%zu_r%d.txt", p, r);
      std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
      write_event_log(res.log, f);
    };
  }

  const auto results = run_sweep(points, o.parallel, hook, o.quiet ? nullptr : &err);

  const std::filesystem::path csv_path = std::filesystem::path(out_dir) / "results.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    write_results(results, csv);
  }

  out << "point  nodes  confirmed  downlink  attempts    goodput  dl_ratio  ack_cdf_1  "
         "energy_mJ\n";
  char line[160];
  for (size_t p = 0; p < points.size(); ++p) {
    const ScenarioConfig& cfg = points[p];
    std::snprintf(line, sizeof line,
                  "%5zu  %5d  %9.3g  %8.3g  %8d  %9.4f  %8.4f  %9.4f  %9.3f\n", p,
                  cfg.n_nodes, cfg.confirmed_fraction, cfg.downlink_fraction,
                  cfg.mac.max_attempts, mean_of(results[p], &RunMetrics::goodput),
                  mean_of(results[p], &RunMetrics::downlink_delivery_ratio),
                  mean_of(results[p], &RunMetrics::ack_cdf_1),
                  mean_of(results[p], &RunMetrics::energy_mean_mj_per_node));
    out << line;
  }
  out << "wrote " << csv_path.string() << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LoRaWAN network simulator: capacity, reliability and transmit energy for "
               "Class-A deployments with confirmed traffic"};
  app.set_version_flag("--version", "lwsim 1.0.0");
  app.require_subcommand(1);

  CliOptions o;
  CLI::App* run = app.add_subcommand("run", "Simulate one scenario point");
  CLI::App* sweep = app.add_subcommand("sweep", "Simulate a grid of scenario points");
  CLI::App* print_cfg =
      app.add_subcommand("print-config", "Print the effective scenario configuration");
  add_flags(run, o, false);
  add_flags(sweep, o, true);
  add_flags(print_cfg, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (print_cfg->parsed()) {
      ScenarioConfig cfg = effective_base(*print_cfg, o);
      require_scalar_axes(o);
      fold_scalar_axes(cfg, o);
      cfg.validate();
      out << to_config_text(cfg);
      return 0;
    }
    const bool axes = sweep->parsed();
    return execute(axes ? *sweep : *run, o, axes, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lwsim
