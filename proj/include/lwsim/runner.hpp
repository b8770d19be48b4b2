// Parameter sweeps: expand an axis grid into scenario points, run every
// replication (optionally across worker threads), and collect per-run metrics
// slotted deterministically by (point, replication).
#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "lwsim/metrics.hpp"
#include "lwsim/scenario.hpp"
#include "lwsim/simulation.hpp"

namespace lwsim {

// Cartesian sweep over up to four axes; an empty axis means "use the base
// value". Expansion order: n_nodes (outermost), confirmed_fraction,
// downlink_fraction, max_attempts.
struct SweepSpec {
  ScenarioConfig base;
  std::vector<int> n_nodes;
  std::vector<double> confirmed_fraction;
  std::vector<double> downlink_fraction;
  std::vector<int> max_attempts;
};

std::vector<ScenarioConfig> expand_sweep(const SweepSpec& spec);

// Called after each finished run. May run concurrently with other hooks when
// parallel > 1; keep it thread-safe or run single-threaded.
using RunHook =
    std::function<void(size_t point, int replication, const SimResult& result)>;

// Runs replications 0..replications-1 of every point with run seed
// cfg.seed + replication. parallel <= 0 picks the hardware thread count.
// progress (when non-null) gets one line per finished run. Results are
// independent of the thread schedule. The first exception thrown by a run or
// hook is rethrown once all workers stop.
std::vector<std::vector<RunMetrics>> run_sweep(const std::vector<ScenarioConfig>& points,
                                               int parallel, const RunHook& hook = {},
                                               std::ostream* progress = nullptr);

}  // namespace lwsim
