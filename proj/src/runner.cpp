#include "lwsim/runner.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace lwsim {

std::vector<ScenarioConfig> expand_sweep(const SweepSpec& spec) {
  const std::vector<int> nodes =
      spec.n_nodes.empty() ? std::vector<int>{spec.base.n_nodes} : spec.n_nodes;
  const std::vector<double> confirmed = spec.confirmed_fraction.empty()
                                            ? std::vector<double>{spec.base.confirmed_fraction}
                                            : spec.confirmed_fraction;
  const std::vector<double> downlink = spec.downlink_fraction.empty()
                                           ? std::vector<double>{spec.base.downlink_fraction}
                                           : spec.downlink_fraction;
  const std::vector<int> attempts = spec.max_attempts.empty()
                                        ? std::vector<int>{spec.base.mac.max_attempts}
                                        : spec.max_attempts;
  std::vector<ScenarioConfig> points;
  points.reserve(nodes.size() * confirmed.size() * downlink.size() * attempts.size());
  for (int n : nodes)
    for (double c : confirmed)
      for (double d : downlink)
        for (int a : attempts) {
          ScenarioConfig cfg = spec.base;
          cfg.n_nodes = n;
          cfg.confirmed_fraction = c;
          cfg.downlink_fraction = d;
          cfg.mac.max_attempts = a;
          cfg.validate();
          points.push_back(std::move(cfg));
        }
  return points;
}

std::vector<std::vector<RunMetrics>> run_sweep(const std::vector<ScenarioConfig>& points,
                                               int parallel, const RunHook& hook,
                                               std::ostream* progress) {
  struct Job {
    size_t point;
    int rep;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<RunMetrics>> results(points.size());
  for (size_t p = 0; p < points.size(); ++p) {
    results[p].resize(static_cast<size_t>(points[p].replications));
    for (int r = 0; r < points[p].replications; ++r) jobs.push_back({p, r});
  }

  unsigned workers = parallel > 0 ? static_cast<unsigned>(parallel)
                                  : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, jobs.size() ? jobs.size() : 1u);

  std::atomic<size_t> next_job{0};
  std::atomic<size_t> done{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (;;) {
      const size_t j = next_job.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;  // stop picking up work after the first error
      }
      const Job job = jobs[j];
      const ScenarioConfig& cfg = points[job.point];
      try {
        const uint64_t run_seed = cfg.seed + static_cast<uint64_t>(job.rep);
        SimResult result = simulate(cfg, run_seed);
        results[job.point][static_cast<size_t>(job.rep)] =
            RunMetrics::from(cfg, job.rep, run_seed, result.ledger, result.dispatched);
        if (hook) hook(job.point, job.rep, result);
        const size_t finished = done.fetch_add(1) + 1;
        if (progress) {
          char line[160];
          std::snprintf(line, sizeof line,
                        "[%zu/%zu] point %zu rep %d: n=%d conf=%.3g dl=%.3g attempts=%d "
                        "goodput=%.4f\n",
                        finished, jobs.size(), job.point, job.rep, cfg.n_nodes,
                        cfg.confirmed_fraction, cfg.downlink_fraction, cfg.mac.max_attempts,
                        result.ledger.sent_total ? goodput(result.ledger) : 0.0);
          std::lock_guard<std::mutex> lock(progress_mutex);
          (*progress) << line << std::flush;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace lwsim
