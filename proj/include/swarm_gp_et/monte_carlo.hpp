#pragma once

// Repeated episodes over consecutive seeds, run on a small worker pool.

#include "swarm_gp_et/scenario.hpp"
#include "swarm_gp_et/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>
#include <vector>

namespace swarm_gp_et {

struct MonteCarloOptions {
  int runs = 1;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  EpisodeOptions episode;
  // Called once per finished run, from the worker that produced it, under a lock.
  std::function<void(int run, const RunMetrics&)> on_run;
};

struct ModeSummary {
  TriggerMode mode = TriggerMode::None;
  int runs = 0;
  int completed = 0;
  int aborted = 0;
  double mean_max_error = 0.0;
  double variance_max_error = 0.0;
  std::vector<double> mean_triggers;      // per agent
  std::vector<double> variance_triggers;  // per agent
};

struct MonteCarloResult {
  std::vector<RunMetrics> runs;  // index r used seed base_seed + r
  ModeSummary summary;
};

/// Sample mean and (n - 1)-normalized variance; variance is 0 for n < 2.
inline std::pair<double, double> mean_and_variance(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(v.size() - 1)};
}

/// Aborted runs are counted but left out of every mean and variance.
inline ModeSummary summarize(TriggerMode mode, const std::vector<RunMetrics>& runs, int agents) {
  ModeSummary s;
  s.mode = mode;
  s.runs = static_cast<int>(runs.size());
  std::vector<double> errs;
  std::vector<std::vector<double>> counts(agents);
  for (const auto& r : runs) {
    if (r.aborted) {
      ++s.aborted;
      continue;
    }
    errs.push_back(r.max_tracking_error);
    for (int i = 0; i < agents; ++i) counts[i].push_back(r.trigger_count(i));
  }
  s.completed = static_cast<int>(errs.size());
  std::tie(s.mean_max_error, s.variance_max_error) = mean_and_variance(errs);
  for (int i = 0; i < agents; ++i) {
    const auto [m, v] = mean_and_variance(counts[i]);
    s.mean_triggers.push_back(m);
    s.variance_triggers.push_back(v);
  }
  return s;
}

inline MonteCarloResult monte_carlo(const Scenario& scenario, const Design& design,
                                    TriggerMode mode, const MonteCarloOptions& options) {
  if (options.runs < 1) throw InvalidArgument("runs must be at least 1");
  MonteCarloResult out;
  out.runs.resize(options.runs);
  std::atomic<int> next{0};
  std::mutex report;
  std::exception_ptr failure;

  auto worker = [&] {
    for (int r = next++; r < options.runs; r = next++) {
      try {
        RunMetrics m = run_episode(scenario, design, mode,
                                   options.base_seed + static_cast<std::uint64_t>(r),
                                   options.episode);
        std::lock_guard lock(report);
        if (options.on_run) options.on_run(r, m);
        out.runs[r] = std::move(m);
      } catch (...) {
        std::lock_guard lock(report);
        if (!failure) failure = std::current_exception();
        next = options.runs;
      }
    }
  };

  const int jobs = std::max(1, std::min(options.jobs, options.runs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  out.summary = summarize(mode, out.runs, scenario.agent_count);
  return out;
}

}  // namespace swarm_gp_et
