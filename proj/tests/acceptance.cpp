// End-to-end acceptance run on the four-agent preset. Prints one PASS/FAIL
// line per criterion. Exit status is 0 only when the set of failing criteria
// equals the --expect-fail list, so a known shortfall stays visible without
// hiding regressions (or silent fixes) elsewhere.

#include "swarm_gp_et/config.hpp"
#include "swarm_gp_et/monte_carlo.hpp"
#include "support/oracles.hpp"

#include <CLI11.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace swarm_gp_et;

namespace {

std::set<std::string> failed;
int total = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  ++total;
  if (!pass) failed.insert(name);
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MonteCarloResult batch(const Scenario& s, const Design& d, TriggerMode mode, int runs, int jobs) {
  MonteCarloOptions opt;
  opt.runs = runs;
  opt.base_seed = s.seed;
  opt.jobs = jobs;
  opt.episode.record_stride = 1000;
  opt.episode.record_states = false;
  const auto r = monte_carlo(s, d, mode, opt);
  double wall = 0.0;
  for (const auto& m : r.runs) wall += m.wall_seconds;
  std::cout << "  " << to_string(mode) << ": " << runs << " runs, " << r.summary.aborted
            << " aborted, " << fmt(wall) << " s" << std::endl;
  return r;
}

void ordering(const ModeSummary& none, const ModeSummary& cent, const ModeSummary& dist) {
  report("method-ordering",
         none.mean_max_error > cent.mean_max_error && none.mean_max_error > dist.mean_max_error,
         "mean max error none " + fmt(none.mean_max_error) + ", centralized " +
             fmt(cent.mean_max_error) + ", distributed " + fmt(dist.mean_max_error));
}

void variance(const ModeSummary& none, const ModeSummary& cent, const ModeSummary& dist) {
  const bool pass = cent.variance_max_error * 10.0 <= none.variance_max_error &&
                    dist.variance_max_error * 10.0 <= none.variance_max_error;
  report("variance-separation", pass,
         "variance none " + fmt(none.variance_max_error) + ", centralized " +
             fmt(cent.variance_max_error) + ", distributed " + fmt(dist.variance_max_error) +
             " (need each ET mode 10x below none)");
}

void data_efficiency(const ModeSummary& cent, const ModeSummary& dist) {
  bool pass = true;
  for (std::size_t i = 0; i < dist.mean_triggers.size(); ++i) {
    const double di = dist.mean_triggers[i], ci = cent.mean_triggers[i];
    pass = pass && di <= 150.0 && di < 200.0 && di >= ci && di <= 2.0 * ci;
  }
  report("data-efficiency", pass,
         "mean triggers per agent distributed " + fmt_list(dist.mean_triggers) + ", centralized " +
             fmt_list(cent.mean_triggers) +
             " (need distributed <= 150, < 200, >= centralized, <= 2x centralized)");
}

void theorem_bound(const MonteCarloResult& dist, const Design& d) {
  int inside = 0;
  double worst = 0.0;
  for (const auto& m : dist.runs) {
    if (!m.aborted && m.max_tracking_error <= d.trigger.theta_bar) ++inside;
    worst = std::max(worst, m.max_tracking_error);
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(dist.runs.size());
  report("ultimate-bound", frac >= 0.80,
         "fraction of distributed runs within theta_bar = " + fmt(d.trigger.theta_bar) + ": " +
             fmt(frac) + " (worst max error " + fmt(worst) + ", need >= 0.80)");
}

void dwell(const std::vector<std::pair<const MonteCarloResult*, const Design*>>& batches) {
  bool pass = true;
  std::string detail;
  for (const auto& [r, d] : batches) {
    double worst_ratio = INFINITY;
    long events = 0;
    for (const auto& m : r->runs)
      for (int i = 0; i < m.agent_count; ++i) {
        events += m.trigger_count(i);
        const double bound = d->trigger.agents[i].dwell_bound;
        if (m.trigger_count(i) > 1) worst_ratio = std::min(worst_ratio, m.min_gap(i) / bound);
        if (m.min_gap(i) < 0.9 * bound) pass = false;
      }
    std::vector<double> bounds;
    for (const auto& a : d->trigger.agents) bounds.push_back(a.dwell_bound);
    if (!detail.empty()) detail += "; ";
    detail += "certified " + fmt_list(bounds) + ", " + std::to_string(events) +
              " events, min gap / bound " + (std::isinf(worst_ratio) ? "n/a" : fmt(worst_ratio));
  }
  report("min-inter-event-time", pass, detail + " (need every gap >= 0.9 bound)");
}

void gp_equivalence() {
  double worst = 0.0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    const auto r = oracle::incremental_vs_dense(seed, 50, 20);
    worst = std::max({worst, r.max_mean_diff, r.max_var_diff});
  }
  report("gp-oracle-equivalence", worst < 1e-8,
         "max |incremental - dense| over 100 models: " + fmt(worst) + " (need < 1e-8)");
}

void coverage() {
  const double delta = 0.05;
  int good = 0;
  double lowest = 1.0;
  for (unsigned seed = 1; seed <= 50; ++seed) {
    const double c = oracle::prior_draw_coverage(seed, delta);
    lowest = std::min(lowest, c);
    if (c >= 1.0 - delta) ++good;
  }
  report("error-bound-coverage", good >= 45,
         std::to_string(good) + " of 50 seeds reach coverage >= " + fmt(1.0 - delta) +
             " (lowest " + fmt(lowest) + ", need >= 45)");
}

void synthesis(const Design& d) {
  const auto& s = d.synthesis;
  const double residual = lyapunov_residual(s.companion.Lambda, s.P_eps_s, s.Q_eps_s);
  const auto chain = oracle::check_chain(d.topology, d.gains, s, 1000, 2024);
  report("synthesis", residual < 1e-10 && s.lambda_min_Qz > 0.0 && chain.violations == 0,
         "Lyapunov residual " + fmt(residual) + ", lambda_min(Q_z) " + fmt(s.lambda_min_Qz) +
             ", chain violations " + std::to_string(chain.violations) + " of 1000 samples");
}

int run_cli(const std::string& cli, const std::string& args) {
  const int raw = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void determinism(const std::string& cli, int runs) {
  const fs::path base = fs::temp_directory_path() / ("swarm_acceptance_" + std::to_string(::getpid()));
  const std::string args = "run --modes none,centralized,distributed --no-timeseries --runs " +
                           std::to_string(runs) + " --out ";
  const int a = run_cli(cli, args + (base / "a").string());
  const int b = run_cli(cli, args + (base / "b").string() + " --jobs 2");
  const std::string sa = slurp(base / "a" / "summary.csv");
  const std::string sb = slurp(base / "b" / "summary.csv");
  fs::remove_all(base);
  report("determinism", a == 0 && b == 0 && !sa.empty() && sa == sb,
         "two invocations of the preset (" + std::to_string(runs) +
             " runs per mode, 1 and 2 workers): summary.csv " +
             (sa == sb && !sa.empty() ? "byte-identical" : "differs or missing") + " (" +
             std::to_string(sa.size()) + " bytes)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria on the four-agent preset"};
  std::string cli;
  int runs = 100;
  int determinism_runs = 3;
  int jobs = 1;
  std::vector<std::string> expected;
  app.add_option("--cli", cli, "Path to the swarm_gp_et executable")->required();
  app.add_option("--runs", runs, "Monte-Carlo runs per mode")->check(CLI::PositiveNumber);
  app.add_option("--determinism-runs", determinism_runs, "Runs per mode for the CLI comparison")
      ->check(CLI::PositiveNumber);
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--expect-fail", expected, "Criteria known to fail");
  CLI11_PARSE(app, argc, argv);

  const Scenario preset = config::paper_preset();
  const Design design = synthesize(preset);
  Scenario dwell_preset = preset;
  dwell_preset.epsilon_strategy = EpsilonStrategy::Dwell;
  const Design dwell_design = synthesize(dwell_preset);

  std::cout << "Monte-Carlo on the preset, " << runs << " runs per mode" << std::endl;
  const auto none = batch(preset, design, TriggerMode::None, runs, jobs);
  const auto cent = batch(preset, design, TriggerMode::Centralized, runs, jobs);
  const auto dist = batch(preset, design, TriggerMode::Distributed, runs, jobs);
  std::cout << "Distributed runs with the dwell-time epsilon strategy" << std::endl;
  const auto dist_dwell = batch(dwell_preset, dwell_design, TriggerMode::Distributed, runs, jobs);

  ordering(none.summary, cent.summary, dist.summary);
  variance(none.summary, cent.summary, dist.summary);
  data_efficiency(cent.summary, dist.summary);
  theorem_bound(dist, design);
  dwell({{&dist, &design}, {&dist_dwell, &dwell_design}});
  gp_equivalence();
  coverage();
  synthesis(design);
  determinism(cli, determinism_runs);

  const std::set<std::string> expect(expected.begin(), expected.end());
  std::cout << total - static_cast<int>(failed.size()) << " of " << total << " criteria pass";
  if (!failed.empty()) {
    std::cout << "; failing:";
    for (const auto& f : failed) std::cout << ' ' << f;
  }
  std::cout << std::endl;
  if (failed != expect) {
    std::cout << "failing set differs from the expected set:";
    for (const auto& e : expect) std::cout << ' ' << e;
    std::cout << std::endl;
    return 1;
  }
  return 0;
}
