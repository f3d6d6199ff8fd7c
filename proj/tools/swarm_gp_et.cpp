// Command-line front end: scenario loading, design synthesis reports and
// Monte-Carlo runs with CSV output.

#include "swarm_gp_et/config.hpp"
#include "swarm_gp_et/csv_output.hpp"
#include "swarm_gp_et/monte_carlo.hpp"
#include "swarm_gp_et/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace swarm_gp_et;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

Scenario load(const Common& c) {
  if (c.config_path.empty()) return config::paper_preset(c.overrides);
  return config::parse_config_file(c.config_path, c.overrides);
}

std::vector<TriggerMode> parse_modes(const std::string& list) {
  std::vector<TriggerMode> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_trigger_mode(item));
  if (out.empty()) throw CLI::ValidationError("--modes", "needs at least one of none,centralized,distributed");
  return out;
}

void print_vector(std::ostream& out, const char* label, const std::vector<double>& v) {
  out << std::left << std::setw(28) << label;
  for (double x : v) out << ' ' << std::setw(13) << x;
  out << '\n';
}

void report_synthesis(const Scenario& s, const Design& d) {
  std::cout << std::setprecision(6);
  const auto eig = linalg::eigenvalues(d.synthesis.companion.Lambda);
  std::cout << "Lambda eigenvalues         ";
  for (Eigen::Index k = 0; k < eig.size(); ++k)
    std::cout << ' ' << eig(k).real() << (eig(k).imag() >= 0 ? "+" : "") << eig(k).imag() << 'i';
  std::cout << "\n";
  std::cout << "gain c                      " << d.gains.c << (s.auto_gain ? " (auto)" : "") << "\n";
  std::cout << "lambda_min(Q_z)             " << d.synthesis.lambda_min_Qz << "\n";
  std::cout << "xi                          " << d.synthesis.xi << "\n";
  std::cout << "chi                         " << d.synthesis.chi << "\n";
  std::vector<double> floors, eps, dwell, beta;
  for (const auto& a : d.trigger.agents) {
    floors.push_back(a.eta_floor);
    eps.push_back(a.epsilon);
    dwell.push_back(a.dwell_bound);
  }
  print_vector(std::cout, "eta_floor", floors);
  std::cout << "theta_bar_min               " << d.synthesis.theta_bar_min << "\n";
  std::cout << "theta_bar                   " << d.trigger.theta_bar << "\n";
  print_vector(std::cout, "epsilon", eps);
  print_vector(std::cout, "dwell_bound", dwell);
  for (const auto& w : d.warnings) std::cout << "warning: " << w << "\n";
}

void report_zeno(const Design& d) {
  std::cout << std::setprecision(6);
  std::vector<double> F, A, eta_bar, Fx, Fd, eps, dwell;
  for (std::size_t i = 0; i < d.zeno.size(); ++i) {
    F.push_back(d.zeno[i].F);
    A.push_back(d.zeno[i].A_norm);
    eta_bar.push_back(d.zeno[i].eta_bar);
    Fx.push_back(d.zeno[i].F_x);
    Fd.push_back(d.zeno[i].F_d);
    eps.push_back(d.trigger.agents[i].epsilon);
    dwell.push_back(d.zeno[i].dwell_bound);
  }
  print_vector(std::cout, "||A_i||", A);
  print_vector(std::cout, "eta_bar", eta_bar);
  print_vector(std::cout, "F_x", Fx);
  print_vector(std::cout, "F_d", Fd);
  print_vector(std::cout, "F", F);
  std::vector<double> lsig;
  for (const auto& b : d.bounds) lsig.push_back(b.lipschitz.stddev);
  print_vector(std::cout, "L_sigma", lsig);
  print_vector(std::cout, "epsilon", eps);
  print_vector(std::cout, "dwell_bound", dwell);
}

void print_summary(const ModeSummary& m) {
  std::cout << std::setprecision(6);
  std::cout << "[" << to_string(m.mode) << "] runs " << m.runs << ", completed " << m.completed
            << ", aborted " << m.aborted << "\n";
  std::cout << "  max tracking error   mean " << m.mean_max_error << "  variance "
            << m.variance_max_error << "\n";
  print_vector(std::cout, "  triggers mean", m.mean_triggers);
  print_vector(std::cout, "  triggers variance", m.variance_triggers);
}

struct RunArgs {
  std::string modes;
  int runs = 0;
  long long seed = -1;
  std::string out;
  int jobs = 1;
  int stride = 10;
  bool timeseries = true;
};

int do_run(const Common& common, const RunArgs& args) {
  const Scenario s = load(common);
  const std::vector<TriggerMode> modes =
      parse_modes(args.modes.empty() ? std::string(to_string(s.mode)) : args.modes);
  std::string out_dir = args.out;
  if (out_dir.empty()) {
    const char* env = std::getenv("SWARM_GP_ET_OUT");
    out_dir = env && *env ? env : "out";
  }
  fs::create_directories(out_dir);

  const Design d = synthesize(s);
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";

  MonteCarloOptions opt;
  opt.runs = args.runs > 0 ? args.runs : s.runs;
  opt.base_seed = args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : s.seed;
  opt.jobs = args.jobs;
  opt.episode.record_stride = args.stride;
  opt.episode.record_states = args.timeseries;

  std::ofstream summary = csv::open(fs::path(out_dir) / "summary.csv");
  csv::write_summary_header(summary, s.agent_count);
  std::ofstream diagnostics = csv::open(fs::path(out_dir) / "diagnostics.csv");
  csv::write_diagnostics_header(diagnostics);

  bool any_abort = false;
  for (TriggerMode mode : modes) {
    MonteCarloOptions o = opt;
    o.on_run = [&](int run, const RunMetrics& m) {
      if (args.timeseries) {
        auto ts = csv::open(fs::path(out_dir) / csv::run_file("timeseries", mode, run));
        csv::write_timeseries(ts, m);
      }
      auto tr = csv::open(fs::path(out_dir) / csv::run_file("triggers", mode, run));
      csv::write_triggers(tr, m);
    };
    const MonteCarloResult result = monte_carlo(s, d, mode, o);
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
      csv::write_summary_row(summary, static_cast<int>(r), result.runs[r]);
      if (result.runs[r].aborted) {
        csv::write_diagnostics_row(diagnostics, static_cast<int>(r), result.runs[r]);
        std::cerr << "run " << r << " (" << to_string(mode) << ") aborted: "
                  << result.runs[r].diagnostic << "\n";
      }
    }
    any_abort = any_abort || result.summary.aborted > 0;
    print_summary(result.summary);
  }
  if (!summary || !diagnostics) throw Error("failed writing CSV output in '" + out_dir + "'");
  return any_abort ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed event-triggered GP learning for multi-agent formation control"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Scenario file (default: built-in four-agent preset)");
    sub->add_option("--set", common.overrides, "Override a key, e.g. --set trigger.mode=none")
        ->take_all();
  };

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Monte-Carlo runs with CSV output");
  add_common(run);
  run->add_option("--modes", run_args.modes, "Comma-separated: none,centralized,distributed");
  run->add_option("--runs", run_args.runs, "Runs per mode (default: from scenario)")->check(CLI::PositiveNumber);
  run->add_option("--seed", run_args.seed, "Base seed; run r uses seed + r")->check(CLI::NonNegativeNumber);
  run->add_option("--out", run_args.out, "Output directory (default: $SWARM_GP_ET_OUT or ./out)");
  run->add_option("--jobs", run_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--stride", run_args.stride, "Record every k-th step in time series")->check(CLI::PositiveNumber);
  run->add_flag("!--no-timeseries", run_args.timeseries, "Skip per-run time-series files");

  CLI::App* synth = app.add_subcommand("synth", "Print the synthesized controller and trigger constants");
  add_common(synth);
  CLI::App* zeno = app.add_subcommand("zeno", "Print the minimum inter-event time certificate");
  add_common(zeno);
  app.add_subcommand("preset-paper", "Print the built-in four-agent scenario file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("preset-paper")) {
      std::cout << config::kPaperPreset;
      return 0;
    }
    if (app.got_subcommand("run")) {
      if (run->count("--modes") && run_args.modes.empty())
        throw CLI::ValidationError("--modes", "needs at least one of none,centralized,distributed");
      return do_run(common, run_args);
    }
    const Scenario s = load(common);
    const Design d = synthesize(s);
    if (app.got_subcommand("synth")) report_synthesis(s, d);
    else report_zeno(d);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "error: " << e.matrix() << " not positive definite (lambda_min = "
              << e.lambda_min() << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
