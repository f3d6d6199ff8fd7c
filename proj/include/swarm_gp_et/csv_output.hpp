#pragma once

// CSV artifacts of a Monte-Carlo invocation. All numbers are written with 17
// significant digits so identical runs give byte-identical files.

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/monte_carlo.hpp"
#include "swarm_gp_et/simulation.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

namespace swarm_gp_et::csv {

inline std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

inline void write_timeseries(std::ostream& out, const RunMetrics& m) {
  out << "t,err_norm,V";
  for (int i = 1; i <= m.agent_count; ++i)
    for (int k = 1; k <= m.order; ++k) out << ",x_" << i << '_' << k;
  out << '\n';
  for (std::size_t r = 0; r < m.time.size(); ++r) {
    out << m.time[r] << ',' << m.error_norm[r] << ',' << m.lyapunov[r];
    if (r < m.states.size())
      for (Eigen::Index k = 0; k < m.states[r].size(); ++k) out << ',' << m.states[r](k);
    out << '\n';
  }
}

/// One row per event, agents 1-based, in event order.
inline void write_triggers(std::ostream& out, const RunMetrics& m) {
  out << "agent,time\n";
  for (const auto& e : m.triggers.events()) out << e.agent + 1 << ',' << e.time << '\n';
}

inline void write_summary_header(std::ostream& out, int agents) {
  out << "mode,run,seed,max_err";
  for (int i = 1; i <= agents; ++i) out << ",triggers_agent_" << i;
  out << ",dataset_sizes,aborted_flag\n";
}

/// dataset_sizes is a ';'-separated per-agent list.
inline void write_summary_row(std::ostream& out, int run, const RunMetrics& m) {
  out << to_string(m.mode) << ',' << run << ',' << m.seed << ',' << m.max_tracking_error;
  for (int i = 0; i < m.agent_count; ++i) out << ',' << m.trigger_count(i);
  out << ',';
  for (std::size_t i = 0; i < m.dataset_sizes.size(); ++i)
    out << (i ? ";" : "") << m.dataset_sizes[i];
  out << ',' << (m.aborted ? 1 : 0) << '\n';
}

/// Aborted runs and their diagnostics, kept out of summary.csv.
inline void write_diagnostics_header(std::ostream& out) { out << "mode,run,seed,kind,detail\n"; }

inline void write_diagnostics_row(std::ostream& out, int run, const RunMetrics& m) {
  std::string detail = m.diagnostic;
  for (char& c : detail)
    if (c == '"') c = '\'';
  out << to_string(m.mode) << ',' << run << ',' << m.seed << ',' << m.abort_kind << ",\""
      << detail << "\"\n";
}

inline std::string run_file(const std::string& kind, TriggerMode mode, int run) {
  return kind + "_" + std::string(to_string(mode)) + "_" + std::to_string(run) + ".csv";
}

}  // namespace swarm_gp_et::csv
