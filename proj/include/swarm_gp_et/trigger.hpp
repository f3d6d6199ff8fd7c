#pragma once

// Event triggers for online data collection: the distributed trigger that
// each agent evaluates from local information, the centralized baseline, the
// per-agent floor constants and the minimum inter-event time certificate.

#include "swarm_gp_et/control.hpp"
#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/gp.hpp"
#include "swarm_gp_et/linalg.hpp"
#include "swarm_gp_et/topology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swarm_gp_et {

enum class TriggerMode { None, Centralized, Distributed };

inline std::string_view to_string(TriggerMode mode) {
  switch (mode) {
    case TriggerMode::None: return "none";
    case TriggerMode::Centralized: return "centralized";
    case TriggerMode::Distributed: return "distributed";
  }
  return "?";
}

inline TriggerMode parse_trigger_mode(std::string_view s) {
  if (s == "none") return TriggerMode::None;
  if (s == "centralized") return TriggerMode::Centralized;
  if (s == "distributed") return TriggerMode::Distributed;
  throw InvalidArgument("unknown trigger mode '" + std::string(s) + "'");
}

struct AgentTriggerParams {
  double epsilon = 0.0;      // slack above the post-update bound
  double sigma_floor = 0.0;  // aggregated std floor after one local insertion
  double eta_floor = 0.0;    // sqrt(beta) * sigma_floor + gamma + epsilon
  double dwell_bound = 0.0;  // guaranteed minimum inter-event time
};

struct TriggerConfig {
  TriggerMode mode = TriggerMode::Distributed;
  std::vector<AgentTriggerParams> agents;
  // Floors of the centralized baseline: sqrt(beta) * sigma_o,i + gamma.
  std::vector<double> centralized_floor;
  double theta_bar = 0.0;
  double xi = 0.0;
  double chi = 0.0;

  Vector eta_floor_vector() const {
    Vector v(static_cast<Eigen::Index>(agents.size()));
    for (std::size_t i = 0; i < agents.size(); ++i) v(static_cast<Eigen::Index>(i)) = agents[i].eta_floor;
    return v;
  }
};

/// Aggregated standard-deviation floor of agent i: its own posterior std
/// right after inserting a point at the query, plus the neighbors' prior stds.
inline double sigma_floor(int agent, std::span<const KernelConfig> kernels,
                          std::span<const double> noise_stds, const AggregationWeights& weights) {
  double out = 0.0;
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    const double w = weights.omega(agent, static_cast<Eigen::Index>(j));
    if (w == 0.0) continue;
    if (static_cast<int>(j) == agent) {
      const double sf = kernels[j].signal_std;
      const double so = noise_stds[j];
      out += w / std::sqrt(1.0 / (sf * sf) + 1.0 / (so * so));
    } else {
      out += w * kernels[j].signal_std;
    }
  }
  return out;
}

inline double eta_floor(double sigma_floor, const BoundConstants& bounds, double epsilon) {
  return bounds.sqrt_beta() * sigma_floor + bounds.gamma + epsilon;
}

/// Threshold nu with nu^2 = xi^-2 max(||z_i||^2 - chi^-2 theta_bar^2, 0) + eta_floor^2.
inline double nu_threshold(const Vector& z_i, double xi, double chi, double theta_bar,
                           double eta_floor_i) {
  const double excess = std::max(z_i.squaredNorm() - theta_bar * theta_bar / (chi * chi), 0.0);
  return std::sqrt(excess / (xi * xi) + eta_floor_i * eta_floor_i);
}

/// Everything agent i may look at when deciding whether to record data: its
/// own z_i and the aggregated bound of its and its bidirectional neighbors'
/// models at its own state. Nothing global enters.
struct LocalTriggerInputs {
  Vector z_i;
  double aggregated_bound = 0.0;
};

inline bool should_trigger_distributed(double aggregated_bound, double nu) {
  return aggregated_bound - nu > 0.0;
}

inline bool should_trigger_distributed(const LocalTriggerInputs& in, const TriggerConfig& config,
                                       int agent) {
  const double nu = nu_threshold(in.z_i, config.xi, config.chi, config.theta_bar,
                                 config.agents.at(agent).eta_floor);
  return should_trigger_distributed(in.aggregated_bound, nu);
}

namespace centralized_oracle {

/// Non-distributed baseline: needs the whole network's z and every agent's
/// bound. Only the simulation engine uses it, as a reference point.
inline std::vector<int> should_trigger_centralized(const Vector& z,
                                                   std::span<const double> bounds, double xi,
                                                   std::span<const double> floors) {
  std::vector<int> out;
  const double eta_norm =
      std::sqrt(std::transform_reduce(bounds.begin(), bounds.end(), 0.0, std::plus<>{},
                                      [](double b) { return b * b; }));
  if (!(z.norm() < xi * eta_norm)) return out;
  for (std::size_t i = 0; i < bounds.size(); ++i)
    if (bounds[i] > floors[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace centralized_oracle

/// Inputs of the minimum inter-event time certificate for one agent.
struct ZenoInputs {
  int agent = 0;
  const Topology* topology = nullptr;
  ControllerGains gains;
  std::vector<KernelConfig> kernels;  // per agent
  AggregationWeights weights;
  BoundConstants bounds;
  double reference_rate_bound = 0.0;  // F_d,i >= sup |s_r,i|
  Box domain;
};

struct ZenoCertificate {
  double F = 0.0;          // bound on ||x_i_dot||
  Matrix A;                // n x n closed-loop companion matrix
  double A_norm = 0.0;
  double eta_bar = 0.0;    // worst-case (empty data) aggregated bound
  double F_x = 0.0;        // max ||x|| over the domain
  double F_d = 0.0;
  double dwell_bound = 0.0;  // epsilon / (sqrt(beta) L_sigma F)
};

namespace detail {

inline ZenoCertificate rate_bound(const ZenoInputs& in) {
  if (in.topology == nullptr) throw InvalidArgument("zeno certificate needs a topology");
  in.gains.validate();
  in.domain.validate();
  const int i = in.agent;
  const int n = in.gains.order();
  const double lii = in.topology->degree(i);
  const double k = in.gains.c * (1.0 + lii);

  ZenoCertificate out;
  out.A = Matrix::Zero(n, n);
  out.A.topRightCorner(n - 1, n - 1) = Matrix::Identity(n - 1, n - 1);
  out.A.row(n - 1) = -k * in.gains.lambda.transpose();
  out.A_norm = linalg::spectral_norm(out.A);

  double weighted_sf = 0.0;
  for (std::size_t j = 0; j < in.kernels.size(); ++j)
    weighted_sf += in.weights.omega(i, static_cast<Eigen::Index>(j)) * in.kernels[j].signal_std;
  out.eta_bar = in.bounds.sqrt_beta() * weighted_sf + in.bounds.gamma;
  out.F_x = in.domain.max_norm();
  out.F_d = in.reference_rate_bound;
  out.F = out.eta_bar +
          (out.A_norm + in.gains.c * (1.0 + 3.0 * lii) * in.gains.lambda.norm()) * out.F_x +
          out.F_d;
  return out;
}

inline double dwell_denominator(const ZenoInputs& in, const ZenoCertificate& cert) {
  return in.bounds.sqrt_beta() * in.bounds.lipschitz.stddev * cert.F;
}

}  // namespace detail

inline ZenoCertificate zeno_certificate(const ZenoInputs& in, double epsilon) {
  ZenoCertificate out = detail::rate_bound(in);
  const double denom = detail::dwell_denominator(in, out);
  out.dwell_bound = denom > 0.0 ? epsilon / denom : std::numeric_limits<double>::infinity();
  return out;
}

/// Slack epsilon_i that makes the certified minimum inter-event time equal
/// `target`.
inline double epsilon_for_dwell(double target, const ZenoInputs& in) {
  if (!(target >= 0.0)) throw InvalidArgument("dwell target must be nonnegative");
  const ZenoCertificate cert = detail::rate_bound(in);
  const double denom = detail::dwell_denominator(in, cert);
  if (!(denom > 0.0))
    throw Error("epsilon_for_dwell: sqrt(beta) L_sigma F_i must be positive (L_sigma = " +
                std::to_string(in.bounds.lipschitz.stddev) + ")");
  return target * denom;
}

/// Per-agent trigger event log.
class TriggerLog {
 public:
  struct Event {
    int agent;
    double time;
  };

  explicit TriggerLog(int agent_count = 0)
      : last_(agent_count, -std::numeric_limits<double>::infinity()),
        min_gap_(agent_count, std::numeric_limits<double>::infinity()),
        counts_(agent_count, 0) {}

  void record(int agent, double time) {
    if (agent < 0 || agent >= agent_count())
      throw InvalidArgument("trigger log: agent index out of range");
    if (time < last_[agent])
      throw InvalidArgument("trigger log: time regression for agent " + std::to_string(agent + 1));
    if (counts_[agent] > 0) min_gap_[agent] = std::min(min_gap_[agent], time - last_[agent]);
    last_[agent] = time;
    ++counts_[agent];
    events_.push_back({agent, time});
  }

  int agent_count() const noexcept { return static_cast<int>(counts_.size()); }
  int count(int agent) const { return counts_.at(agent); }
  double min_gap(int agent) const { return min_gap_.at(agent); }
  const std::vector<Event>& events() const noexcept { return events_; }

 private:
  std::vector<double> last_;
  std::vector<double> min_gap_;
  std::vector<int> counts_;
  std::vector<Event> events_;
};

}  // namespace swarm_gp_et
