#pragma once

// A complete simulation scenario and the constants synthesized from it once,
// before any episode runs. The synthesized Design is immutable and shared
// read-only by Monte-Carlo workers.

#include "swarm_gp_et/control.hpp"
#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/gp.hpp"
#include "swarm_gp_et/plant.hpp"
#include "swarm_gp_et/random.hpp"
#include "swarm_gp_et/topology.hpp"
#include "swarm_gp_et/trigger.hpp"

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace swarm_gp_et {

enum class EpsilonStrategy {
  Dwell,  // pick epsilon_i so that the certified dwell time hits a target
  Floor,  // pick epsilon_i so that the trigger floor hits a target value
};

struct Scenario {
  int agent_count = 4;
  int order = 2;
  std::vector<Edge> edges;
  Box domain;
  std::string drift = "paper";

  // Per-agent GP hyperparameters (one entry per agent).
  std::vector<KernelConfig> kernels;
  std::vector<double> noise_stds;
  double tau = 1e-6;
  double delta = 0.05;
  // Design Lipschitz constants; unset means derive (see synthesize()).
  std::optional<double> lipschitz_f;
  std::optional<double> lipschitz_mu;
  std::optional<double> lipschitz_sigma;

  AggregationWeights weights;
  ControllerGains gains;
  Matrix q_eps;
  bool auto_gain = false;

  TriggerMode mode = TriggerMode::Distributed;
  EpsilonStrategy epsilon_strategy = EpsilonStrategy::Dwell;
  double dwell_target = 0.01;
  // Target trigger floor for the Floor strategy; unset means
  // sqrt(beta) sigma_o,i + gamma_i.
  std::optional<double> floor_value;
  // Unset means the smallest admissible value xi chi ||eta_floor||.
  std::optional<double> theta_bar;

  SinusoidReference reference;
  double dt = 1e-3;
  double horizon = 15.0;
  std::uint64_t seed = 1;
  int runs = 100;
  // Size of the uniform offline data set of no-update runs; event-triggered
  // runs start from `online_initial_size` uniform samples instead.
  int offline_dataset_size = 200;
  int online_initial_size = 0;

  long step_count() const { return std::lround(horizon / dt); }
};

/// The paper-style four-agent formation scenario.
inline Scenario paper_scenario() {
  Scenario s;
  s.agent_count = 4;
  s.order = 2;
  s.edges = {{1, 2, 1.0}, {2, 1, 1.0}, {2, 3, 1.0}, {3, 1, 1.0},
             {3, 4, 1.0}, {4, 1, 1.0}, {4, 2, 1.0}};
  s.domain = {Vector::Constant(2, -1.5), Vector::Constant(2, 1.5)};
  s.drift = "paper";
  s.kernels.assign(4, KernelConfig{0.5, 0.2});
  s.noise_stds.assign(4, 0.01);
  s.tau = 1e-6;
  s.delta = 0.05;
  s.weights = AggregationWeights::local_only(4);
  s.gains = {2.0, Vector::Ones(2)};
  s.q_eps = Matrix::Identity(1, 1);
  s.mode = TriggerMode::Distributed;
  s.epsilon_strategy = EpsilonStrategy::Floor;
  s.dwell_target = 0.01;
  s.reference = SinusoidReference::spread(4);
  s.dt = 1e-3;
  s.horizon = 15.0;
  s.seed = 1;
  s.runs = 100;
  s.offline_dataset_size = 200;
  return s;
}

struct Design {
  Topology topology;
  ConsensusLyapunovMatrices consensus;
  ControllerGains gains;
  ControllerSynthesis synthesis;
  Drift drift;
  std::vector<BoundConstants> bounds;
  TriggerConfig trigger;
  std::vector<ZenoCertificate> zeno;
  std::vector<double> reference_rate_bounds;
  std::vector<std::string> warnings;

  double min_dwell_bound() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& a : trigger.agents) m = std::min(m, a.dwell_bound);
    return m;
  }
};

namespace detail {

inline void validate_scenario(const Scenario& s) {
  if (s.agent_count < 1) throw InvalidArgument("agents must be positive");
  if (s.order < 2) throw InvalidArgument("order must be at least 2");
  s.domain.validate();
  if (s.domain.dim() != s.order) throw InvalidArgument("domain dimension must equal order");
  const auto N = static_cast<std::size_t>(s.agent_count);
  if (s.kernels.size() != N || s.noise_stds.size() != N)
    throw InvalidArgument("kernel and noise settings need one entry per agent");
  for (const auto& k : s.kernels) k.validate();
  for (double so : s.noise_stds)
    if (!(so > 0.0)) throw InvalidArgument("noise_std must be positive");
  if (s.gains.order() != s.order) throw InvalidArgument("lambda must have `order` entries");
  if (!(s.dt > 0.0) || !(s.horizon > 0.0)) throw InvalidArgument("dt and horizon must be positive");
  if (s.reference.phases.size() != N) throw InvalidArgument("reference needs one phase per agent");
  if (s.runs < 1) throw InvalidArgument("runs must be at least 1");
  if (s.offline_dataset_size < 0 || s.online_initial_size < 0)
    throw InvalidArgument("dataset sizes must be nonnegative");
  if (!(s.dwell_target > 0.0)) throw InvalidArgument("trigger dwell must be positive");

  // References must stay inside the domain for all time; the built-in
  // sinusoid is periodic, so one dense period suffices.
  const double period = 2.0 * std::numbers::pi / std::abs(s.reference.frequency);
  for (int i = 0; i < s.agent_count; ++i)
    for (int k = 0; k <= 2000; ++k) {
      const Vector ref = s.reference.at(period * k / 2000.0, i, s.order).s;
      if (!s.domain.contains(ref, 1e-12))
        throw InvalidArgument("reference of agent " + std::to_string(i + 1) + " leaves the domain");
    }
}

}  // namespace detail

/// Probe model used to size the design Lipschitz constant of the posterior
/// mean: a uniform data set like the offline one, drawn from a dedicated
/// random stream of the scenario seed.
inline double probe_mean_lipschitz(const Scenario& s, const Drift& drift, int agent) {
  const int size = s.offline_dataset_size > 0 ? s.offline_dataset_size : 200;
  auto rng = derive_engine(s.seed, streams::kProbe + static_cast<std::uint64_t>(agent));
  GpModel probe(s.kernels[agent], s.noise_stds[agent], s.order);
  std::normal_distribution<double> noise(0.0, s.noise_stds[agent]);
  for (int m = 0; m < size; ++m) {
    const Vector x = uniform_point(s.domain, rng);
    probe.add_observation(x, drift(x) + noise(rng));
  }
  return estimate_lipschitz(probe, s.domain, s.kernels[agent].lengthscale / 5.0).mean;
}

inline Design synthesize(const Scenario& s) {
  detail::validate_scenario(s);
  const int N = s.agent_count;

  Design d;
  d.topology = build_topology(s.edges, N);
  s.weights.validate(d.topology);
  d.consensus = consensus_lyapunov_matrices(d.topology);
  d.drift = Drift::from_spec(s.drift, s.order);

  d.gains = s.gains;
  if (s.auto_gain) d.gains.c = find_min_gain(d.consensus, s.gains.lambda, s.q_eps, s.gains.c);
  d.gains.validate();

  const double grid_step = s.kernels[0].lengthscale / 5.0;
  const double L_f = s.lipschitz_f ? *s.lipschitz_f : plant_lipschitz(d.drift, s.domain, grid_step);
  std::optional<double> shared_mu;
  for (int i = 0; i < N; ++i) {
    LipschitzConstants L;
    L.plant = L_f;
    L.stddev = s.lipschitz_sigma ? *s.lipschitz_sigma : stddev_lipschitz_cap(s.kernels[i]);
    if (s.lipschitz_mu) {
      L.mean = *s.lipschitz_mu;
    } else {
      const bool same_as_first = i > 0 && s.kernels[i].signal_std == s.kernels[0].signal_std &&
                                 s.kernels[i].lengthscale == s.kernels[0].lengthscale &&
                                 s.noise_stds[i] == s.noise_stds[0];
      if (!(same_as_first && shared_mu)) shared_mu = probe_mean_lipschitz(s, d.drift, i);
      L.mean = *shared_mu;
    }
    d.bounds.push_back(bound_constants(s.domain, s.tau, s.delta, L));
    d.reference_rate_bounds.push_back(s.reference.highest_derivative_bound(s.order));
  }

  auto zeno_inputs = [&](int i) {
    return ZenoInputs{i, &d.topology, d.gains, s.kernels, s.weights, d.bounds[i],
                      d.reference_rate_bounds[i], s.domain};
  };

  d.trigger.mode = s.mode;
  d.trigger.agents.resize(N);
  for (int i = 0; i < N; ++i) {
    AgentTriggerParams& p = d.trigger.agents[i];
    const BoundConstants& b = d.bounds[i];
    p.sigma_floor = sigma_floor(i, s.kernels, s.noise_stds, s.weights);
    if (s.epsilon_strategy == EpsilonStrategy::Dwell) {
      p.epsilon = epsilon_for_dwell(s.dwell_target, zeno_inputs(i));
    } else {
      const double target =
          s.floor_value ? *s.floor_value : b.sqrt_beta() * s.noise_stds[i] + b.gamma;
      p.epsilon = target - b.sqrt_beta() * p.sigma_floor - b.gamma;
      if (!(p.epsilon > 0.0))
        throw InvalidArgument("trigger floor " + std::to_string(target) + " of agent " +
                              std::to_string(i + 1) +
                              " is not above the post-update bound; epsilon would be " +
                              std::to_string(p.epsilon));
    }
    p.eta_floor = eta_floor(p.sigma_floor, b, p.epsilon);
    d.trigger.centralized_floor.push_back(b.sqrt_beta() * s.noise_stds[i] + b.gamma);
  }

  d.synthesis =
      synthesize_constants(d.topology, d.consensus, d.gains, s.q_eps, d.trigger.eta_floor_vector());
  d.trigger.xi = d.synthesis.xi;
  d.trigger.chi = d.synthesis.chi;
  if (s.theta_bar) {
    if (*s.theta_bar < d.synthesis.theta_bar_min)
      throw ConfigError("theta_bar", "must be at least xi*chi*||eta_floor|| = " +
                                         std::to_string(d.synthesis.theta_bar_min));
    d.trigger.theta_bar = *s.theta_bar;
  } else {
    d.trigger.theta_bar = d.synthesis.theta_bar_min;
  }

  for (int i = 0; i < N; ++i) {
    d.zeno.push_back(zeno_certificate(zeno_inputs(i), d.trigger.agents[i].epsilon));
    d.trigger.agents[i].dwell_bound = d.zeno.back().dwell_bound;
  }

  if (s.mode != TriggerMode::None && s.dt > d.min_dwell_bound() / 10.0)
  {
    std::ostringstream msg;
    msg << "dt = " << s.dt << " exceeds a tenth of the smallest certified dwell time ("
        << d.min_dwell_bound() << ")";
    d.warnings.push_back(msg.str());
  }
  return d;
}

}  // namespace swarm_gp_et
