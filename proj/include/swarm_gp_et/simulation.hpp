#pragma once

// Fixed-step closed-loop simulation of the agent network.
//
// Each step is two-phase: every agent first evaluates its trigger against the
// current models, then all insertions are applied, so the outcome does not
// depend on agent ordering. The consensus feedback and the GP compensation
// are held over the step; the reference feed-forward s_r,i(t) is analytic and
// evaluated at every Runge-Kutta stage.

#include "swarm_gp_et/control.hpp"
#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/gp.hpp"
#include "swarm_gp_et/plant.hpp"
#include "swarm_gp_et/random.hpp"
#include "swarm_gp_et/scenario.hpp"
#include "swarm_gp_et/trigger.hpp"

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace swarm_gp_et {

struct RunMetrics {
  TriggerMode mode = TriggerMode::None;
  std::uint64_t seed = 0;
  int agent_count = 0;
  int order = 0;

  // Recorded every `record_stride` steps (and at the final time).
  std::vector<double> time;
  std::vector<double> error_norm;
  std::vector<double> lyapunov;
  std::vector<Vector> states;  // stacked [x_1; ...; x_N] per record

  double max_tracking_error = 0.0;  // over every step, not only records
  TriggerLog triggers;
  std::vector<int> dataset_sizes;
  long steps_completed = 0;

  bool aborted = false;
  std::string abort_kind;
  std::string diagnostic;
  double wall_seconds = 0.0;

  int trigger_count(int agent) const { return triggers.count(agent); }
  double min_gap(int agent) const { return triggers.min_gap(agent); }
};

struct EpisodeOptions {
  int record_stride = 1;
  bool record_states = true;
};

/// One noisy sample of the highest-order derivative: y = f(x) + u + w with
/// w ~ N(0, sigma_o^2). Returns the f-sample y - u that the GP stores.
template <class Rng>
double sample_measurement(const Drift& f, const Vector& x, double u, double noise_std, Rng& rng) {
  std::normal_distribution<double> noise(0.0, noise_std);
  const double y = f(x) + u + noise(rng);
  return y - u;
}

/// Per-agent model trained on `size` uniform samples of the domain with u = 0.
inline std::vector<GpModel> generate_dataset_models(const Scenario& s, const Drift& f,
                                                    std::uint64_t seed, int size) {
  std::vector<GpModel> models;
  models.reserve(s.agent_count);
  for (int i = 0; i < s.agent_count; ++i) {
    GpModel m(s.kernels[i], s.noise_stds[i], s.order);
    auto rng = derive_engine(seed, streams::kOfflineData + static_cast<std::uint64_t>(i));
    for (int k = 0; k < size; ++k) {
      const Vector x = uniform_point(s.domain, rng);
      m.add_observation(x, sample_measurement(f, x, 0.0, s.noise_stds[i], rng));
    }
    models.push_back(std::move(m));
  }
  return models;
}

inline std::vector<GpModel> generate_offline_dataset(const Scenario& s, const Drift& f,
                                                     std::uint64_t seed) {
  return generate_dataset_models(s, f, seed, s.offline_dataset_size);
}

/// Stacked agent states, row i = x_i.
using StateMatrix = Matrix;

/// x_dot for the whole network under held feedback `held` (u_i without the
/// reference feed-forward).
inline StateMatrix closed_loop_rhs(const StateMatrix& x, double t, const Drift& f,
                                   const SinusoidReference& ref, const Vector& held) {
  const Eigen::Index N = x.rows();
  const Eigen::Index n = x.cols();
  StateMatrix dx(N, n);
  for (Eigen::Index i = 0; i < N; ++i) {
    dx.row(i).head(n - 1) = x.row(i).tail(n - 1);
    const Vector xi = x.row(i).transpose();
    const double s_r = ref.at(t, static_cast<int>(i), static_cast<int>(n)).highest;
    dx(i, n - 1) = f(xi) + held(i) + s_r;
  }
  return dx;
}

/// One classic Runge-Kutta step of size h.
inline StateMatrix rk4_step(const StateMatrix& x, double t, double h, const Drift& f,
                            const SinusoidReference& ref, const Vector& held) {
  const StateMatrix k1 = closed_loop_rhs(x, t, f, ref, held);
  const StateMatrix k2 = closed_loop_rhs(x + 0.5 * h * k1, t + 0.5 * h, f, ref, held);
  const StateMatrix k3 = closed_loop_rhs(x + 0.5 * h * k2, t + 0.5 * h, f, ref, held);
  const StateMatrix k4 = closed_loop_rhs(x + h * k3, t + h, f, ref, held);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Tracking errors theta (row i = x_i - s_i) at time t.
inline Matrix tracking_errors(const StateMatrix& x, double t, const SinusoidReference& ref) {
  Matrix theta = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    theta.row(i) -= ref.at(t, static_cast<int>(i), static_cast<int>(x.cols())).s.transpose();
  return theta;
}

inline Matrix all_sync_errors(const Matrix& theta, const Topology& topo) {
  // Row i of (L + I) theta equals sum_j a_ij (theta_i - theta_j) + theta_i.
  return topo.shifted_laplacian() * theta;
}

class Episode {
 public:
  Episode(const Scenario& scenario, const Design& design, TriggerMode mode, std::uint64_t seed,
          EpisodeOptions options = {})
      : s_(scenario), d_(design), mode_(mode), options_(options) {
    const int N = s_.agent_count;
    metrics_.mode = mode;
    metrics_.seed = seed;
    metrics_.agent_count = N;
    metrics_.order = s_.order;
    metrics_.triggers = TriggerLog(N);
    const int initial = mode == TriggerMode::None ? s_.offline_dataset_size : s_.online_initial_size;
    models_ = generate_dataset_models(s_, d_.drift, seed, initial);
    for (int i = 0; i < N; ++i)
      noise_rngs_.push_back(derive_engine(seed, streams::kMeasurement + static_cast<std::uint64_t>(i)));
    x_ = StateMatrix(N, s_.order);
    for (int i = 0; i < N; ++i) x_.row(i) = s_.reference.at(0.0, i, s_.order).s.transpose();
  }

  RunMetrics run() {
    const auto start = std::chrono::steady_clock::now();
    try {
      const long steps = s_.step_count();
      for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * s_.dt;
        advance(k, t, k == steps);
        metrics_.steps_completed = k;
      }
    } catch (const SimulationAbort& e) {
      metrics_.aborted = true;
      metrics_.abort_kind = e.kind();
      metrics_.diagnostic = e.what();
    }
    for (const auto& m : models_) metrics_.dataset_sizes.push_back(static_cast<int>(m.size()));
    metrics_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(metrics_);
  }

  const std::vector<GpModel>& models() const noexcept { return models_; }

 private:
  void advance(long k, double t, bool last) {
    const int N = s_.agent_count;
    const Matrix theta = tracking_errors(x_, t, s_.reference);
    const Matrix sync = all_sync_errors(theta, d_.topology);
    const Vector z = stacked_z(sync, d_.gains);
    const double err = theta.norm();
    metrics_.max_tracking_error = std::max(metrics_.max_tracking_error, err);
    if (k % options_.record_stride == 0 || last) record(t, err, z);
    if (last) return;

    // Phase 1: predictions and trigger decisions against the current models.
    Vector mu(N);
    std::vector<double> eta(N, 0.0);
    if (mode_ == TriggerMode::None) {
      for (int i = 0; i < N; ++i) mu(i) = aggregate_mean(models_, s_.weights, i, x_.row(i).transpose());
    } else {
      for (int i = 0; i < N; ++i) {
        const AggregatedPrediction p =
            aggregate(models_, d_.bounds, s_.weights, i, x_.row(i).transpose());
        mu(i) = p.mean;
        eta[i] = p.bound;
      }
    }

    std::vector<int> fire;
    if (mode_ == TriggerMode::Distributed) {
      for (int i = 0; i < N; ++i) {
        const Vector e_i = sync.row(i).transpose();
        if (should_trigger_distributed(LocalTriggerInputs{agent_z(e_i, d_.gains), eta[i]},
                                       d_.trigger, i))
          fire.push_back(i);
      }
    } else if (mode_ == TriggerMode::Centralized) {
      fire = centralized_oracle::should_trigger_centralized(z, eta, d_.trigger.xi,
                                                            d_.trigger.centralized_floor);
    }

    // Phase 2: insertions, then refresh the predictions they affect.
    if (!fire.empty()) {
      for (int i : fire) {
        const Vector xi = x_.row(i).transpose();
        const Vector e_i = sync.row(i).transpose();
        const double s_r = s_.reference.at(t, i, s_.order).highest;
        const double u = control_input(e_i, d_.gains, s_r, mu(i));
        models_[i].add_observation(
            xi, sample_measurement(d_.drift, xi, u, s_.noise_stds[i], noise_rngs_[i]));
        metrics_.triggers.record(i, t);
      }
      for (int i = 0; i < N; ++i) {
        bool touched = false;
        for (int j : fire) touched = touched || s_.weights.omega(i, j) != 0.0;
        if (!touched) continue;
        const AggregatedPrediction p =
            aggregate(models_, d_.bounds, s_.weights, i, x_.row(i).transpose());
        mu(i) = p.mean;
        if (mode_ == TriggerMode::Distributed &&
            std::find(fire.begin(), fire.end(), i) != fire.end())
          check_floor(i, t, p.bound);
      }
    }

    // Held part of the control: -c r_i - mu_tilde_i.
    Vector held(N);
    for (int i = 0; i < N; ++i) held(i) = -d_.gains.c * filtered_error(sync.row(i).transpose(), d_.gains) - mu(i);

    x_ = rk4_step(x_, t, s_.dt, d_.drift, s_.reference, held);
    check_state(t + s_.dt);
  }

  void check_floor(int i, double t, double bound) const {
    const AgentTriggerParams& p = d_.trigger.agents[i];
    const double limit = p.eta_floor - p.epsilon;
    if (bound > limit + 1e-12 * std::max(1.0, limit))
      throw SimulationAbort("floor-safety", "agent " + std::to_string(i + 1) + " at t = " +
                                                std::to_string(t) + ": post-update bound " +
                                                std::to_string(bound) + " > " +
                                                std::to_string(limit));
  }

  void check_state(double t) const {
    if (!x_.allFinite())
      throw SimulationAbort("non-finite", "state became non-finite at t = " + std::to_string(t));
    for (int i = 0; i < s_.agent_count; ++i)
      if (!s_.domain.contains(x_.row(i).transpose(), 0.1))
        throw SimulationAbort("domain-escape", "agent " + std::to_string(i + 1) +
                                                   " left the domain (+10%) at t = " +
                                                   std::to_string(t));
  }

  void record(double t, double err, const Vector& z) {
    metrics_.time.push_back(t);
    metrics_.error_norm.push_back(err);
    metrics_.lyapunov.push_back(lyapunov_value(z, d_.synthesis.P_r, d_.synthesis.P_eps));
    if (options_.record_states) {
      Vector flat(x_.size());
      for (Eigen::Index i = 0; i < x_.rows(); ++i)
        flat.segment(i * x_.cols(), x_.cols()) = x_.row(i).transpose();
      metrics_.states.push_back(std::move(flat));
    }
  }

  const Scenario& s_;
  const Design& d_;
  TriggerMode mode_;
  EpisodeOptions options_;
  RunMetrics metrics_;
  std::vector<GpModel> models_;
  std::vector<std::mt19937_64> noise_rngs_;
  StateMatrix x_;
};

inline RunMetrics run_episode(const Scenario& s, const Design& d, TriggerMode mode,
                              std::uint64_t seed, EpisodeOptions options = {}) {
  return Episode(s, d, mode, seed, options).run();
}

}  // namespace swarm_gp_et
