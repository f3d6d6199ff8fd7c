#pragma once

// Exact Gaussian-process regression with a stationary kernel, online data
// insertion through a rank-1 extension of the Cholesky factor, and the
// constants of the uniform prediction-error bound
//
//   |f(x) - mu(x)| <= sqrt(beta) * sigma(x) + gamma   for all x in the domain
//
// that holds with probability at least 1 - delta.

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/linalg.hpp"
#include "swarm_gp_et/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace swarm_gp_et {

enum class KernelKind { SquaredExponential };

struct KernelConfig {
  double signal_std = 1.0;
  double lengthscale = 1.0;
  KernelKind kind = KernelKind::SquaredExponential;

  void validate() const {
    if (!(signal_std > 0.0) || !std::isfinite(signal_std))
      throw InvalidArgument("kernel signal_std must be positive");
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
      throw InvalidArgument("kernel lengthscale must be positive");
  }

  double prior_variance() const noexcept { return signal_std * signal_std; }

  double from_squared_distance(double d2) const noexcept {
    return prior_variance() * std::exp(-0.5 * d2 / (lengthscale * lengthscale));
  }

  double operator()(const Vector& a, const Vector& b) const {
    return from_squared_distance((a - b).squaredNorm());
  }

  /// Gradient of k(x, x') with respect to x.
  Vector gradient(const Vector& x, const Vector& x_prime) const {
    return -(x - x_prime) / (lengthscale * lengthscale) * (*this)(x, x_prime);
  }

  /// sup over x of ||grad_x k(x, x')||, attained at distance lengthscale.
  double max_gradient_norm() const noexcept {
    return prior_variance() * std::exp(-0.5) / lengthscale;
  }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;

  double stddev() const noexcept { return std::sqrt(variance); }
};

class GpModel {
 public:
  // Full refactorization cadence for the incrementally extended factor.
  static constexpr int kRefactorPeriod = 64;
  // Variance floor applied before square roots.
  static constexpr double kVarianceFloor = 1e-15;

  GpModel(KernelConfig kernel, double noise_std, int input_dim)
      : kernel_(kernel), noise_std_(noise_std), dim_(input_dim) {
    kernel_.validate();
    if (!(noise_std > 0.0) || !std::isfinite(noise_std))
      throw InvalidArgument("noise_std must be positive");
    if (input_dim < 1) throw InvalidArgument("input_dim must be positive");
  }

  const KernelConfig& kernel() const noexcept { return kernel_; }
  double noise_std() const noexcept { return noise_std_; }
  int input_dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(size_); }
  bool empty() const noexcept { return size_ == 0; }

  auto inputs() const { return inputs_.topRows(size_); }
  auto targets() const { return targets_.head(size_); }
  auto factor() const { return chol_.topLeftCorner(size_, size_); }
  auto weights() const { return alpha_.head(size_); }

  /// Covariances between x and every stored input.
  Vector cross_covariance(const Vector& x) const {
    const Vector d2 = (inputs_.topRows(size_).rowwise() - x.transpose()).rowwise().squaredNorm();
    const double scale = -0.5 / (kernel_.lengthscale * kernel_.lengthscale);
    return kernel_.prior_variance() * (d2.array() * scale).exp().matrix();
  }

  double mean(const Vector& x) const {
    check_query(x);
    if (size_ == 0) return 0.0;
    return cross_covariance(x).dot(alpha_.head(size_));
  }

  Prediction predict(const Vector& x) const {
    check_query(x);
    const double prior = kernel_.prior_variance();
    if (size_ == 0) return {0.0, prior};
    const Vector k = cross_covariance(x);
    const Vector v = factor().triangularView<Eigen::Lower>().solve(k);
    const double var = std::clamp(prior - v.squaredNorm(), kVarianceFloor, prior);
    return {k.dot(alpha_.head(size_)), var};
  }

  void add_observation(const Vector& x, double target) {
    check_query(x);
    if (!std::isfinite(target)) throw InvalidArgument("non-finite GP target");
    reserve(size_ + 1);
    inputs_.row(size_) = x.transpose();
    targets_(size_) = target;
    ++since_refactor_;

    if (size_ == 0 || since_refactor_ >= kRefactorPeriod) {
      ++size_;
      refactorize();
      return;
    }

    const Vector k = cross_covariance(x);
    const Vector l = factor().triangularView<Eigen::Lower>().solve(k);
    const double diag = kernel_.prior_variance() + noise_std_ * noise_std_;
    const double pivot2 = diag - l.squaredNorm();
    if (!(pivot2 > 1e-12 * diag)) {
      ++size_;
      refactorize();
      return;
    }
    const double pivot = std::sqrt(pivot2);
    chol_.row(size_).head(size_) = l.transpose();
    chol_(size_, size_) = pivot;
    forward_(size_) = (target - l.dot(forward_.head(size_))) / pivot;
    ++size_;
    update_weights();
  }

  /// Rebuilds the factor of K + sigma_o^2 I from scratch.
  void refactorize() {
    since_refactor_ = 0;
    if (size_ == 0) return;
    Matrix gram(size_, size_);
    for (Eigen::Index i = 0; i < size_; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = kernel_.from_squared_distance(
            (inputs_.row(i) - inputs_.row(j)).squaredNorm());
        gram(i, j) = v;
        gram(j, i) = v;
      }
    gram.diagonal().array() += noise_std_ * noise_std_;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw Error("GP refactorization failed: K + sigma_o^2 I not positive definite (M = " +
                  std::to_string(size_) + ")");
    chol_.topLeftCorner(size_, size_) = llt.matrixL();
    forward_.head(size_) = factor().triangularView<Eigen::Lower>().solve(targets_.head(size_));
    update_weights();
  }

 private:
  void check_query(const Vector& x) const {
    if (x.size() != dim_)
      throw InvalidArgument("GP query has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim_));
    if (!x.allFinite()) throw InvalidArgument("non-finite GP query");
  }

  void reserve(Eigen::Index needed) {
    if (needed <= inputs_.rows()) return;
    const Eigen::Index cap = std::max<Eigen::Index>(16, 2 * inputs_.rows());
    Matrix inputs = Matrix::Zero(cap, dim_);
    Matrix chol = Matrix::Zero(cap, cap);
    Vector targets = Vector::Zero(cap);
    Vector forward = Vector::Zero(cap);
    Vector alpha = Vector::Zero(cap);
    if (size_ > 0) {
      inputs.topRows(size_) = inputs_.topRows(size_);
      chol.topLeftCorner(size_, size_) = chol_.topLeftCorner(size_, size_);
      targets.head(size_) = targets_.head(size_);
      forward.head(size_) = forward_.head(size_);
      alpha.head(size_) = alpha_.head(size_);
    }
    inputs_.swap(inputs);
    chol_.swap(chol);
    targets_.swap(targets);
    forward_.swap(forward);
    alpha_.swap(alpha);
  }

  void update_weights() {
    alpha_.head(size_) =
        factor().transpose().triangularView<Eigen::Upper>().solve(forward_.head(size_));
  }

  KernelConfig kernel_;
  double noise_std_;
  int dim_;
  Eigen::Index size_ = 0;
  int since_refactor_ = 0;
  Matrix inputs_;
  Matrix chol_;
  Vector targets_;
  Vector forward_;  // L^-1 y
  Vector alpha_;    // (K + sigma_o^2 I)^-1 y
};

/// Axis-aligned box domain.
struct Box {
  Vector lower;
  Vector upper;

  int dim() const noexcept { return static_cast<int>(lower.size()); }

  void validate() const {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw InvalidArgument("domain box bounds have mismatched or zero dimension");
    for (Eigen::Index k = 0; k < lower.size(); ++k)
      if (!(upper(k) > lower(k)) || !std::isfinite(lower(k)) || !std::isfinite(upper(k)))
        throw InvalidArgument("degenerate domain box on axis " + std::to_string(k + 1));
  }

  /// Membership test with each side pushed out by `margin` times its width.
  bool contains(const Vector& x, double margin = 0.0) const {
    for (Eigen::Index k = 0; k < lower.size(); ++k) {
      const double pad = margin * (upper(k) - lower(k));
      if (!(x(k) >= lower(k) - pad && x(k) <= upper(k) + pad)) return false;
    }
    return true;
  }

  /// max over the box of ||x||, attained at the farthest corner.
  double max_norm() const {
    return lower.cwiseAbs().cwiseMax(upper.cwiseAbs()).norm();
  }
};

struct LipschitzConstants {
  double plant = 0.0;   // L_f
  double mean = 0.0;    // L_mu
  double stddev = 0.0;  // L_sigma
};

struct BoundConstants {
  double tau = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  LipschitzConstants lipschitz;
  Box domain;

  double sqrt_beta() const noexcept { return std::sqrt(beta); }
  double bound_from_stddev(double stddev) const noexcept {
    return sqrt_beta() * stddev + gamma;
  }
};

inline BoundConstants bound_constants(const Box& domain, double tau, double delta,
                                      const LipschitzConstants& lipschitz) {
  domain.validate();
  if (!(tau > 0.0)) throw InvalidArgument("grid factor tau must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (lipschitz.plant < 0.0 || lipschitz.mean < 0.0 || lipschitz.stddev < 0.0)
    throw InvalidArgument("Lipschitz constants must be nonnegative");

  const int n = domain.dim();
  double beta = -2.0 * std::log(delta);
  for (int k = 0; k < n; ++k)
    beta += 2.0 * std::log(std::sqrt(static_cast<double>(n)) / (2.0 * tau) *
                               (domain.upper(k) - domain.lower(k)) +
                           1.0);

  BoundConstants out;
  out.tau = tau;
  out.delta = delta;
  out.beta = beta;
  out.gamma = (std::sqrt(beta) * lipschitz.stddev + lipschitz.plant + lipschitz.mean) * tau;
  out.lipschitz = lipschitz;
  out.domain = domain;
  return out;
}

/// sqrt(beta) * sigma(x) + gamma for this model.
inline double error_bound(const GpModel& model, const BoundConstants& bounds, const Vector& x) {
  return bounds.bound_from_stddev(model.predict(x).stddev());
}

/// Row-stochastic aggregation weights; row i may only use agent i and its
/// bidirectional neighbors.
struct AggregationWeights {
  Matrix omega;

  static AggregationWeights local_only(int agent_count) {
    return {Matrix::Identity(agent_count, agent_count)};
  }

  double row_sum_defect(int i) const { return std::abs(omega.row(i).sum() - 1.0); }

  void validate(const Topology& topo) const {
    const int n = topo.agent_count();
    if (omega.rows() != n || omega.cols() != n)
      throw InvalidArgument("aggregation weights must be " + std::to_string(n) + "x" +
                            std::to_string(n));
    for (int i = 0; i < n; ++i) {
      const auto& bidir = topo.bidirectional_neighbors(i);
      for (int j = 0; j < n; ++j) {
        if (omega(i, j) < 0.0) throw InvalidArgument("negative aggregation weight");
        const bool allowed = j == i || std::find(bidir.begin(), bidir.end(), j) != bidir.end();
        if (!allowed && omega(i, j) != 0.0)
          throw InvalidArgument("aggregation weight (" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) +
                                ") must be zero: not a bidirectional neighbor");
      }
      if (row_sum_defect(i) > 1e-12)
        throw InvalidArgument("aggregation weights row " + std::to_string(i + 1) +
                              " does not sum to 1");
    }
  }
};

struct AggregatedPrediction {
  double mean = 0.0;
  double bound = 0.0;
};

/// Convex combination of the agent's own and its bidirectional neighbors'
/// means and error bounds, all evaluated at the agent's state.
inline AggregatedPrediction aggregate(std::span<const GpModel> models,
                                      std::span<const BoundConstants> bounds,
                                      const AggregationWeights& weights, int agent,
                                      const Vector& x) {
  if (weights.row_sum_defect(agent) > 1e-12)
    throw InvalidArgument("aggregation weights row " + std::to_string(agent + 1) +
                          " does not sum to 1");
  AggregatedPrediction out;
  for (std::size_t j = 0; j < models.size(); ++j) {
    const double w = weights.omega(agent, static_cast<Eigen::Index>(j));
    if (w == 0.0) continue;
    const Prediction p = models[j].predict(x);
    out.mean += w * p.mean;
    out.bound += w * bounds[j].bound_from_stddev(p.stddev());
  }
  return out;
}

/// Mean-only variant for callers that never read the bound.
inline double aggregate_mean(std::span<const GpModel> models, const AggregationWeights& weights,
                             int agent, const Vector& x) {
  double mean = 0.0;
  for (std::size_t j = 0; j < models.size(); ++j) {
    const double w = weights.omega(agent, static_cast<Eigen::Index>(j));
    if (w != 0.0) mean += w * models[j].mean(x);
  }
  return mean;
}

struct LipschitzEstimate {
  double mean = 0.0;
  double stddev = 0.0;
};

namespace detail {

// Uniform grid over a box: per-axis point counts and row-major flattening.
struct Grid {
  std::vector<int> counts;
  std::vector<double> steps;
  Vector origin;
  long total = 1;

  Grid(const Box& box, double step) : origin(box.lower) {
    for (int k = 0; k < box.dim(); ++k) {
      const double width = box.upper(k) - box.lower(k);
      const int c = static_cast<int>(std::floor(width / step + 1e-9)) + 1;
      if (c < 2)
        throw InvalidArgument("grid step too coarse: fewer than 2 points on axis " +
                              std::to_string(k + 1));
      counts.push_back(c);
      steps.push_back(width / (c - 1));
      total *= c;
    }
  }

  Vector point(long flat) const {
    Vector x(origin.size());
    for (int k = static_cast<int>(counts.size()) - 1; k >= 0; --k) {
      x(k) = origin(k) + steps[k] * static_cast<double>(flat % counts[k]);
      flat /= counts[k];
    }
    return x;
  }

  long stride(int axis) const {
    long s = 1;
    for (int k = axis + 1; k < static_cast<int>(counts.size()); ++k) s *= counts[k];
    return s;
  }

  int coordinate(long flat, int axis) const {
    return static_cast<int>((flat / stride(axis)) % counts[axis]);
  }
};

// Largest finite-difference gradient norm of a sampled field on the grid;
// central differences inside, one-sided on the boundary.
inline double max_gradient_norm(const Grid& grid, const std::vector<double>& values) {
  const int n = static_cast<int>(grid.counts.size());
  std::vector<long> strides(n);
  for (int k = 0; k < n; ++k) strides[k] = grid.stride(k);
  double best = 0.0;
  for (long p = 0; p < grid.total; ++p) {
    double sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const int c = grid.coordinate(p, k);
      const long lo = c > 0 ? p - strides[k] : p;
      const long hi = c + 1 < grid.counts[k] ? p + strides[k] : p;
      const double g = (values[hi] - values[lo]) / (static_cast<double>((hi - lo) / strides[k]) * grid.steps[k]);
      sq += g * g;
    }
    best = std::max(best, sq);
  }
  return std::sqrt(best);
}

}  // namespace detail

/// Grid finite-difference upper estimates of sup ||grad mu|| and
/// sup ||grad sigma|| over the domain, scaled by a safety factor.
inline LipschitzEstimate estimate_lipschitz(const GpModel& model, const Box& domain,
                                            double grid_step, double safety = 1.2) {
  domain.validate();
  if (!(grid_step > 0.0)) throw InvalidArgument("grid_step must be positive");
  if (model.empty()) return {};
  const detail::Grid grid(domain, grid_step);
  std::vector<double> means(grid.total);
  std::vector<double> stddevs(grid.total);
  for (long p = 0; p < grid.total; ++p) {
    const Prediction pred = model.predict(grid.point(p));
    means[p] = pred.mean;
    stddevs[p] = pred.stddev();
  }
  return {safety * detail::max_gradient_norm(grid, means),
          safety * detail::max_gradient_norm(grid, stddevs)};
}

/// Data-independent Lipschitz constant of the posterior standard deviation
/// of a squared-exponential model: sigma(x) is the distance of the feature
/// vector of x to a fixed subspace, and the feature map is sigma_f/l
/// Lipschitz. Scaled by the same safety factor as the grid estimator.
inline double stddev_lipschitz_cap(const KernelConfig& kernel, double safety = 1.2) {
  return safety * kernel.signal_std / kernel.lengthscale;
}

}  // namespace swarm_gp_et
