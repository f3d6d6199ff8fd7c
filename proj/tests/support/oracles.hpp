#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here reuses the library's factorization or
// synthesis code paths.

#include "swarm_gp_et/control.hpp"
#include "swarm_gp_et/gp.hpp"
#include "swarm_gp_et/topology.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using swarm_gp_et::Matrix;
using swarm_gp_et::Vector;

struct Posterior {
  double mean;
  double variance;
};

// Dense posterior from a fresh solve with the full Gram matrix.
inline Posterior dense_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double sf,
                                 double ell, double so, const Eigen::VectorXd& x) {
  const Eigen::Index M = X.rows();
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return sf * sf * std::exp(-(a - b).squaredNorm() / (2.0 * ell * ell));
  };
  if (M == 0) return {0.0, sf * sf};
  Eigen::MatrixXd K(M, M);
  Eigen::VectorXd kx(M);
  for (Eigen::Index i = 0; i < M; ++i) {
    kx(i) = k(X.row(i).transpose(), x);
    for (Eigen::Index j = 0; j < M; ++j) K(i, j) = k(X.row(i).transpose(), X.row(j).transpose());
  }
  K.diagonal().array() += so * so;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  return {kx.dot(lu.solve(y)), sf * sf - kx.dot(lu.solve(kx))};
}

struct EquivalenceResult {
  double max_mean_diff = 0.0;
  double max_var_diff = 0.0;
};

// 50 random points inserted one by one versus a dense rebuild, compared on
// a 20-point query set.
inline EquivalenceResult incremental_vs_dense(unsigned seed, int points = 50, int queries = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::normal_distribution<double> g(0.0, 1.0);
  const double sf = 0.5, ell = 0.2 + 0.6 * (seed % 5) / 4.0, so = 0.01 + 0.05 * (seed % 3);
  swarm_gp_et::GpModel model({sf, ell}, so, 2);
  Eigen::MatrixXd X(points, 2);
  Eigen::VectorXd y(points);
  for (int i = 0; i < points; ++i) {
    X(i, 0) = u(rng);
    X(i, 1) = u(rng);
    y(i) = std::sin(3 * X(i, 0)) + 0.3 * X(i, 1) + so * g(rng);
    model.add_observation(X.row(i).transpose(), y(i));
  }
  EquivalenceResult r;
  for (int q = 0; q < queries; ++q) {
    Eigen::VectorXd x(2);
    x << u(rng), u(rng);
    const auto p = model.predict(x);
    const Posterior d = dense_posterior(X, y, sf, ell, so, x);
    r.max_mean_diff = std::max(r.max_mean_diff, std::abs(p.mean - d.mean));
    r.max_var_diff = std::max(r.max_var_diff, std::abs(p.variance - std::max(d.variance, 0.0)));
  }
  return r;
}

// Draws f from the GP prior on a 30 x 30 grid over [-1.5, 1.5]^2, fits a
// 40-point noisy model and returns the fraction of grid points where
// |f - mu| <= sqrt(beta) sigma + gamma.
inline double prior_draw_coverage(unsigned seed, double delta = 0.05) {
  const int side = 30;
  const double sf = 0.5, ell = 0.2, so = 0.01, tau = 1e-6;
  const swarm_gp_et::Box box{Vector::Constant(2, -1.5), Vector::Constant(2, 1.5)};
  std::vector<Eigen::Vector2d> grid;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b)
      grid.emplace_back(-1.5 + 3.0 * a / (side - 1), -1.5 + 3.0 * b / (side - 1));
  const int G = static_cast<int>(grid.size());
  Eigen::MatrixXd K(G, G);
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j)
      K(i, j) = sf * sf * std::exp(-(grid[i] - grid[j]).squaredNorm() / (2 * ell * ell));
  K.diagonal().array() += 1e-10;
  const Eigen::LLT<Eigen::MatrixXd> llt(K);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd w(G);
  for (int i = 0; i < G; ++i) w(i) = g(rng);
  const Eigen::VectorXd f = llt.matrixL() * w;

  swarm_gp_et::GpModel model({sf, ell}, so, 2);
  std::uniform_int_distribution<int> pick(0, G - 1);
  for (int m = 0; m < 40; ++m) {
    const int idx = pick(rng);
    model.add_observation(grid[idx], f(idx) + so * g(rng));
  }

  // Lipschitz constants for gamma: finite differences of the sampled f on
  // the grid and the model's own estimates, each with the 1.2 factor.
  const double h = 3.0 / (side - 1);
  double lf = 0.0;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b) {
      const double da = a + 1 < side ? (f((a + 1) * side + b) - f(a * side + b)) / h : 0.0;
      const double db = b + 1 < side ? (f(a * side + b + 1) - f(a * side + b)) / h : 0.0;
      lf = std::max(lf, std::hypot(da, db));
    }
  const auto est = swarm_gp_et::estimate_lipschitz(model, box, ell / 5.0);
  const auto bounds = swarm_gp_et::bound_constants(box, tau, delta, {1.2 * lf, est.mean, est.stddev});

  int covered = 0;
  for (int i = 0; i < G; ++i) {
    const auto p = model.predict(grid[i]);
    if (std::abs(f(i) - p.mean) <= bounds.bound_from_stddev(p.stddev())) ++covered;
  }
  return static_cast<double>(covered) / G;
}

struct ChainResult {
  int violations = 0;
  double worst_ratio = 0.0;  // max lhs / rhs over all checked inequalities
};

// For random network vectors z = [r; eps_1; ...; eps_{n-1}] reconstructs the
// sync errors e and tracking errors theta and checks
//   ||e||^2 <= (1 + ||[t, Lambda]||^2) ||z||^2 <= (1 + ||[t, Lambda]||^2) V / p_min
//   ||theta|| <= ||(L + I)^-1|| ||e||
// with every norm recomputed here by SVD / eigen decomposition.
inline ChainResult check_chain(const swarm_gp_et::Topology& topo,
                               const swarm_gp_et::ControllerGains& gains,
                               const swarm_gp_et::ControllerSynthesis& syn, int samples,
                               unsigned seed) {
  const int N = topo.agent_count();
  const int n = gains.order();
  const Eigen::MatrixXd Lambda = syn.companion.Lambda;
  Eigen::MatrixXd tL(n - 1, n);
  tL.col(0) = syn.companion.t;
  tL.rightCols(n - 1) = Lambda;
  const double tl = Eigen::JacobiSVD<Eigen::MatrixXd>(tL).singularValues()(0);
  const Eigen::MatrixXd shifted = topo.shifted_laplacian();
  const Eigen::MatrixXd inv = shifted.inverse();
  const double inv_norm = Eigen::JacobiSVD<Eigen::MatrixXd>(inv).singularValues()(0);
  const Eigen::MatrixXd Pr = syn.P_r, Pe = syn.P_eps_s;
  const double p_min = std::min(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Pr).eigenvalues()(0),
                                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Pe).eigenvalues()(0));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ChainResult out;
  auto check = [&](double lhs, double rhs) {
    const double tol = 1e-12 * std::max(1.0, rhs);
    if (lhs > rhs + tol) ++out.violations;
    if (rhs > 0) out.worst_ratio = std::max(out.worst_ratio, lhs / rhs);
  };
  for (int s = 0; s < samples; ++s) {
    Vector z(N * n);
    const double scale = std::exp(g(rng));
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = scale * g(rng);
    // e_{.,k} = eps_k for k < n; e_{.,n} from r = sum_k lambda_k e_{.,k}.
    Eigen::MatrixXd e(N, n);
    for (int k = 0; k + 1 < n; ++k) e.col(k) = z.segment(N * (k + 1), N);
    Eigen::VectorXd rest = z.head(N);
    for (int k = 0; k + 1 < n; ++k) rest -= gains.lambda(k) * e.col(k);
    e.col(n - 1) = rest / gains.lambda(n - 1);
    const Eigen::MatrixXd theta = inv * e;

    const double V = swarm_gp_et::lyapunov_value(z, syn.P_r, syn.P_eps);
    check(e.squaredNorm(), (1 + tl * tl) * z.squaredNorm());
    check((1 + tl * tl) * z.squaredNorm(), (1 + tl * tl) * V / p_min);
    check(theta.norm(), inv_norm * e.norm());
  }
  return out;
}

}  // namespace oracle
