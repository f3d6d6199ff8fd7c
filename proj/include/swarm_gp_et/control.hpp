#pragma once

// Distributed feedback-linearizing consensus controller and its analysis
// constants.
//
// Notation used throughout:
//   theta_i = x_i - s_i                 tracking error of agent i (length n)
//   e_i     = sum_j a_ij (theta_i - theta_j) + theta_i   sync errors
//   r_i     = sum_k lambda_k e_{i,k}    filtered error
//   z_i     = [r_i, e_{i,1}, ..., e_{i,n-1}]
// and the network-stacked z = [r; eps_1; ...; eps_{n-1}] with
// eps_k = [e_{1,k}, ..., e_{N,k}].

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/linalg.hpp"
#include "swarm_gp_et/topology.hpp"

#include <cmath>
#include <string>

namespace swarm_gp_et {

struct ControllerGains {
  double c = 1.0;
  Vector lambda;

  int order() const noexcept { return static_cast<int>(lambda.size()); }

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("gain c must be positive");
    if (lambda.size() < 2) throw InvalidArgument("lambda needs at least two entries (n >= 2)");
    if (!(lambda(0) > 0.0)) throw InvalidArgument("lambda_1 must be positive");
    if (lambda(lambda.size() - 1) == 0.0) throw InvalidArgument("lambda_n must be nonzero");
  }
};

/// Error dynamics eps_dot = Lambda eps + t r of one agent once e_n is
/// eliminated through r.
struct CompanionForm {
  Matrix Lambda;  // (n-1) x (n-1)
  Vector t;       // length n-1, last entry 1/lambda_n
};

inline CompanionForm companion_matrix(const Vector& lambda) {
  const Eigen::Index n = lambda.size();
  if (n < 2) throw InvalidArgument("companion form needs n >= 2");
  const double last = lambda(n - 1);
  if (last == 0.0) throw InvalidArgument("lambda_n must be nonzero");

  CompanionForm out;
  const Eigen::Index m = n - 1;
  out.Lambda = Matrix::Zero(m, m);
  if (m > 1) out.Lambda.topRightCorner(m - 1, m - 1) = Matrix::Identity(m - 1, m - 1);
  out.Lambda.row(m - 1) = -lambda.head(m).transpose() / last;
  out.t = Vector::Zero(m);
  out.t(m - 1) = 1.0 / last;

  const double max_re = linalg::max_real_eigenvalue(out.Lambda);
  if (!(max_re < 0.0)) throw NotHurwitz("Lambda", max_re);
  return out;
}

/// Solves A^T P + P A + Q = 0 through the Kronecker-vectorized system.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index m = A.rows();
  if (A.cols() != m || Q.rows() != m || Q.cols() != m)
    throw InvalidArgument("solve_lyapunov: shape mismatch");
  const double max_re = linalg::max_real_eigenvalue(A);
  if (!(max_re < 0.0)) throw NotHurwitz("A", max_re);

  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P) for column-major vec.
  const Matrix I = Matrix::Identity(m, m);
  const Matrix At = A.transpose();
  const Eigen::MatrixXd system = linalg::kron(I, At) + linalg::kron(At, I);
  Eigen::VectorXd rhs(m * m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) rhs(j * m + i) = -Q(i, j);
  const Eigen::VectorXd sol = system.fullPivLu().solve(rhs);
  Matrix P(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) P(i, j) = sol(j * m + i);
  return 0.5 * (P + P.transpose());
}

inline double lyapunov_residual(const Matrix& A, const Matrix& P, const Matrix& Q) {
  return (A.transpose() * P + P * A + Q).cwiseAbs().maxCoeff();
}

struct ControllerSynthesis {
  Matrix P_r;
  Matrix Q_r;
  Matrix P_eps_s;
  Matrix Q_eps_s;
  Matrix P_eps;  // P_eps_s (x) I_N
  Matrix Phi;
  Matrix Psi;
  Matrix Q_z;
  CompanionForm companion;
  double lambda_min_Qz = 0.0;
  double xi = 0.0;
  double chi = 0.0;
  double t_lambda_norm = 0.0;  // spectral norm of [t, Lambda]
  double inverse_shifted_laplacian_norm = 0.0;
  double theta_bar_min = 0.0;
};

/// Builds Q_z for gain c; shared by synthesis and the gain search.
inline Matrix build_Qz(const ConsensusLyapunovMatrices& consensus, const ControllerGains& gains,
                       const CompanionForm& comp, const Matrix& Q_eps_s, Matrix* Phi_out = nullptr,
                       Matrix* Psi_out = nullptr) {
  const Eigen::Index N = consensus.P.rows();
  const Eigen::Index m = gains.lambda.size() - 1;
  const Matrix I_N = Matrix::Identity(N, N);
  const Eigen::RowVectorXd head = gains.lambda.head(m).transpose();

  const double head_t = head.dot(comp.t);
  const Matrix Phi = head_t * consensus.P;
  const Matrix head_Lambda = head * comp.Lambda;  // 1 x (n-1)
  const Matrix Psi =
      consensus.P * linalg::kron(head_Lambda, I_N) + linalg::kron(comp.t.transpose(), I_N);

  const double lambda_n = gains.lambda(m);
  Matrix Qz(N * (m + 1), N * (m + 1));
  Qz.topLeftCorner(N, N) = gains.c * lambda_n * consensus.Q - 2.0 * Phi;
  Qz.topRightCorner(N, N * m) = -Psi;
  Qz.bottomLeftCorner(N * m, N) = -Psi.transpose();
  Qz.bottomRightCorner(N * m, N * m) = linalg::kron(Q_eps_s, I_N);
  if (Phi_out) *Phi_out = Phi;
  if (Psi_out) *Psi_out = Psi;
  return 0.5 * (Qz + Qz.transpose());
}

/// All analysis constants of the closed loop. `eta_floor` is the vector of
/// per-agent trigger floors; theta_bar_min = xi * chi * ||eta_floor||.
/// Throws NotPositiveDefinite (carrying lambda_min(Q_z)) when the gain is too
/// small.
inline ControllerSynthesis synthesize_constants(const Topology& topo,
                                                const ConsensusLyapunovMatrices& consensus,
                                                const ControllerGains& gains,
                                                const Matrix& Q_eps_s, const Vector& eta_floor) {
  gains.validate();
  const int N = topo.agent_count();
  const Eigen::Index m = gains.lambda.size() - 1;
  if (Q_eps_s.rows() != m || Q_eps_s.cols() != m)
    throw InvalidArgument("q_eps must be " + std::to_string(m) + "x" + std::to_string(m));
  if (linalg::symmetry_defect(Q_eps_s) > 1e-12) throw InvalidArgument("q_eps must be symmetric");
  const double q_eps_min = linalg::min_eigenvalue(Q_eps_s);
  if (!(q_eps_min > 0.0)) throw NotPositiveDefinite("Q_eps", q_eps_min);
  if (eta_floor.size() != N) throw InvalidArgument("eta_floor must have one entry per agent");

  ControllerSynthesis out;
  out.companion = companion_matrix(gains.lambda);
  out.P_r = consensus.P;
  out.Q_r = consensus.Q;
  out.Q_eps_s = Q_eps_s;
  out.P_eps_s = solve_lyapunov(out.companion.Lambda, Q_eps_s);
  out.P_eps = linalg::kron(out.P_eps_s, Matrix::Identity(N, N));
  out.Q_z = build_Qz(consensus, gains, out.companion, Q_eps_s, &out.Phi, &out.Psi);
  out.lambda_min_Qz = linalg::min_eigenvalue(out.Q_z);
  if (!(out.lambda_min_Qz > 0.0)) throw NotPositiveDefinite("Q_z", out.lambda_min_Qz);

  const Matrix shifted = topo.shifted_laplacian();
  const double lambda_n = gains.lambda(m);
  out.xi = 2.0 * lambda_n / out.lambda_min_Qz * linalg::spectral_norm(out.P_r * shifted);

  Matrix t_Lambda(m, m + 1);
  t_Lambda.col(0) = out.companion.t;
  t_Lambda.rightCols(m) = out.companion.Lambda;
  out.t_lambda_norm = linalg::spectral_norm(t_Lambda);
  out.inverse_shifted_laplacian_norm = linalg::spectral_norm(shifted.inverse());

  const double p_max =
      std::max(linalg::max_eigenvalue(out.P_r), linalg::max_eigenvalue(out.P_eps_s));
  const double p_min =
      std::min(linalg::min_eigenvalue(out.P_r), linalg::min_eigenvalue(out.P_eps_s));
  out.chi = std::sqrt(N * (1.0 + out.t_lambda_norm * out.t_lambda_norm) * p_max / p_min) *
            out.inverse_shifted_laplacian_norm;
  out.theta_bar_min = out.xi * out.chi * eta_floor.norm();
  return out;
}

/// Smallest gain (to three significant digits) that makes Q_z positive
/// definite: doubles c from `start` until it works, then bisects.
inline double find_min_gain(const ConsensusLyapunovMatrices& consensus, const Vector& lambda,
                            const Matrix& Q_eps_s, double start = 1.0) {
  const CompanionForm comp = companion_matrix(lambda);
  auto ok = [&](double c) {
    ControllerGains g{c, lambda};
    return linalg::min_eigenvalue(build_Qz(consensus, g, comp, Q_eps_s)) > 0.0;
  };
  double hi = start;
  int guard = 0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (++guard > 60) throw Error("gain search: no c up to " + std::to_string(hi) + " makes Q_z PD");
  }
  double lo = 0.0;
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Sync errors of agent i; reads only rows {i} and its in-neighbors of the
/// N x n tracking-error matrix.
inline Vector sync_errors(const Matrix& tracking_errors, const Topology& topo, int agent) {
  if (tracking_errors.rows() != topo.agent_count())
    throw InvalidArgument("tracking errors need one row per agent");
  Vector e = tracking_errors.row(agent).transpose();
  for (int j : topo.neighbors(agent))
    e += topo.adjacency()(agent, j) *
         (tracking_errors.row(agent) - tracking_errors.row(j)).transpose();
  return e;
}

inline double filtered_error(const Vector& sync_error, const ControllerGains& gains) {
  return gains.lambda.dot(sync_error);
}

/// z_i = [r_i, e_{i,1}, ..., e_{i,n-1}].
inline Vector agent_z(const Vector& sync_error, const ControllerGains& gains) {
  const Eigen::Index n = sync_error.size();
  Vector z(n);
  z(0) = filtered_error(sync_error, gains);
  z.tail(n - 1) = sync_error.head(n - 1);
  return z;
}

/// Network z = [r; eps_1; ...; eps_{n-1}] from the N x n sync-error matrix.
inline Vector stacked_z(const Matrix& sync, const ControllerGains& gains) {
  const Eigen::Index N = sync.rows();
  const Eigen::Index n = sync.cols();
  Vector z(N * n);
  z.head(N) = sync * gains.lambda;
  for (Eigen::Index k = 0; k + 1 < n; ++k) z.segment(N * (k + 1), N) = sync.col(k);
  return z;
}

/// u_i = -c r_i + s_{r,i} - mu_tilde_i.
inline double control_input(const Vector& sync_error, const ControllerGains& gains,
                            double reference_highest, double mu_tilde) {
  return -gains.c * filtered_error(sync_error, gains) + reference_highest - mu_tilde;
}

/// V = r^T P_r r + eps^T P_eps eps for the network-stacked z.
inline double lyapunov_value(const Vector& z, const Matrix& P_r, const Matrix& P_eps) {
  const Eigen::Index N = P_r.rows();
  if (z.size() != N + P_eps.rows()) throw InvalidArgument("lyapunov_value: shape mismatch");
  const Vector r = z.head(N);
  const Vector eps = z.tail(P_eps.rows());
  return r.dot(P_r * r) + eps.dot(P_eps * eps);
}

}  // namespace swarm_gp_et
