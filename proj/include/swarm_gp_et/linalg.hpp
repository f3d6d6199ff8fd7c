#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swarm_gp_et {

// Dense row-major storage throughout; every matrix in this library is at most
// (nN) x (nN) or M x M for a GP data set.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

namespace linalg {

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

// Eigenvalues of a symmetric matrix in ascending order.
inline Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

inline double min_eigenvalue(const Matrix& symmetric) {
  return symmetric_eigenvalues(symmetric)(0);
}

inline double max_eigenvalue(const Matrix& symmetric) {
  const Vector ev = symmetric_eigenvalues(symmetric);
  return ev(ev.size() - 1);
}

inline Eigen::VectorXcd eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues();
}

inline double max_real_eigenvalue(const Matrix& m) {
  const Eigen::VectorXcd ev = eigenvalues(m);
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::max(best, ev(i).real());
  return best;
}

inline bool is_hurwitz(const Matrix& m) { return max_real_eigenvalue(m) < 0.0; }

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double symmetry_defect(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace linalg
}  // namespace swarm_gp_et
