#pragma once

// Directed, weighted communication graph of the agent network.
//
// Agents are addressed 1-based in edge lists (matching config files) and
// 0-based everywhere in the API. An edge (from, to, w) means agent `to`
// receives information from agent `from`, i.e. a(to, from) = w.

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/linalg.hpp"

#include <queue>
#include <span>
#include <string>
#include <vector>

namespace swarm_gp_et {

struct Edge {
  int from = 0;
  int to = 0;
  double weight = 1.0;
};

class Topology {
 public:
  Topology() = default;

  int agent_count() const noexcept { return static_cast<int>(adjacency_.rows()); }
  const Matrix& adjacency() const noexcept { return adjacency_; }
  const Matrix& laplacian() const noexcept { return laplacian_; }

  /// In-neighbors of agent i: every j with a_ij > 0.
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }

  /// Neighbors j with a communication channel in both directions.
  const std::vector<int>& bidirectional_neighbors(int i) const {
    return bidirectional_.at(i);
  }

  /// Weighted in-degree l_ii.
  double degree(int i) const { return laplacian_(i, i); }

  /// L + I, the matrix mapping stacked tracking errors to sync errors.
  Matrix shifted_laplacian() const {
    return laplacian_ + Matrix::Identity(agent_count(), agent_count());
  }

  friend Topology build_topology(std::span<const Edge> edges, int agent_count);

 private:
  Matrix adjacency_;
  Matrix laplacian_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> bidirectional_;
};

inline Topology build_topology(std::span<const Edge> edges, int agent_count) {
  if (agent_count < 1)
    throw InvalidArgument("agent_count must be positive, got " + std::to_string(agent_count));

  Topology topo;
  topo.adjacency_ = Matrix::Zero(agent_count, agent_count);
  for (const Edge& e : edges) {
    const std::string tag =
        "edge (" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
    if (e.from < 1 || e.from > agent_count || e.to < 1 || e.to > agent_count)
      throw InvalidArgument(tag + ": agent index outside [1, " + std::to_string(agent_count) + "]");
    if (e.from == e.to) throw InvalidArgument(tag + ": self-loop");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw InvalidArgument(tag + ": weight must be positive and finite");
    double& a = topo.adjacency_(e.to - 1, e.from - 1);
    if (a != 0.0) throw InvalidArgument(tag + ": duplicate edge");
    a = e.weight;
  }

  topo.laplacian_ = -topo.adjacency_;
  for (int i = 0; i < agent_count; ++i)
    topo.laplacian_(i, i) = topo.adjacency_.row(i).sum();

  topo.neighbors_.assign(agent_count, {});
  topo.bidirectional_.assign(agent_count, {});
  for (int i = 0; i < agent_count; ++i)
    for (int j = 0; j < agent_count; ++j)
      if (topo.adjacency_(i, j) > 0.0) topo.neighbors_[i].push_back(j);
  for (int i = 0; i < agent_count; ++i)
    for (int j : topo.neighbors_[i])
      if (topo.adjacency_(j, i) > 0.0) topo.bidirectional_[i].push_back(j);
  return topo;
}

inline Topology build_topology(const std::vector<Edge>& edges, int agent_count) {
  return build_topology(std::span<const Edge>(edges), agent_count);
}

/// True iff some root reaches every agent along edge directions.
inline bool has_spanning_tree(const Topology& topo) {
  const int n = topo.agent_count();
  const Matrix& a = topo.adjacency();
  for (int root = 0; root < n; ++root) {
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    seen[root] = true;
    frontier.push(root);
    int reached = 1;
    while (!frontier.empty()) {
      const int j = frontier.front();
      frontier.pop();
      // Information flows j -> i whenever a_ij > 0.
      for (int i = 0; i < n; ++i) {
        if (!seen[i] && a(i, j) > 0.0) {
          seen[i] = true;
          ++reached;
          frontier.push(i);
        }
      }
    }
    if (reached == n) return true;
  }
  return false;
}

/// Diagonal Lyapunov certificate for L + I on a graph with a spanning tree:
/// q = (L + I)^-1 1, P = diag(1/q), Q = P (L + I) + (L + I)^T P.
struct ConsensusLyapunovMatrices {
  Vector q;
  Matrix P;
  Matrix Q;
};

inline ConsensusLyapunovMatrices consensus_lyapunov_matrices(const Topology& topo) {
  if (!has_spanning_tree(topo))
    throw InvalidArgument("communication graph has no directed spanning tree");
  const int n = topo.agent_count();
  const Matrix shifted = topo.shifted_laplacian();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
  if (!lu.isInvertible()) throw NotPositiveDefinite("L + I (singular)", 0.0);

  ConsensusLyapunovMatrices out;
  out.q = lu.solve(Vector::Ones(n));
  for (int i = 0; i < n; ++i)
    if (!(out.q(i) > 0.0)) throw NotPositiveDefinite("P (q has nonpositive entry)", out.q(i));
  out.P = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) out.P(i, i) = 1.0 / out.q(i);
  out.Q = out.P * shifted + shifted.transpose() * out.P;
  const double lmin = linalg::min_eigenvalue(out.Q);
  if (!(lmin > 0.0)) throw NotPositiveDefinite("Q", lmin);
  return out;
}

}  // namespace swarm_gp_et
