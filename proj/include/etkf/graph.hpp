#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "etkf/errors.hpp"

namespace etkf {

struct Edge {
  int from = 0;  // information source j
  int to = 0;    // information sink i
  double weight = 1.0;
};

/// Weighted directed communication graph. weights(i, j) > 0 means agent i
/// receives information from agent j; the diagonal is zero.
class CommGraph {
 public:
  CommGraph(int n, Eigen::MatrixXd weights)
      : n_(n), weights_(std::move(weights)) {}

  int size() const { return n_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double weight(int to, int from) const { return weights_(to, from); }

  /// Agents j with weights(i, j) > 0, ascending.
  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (int j = 0; j < n_; ++j)
      if (weights_(i, j) > 0.0) out.push_back(j);
    return out;
  }

  /// Agents i that receive from j, ascending.
  std::vector<int> out_neighbors(int j) const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i)
      if (weights_(i, j) > 0.0) out.push_back(i);
    return out;
  }

 private:
  int n_;
  Eigen::MatrixXd weights_;
};

inline CommGraph build_graph(int n, const std::vector<Edge>& edges) {
  if (n < 1) throw validation_error("graph must have at least one agent");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges) {
    const std::string tag =
        "(" + std::to_string(e.from) + "->" + std::to_string(e.to) + ")";
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      throw validation_error("edge " + tag + " is out of range for n=" + std::to_string(n));
    if (e.from == e.to) throw validation_error("self-loop " + tag + " is not allowed");
    if (!(e.weight > 0.0))
      throw validation_error("edge " + tag + " must have positive weight, got " +
                             std::to_string(e.weight));
    if (w(e.to, e.from) != 0.0) throw validation_error("duplicate edge " + tag);
    w(e.to, e.from) = e.weight;
  }
  return CommGraph(n, std::move(w));
}

/// Undirected unit-weight ring 0-1-...-(n-1)-0; the default topology for the
/// five-agent scenarios.
inline CommGraph ring_graph(int n) {
  std::vector<Edge> edges;
  if (n == 2) {
    edges.push_back({0, 1, 1.0});
    edges.push_back({1, 0, 1.0});
  } else if (n > 2) {
    for (int i = 0; i < n; ++i) {
      int j = (i + 1) % n;
      edges.push_back({i, j, 1.0});
      edges.push_back({j, i, 1.0});
    }
  }
  return build_graph(n, edges);
}

struct Degrees {
  Eigen::VectorXd in;   // d_i, row sums
  Eigen::VectorXd out;  // d_i^o, column sums
};

inline Degrees degrees(const CommGraph& g) {
  const int n = g.size();
  Degrees d{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      d.in(i) += g.weights()(i, j);
      d.out(i) += g.weights()(j, i);
    }
  return d;
}

/// L = D - A. Row i sums to exactly zero because the diagonal is built from
/// the same additions as the off-diagonal entries it cancels.
inline Eigen::MatrixXd laplacian(const CommGraph& g) {
  const int n = g.size();
  Eigen::MatrixXd L = -g.weights();
  for (int i = 0; i < n; ++i) {
    double di = 0.0;
    for (int j = 0; j < n; ++j) di += g.weights()(i, j);
    L(i, i) = di;
  }
  return L;
}

inline bool is_balanced(const CommGraph& g, double tol = 0.0) {
  if (tol < 0.0) throw validation_error("tolerance must be non-negative");
  const Degrees d = degrees(g);
  return ((d.in - d.out).cwiseAbs().array() <= tol).all();
}

/// True iff some root reaches every node along arcs j->i with weights(i,j)>0.
inline bool is_connected(const CommGraph& g) {
  const int n = g.size();
  if (n == 1) return true;
  for (int root = 0; root < n; ++root) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack{root};
    seen[root] = true;
    int count = 1;
    while (!stack.empty()) {
      int j = stack.back();
      stack.pop_back();
      for (int i : g.out_neighbors(j))
        if (!seen[i]) {
          seen[i] = true;
          ++count;
          stack.push_back(i);
        }
    }
    if (count == n) return true;
  }
  return false;
}

}  // namespace etkf
