#pragma once

#include <Eigen/Dense>
#include <string>

#include "etkf/errors.hpp"

namespace etkf {

/// Local signals x and local average estimates xbar, n agents each.
struct ConsensusState {
  Eigen::VectorXd x;
  Eigen::VectorXd xbar;
  double t = 0.0;
};

/// One explicit-Euler step of the average consensus dynamics
/// d(xbar)/dt = xdot - L*xbar, alongside x itself integrating xdot.
/// Requires h < 1/max(d_i) so the Laplacian diffusion stays stable.
inline ConsensusState consensus_step(const ConsensusState& state,
                                     const Eigen::VectorXd& xdot,
                                     const Eigen::MatrixXd& L, double h) {
  const auto n = state.x.size();
  if (state.xbar.size() != n || xdot.size() != n || L.rows() != n || L.cols() != n)
    throw validation_error("consensus_step: dimension mismatch");
  if (!(h > 0.0)) throw validation_error("consensus_step: step size must be positive");
  const double max_degree = L.diagonal().maxCoeff();
  if (max_degree > 0.0 && h >= 1.0 / max_degree)
    throw numeric_error("consensus_step: step " + std::to_string(h) +
                        " violates stability bound h < " + std::to_string(1.0 / max_degree));
  ConsensusState next;
  next.xbar = state.xbar + h * (xdot - L * state.xbar);
  next.x = state.x + h * xdot;
  next.t = state.t + h;
  return next;
}

/// The averaging projector: every entry 1/n.
inline Eigen::MatrixXd averaging_matrix(int n) {
  if (n < 1) throw validation_error("averaging_matrix: n must be >= 1");
  return Eigen::MatrixXd::Constant(n, n, 1.0 / n);
}

/// s*(sI + L)^-1, the consensus transfer function evaluated at real s > 0.
/// Approaches averaging_matrix(n) as s -> 0 on connected balanced graphs.
inline Eigen::MatrixXd steady_state_gain(const Eigen::MatrixXd& L, double s) {
  if (!(s > 0.0)) throw validation_error("steady_state_gain: s must be positive");
  const auto n = L.rows();
  Eigen::MatrixXd M = s * Eigen::MatrixXd::Identity(n, n) + L;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible())
    throw numeric_error("steady_state_gain: sI + L is numerically singular at s=" +
                        std::to_string(s));
  return s * lu.inverse();
}

}  // namespace etkf
