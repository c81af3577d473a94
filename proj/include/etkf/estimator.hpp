#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "etkf/errors.hpp"
#include "etkf/graph.hpp"

namespace etkf {

/// e^{MT} by scaling-and-squaring over a truncated Taylor series. The input
/// is scaled until its infinity norm is <= 0.5, summed to machine precision,
/// then squared back up.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double T = 1.0) {
  const auto n = M.rows();
  if (M.cols() != n) throw validation_error("matrix_exponential: matrix must be square");
  if (!M.allFinite() || !std::isfinite(T))
    throw validation_error("matrix_exponential: non-finite input");
  Eigen::MatrixXd X = M * T;
  const double norm = X.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    X /= std::pow(2.0, squarings);
  }
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 32; ++k) {
    term = (term * X) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// \int_0^T e^{A tau} d tau, read off the top-right block of
/// exp([[A, I], [0, 0]] T). Multiplied by a hold input this is the
/// zero-order-hold drive term of the discretized system.
inline Eigen::MatrixXd exp_integral(const Eigen::MatrixXd& A, double T) {
  const auto n = A.rows();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = A;
  block.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  return matrix_exponential(block, T).topRightCorner(n, n);
}

/// Van Loan discretization of continuous process noise:
/// Q_d = \int_0^T e^{A tau} Q e^{A' tau} d tau.
inline Eigen::MatrixXd discretize_process_noise(const Eigen::MatrixXd& A,
                                                const Eigen::MatrixXd& Q, double T) {
  const auto n = A.rows();
  if (Q.rows() != n || Q.cols() != n)
    throw validation_error("discretize_process_noise: dimension mismatch");
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -A;
  block.topRightCorner(n, n) = Q;
  block.bottomRightCorner(n, n) = A.transpose();
  const Eigen::MatrixXd F = matrix_exponential(block, T);
  Eigen::MatrixXd Qd = F.bottomRightCorner(n, n).transpose() * F.topRightCorner(n, n);
  Qd = ((Qd + Qd.transpose()) / 2.0).eval();
  return Qd;
}

/// Immutable parameters of one event-triggered Kalman filter: continuous
/// dynamics A, output map C, noise covariances Q and R, estimation period T,
/// and the per-channel send-on-delta thresholds. The discretized transition
/// e^{AT} and process noise Q_d are precomputed.
class EtkfModel {
 public:
  EtkfModel(Eigen::MatrixXd A, Eigen::MatrixXd C, Eigen::MatrixXd Q,
            Eigen::MatrixXd R, double T, Eigen::VectorXd deltas)
      : A_(std::move(A)),
        C_(std::move(C)),
        Q_(std::move(Q)),
        R_(std::move(R)),
        T_(T),
        deltas_(std::move(deltas)) {
    const auto n = A_.rows();
    const auto p = C_.rows();
    if (A_.cols() != n) throw validation_error("EtkfModel: A must be square");
    if (C_.cols() != n) throw validation_error("EtkfModel: C column count must match A");
    if (Q_.rows() != n || Q_.cols() != n) throw validation_error("EtkfModel: Q must be n x n");
    if (R_.rows() != p || R_.cols() != p) throw validation_error("EtkfModel: R must be p x p");
    if (deltas_.size() != p) throw validation_error("EtkfModel: one delta per output channel");
    if (!(T_ > 0.0)) throw validation_error("EtkfModel: estimation period must be positive");
    if ((deltas_.array() < 0.0).any())
      throw validation_error("EtkfModel: deltas must be non-negative");
    check_psd(Q_, "Q");
    check_psd(R_, "R");
    Ad_ = matrix_exponential(A_, T_);
    Qd_ = discretize_process_noise(A_, Q_, T_);
  }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }
  double T() const { return T_; }
  const Eigen::VectorXd& deltas() const { return deltas_; }
  const Eigen::MatrixXd& Ad() const { return Ad_; }
  const Eigen::MatrixXd& Qd() const { return Qd_; }
  Eigen::Index state_dim() const { return A_.rows(); }
  Eigen::Index output_dim() const { return C_.rows(); }

 private:
  static void check_psd(const Eigen::MatrixXd& M, const char* name) {
    if (!M.isApprox(M.transpose(), 1e-9))
      throw validation_error(std::string("EtkfModel: ") + name + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double floor = -1e-9 * (1.0 + M.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < floor)
      throw validation_error(std::string("EtkfModel: ") + name +
                             " must be positive semidefinite");
  }

  Eigen::MatrixXd A_, C_, Q_, R_;
  double T_;
  Eigen::VectorXd deltas_;
  Eigen::MatrixXd Ad_, Qd_;
};

/// Evolving filter state: prior mean and covariance at step k, plus the last
/// received value per output channel.
struct EtkfState {
  Eigen::VectorXd x_pred;
  Eigen::MatrixXd P_pred;
  Eigen::VectorXd y_last;
  long k = 0;
};

/// Prior state per the algorithm's initialization: y_last = C * x_pred0.
inline EtkfState init_state(const EtkfModel& model, Eigen::VectorXd x_pred0,
                            Eigen::MatrixXd P_pred0) {
  if (x_pred0.size() != model.state_dim() || P_pred0.rows() != model.state_dim() ||
      P_pred0.cols() != model.state_dim())
    throw validation_error("init_state: dimension mismatch");
  EtkfState st;
  st.y_last = model.C() * x_pred0;
  st.x_pred = std::move(x_pred0);
  st.P_pred = std::move(P_pred0);
  st.k = 0;
  return st;
}

/// Copy of R with delta_i^2/3 added on the diagonal of every channel that was
/// not received this period; the stale held value carries a bounded
/// perturbation modeled as uniform on [-delta, delta].
inline Eigen::MatrixXd inflate_measurement_covariance(const Eigen::MatrixXd& R,
                                                      const std::vector<bool>& received,
                                                      const Eigen::VectorXd& deltas) {
  const auto p = R.rows();
  if (static_cast<Eigen::Index>(received.size()) != p || deltas.size() != p)
    throw validation_error("inflate_measurement_covariance: dimension mismatch");
  Eigen::MatrixXd Rbar = R;
  for (Eigen::Index i = 0; i < p; ++i)
    if (!received[i]) Rbar(i, i) += deltas(i) * deltas(i) / 3.0;
  return Rbar;
}

struct MeasurementUpdate {
  Eigen::VectorXd x_post;
  Eigen::MatrixXd P_post;
  EtkfState state;  // y_last refreshed; prior untouched
};

/// The event-aware measurement update: refresh y_last on received channels,
/// inflate R on the rest, then apply the standard gain/update/covariance
/// equations against the full y_last stack. P is re-symmetrized afterwards.
inline MeasurementUpdate measurement_update(const EtkfState& state, const EtkfModel& model,
                                            const std::vector<std::optional<double>>& received) {
  const auto p = model.output_dim();
  if (state.x_pred.size() != model.state_dim() ||
      static_cast<Eigen::Index>(received.size()) != p)
    throw validation_error("measurement_update: dimension mismatch");

  MeasurementUpdate out{Eigen::VectorXd(), Eigen::MatrixXd(), state};
  std::vector<bool> got(received.size());
  for (size_t i = 0; i < received.size(); ++i) {
    got[i] = received[i].has_value();
    if (got[i]) out.state.y_last(static_cast<Eigen::Index>(i)) = *received[i];
  }
  const Eigen::MatrixXd Rbar = inflate_measurement_covariance(model.R(), got, model.deltas());

  const Eigen::MatrixXd& C = model.C();
  const Eigen::MatrixXd& Pp = state.P_pred;
  const Eigen::MatrixXd S = C * Pp * C.transpose() + Rbar;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible())
    throw numeric_error("measurement_update: innovation covariance is singular at step " +
                        std::to_string(state.k));
  const Eigen::MatrixXd K = Pp * C.transpose() * lu.inverse();

  out.x_post = state.x_pred + K * (out.state.y_last - C * state.x_pred);
  Eigen::MatrixXd P =
      (Eigen::MatrixXd::Identity(Pp.rows(), Pp.cols()) - K * C) * Pp;
  out.P_post = ((P + P.transpose()) / 2.0).eval();
  return out;
}

/// Project ahead one period: x_pred <- e^{AT} x_post,
/// P_pred <- e^{AT} P_post e^{A'T} + Q_d.
inline EtkfState project_ahead(const EtkfState& state, const EtkfModel& model,
                               const Eigen::VectorXd& x_post, const Eigen::MatrixXd& P_post) {
  EtkfState next = state;
  next.x_pred = model.Ad() * x_post;
  next.P_pred = model.Ad() * P_post * model.Ad().transpose() + model.Qd();
  next.k = state.k + 1;
  return next;
}

/// Per-agent scalar realization of the average consensus protocol: the state
/// is the agent's own average estimate with A = [-d_i]; the output stacks the
/// local measurement channel first and then one channel per neighbor, all
/// observing that same average. Neighbor data enters as held measurements.
inline EtkfModel consensus_realization(int agent, const CommGraph& g, double r = 1.0,
                                       double delta = 0.1, double q = 0.0,
                                       double period = 1.0) {
  if (agent < 0 || agent >= g.size())
    throw validation_error("consensus_realization: agent id out of range");
  const std::vector<int> nbrs = g.neighbors(agent);
  if (nbrs.empty())
    throw validation_error("consensus_realization: agent " + std::to_string(agent) +
                           " is isolated; consensus needs at least one neighbor");
  double d = 0.0;
  for (int j : nbrs) d += g.weight(agent, j);
  const auto p = static_cast<Eigen::Index>(1 + nbrs.size());
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = -d;
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(p, 1);
  Eigen::MatrixXd Q(1, 1);
  Q(0, 0) = q;
  Eigen::MatrixXd R = r * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd deltas = Eigen::VectorXd::Constant(p, delta);
  return EtkfModel(std::move(A), std::move(C), std::move(Q), std::move(R), period,
                   std::move(deltas));
}

}  // namespace etkf
