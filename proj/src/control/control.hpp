#pragma once

#include "barrier/barrier.hpp"

#include <string>
#include <vector>

namespace stlcbf::control {

using barrier::CompositeBarrier;
using stl::Matrix;
using stl::Vector;

/// Control-affine agent dynamics dx = f(x) + g u with a constant input map.
/// f(x) = A x + a0; the single integrator is A = 0, a0 = 0, g = I.
class Dynamics {
 public:
  static Dynamics single_integrator(Eigen::Index n);
  /// Throws std::invalid_argument unless g has full row rank.
  static Dynamics linear(Matrix A, Vector a0, Matrix g);

  Eigen::Index state_dim() const { return g_.rows(); }
  Eigen::Index input_dim() const { return g_.cols(); }
  Vector drift(const Vector& x) const { return A_ * x + a0_; }
  const Matrix& input_map() const { return g_; }
  const Matrix& A() const { return A_; }
  const Vector& a0() const { return a0_; }
  bool is_single_integrator() const;

 private:
  Matrix A_;
  Vector a0_;
  Matrix g_;
};

struct AgentModel {
  std::string id;
  Dynamics dynamics = Dynamics::single_integrator(2);
};

struct AgentSlot {
  std::size_t agent = 0;  // index into the group's agent list
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

struct TaskGroup {
  std::vector<AgentModel> agents;
  std::vector<AgentSlot> layout;
  CompositeBarrier barrier;
  double C = 0.0;
  double kappa = 0.0;
};

/// Barrier quantities at one (x_bar, t), shared by every agent of the group.
struct GroupState {
  barrier::Evaluation eval;
  double omega = 0.0;
  std::vector<double> share;
};

double omega(const TaskGroup& group, const Vector& x_bar, double t);
std::vector<double> load_share(const TaskGroup& group, const Vector& x_bar, double t);
GroupState evaluate_group(const TaskGroup& group, const Vector& x_bar, double t);

struct QpSolution {
  Vector u;
  Vector a;
  double beta = 0.0;
};

/// Closed-form min ||u||^2 subject to a^T u >= beta. Throws InfeasibleStep
/// when a vanishes and beta > 0.
Vector min_norm_input(const Vector& a, double beta);

/// Decentralized input of agent `k`. `extra_drift` is known additive drift
/// (coupling) on the agent's state.
QpSolution agent_input(const TaskGroup& group, std::size_t k, const Vector& x_bar, double t);
QpSolution agent_input(const TaskGroup& group, const GroupState& state, std::size_t k, const Vector& x_bar,
                       const Vector& extra_drift);

/// Analytic feasible law g^T (g g^T)^-1 (-f + sign(grad) C).
Vector feasible_fallback(const TaskGroup& group, std::size_t k, const Vector& x_bar, double t);

/// Slack of the centralized condition grad (f + g u) + db/dt + kappa b - ||grad||_1 C.
double centralized_check(const TaskGroup& group, const Vector& x_bar, double t, const std::vector<Vector>& inputs,
                         const std::vector<Vector>& extra_drift = {});

}  // namespace stlcbf::control
