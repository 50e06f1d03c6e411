#include "control/control.hpp"

#include "common/error.hpp"

#include <cmath>
#include <stdexcept>

namespace stlcbf::control {

namespace {

constexpr double kZeroGradient = 1e-12;
constexpr double kRankTol = 1e-9;

Vector segment(const Vector& x_bar, const AgentSlot& slot) { return x_bar.segment(slot.offset, slot.length); }

}  // namespace

Dynamics Dynamics::single_integrator(Eigen::Index n) {
  return linear(Matrix::Zero(n, n), Vector::Zero(n), Matrix::Identity(n, n));
}

Dynamics Dynamics::linear(Matrix A, Vector a0, Matrix g) {
  const Eigen::Index n = g.rows();
  if (n == 0) throw std::invalid_argument("input map must be nonempty");
  if (A.rows() != n || A.cols() != n || a0.size() != n) throw std::invalid_argument("drift dimensions mismatch");
  if (g.cols() < n) throw std::invalid_argument("input map needs at least as many inputs as states");
  Eigen::JacobiSVD<Matrix> svd(g);
  if (svd.singularValues().minCoeff() < kRankTol) throw std::invalid_argument("input map must have full row rank");
  Dynamics d;
  d.A_ = std::move(A);
  d.a0_ = std::move(a0);
  d.g_ = std::move(g);
  return d;
}

bool Dynamics::is_single_integrator() const {
  return A_.isZero(0.0) && a0_.isZero(0.0) && g_.rows() == g_.cols() && g_.isIdentity(0.0);
}

GroupState evaluate_group(const TaskGroup& group, const Vector& x_bar, double t) {
  GroupState s;
  s.eval = group.barrier.evaluate_all(x_bar, t);
  s.omega = s.eval.dt + group.kappa * s.eval.value;
  double total = 0.0;
  std::vector<double> norms;
  for (const auto& slot : group.layout) {
    norms.push_back(s.eval.grad.segment(slot.offset, slot.length).lpNorm<1>());
    total += norms.back();
  }
  // The last contributing agent takes the complement so the shares sum to 1 in floating point.
  const std::size_t n = norms.size();
  s.share.assign(n, 0.0);
  if (total <= 0.0) norms.assign(n, 1.0), total = static_cast<double>(n);
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (norms[i] > 0.0) last = i;
  }
  double partial = 0.0;
  for (std::size_t i = 0; i < last; ++i) {
    s.share[i] = norms[i] / total;
    partial += s.share[i];
  }
  if (n > 0) s.share[last] = 1.0 - partial;
  return s;
}

double omega(const TaskGroup& group, const Vector& x_bar, double t) { return evaluate_group(group, x_bar, t).omega; }

std::vector<double> load_share(const TaskGroup& group, const Vector& x_bar, double t) {
  return evaluate_group(group, x_bar, t).share;
}

Vector min_norm_input(const Vector& a, double beta) {
  const double an = a.norm();
  if (an <= kZeroGradient) {
    if (beta <= 0.0) return Vector::Zero(a.size());
    throw InfeasibleStep("zero gradient slice with positive requirement " + std::to_string(beta));
  }
  if (beta <= 0.0) return Vector::Zero(a.size());
  return (beta / (an * an)) * a;
}

QpSolution agent_input(const TaskGroup& group, const GroupState& state, std::size_t k, const Vector& x_bar,
                       const Vector& extra_drift) {
  const AgentSlot& slot = group.layout.at(k);
  const Dynamics& dyn = group.agents.at(slot.agent).dynamics;
  const Vector x_i = segment(x_bar, slot);
  const Vector grad_i = state.eval.grad.segment(slot.offset, slot.length);
  Vector f_i = dyn.drift(x_i);
  if (extra_drift.size() == f_i.size()) f_i += extra_drift;
  QpSolution sol;
  sol.a = dyn.input_map().transpose() * grad_i;
  sol.beta = -grad_i.dot(f_i) - state.share[k] * state.omega + grad_i.lpNorm<1>() * group.C;
  // Scale-aware zero test: tiny slices against a tiny requirement count as zero.
  const double scale = std::max(1.0, dyn.input_map().norm());
  if (sol.a.norm() <= kZeroGradient * scale) {
    // Every term of beta scales with the slice (D_i included) unless the whole group gradient vanishes,
    // so the requirement is taken in that limit rather than from round-off sized values.
    const double flat_tol = kZeroGradient * scale * static_cast<double>(group.layout.size());
    const double required = state.eval.grad.lpNorm<1>() <= flat_tol ? -state.share[k] * state.omega : 0.0;
    if (required <= kZeroGradient * std::max(1.0, std::abs(state.omega))) {
      sol.u = Vector::Zero(dyn.input_dim());
      return sol;
    }
    throw InfeasibleStep("agent " + group.agents.at(slot.agent).id + ": zero gradient slice with requirement " +
                         std::to_string(sol.beta));
  }
  sol.u = sol.beta > 0.0 ? Vector((sol.beta / sol.a.squaredNorm()) * sol.a) : Vector::Zero(dyn.input_dim());
  return sol;
}

QpSolution agent_input(const TaskGroup& group, std::size_t k, const Vector& x_bar, double t) {
  const GroupState state = evaluate_group(group, x_bar, t);
  return agent_input(group, state, k, x_bar, Vector());
}

Vector feasible_fallback(const TaskGroup& group, std::size_t k, const Vector& x_bar, double t) {
  const AgentSlot& slot = group.layout.at(k);
  const Dynamics& dyn = group.agents.at(slot.agent).dynamics;
  const Vector grad_i = group.barrier.grad_x(x_bar, t).segment(slot.offset, slot.length);
  const Matrix& g = dyn.input_map();
  const Matrix ggt = g * g.transpose();
  Eigen::LDLT<Matrix> ldlt(ggt);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < kRankTol) {
    throw std::invalid_argument("g g^T is singular");
  }
  Vector v(grad_i.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    v[j] = (grad_i[j] > 0.0 ? 1.0 : grad_i[j] < 0.0 ? -1.0 : 0.0) * group.C;
  }
  return g.transpose() * ldlt.solve(-dyn.drift(segment(x_bar, slot)) + v);
}

double centralized_check(const TaskGroup& group, const Vector& x_bar, double t, const std::vector<Vector>& inputs,
                         const std::vector<Vector>& extra_drift) {
  const auto ev = group.barrier.evaluate_all(x_bar, t);
  double flow = 0.0;
  for (std::size_t k = 0; k < group.layout.size(); ++k) {
    const AgentSlot& slot = group.layout[k];
    const Dynamics& dyn = group.agents.at(slot.agent).dynamics;
    Vector xdot = dyn.drift(segment(x_bar, slot)) + dyn.input_map() * inputs.at(k);
    if (k < extra_drift.size() && extra_drift[k].size() == xdot.size()) xdot += extra_drift[k];
    flow += ev.grad.segment(slot.offset, slot.length).dot(xdot);
  }
  return flow + ev.dt + group.kappa * ev.value - ev.grad.lpNorm<1>() * group.C;
}

}  // namespace stlcbf::control
