#pragma once

#include "control/control.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace stlcbf::sim {

using control::Vector;

struct Coupling {
  enum class Kind { kNone, kRepulsive };
  Kind kind = Kind::kNone;
  double radius = 0.65;
  double gain = 0.05;
  // Leading state components treated as position.
  Eigen::Index position_dims = 2;
};

/// Pairwise inverse-distance repulsion inside `radius`; forces sum to zero.
std::vector<Vector> coupling_force(const std::vector<Vector>& positions, double radius, double gain);

struct Disturbance {
  double bound = 0.0;
  std::uint64_t seed = 0;
};

struct Timing {
  double sim_dt = 0.002;
  double control_rate = 50.0;
  double horizon = 0.0;
};

struct GroupBinding {
  std::string name;
  control::TaskGroup group;
  // Global agent index of each group agent, in group order.
  std::vector<std::size_t> members;
};

struct Event {
  double t = 0.0;
  std::string kind;
  std::string detail;
};

struct Trajectory {
  std::vector<std::string> agent_ids;
  std::vector<Eigen::Index> state_dims;
  std::vector<Eigen::Index> input_dims;
  std::vector<std::string> group_names;
  std::vector<double> times;
  std::vector<Vector> states;  // stacked over all agents, one row per time
  std::vector<Vector> inputs;  // stacked over all agents
  std::vector<std::vector<double>> barrier;  // per time, per group
  // Centralized-condition slack of the latest control update, per time and group.
  std::vector<std::vector<double>> slack;
  // Slacks of control updates where every agent of the group was feasible.
  std::vector<double> feasible_update_slacks;
  std::vector<Event> events;
  int infeasible_steps = 0;
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t seed = 0;
};

class Simulator {
 public:
  Simulator(std::vector<control::AgentModel> agents, std::vector<Vector> x0, std::vector<GroupBinding> groups,
            Coupling coupling, Disturbance disturbance, Timing timing);

  double time() const { return static_cast<double>(step_) * timing_.sim_dt; }
  const std::vector<Vector>& state() const { return x_; }
  const std::vector<Vector>& held_input() const { return u_; }
  const std::vector<Vector>& held_disturbance() const { return c_; }

  /// Advances one sim_dt; inputs are recomputed on control-period boundaries. Throws SimulationAbort when a group state leaves 2 D.
  void step();

  /// Simulates [0, horizon]; an abort ends the run early and is recorded.
  Trajectory run();

 private:
  void control_update();
  std::vector<Vector> coupling_now() const;
  Vector stack(const GroupBinding& g) const;
  void log_row(Trajectory& traj) const;

  std::vector<control::AgentModel> agents_;
  std::vector<Vector> x_;
  std::vector<GroupBinding> groups_;
  Coupling coupling_;
  Disturbance disturbance_;
  Timing timing_;
  long ticks_per_update_ = 1;
  long step_ = 0;
  bool initialized_ = false;
  std::vector<Vector> u_;
  std::vector<Vector> c_;
  std::vector<double> slack_;
  std::mt19937_64 rng_;
  Trajectory* log_ = nullptr;
};

}  // namespace stlcbf::sim
