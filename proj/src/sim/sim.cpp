#include "sim/sim.hpp"

#include "common/error.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <stdexcept>

namespace stlcbf::sim {

std::vector<Vector> coupling_force(const std::vector<Vector>& positions, double radius, double gain) {
  if (!(radius > 0.0)) throw std::invalid_argument("repulsion radius must be positive");
  std::vector<Vector> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(Vector::Zero(p.size()));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const Vector diff = positions[i] - positions[j];
      const double d = diff.norm();
      if (d >= radius) continue;
      Vector dir;
      double magnitude;
      if (d > 0.0) {
        dir = diff / d;
        magnitude = gain * (1.0 / d - 1.0 / radius) / (d * d);
      } else {
        // Coincident: push the lower index along +e_k, k cycling with the pair.
        dir = Vector::Zero(diff.size());
        dir[static_cast<Eigen::Index>((i + j) % static_cast<std::size_t>(diff.size()))] = 1.0;
        magnitude = gain / (radius * radius);
      }
      out[i] += magnitude * dir;
      out[j] -= magnitude * dir;
    }
  }
  return out;
}

Simulator::Simulator(std::vector<control::AgentModel> agents, std::vector<Vector> x0, std::vector<GroupBinding> groups,
                     Coupling coupling, Disturbance disturbance, Timing timing)
    : agents_(std::move(agents)),
      x_(std::move(x0)),
      groups_(std::move(groups)),
      coupling_(coupling),
      disturbance_(disturbance),
      timing_(timing),
      rng_(disturbance.seed) {
  if (agents_.size() != x_.size()) throw std::invalid_argument("one initial state per agent required");
  if (!(timing_.sim_dt > 0.0) || !(timing_.control_rate > 0.0)) throw std::invalid_argument("invalid timing");
  const double period = 1.0 / timing_.control_rate;
  if (timing_.sim_dt > period * (1.0 + 1e-9)) throw std::invalid_argument("sim_dt exceeds the control period");
  ticks_per_update_ = std::lround(period / timing_.sim_dt);
  if (std::abs(static_cast<double>(ticks_per_update_) * timing_.sim_dt - period) > 1e-9 * period) {
    throw std::invalid_argument("control period must be a multiple of sim_dt");
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (x_[i].size() != agents_[i].dynamics.state_dim()) throw std::invalid_argument("initial state size mismatch");
    u_.push_back(Vector::Zero(agents_[i].dynamics.input_dim()));
    c_.push_back(Vector::Zero(x_[i].size()));
  }
  slack_.assign(groups_.size(), std::numeric_limits<double>::quiet_NaN());
}

std::vector<Vector> Simulator::coupling_now() const {
  std::vector<Vector> out;
  for (const auto& x : x_) out.push_back(Vector::Zero(x.size()));
  if (coupling_.kind != Coupling::Kind::kRepulsive) return out;
  std::vector<Vector> pos;
  for (const auto& x : x_) pos.push_back(x.head(std::min<Eigen::Index>(coupling_.position_dims, x.size())));
  const auto f = coupling_force(pos, coupling_.radius, coupling_.gain);
  for (std::size_t i = 0; i < x_.size(); ++i) out[i].head(f[i].size()) = f[i];
  return out;
}

Vector Simulator::stack(const GroupBinding& g) const {
  Vector x_bar(g.group.barrier.dim());
  for (std::size_t k = 0; k < g.group.layout.size(); ++k) {
    const auto& slot = g.group.layout[k];
    x_bar.segment(slot.offset, slot.length) = x_[g.members[slot.agent]];
  }
  return x_bar;
}

void Simulator::control_update() {
  const double t = time();
  const auto coupling = coupling_now();
  for (auto& u : u_) u.setZero();
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    const Vector x_bar = stack(g);
    const auto state = control::evaluate_group(g.group, x_bar, t);
    std::vector<Vector> inputs;
    std::vector<Vector> drift;
    bool all_feasible = true;
    for (std::size_t k = 0; k < g.group.layout.size(); ++k) {
      const std::size_t agent = g.members[g.group.layout[k].agent];
      drift.push_back(coupling[agent]);
      try {
        inputs.push_back(control::agent_input(g.group, state, k, x_bar, coupling[agent]).u);
      } catch (const InfeasibleStep& e) {
        all_feasible = false;
        inputs.push_back(Vector::Zero(agents_[agent].dynamics.input_dim()));
        if (log_ != nullptr) {
          ++log_->infeasible_steps;
          log_->events.push_back({t, "infeasible", e.what()});
        }
      }
      u_[agent] = inputs.back();
    }
    slack_[gi] = control::centralized_check(g.group, x_bar, t, inputs, drift);
    if (all_feasible && log_ != nullptr) log_->feasible_update_slacks.push_back(slack_[gi]);
  }
  if (disturbance_.bound > 0.0) {
    std::uniform_real_distribution<double> unif(-disturbance_.bound, disturbance_.bound);
    for (auto& c : c_) {
      for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = unif(rng_);
    }
  }
}

void Simulator::step() {
  if (!initialized_) {
    control_update();
    initialized_ = true;
  }
  const auto coupling = coupling_now();
  const double dt = timing_.sim_dt;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const auto& dyn = agents_[i].dynamics;
    x_[i] += dt * (dyn.drift(x_[i]) + dyn.input_map() * u_[i] + coupling[i] + c_[i]);
  }
  ++step_;
  for (const auto& g : groups_) {
    const double bound = g.group.barrier.state_bound();
    if (!std::isfinite(bound)) continue;
    const double norm = stack(g).norm();
    if (!std::isfinite(norm) || norm > 2.0 * bound) {
      throw SimulationAbort("group " + g.name + " state norm " + std::to_string(norm) + " exceeds 2 D = " +
                            std::to_string(2.0 * bound) + " at t = " + std::to_string(time()));
    }
  }
  if (step_ % ticks_per_update_ == 0) control_update();
}

void Simulator::log_row(Trajectory& traj) const {
  const double t = time();
  traj.times.push_back(t);
  Vector xs(0);
  Vector us(0);
  for (std::size_t i = 0; i < x_.size(); ++i) {
    xs.conservativeResize(xs.size() + x_[i].size());
    xs.tail(x_[i].size()) = x_[i];
    us.conservativeResize(us.size() + u_[i].size());
    us.tail(u_[i].size()) = u_[i];
  }
  traj.states.push_back(std::move(xs));
  traj.inputs.push_back(std::move(us));
  std::vector<double> b;
  for (const auto& g : groups_) b.push_back(g.group.barrier.eval(stack(g), t));
  traj.barrier.push_back(std::move(b));
  traj.slack.push_back(slack_);
}

Trajectory Simulator::run() {
  Trajectory traj;
  traj.seed = disturbance_.seed;
  for (const auto& a : agents_) {
    traj.agent_ids.push_back(a.id);
    traj.state_dims.push_back(a.dynamics.state_dim());
    traj.input_dims.push_back(a.dynamics.input_dim());
  }
  for (const auto& g : groups_) traj.group_names.push_back(g.name);
  log_ = &traj;

  const double dt = timing_.sim_dt;
  const long n_steps = static_cast<long>(std::ceil(timing_.horizon / dt - 1e-9));
  std::vector<double> switches;
  for (const auto& g : groups_) {
    for (double s : g.group.barrier.switch_times()) switches.push_back(s);
  }
  std::sort(switches.begin(), switches.end());
  switches.erase(std::unique(switches.begin(), switches.end()), switches.end());
  std::size_t next_switch = 0;

  if (!initialized_) {
    control_update();
    initialized_ = true;
  }
  log_row(traj);
  try {
    while (step_ < n_steps) {
      step();
      while (next_switch < switches.size() && switches[next_switch] <= time() + 1e-12) {
        traj.events.push_back({switches[next_switch], "switch", ""});
        ++next_switch;
      }
      log_row(traj);
    }
  } catch (const SimulationAbort& e) {
    traj.aborted = true;
    traj.abort_reason = e.what();
    traj.events.push_back({time(), "abort", e.what()});
  }
  log_ = nullptr;
  return traj;
}

}  // namespace stlcbf::sim
