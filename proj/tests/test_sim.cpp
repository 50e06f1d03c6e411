#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/error.hpp"
#include "sim/sim.hpp"
#include "stl/parser.hpp"

#include <cmath>
#include <random>

using namespace stlcbf;
using namespace stlcbf::sim;
using control::AgentModel;
using control::Dynamics;

namespace {

GroupBinding example1_group(double D) {
  stl::StateLayout layout;
  layout.dim = 2;
  layout.slices["robot"] = {0, 2};
  const auto specs = barrier::decompose(stl::parse_formula("G[7.5,10](ball(robot, 5))", layout));
  control::TaskGroup group{{AgentModel{"robot", Dynamics::single_integrator(2)}},
                           {control::AgentSlot{0, 0, 2}},
                           barrier::make_barrier(specs, 1.0, D, Vector::Constant(1, -2.5), Vector::Constant(1, 0.5), 2),
                           0.5,
                           1.0};
  return GroupBinding{"reach", std::move(group), {0}};
}

Simulator example1_sim(double bound, std::uint64_t seed, Vector x0 = (Vector(2) << 5, 5).finished(),
                       double horizon = 10.0) {
  return Simulator({AgentModel{"robot", Dynamics::single_integrator(2)}}, {std::move(x0)}, {example1_group(20.0)},
                   Coupling{}, Disturbance{bound, seed}, Timing{0.002, 50.0, horizon});
}

}  // namespace

TEST_CASE("repulsive coupling") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 500; ++i) {
    std::vector<Vector> pos;
    for (int k = 0; k < 4; ++k) pos.push_back(Vector::NullaryExpr(2, [&] { return u(rng); }));
    const auto f = coupling_force(pos, 0.65, 0.05);
    Vector total = Vector::Zero(2);
    for (const auto& v : f) total += v;
    CHECK(total.norm() <= 1e-12 * std::max(1.0, f[0].norm()));
  }
  // Outside the radius nothing acts; inside the pair is pushed apart.
  auto far = coupling_force({Vector::Zero(2), Vector::Constant(2, 1.0)}, 0.65, 0.05);
  CHECK(far[0].isZero());
  auto near = coupling_force({Vector::Zero(2), (Vector(2) << 0.3, 0).finished()}, 0.65, 0.05);
  CHECK(near[0][0] < 0.0);
  CHECK(near[1][0] == -near[0][0]);

  const auto same = coupling_force({Vector::Ones(2), Vector::Ones(2)}, 0.65, 0.05);
  CHECK(same[0].allFinite());
  CHECK(same[0].norm() > 0.0);
  CHECK((same[0] + same[1]).isZero());
  CHECK_THROWS_AS(coupling_force({Vector::Zero(2)}, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("example-1 run") {
  auto sim = example1_sim(0.0, 0);
  const auto traj = sim.run();
  CHECK_FALSE(traj.aborted);
  CHECK(traj.times.size() == 5001);
  CHECK(traj.times.back() == doctest::Approx(10.0));
  CHECK(traj.infeasible_steps == 0);
  for (const auto& row : traj.barrier) CHECK(row[0] >= -1e-9);
  // Inside the ball from 7.5 on.
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (traj.times[i] >= 7.5) CHECK(traj.states[i].norm() <= 5.0);
  }
  for (double s : traj.feasible_update_slacks) CHECK(s >= -1e-9);
  int switches = 0;
  for (const auto& e : traj.events) switches += e.kind == "switch";
  CHECK(switches == 2);
}

TEST_CASE("inputs are held between control updates") {
  auto sim = example1_sim(0.0, 0, (Vector(2) << 5, 5).finished(), 1.0);
  const auto traj = sim.run();
  for (std::size_t i = 0; i < traj.inputs.size(); ++i) {
    CHECK(traj.inputs[i] == traj.inputs[i - i % 10]);
  }
  CHECK(traj.inputs[0] != traj.inputs[10]);
}

TEST_CASE("same seed, same run") {
  auto a = example1_sim(0.3, 5).run();
  auto b = example1_sim(0.3, 5).run();
  auto c = example1_sim(0.3, 6).run();
  CHECK(a.states == b.states);
  CHECK(a.inputs == b.inputs);
  CHECK(a.states != c.states);
  CHECK(a.seed == 5);
}

TEST_CASE("disturbance stays within its bound") {
  auto sim = example1_sim(0.3, 11, (Vector(2) << 5, 5).finished(), 1.0);
  double largest = 0.0;
  for (int i = 0; i < 200; ++i) {
    sim.step();
    for (const auto& c : sim.held_disturbance()) largest = std::max(largest, c.cwiseAbs().maxCoeff());
  }
  CHECK(largest <= 0.3);
  CHECK(largest > 0.2);
}

TEST_CASE("abort outside twice the state bound") {
  auto sim = example1_sim(0.0, 0, (Vector(2) << 30, 30).finished());
  const auto traj = sim.run();
  CHECK(traj.aborted);
  CHECK(traj.times.size() < 5001);
  REQUIRE_FALSE(traj.events.empty());
  CHECK(traj.events.back().kind == "abort");
  CHECK_THROWS_AS(example1_sim(0.0, 0, (Vector(2) << 30, 30).finished()).step(), SimulationAbort);
}

TEST_CASE("constructor validation") {
  const auto agents = std::vector<AgentModel>{AgentModel{"robot", Dynamics::single_integrator(2)}};
  CHECK_THROWS_AS(Simulator(agents, {}, {}, Coupling{}, Disturbance{}, Timing{0.002, 50, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Simulator(agents, {Vector::Zero(3)}, {}, Coupling{}, Disturbance{}, Timing{0.002, 50, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Simulator(agents, {Vector::Zero(2)}, {}, Coupling{}, Disturbance{}, Timing{0.003, 50, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Simulator(agents, {Vector::Zero(2)}, {}, Coupling{}, Disturbance{}, Timing{0.1, 50, 1}),
                  std::invalid_argument);
}
