#pragma once

#include "control/control.hpp"
#include "sim/sim.hpp"
#include "stl/parser.hpp"
#include "synthesis/synthesis.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace stlcbf::app {

using stl::Vector;

struct AgentSpec {
  std::string id;
  Eigen::Index dim = 0;
  control::Dynamics dynamics = control::Dynamics::single_integrator(1);
  Vector x0;
  nlohmann::json dynamics_json;
};

/// Barrier parameters given by hand instead of searched.
struct FixedParameters {
  double eta = 1.0;
  double D = 0.0;  // 0 selects the default state bound
  double r = 0.0;
  Vector gamma0;
  Vector gamma_inf;
};

struct GroupSpec {
  std::string name;
  std::vector<std::string> agents;
  std::vector<std::size_t> agent_indices;
  std::string formula_text;
  stl::StateLayout layout;
  stl::Formula formula;
  std::vector<barrier::TermSpec> specs;
  double C = 0.0;
  double chi = 0.0;
  std::optional<double> kappa;  // empty: select automatically
  double epsilon_margin = 0.01;
  std::optional<FixedParameters> fixed;
  nlohmann::json raw;
};

struct SynthesisSettings {
  std::string mode = "maximize_r";  // maximize_r | feasibility | fixed
  double r = 0.0;
  int restarts = 32;
  int max_evaluations = 2500;
  std::uint64_t seed = 1;
  synthesis::Bounds bounds;
  // Initial state used for synthesis, one per agent.
  std::vector<Vector> x0;
};

struct Scenario {
  std::string name;
  std::vector<AgentSpec> agents;
  std::vector<GroupSpec> groups;
  sim::Coupling coupling;
  sim::Disturbance disturbance;
  sim::Timing timing;
  SynthesisSettings synthesis;
  std::string hash;
};

/// Validates and resolves a scenario document. Throws ScenarioError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Stacked group state built from per-agent vectors.
Vector stack_group(const GroupSpec& group, const std::vector<Vector>& per_agent);

std::string fnv1a_hex(const std::string& text);

}  // namespace stlcbf::app
