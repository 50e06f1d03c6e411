#pragma once

#include "app/scenario.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stlcbf::app {

struct GroupParameters {
  std::string name;
  synthesis::SynthesisResult result;
  barrier::CompositeBarrier barrier;
  double chi = 0.0;
  std::string kappa_source;  // "explicit" or "auto"
};

struct ParamsFile {
  std::string scenario_hash;
  std::string mode;
  std::vector<GroupParameters> groups;

  bool feasible() const;
  double r() const;
};

struct SynthOptions {
  std::optional<double> feasibility_r;
  std::optional<std::uint64_t> seed;
};

/// Synthesizes every group. Throws ScenarioError when a group's terms admit no parameters.
ParamsFile synthesize_scenario(const Scenario& scenario, const SynthOptions& options = {});

nlohmann::json params_to_json(const ParamsFile& params);
ParamsFile params_from_json(const nlohmann::json& j);
void save_params(const ParamsFile& params, const std::string& path);
ParamsFile load_params(const std::string& path);

/// Throws ParamsMismatch when the file was produced for another scenario.
sim::Trajectory simulate_scenario(const Scenario& scenario, const ParamsFile& params,
                                  std::optional<std::uint64_t> seed = std::nullopt);

/// Columns: t, x_<agent>_<k>, u_<agent>_<k>, b_<group>, slack_<group>.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  std::vector<double> series(std::size_t col) const;
};

Table trajectory_table(const sim::Trajectory& traj);
std::string table_to_csv(const Table& table);
void write_csv(const Table& table, const std::string& path);
/// Throws ScenarioError on malformed input.
Table parse_csv(const std::string& text);
Table read_csv(const std::string& path);

struct MonitorEntry {
  std::string name;
  double rho = 0.0;
  bool satisfied = false;
};

struct MonitorReport {
  double t = 0.0;
  std::vector<MonitorEntry> entries;
  double rho = 0.0;  // conjunction

  nlohmann::json to_json() const;
};

/// Robustness of every group formula and of their conjunction. Throws HorizonError.
MonitorReport monitor_scenario(const Table& table, const Scenario& scenario, double t);
/// A free formula over the stacked states of all agents (agent ids name their blocks).
MonitorReport monitor_formula(const Table& table, const std::string& formula, double t);

struct Summary {
  double r = 0.0;
  std::optional<double> rho_at_0;
  double min_b_after_recovery = 0.0;
  std::optional<double> recovery_time;
  int infeasible_steps = 0;
  std::uint64_t seed = 0;
  double min_distance = 0.0;
  bool aborted = false;

  nlohmann::json to_json() const;
};

Summary summarize(const sim::Trajectory& traj, const ParamsFile& params, const Scenario& scenario);

enum class PlotKind { kBarrier, kPaths, kInputs };
PlotKind plot_kind_from_string(const std::string& kind);
std::string plot_svg(const Table& table, PlotKind kind);

}  // namespace stlcbf::app
