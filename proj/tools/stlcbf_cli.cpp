// Command-line driver: synth, simulate, monitor, plot.
#include <stlcbf/stlcbf.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

namespace {

using json = nlohmann::json;

struct Freer {
  void operator()(stlcbf_scenario* p) const { stlcbf_scenario_free(p); }
  void operator()(stlcbf_params* p) const { stlcbf_params_free(p); }
  void operator()(stlcbf_trajectory* p) const { stlcbf_trajectory_free(p); }
  void operator()(char* p) const { stlcbf_string_free(p); }
};

template <typename T>
using Owned = std::unique_ptr<T, Freer>;

// Exit codes.
constexpr int kOk = 0;
constexpr int kNegative = 1;  // infeasible synthesis, aborted run, violated formula
constexpr int kInvalid = 2;

int report(stlcbf_status st, const char* what) {
  std::fprintf(stderr, "%s: %s: %s\n", what, stlcbf_status_name(st), stlcbf_last_error());
  return kInvalid;
}

std::string take(char* s) {
  Owned<char> owned(s);
  return s ? std::string(s) : std::string();
}

std::string fmt_num(const json& v) {
  if (v.is_null()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v.get<double>());
  return buf;
}

std::string summary_path(const std::string& csv_path) {
  const auto dot = csv_path.rfind('.');
  const auto slash = csv_path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv_path.substr(0, dot) : csv_path) + ".summary.json";
}

int cmd_synth(const std::string& scenario_path, const std::string& out, std::optional<double> feasibility,
              std::optional<std::uint64_t> seed) {
  stlcbf_scenario* raw = nullptr;
  if (auto st = stlcbf_scenario_load(scenario_path.c_str(), &raw); st != STLCBF_OK) return report(st, "synth");
  Owned<stlcbf_scenario> sc(raw);

  stlcbf_synth_options opt{feasibility ? 1 : 0, feasibility.value_or(0.0), seed ? 1 : 0, seed.value_or(0)};
  stlcbf_params* praw = nullptr;
  if (auto st = stlcbf_synthesize(sc.get(), &opt, &praw); st != STLCBF_OK) return report(st, "synth");
  Owned<stlcbf_params> params(praw);

  char* text = nullptr;
  if (auto st = stlcbf_params_to_json(params.get(), &text); st != STLCBF_OK) return report(st, "synth");
  const json doc = json::parse(take(text));
  for (const auto& g : doc["groups"]) {
    std::printf("group %s: %s\n", g["name"].get<std::string>().c_str(),
                g["feasible"].get<bool>() ? "feasible" : "INFEASIBLE");
    std::printf("  r = %s  eta = %s  D = %s  kappa = %s (%s)\n", fmt_num(g["r"]).c_str(), fmt_num(g["eta"]).c_str(),
                fmt_num(g["D"]).c_str(), fmt_num(g["kappa"]).c_str(), g["kappa_source"].get<std::string>().c_str());
    for (const auto& c : g["constraints"]) {
      std::printf("  %-40s slack %12s  %s\n", c["name"].get<std::string>().c_str(), fmt_num(c["slack"]).c_str(),
                  c["satisfied"].get<bool>() ? "ok" : "VIOLATED");
    }
    if (!g["note"].get<std::string>().empty()) std::printf("  note: %s\n", g["note"].get<std::string>().c_str());
  }
  std::printf("r = %s\n", fmt_num(doc["r"]).c_str());

  if (auto st = stlcbf_params_save(params.get(), out.c_str()); st != STLCBF_OK) return report(st, "synth");
  std::printf("wrote %s\n", out.c_str());
  return stlcbf_params_feasible(params.get()) ? kOk : kNegative;
}

int cmd_simulate(const std::string& scenario_path, const std::string& params_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  stlcbf_scenario* sraw = nullptr;
  if (auto st = stlcbf_scenario_load(scenario_path.c_str(), &sraw); st != STLCBF_OK) return report(st, "simulate");
  Owned<stlcbf_scenario> sc(sraw);
  stlcbf_params* praw = nullptr;
  if (auto st = stlcbf_params_load(params_path.c_str(), &praw); st != STLCBF_OK) return report(st, "simulate");
  Owned<stlcbf_params> params(praw);

  stlcbf_trajectory* traw = nullptr;
  if (auto st = stlcbf_simulate(sc.get(), params.get(), seed ? 1 : 0, seed.value_or(0), &traw); st != STLCBF_OK) {
    return report(st, "simulate");
  }
  Owned<stlcbf_trajectory> tr(traw);
  if (auto st = stlcbf_trajectory_write_csv(tr.get(), out.c_str()); st != STLCBF_OK) return report(st, "simulate");

  char* text = nullptr;
  if (auto st = stlcbf_trajectory_summary(tr.get(), sc.get(), params.get(), &text); st != STLCBF_OK) {
    return report(st, "simulate");
  }
  const std::string summary = take(text);
  const std::string spath = summary_path(out);
  std::ofstream(spath) << summary << "\n";

  const json s = json::parse(summary);
  std::printf("wrote %s (%zu rows) and %s\n", out.c_str(), stlcbf_trajectory_rows(tr.get()), spath.c_str());
  std::printf("rho(x,0) = %s  min b after recovery = %s  recovery at t = %s  infeasible steps = %d\n",
              fmt_num(s["rho_at_0"]).c_str(), fmt_num(s["min_b_after_recovery"]).c_str(),
              fmt_num(s["recovery_time"]).c_str(), s["infeasible_steps"].get<int>());
  if (stlcbf_trajectory_aborted(tr.get())) {
    std::fprintf(stderr, "simulate: aborted: %s\n", s["abort_reason"].get<std::string>().c_str());
    return kNegative;
  }
  return kOk;
}

int cmd_monitor(const std::string& traj_path, const std::string& scenario_path, const std::string& formula,
                double at) {
  stlcbf_trajectory* traw = nullptr;
  if (auto st = stlcbf_trajectory_load_csv(traj_path.c_str(), &traw); st != STLCBF_OK) return report(st, "monitor");
  Owned<stlcbf_trajectory> tr(traw);

  double rho = 0.0;
  char* text = nullptr;
  stlcbf_status st;
  if (!formula.empty()) {
    st = stlcbf_monitor_formula(tr.get(), formula.c_str(), at, &rho, &text);
  } else {
    stlcbf_scenario* sraw = nullptr;
    if (auto s = stlcbf_scenario_load(scenario_path.c_str(), &sraw); s != STLCBF_OK) return report(s, "monitor");
    Owned<stlcbf_scenario> sc(sraw);
    st = stlcbf_monitor_scenario(tr.get(), sc.get(), at, &rho, &text);
  }
  if (st != STLCBF_OK) return report(st, "monitor");
  const json rep = json::parse(take(text));
  for (const auto& e : rep["formulas"]) {
    std::printf("rho[%s](x, %g) = %s\n", e["name"].get<std::string>().c_str(), at, fmt_num(e["rho"]).c_str());
  }
  std::printf("rho(x, %g) = %s  %s\n", at, fmt_num(rep["rho"]).c_str(), rho > 0.0 ? "satisfied" : "VIOLATED");
  return rho > 0.0 ? kOk : kNegative;
}

int cmd_plot(const std::string& traj_path, const std::string& out, const std::string& kind) {
  stlcbf_trajectory* traw = nullptr;
  if (auto st = stlcbf_trajectory_load_csv(traj_path.c_str(), &traw); st != STLCBF_OK) return report(st, "plot");
  Owned<stlcbf_trajectory> tr(traw);
  char* svg = nullptr;
  if (auto st = stlcbf_plot_svg(tr.get(), kind.c_str(), &svg); st != STLCBF_OK) return report(st, "plot");
  std::ofstream file(out);
  if (!file) {
    std::fprintf(stderr, "plot: cannot write %s\n", out.c_str());
    stlcbf_string_free(svg);
    return kInvalid;
  }
  file << take(svg);
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile STL tasks into time-varying barrier functions, synthesize, simulate and monitor."};
  app.require_subcommand(1);
  app.set_version_flag("--version", stlcbf_version());

  std::string scenario, params, out, traj, formula, kind;
  std::optional<double> feasibility;
  std::optional<std::uint64_t> seed;
  double at = 0.0;

  auto* synth = app.add_subcommand("synth", "Synthesize barrier parameters for every task group");
  synth->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "Parameter JSON to write")->required();
  synth->add_option("--feasibility", feasibility, "Fix r and search for any feasible parameters");
  synth->add_option("--seed", seed, "Override the synthesis seed");

  auto* simulate = app.add_subcommand("simulate", "Simulate the closed loop and log a trajectory CSV");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--params", params, "Parameter JSON from synth")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out, "Trajectory CSV to write; the summary goes next to it")->required();
  simulate->add_option("--seed", seed, "Override the disturbance seed");

  auto* monitor = app.add_subcommand("monitor", "Robustness of the task formulas on a logged trajectory");
  monitor->add_option("trajectory", traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  auto* mscen = monitor->add_option("--scenario", scenario, "Scenario whose group formulas are checked");
  auto* mform = monitor->add_option("--formula", formula, "A formula over the stacked agent states");
  mscen->excludes(mform);
  monitor->add_option("--at", at, "Evaluation time")->capture_default_str();

  auto* plot = app.add_subcommand("plot", "Static SVG plot of a trajectory");
  plot->add_option("trajectory", traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out, "SVG to write")->required();
  plot->add_option("--kind", kind, "barrier | paths | inputs")
      ->required()
      ->check(CLI::IsMember({"barrier", "paths", "inputs"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalid;
  }

  if (*synth) return cmd_synth(scenario, out, feasibility, seed);
  if (*simulate) return cmd_simulate(scenario, params, out, seed);
  if (*monitor) {
    if (scenario.empty() && formula.empty()) {
      std::fprintf(stderr, "monitor: give --scenario or --formula\n");
      return kInvalid;
    }
    return cmd_monitor(traj, scenario, formula, at);
  }
  if (*plot) return cmd_plot(traj, out, kind);
  return kInvalid;
}
