#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "app/pipeline.hpp"
#include "common/error.hpp"

#include <cmath>
#include <cstdio>
#include <string>

using namespace stlcbf;
using namespace stlcbf::app;
using nlohmann::json;

namespace {

const std::string kDir = STLCBF_SCENARIO_DIR;

json example1_doc() {
  return json::parse(R"js({
    "name": "example1",
    "agents": [{"id": "robot", "dim": 2, "dynamics": {"type": "single_integrator"}, "x0": [5, 5]}],
    "groups": [{
      "name": "reach", "agents": ["robot"], "formula": "G[7.5,10](ball(robot, 5))",
      "C": 0, "chi": 0.1, "kappa": 1, "epsilon_margin": 0.01,
      "fixed_parameters": {"eta": 1, "r": 0.25, "gamma0": [-2.5], "gamma_inf": [0.5]}
    }],
    "coupling": {"type": "none"},
    "disturbance": {"bound": 0, "seed": 0},
    "timing": {"sim_dt": 0.002, "control_rate": 50, "horizon": 10},
    "synthesis": {"mode": "fixed", "r": 0.25, "restarts": 8, "seed": 1}
  })js");
}

std::string scenario_error(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario validation") {
  CHECK(scenario_error(example1_doc()).empty());

  auto doc = example1_doc();
  doc["groups"][0]["agents"] = {"ghost"};
  CHECK(scenario_error(doc).find("unknown agent") != std::string::npos);

  doc = example1_doc();
  doc["groups"].push_back(doc["groups"][0]);
  doc["groups"][1]["name"] = "again";
  CHECK(scenario_error(doc).find("more than one group") != std::string::npos);

  doc = example1_doc();
  doc["agents"][0]["id"] = "x";
  CHECK_FALSE(scenario_error(doc).empty());

  doc = example1_doc();
  doc["timing"]["horizon"] = 9;
  CHECK_FALSE(scenario_error(doc).empty());

  doc = example1_doc();
  doc["disturbance"]["bound"] = 0.5;
  CHECK(scenario_error(doc).find("exceeds C") != std::string::npos);

  doc = example1_doc();
  doc["groups"][0].erase("fixed_parameters");
  CHECK(scenario_error(doc).find("fixed_parameters") != std::string::npos);

  doc = example1_doc();
  doc["groups"][0]["formula"] = "G[7.5,10](ball(robot, -1))";
  CHECK_FALSE(scenario_error(doc).empty());

  doc = example1_doc();
  doc["groups"][0]["formula"] = "G[7.5,10](ball(robot, 5)) || F[0,1](ball(robot, 1))";
  CHECK_FALSE(scenario_error(doc).empty());

  doc = example1_doc();
  doc["agents"][0]["x0"] = {1, 2, 3};
  CHECK_FALSE(scenario_error(doc).empty());

  CHECK_THROWS_AS(load_scenario(kDir + "/does_not_exist.json"), ScenarioError);
}

TEST_CASE("scenario hash") {
  const auto a = parse_scenario(example1_doc());
  const auto b = parse_scenario(example1_doc());
  CHECK(a.hash == b.hash);
  CHECK(a.hash.size() == 16);

  auto doc = example1_doc();
  doc["groups"][0]["chi"] = 0.2;
  CHECK(parse_scenario(doc).hash != a.hash);
  doc = example1_doc();
  doc["groups"][0]["formula"] = "G[7.5,10](ball(robot, 4))";
  CHECK(parse_scenario(doc).hash != a.hash);
  // Synthesis starts from the agents' x0 unless it names its own.
  doc = example1_doc();
  doc["agents"][0]["x0"] = {4, 4};
  CHECK(parse_scenario(doc).hash != a.hash);
  doc["synthesis"]["x0"] = {{"robot", {5, 5}}};
  doc["timing"]["horizon"] = 12;
  doc["name"] = "renamed";
  CHECK(parse_scenario(doc).hash == a.hash);
}

TEST_CASE("params json round trip and mismatch") {
  const auto sc = load_scenario(kDir + "/example1.json");
  const auto params = synthesize_scenario(sc);
  REQUIRE(params.feasible());
  CHECK(params.r() == 0.25);
  const auto back = params_from_json(params_to_json(params));
  CHECK(params_to_json(back) == params_to_json(params));
  const std::string path = "test_app_params.json";
  save_params(params, path);
  CHECK(params_to_json(load_params(path)) == params_to_json(params));
  std::remove(path.c_str());

  auto doc = example1_doc();
  doc["groups"][0]["chi"] = 0.2;
  CHECK_THROWS_AS(simulate_scenario(parse_scenario(doc), params), ParamsMismatch);
  CHECK_THROWS_AS(load_params("missing_params.json"), Error);
}

TEST_CASE("simulate, tabulate, monitor and plot") {
  const auto sc = load_scenario(kDir + "/example1.json");
  const auto params = synthesize_scenario(sc);
  const auto traj = simulate_scenario(sc, params);
  const auto table = trajectory_table(traj);
  CHECK(table.header.front() == "t");
  CHECK(table.column("x_robot_0").has_value());
  CHECK(table.column("u_robot_1").has_value());
  CHECK(table.column("b_reach").has_value());
  CHECK(table.rows.size() == 5001);

  const auto report = monitor_scenario(table, sc, 0.0);
  CHECK(report.rho >= 0.25);
  CHECK(report.entries.size() == 1);
  CHECK(report.to_json()["formulas"][0]["name"] == "reach");

  // Same value through the free-formula path.
  const auto free = monitor_formula(table, "G[7.5,10](ball(robot, 5))", 0.0);
  CHECK(free.rho == report.rho);

  // CSV keeps 12 significant digits.
  const auto parsed = parse_csv(table_to_csv(table));
  REQUIRE(parsed.header == table.header);
  REQUIRE(parsed.rows.size() == table.rows.size());
  CHECK(std::abs(monitor_scenario(parsed, sc, 0.0).rho - report.rho) < 1e-9);

  Table truncated = table;
  truncated.rows.resize(3000);
  CHECK_THROWS_AS(monitor_scenario(truncated, sc, 0.0), HorizonError);

  const auto summary = summarize(traj, params, sc);
  CHECK(summary.rho_at_0.has_value());
  CHECK(summary.recovery_time.value() == 0.0);
  CHECK(summary.min_b_after_recovery >= 0.0);
  CHECK(summary.infeasible_steps == 0);
  CHECK_FALSE(summary.aborted);

  for (auto kind : {PlotKind::kBarrier, PlotKind::kPaths, PlotKind::kInputs}) {
    const auto svg = plot_svg(table, kind);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
  CHECK(plot_svg(table, PlotKind::kPaths).find("id=\"path-robot\"") != std::string::npos);
  CHECK(plot_kind_from_string("paths") == PlotKind::kPaths);
  CHECK_THROWS(plot_kind_from_string("pie"));
}

TEST_CASE("malformed csv") {
  CHECK_THROWS_AS(parse_csv(""), ScenarioError);
  CHECK_THROWS_AS(parse_csv("time,x\n0,1\n1,2\n"), ScenarioError);
  CHECK_THROWS_AS(parse_csv("t,x\n0,1\n1\n"), ScenarioError);
  CHECK_THROWS_AS(parse_csv("t,x\n0,1\n0,2\n"), ScenarioError);
  CHECK_THROWS_AS(parse_csv("t,x\n0,1\n1,abc\n"), ScenarioError);
  CHECK_THROWS_AS(parse_csv("t,x\n0,1\n"), ScenarioError);
  CHECK_NOTHROW(parse_csv("t,x\n0,1\n1,2\n"));
  CHECK_THROWS_AS(read_csv("no_such.csv"), ScenarioError);
}
