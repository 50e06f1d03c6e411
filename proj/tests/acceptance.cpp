// Acceptance suite: one PASS/FAIL line per criterion. Usage: acceptance <scenario-dir>
#include "app/pipeline.hpp"
#include "common/error.hpp"
#include "control/control.hpp"
#include "stl/parser.hpp"
#include "support/oracles.hpp"
#include "synthesis/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace stlcbf;
using stl::Matrix;
using stl::Vector;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

const char* kThreeRobots =
    "G[15,90](ball(p1 - p2 + [0.8,0], 0.33)) && G[25,35](ball(p1 - p3 + [0,-0.8], 0.33)) && "
    "F[30,35](ball(p1 - [1.2,1.2], 0.33)) && F[40,60](ball(p3 - [1.2,-1.2], 0.33)) && "
    "F[50,90](ball(p1 - [-1.2,1.2], 0.33) & ball(p2 - p3 + [0.8,0], 0.33))";

stl::StateLayout robots_layout() {
  stl::StateLayout layout;
  layout.dim = 6;
  layout.slices["p1"] = {0, 2};
  layout.slices["p2"] = {2, 2};
  layout.slices["p3"] = {4, 2};
  return layout;
}

stl::StateLayout plane() {
  stl::StateLayout layout;
  layout.dim = 2;
  layout.slices["x"] = {0, 2};
  return layout;
}

// Feasible-update slacks collected from the scenario runs for criterion 7.
std::vector<double> scenario_slacks;

struct Run {
  app::Scenario scenario;
  app::ParamsFile params;
  sim::Trajectory traj;
  app::Summary summary;
  double rho = 0.0;
};

Run pipeline(const std::string& path, const app::ParamsFile* reuse = nullptr) {
  Run run;
  run.scenario = app::load_scenario(path);
  run.params = reuse ? *reuse : app::synthesize_scenario(run.scenario);
  if (!run.params.feasible()) throw std::runtime_error("synthesis reported infeasible");
  run.traj = app::simulate_scenario(run.scenario, run.params);
  run.summary = app::summarize(run.traj, run.params, run.scenario);
  run.rho = app::monitor_scenario(app::trajectory_table(run.traj), run.scenario, 0.0).rho;
  scenario_slacks.insert(scenario_slacks.end(), run.traj.feasible_update_slacks.begin(),
                         run.traj.feasible_update_slacks.end());
  return run;
}

bool near_kink(const barrier::CompositeBarrier& b, const Vector& x, double t) {
  for (double s : b.switch_times()) {
    if (std::abs(t - s) < 5e-3) return true;
  }
  for (const auto& term : b.terms()) {
    const auto& p = term.predicate;
    if (p.kind() == stl::Predicate::Kind::kBall && (p.map() * x - p.offset()).norm() < 1e-2) return true;
  }
  return std::isfinite(b.state_bound()) && x.norm() < 1e-2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <scenario-dir>\n");
    return 2;
  }
  const std::string dir = argv[1];
  app::ParamsFile robots_params;

  report(1, "Example-1 reproduction", [&] {
    const auto start = std::chrono::steady_clock::now();
    const Run run = pipeline(dir + "/example1.json");
    const double secs = seconds_since(start);
    const bool ok = run.rho >= 0.25 - 1e-3 && secs < 10.0 && !run.traj.aborted;
    return Outcome{ok, fmt("rho(x,0) = %.6f (need >= 0.249), runtime %.2f s", run.rho, secs)};
  });

  report(2, "three-robot scenario", [&] {
    const auto start = std::chrono::steady_clock::now();
    const Run run = pipeline(dir + "/three_robots.json");
    const double secs = seconds_since(start);
    robots_params = run.params;
    const bool ok = run.params.r() >= 0.01 && run.rho >= 0.0 && run.summary.min_distance > 0.0 && secs < 120.0 &&
                    !run.traj.aborted;
    return Outcome{ok, fmt("r = %.4f, rho(x,0) = %.4f, min distance %.4f, runtime %.2f s", run.params.r(), run.rho,
                           run.summary.min_distance, secs)};
  });

  report(3, "recovery from an offset start", [&] {
    if (robots_params.groups.empty()) return Outcome{false, "needs the parameters of criterion 2"};
    const Run run = pipeline(dir + "/three_robots_offset.json", &robots_params);
    const double b0 = run.traj.barrier.front()[0];
    const bool recovered = run.summary.recovery_time.has_value() && *run.summary.recovery_time <= 5.0;
    const double after = run.summary.min_b_after_recovery;
    const bool ok = b0 <= -0.3 && recovered && after >= -1e-6;
    return Outcome{ok, fmt("b(x(0),0) = %.4f, b >= 0 from t = %.3f s, min b afterwards %.3g", b0,
                           recovered ? *run.summary.recovery_time : -1.0, after)};
  });

  report(4, "smooth minimum bounds", [] {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-10, 10);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
      std::vector<double> b(1 + rng() % 8);
      for (auto& v : b) v = u(rng);
      const double m = *std::min_element(b.begin(), b.end());
      const double eta = std::exp(std::uniform_real_distribution<double>(std::log(0.05), std::log(500.0))(rng));
      const double s = barrier::smooth_min(b, eta);
      if (!(s <= m + 1e-12) || !(s >= m - std::log(static_cast<double>(b.size())) / eta - 1e-12)) ++bad;
      const double gap_sharp = m - barrier::smooth_min(b, 125.0);
      const double gap_soft = m - barrier::smooth_min(b, 1.0);
      if (!(gap_sharp <= gap_soft + 1e-12)) ++bad;
    }
    return Outcome{bad == 0, std::to_string(bad) + " violations in 10000 instances"};
  });

  report(5, "gradient checks", [] {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(-1, 1);
    const auto robot_specs = barrier::decompose(stl::parse_formula(kThreeRobots, robots_layout()));
    const auto ex_specs = barrier::decompose(stl::parse_formula("G[7.5,10](ball(x, 5))", plane()));
    int checked = 0, bad = 0;
    double worst = 0.0;
    while (checked < 1000) {
      const bool robots = checked % 2 == 0;
      const auto& specs = robots ? robot_specs : ex_specs;
      const Eigen::Index n = robots ? 6 : 2;
      const auto m = static_cast<Eigen::Index>(specs.size());
      Vector g0(m), gi(m);
      for (Eigen::Index l = 0; l < m; ++l) {
        g0[l] = -3 + u(rng);
        gi[l] = 0.05 + 0.2 * std::abs(u(rng));
      }
      const auto b = barrier::make_barrier(specs, 0.5 + 20 * std::abs(u(rng)), robots ? 8.0 : 15.0, g0, gi, n);
      const Vector x = Vector::NullaryExpr(n, [&] { return (robots ? 2.0 : 6.0) * u(rng); });
      const double t = (robots ? 90.0 : 10.0) * std::abs(u(rng));
      if (near_kink(b, x, t)) continue;
      const auto ev = b.evaluate_all(x, t);
      const Vector fd = oracle::five_point_gradient([&](const Vector& y) { return b.eval(y, t); }, x, 1e-4);
      const double fdt = oracle::five_point([&](double s) { return b.eval(x, s); }, t, 1e-4);
      // Derivatives below 1e-6 are compared in absolute terms.
      const double ex = (ev.grad - fd).norm() / std::max(fd.norm(), 1e-6);
      const double et = std::abs(ev.dt - fdt) / std::max(std::abs(fdt), 1e-6);
      worst = std::max({worst, ex, et});
      if (ex > 1e-5 || et > 1e-5) ++bad;
      ++checked;
    }
    return Outcome{bad == 0, fmt("%.0f failures in 1000 points, worst relative error %.2e", bad, worst)};
  });

  report(6, "closed-form min-norm input", [] {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> n01;
    double kkt = 0.0, gap = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng() % 8);
      const Vector a = Vector::NullaryExpr(dim, [&] { return n01(rng); });
      const double beta = 3.0 * n01(rng);
      const Vector u = control::min_norm_input(a, beta);
      const double lam = beta > 0.0 ? beta / a.squaredNorm() : 0.0;
      const double scale = std::max(1.0, std::abs(beta));
      kkt = std::max({kkt, (u - lam * a).norm() / scale, std::max(0.0, beta - a.dot(u)) / scale,
                      std::abs(lam * (a.dot(u) - beta)) / scale});
      gap = std::max(gap, (u - oracle::project_halfspace(a, beta)).norm());
    }
    return Outcome{kkt <= 1e-10 && gap <= 1e-6, fmt("max KKT residual %.2e, max oracle distance %.2e", kkt, gap)};
  });

  report(7, "load sharing", [] {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-2, 2);
    const auto specs = barrier::decompose(stl::parse_formula(kThreeRobots, robots_layout()));
    int inexact = 0;
    for (int i = 0; i < 10000; ++i) {
      Vector g0(6), gi(6);
      for (Eigen::Index l = 0; l < 6; ++l) {
        g0[l] = -3.5 + u(rng) / 4;
        gi[l] = 0.1;
      }
      control::TaskGroup group{{control::AgentModel{"p1", control::Dynamics::single_integrator(2)},
                                control::AgentModel{"p2", control::Dynamics::single_integrator(2)},
                                control::AgentModel{"p3", control::Dynamics::single_integrator(2)}},
                               {control::AgentSlot{0, 0, 2}, control::AgentSlot{1, 2, 2}, control::AgentSlot{2, 4, 2}},
                               barrier::make_barrier(specs, 1.0 + 10 * std::abs(u(rng)), 8.0, g0, gi, 6),
                               2.0,
                               1.0};
      const Vector x = Vector::NullaryExpr(6, [&] { return u(rng); });
      const auto share = control::load_share(group, x, 45.0 + 22.4 * u(rng));
      double sum = 0.0;
      for (double s : share) sum += s;
      if (sum != 1.0) ++inexact;
    }
    double worst = oracle::kInf;
    for (double s : scenario_slacks) worst = std::min(worst, s);
    const bool ok = inexact == 0 && !scenario_slacks.empty() && worst >= -1e-9;
    return Outcome{ok, fmt("%.0f inexact share sums in 10000; min slack %.3g over %.0f feasible updates", inexact,
                           worst, static_cast<double>(scenario_slacks.size()))};
  });

  report(8, "monitor against brute force", [] {
    oracle::RandomFormulas gen{std::mt19937_64(505)};
    int mismatched = 0, sign = 0;
    for (int i = 0; i < 500; ++i) {
      const auto f = gen.formula();
      const auto [ts, xs] = gen.signal(20);
      const stl::Signal s(ts, xs);
      const double rho = stl::eval_robust(f, s, 0.0);
      if (rho != oracle::brute_robust(f, ts, xs, 0.0)) ++mismatched;
      if (std::abs(rho) > 1e-9 && stl::eval_boolean(f, s, 0.0) != (rho > 0.0)) ++sign;
    }
    return Outcome{mismatched == 0 && sign == 0,
                   fmt("%.0f value mismatches, %.0f sign disagreements in 500 formulas", mismatched, sign)};
  });

  report(9, "kappa certificate", [] {
    synthesis::SynthesisProblem p;
    p.specs = barrier::decompose(stl::parse_formula("G[7.5,10](ball(x, 5))", plane()));
    p.x0 = (Vector(2) << 5, 5).finished();
    p.dim = 2;
    p.chi = 0.1;
    synthesis::SynthesisResult r;
    r.eta = 1.0;
    r.r = 0.25;
    r.D = synthesis::default_state_bound(p);
    r.gamma0 = Vector::Constant(1, -2.5);
    r.gamma_inf = Vector::Constant(1, 0.5);
    const double eps = 0.01;
    const double kappa = synthesis::select_kappa(r, p, eps);
    const auto b = r.barrier(p);
    double worst = oracle::kInf;
    synthesis::InnerMaxOptions opts;
    for (int k = 0; k < 2000; ++k) {
      const double t = 10.0 * k / 2000.0;
      const auto best = synthesis::inner_max(b, t, barrier::MaskSide::kValue, opts);
      opts.warm_start = best.x;
      const auto ev = b.evaluate_all(best.x, t);
      worst = std::min(worst, ev.dt + kappa * ev.value);
    }
    return Outcome{worst >= eps - 1e-6, fmt("kappa = %.4g, min omega(x*_t, t) = %.6g over 2000 times", kappa, worst)};
  });

  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
