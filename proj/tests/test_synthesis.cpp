#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/error.hpp"
#include "stl/parser.hpp"
#include "support/oracles.hpp"
#include "synthesis/synthesis.hpp"

#include <cmath>
#include <random>

using namespace stlcbf;
using namespace stlcbf::synthesis;
using barrier::decompose;
using barrier::make_barrier;

namespace {

stl::StateLayout plane() {
  stl::StateLayout layout;
  layout.dim = 2;
  layout.slices["x"] = {0, 2};
  return layout;
}

SynthesisProblem problem_for(const std::string& formula, Vector x0, double chi = 0.0) {
  SynthesisProblem p;
  p.specs = decompose(stl::parse_formula(formula, plane()));
  p.x0 = std::move(x0);
  p.dim = 2;
  p.chi = chi;
  p.restarts = 6;
  p.max_evaluations = 1500;
  return p;
}

// Coarse grid followed by two zooms; a lower bound on the true maximum.
double grid_max(const CompositeBarrier& b, double t, double half_width) {
  Vector best = Vector::Zero(2);
  double best_v = -oracle::kInf;
  Vector center = Vector::Zero(2);
  double step = half_width / 100.0;
  for (int level = 0; level < 3; ++level) {
    for (int i = -100; i <= 100; ++i) {
      for (int j = -100; j <= 100; ++j) {
        const Vector x = center + step * (Vector(2) << i, j).finished();
        const double v = b.eval(x, t, MaskSide::kLeftLimit);
        if (v > best_v) {
          best_v = v;
          best = x;
        }
      }
    }
    center = best;
    step /= 50.0;
  }
  return best_v;
}

}  // namespace

TEST_CASE("inner_max agrees with grid search") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto specs = decompose(stl::parse_formula(
      "G[0,10](ball(x - [1,0], 2)) && F[0,8](ball(x - [0,1.5], 1)) && G[2,10](affine([1,1], 2))", plane()));
  for (int trial = 0; trial < 12; ++trial) {
    Vector g0(3), gi(3);
    for (int l = 0; l < 3; ++l) {
      g0[l] = -2 + u(rng);
      gi[l] = 0.1 + 0.2 * std::abs(u(rng));
    }
    const double eta = 1 + 20 * std::abs(u(rng));
    const auto b = make_barrier(specs, eta, 6.0, g0, gi, 2);
    const double t = 8.0 * std::abs(u(rng));
    const auto res = inner_max(b, t, MaskSide::kLeftLimit);
    const double grid = grid_max(b, t, 4.0);
    CHECK(res.value >= grid - 1e-9);
    CHECK(res.value <= grid + 1e-4);
    CHECK(res.value == doctest::Approx(b.eval(res.x, t, MaskSide::kLeftLimit)));
  }
}

TEST_CASE("inner_max lands exactly on a ball center") {
  const auto specs = decompose(stl::parse_formula("G[0,5](ball(x - [1,-2], 1))", plane()));
  const auto b = make_barrier(specs, 2.0, CompositeBarrier::kNoBound, Vector::Constant(1, -1), Vector::Constant(1, 0.5),
                              2);
  const auto res = inner_max(b, 1.0, MaskSide::kLeftLimit);
  CHECK((res.x - (Vector(2) << 1, -2).finished()).norm() < 1e-9);
  CHECK(res.value == doctest::Approx(1.0 - b.terms()[0].gamma.value(1.0)).epsilon(1e-12));

  // With the state bound active the maximizer sits between the origin and the center.
  const auto bounded = make_barrier(specs, 2.0, 2.0, Vector::Constant(1, -1), Vector::Constant(1, 0.5), 2);
  const auto r2 = inner_max(bounded, 1.0, MaskSide::kLeftLimit);
  CHECK(r2.value >= grid_max(bounded, 1.0, 3.0) - 1e-9);
}

TEST_CASE("Example-1 feasibility with r = 0.25") {
  auto p = problem_for("G[7.5,10](ball(x, 5))", (Vector(2) << 5, 5).finished());
  p.mode = Mode::kFeasibility;
  p.fixed_r = 0.25;
  const auto res = synthesize(p);
  REQUIRE(res.feasible);
  CHECK(res.r == 0.25);
  CHECK(res.gamma_inf[0] > 0.25);
  CHECK(res.gamma_inf[0] < 5.0);
  CHECK(res.gamma0[0] < 5 - std::sqrt(50.0));
  for (const auto& c : res.report.constraints) CHECK_MESSAGE(c.satisfied(), c.name);
  const auto again = verify_candidate(res, p);
  CHECK(again.feasible);
}

TEST_CASE("reference Example-1 parameters verify") {
  auto p = problem_for("G[7.5,10](ball(x, 5))", (Vector(2) << 5, 5).finished());
  SynthesisResult r;
  r.eta = 1.0;
  r.r = 0.25;
  r.D = default_state_bound(p);
  r.gamma0 = Vector::Constant(1, -2.5);
  r.gamma_inf = Vector::Constant(1, 0.5);
  const auto rep = verify_candidate(r, p);
  CHECK(rep.feasible);
  // gamma0 = -2.5 sits 0.43 below h(x0) = -2.07.
  CHECK(rep.constraints[3].slack == doctest::Approx(2.5 - (std::sqrt(50.0) - 5)));

  r.gamma0[0] = -2.0;  // above h(x0)
  CHECK_FALSE(verify_candidate(r, p).feasible);
}

TEST_CASE("maximize mode and mode consistency") {
  auto p = problem_for("G[2,6](ball(x - [1,1], 1)) && F[0,6](ball(x - [0.5,1], 0.6))", Vector::Zero(2), 0.05);
  const auto best = synthesize(p);
  REQUIRE(best.feasible);
  CHECK(best.r > 0.0);
  CHECK(best.r < 0.5);
  for (const auto& c : best.report.constraints) CHECK_MESSAGE(c.satisfied(), c.name);

  auto q = p;
  q.mode = Mode::kFeasibility;
  q.fixed_r = best.r;
  CHECK(synthesize(q).feasible);

  // Superlevel sets stay nonempty on a dense grid.
  const auto b = best.barrier(p);
  for (double t = 0.0; t < 6.0; t += 0.25) {
    CHECK(inner_max(b, t, MaskSide::kValue).value >= p.chi - 1e-9);
  }
}

TEST_CASE("determinism") {
  auto p = problem_for("G[1,4](ball(x - [1,0], 1)) && F[0,4](ball(x - [0,1], 1))", Vector::Zero(2));
  p.restarts = 3;
  const auto a = synthesize(p);
  const auto b = synthesize(p);
  CHECK(a.r == b.r);
  CHECK(a.eta == b.eta);
  CHECK(a.gamma0 == b.gamma0);
  CHECK(a.gamma_inf == b.gamma_inf);
  CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("inconsistent specifications") {
  SUBCASE("unsatisfiable predicate") {
    auto p = problem_for("G[0,1](ball(x, 1)) && G[0,1](affine([0,0], -1))", Vector::Zero(2));
    CHECK_THROWS_AS(synthesize(p), SpecError);
  }
  SUBCASE("until left operand false at the start") {
    auto p = problem_for("ball(x, 1) U[1,2] ball(x - [3,0], 1)", (Vector(2) << 5, 5).finished());
    CHECK_THROWS_AS(synthesize(p), SpecError);
  }
  SUBCASE("requested r too large") {
    auto p = problem_for("G[0,1](ball(x, 1))", Vector::Zero(2));
    p.mode = Mode::kFeasibility;
    p.fixed_r = 1.5;
    CHECK_THROWS_AS(synthesize(p), SpecError);
  }
  SUBCASE("chi out of reach is reported infeasible") {
    auto p = problem_for("G[0,1](ball(x, 1))", Vector::Zero(2), 1000.0);
    p.restarts = 2;
    p.max_evaluations = 200;
    const auto res = synthesize(p);
    CHECK_FALSE(res.feasible);
    CHECK_FALSE(res.report.feasible);
  }
}

TEST_CASE("kappa selection") {
  auto p = problem_for("G[7.5,10](ball(x, 5))", (Vector(2) << 5, 5).finished(), 0.1);
  SynthesisResult r;
  r.eta = 1.0;
  r.r = 0.25;
  r.D = default_state_bound(p);
  r.gamma0 = Vector::Constant(1, -2.5);
  r.gamma_inf = Vector::Constant(1, 0.5);
  const double kappa = select_kappa(r, p, 0.01);
  const double delta = 3.0 / 7.5;
  const double b_max = std::max(r.D, 5.0 + 2.5);
  const double zeta = -std::exp(-0.1) * delta / std::exp(-b_max);
  CHECK(kappa == doctest::Approx((0.01 - zeta) / 0.1).epsilon(1e-12));

  // Doubling eta scales zeta by exp(eta (b_max - chi)).
  auto r2 = r;
  r2.eta = 2.0;
  const double zeta2 = 0.01 - 0.1 * select_kappa(r2, p, 0.01);
  CHECK(zeta2 / zeta == doctest::Approx(std::exp(b_max - 0.1)).epsilon(1e-9));

  // Static barrier: kappa = epsilon / chi.
  auto r3 = r;
  r3.gamma_inf = r3.gamma0 = Vector::Constant(1, 0.3);
  CHECK(select_kappa(r3, p, 0.01) == doctest::Approx(0.1));

  p.chi = 0.0;
  CHECK_THROWS_AS(select_kappa(r, p, 0.01), SpecError);
  p.chi = 0.1;
  CHECK_THROWS_AS(select_kappa(r, p, 0.0), SpecError);
}
