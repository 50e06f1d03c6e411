// Reference implementations used by the unit tests and the acceptance binary.
// They are written for clarity, not speed, and share no code with the library
// beyond the data types.
#pragma once

#include "barrier/barrier.hpp"
#include "stl/formula.hpp"
#include "stl/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using stlcbf::stl::Matrix;
using stlcbf::stl::Vector;
namespace stl = stlcbf::stl;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vector interpolate(const std::vector<double>& ts, const std::vector<Vector>& xs, double t) {
  if (t <= ts.front()) return xs.front();
  if (t >= ts.back()) return xs.back();
  for (std::size_t j = 1; j < ts.size(); ++j) {
    if (t == ts[j]) return xs[j];
    if (t < ts[j]) {
      const double lam = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
      return (1.0 - lam) * xs[j - 1] + lam * xs[j];
    }
  }
  return xs.back();
}

// {lo, hi} and every sample strictly between them.
inline std::vector<double> window_points(const std::vector<double>& ts, double lo, double hi) {
  std::vector<double> pts{lo};
  for (double s : ts) {
    if (s > lo && s < hi) pts.push_back(s);
  }
  if (hi > lo) pts.push_back(hi);
  return pts;
}

inline double h_of(const stl::BoolFormula& psi, const Vector& x) {
  double r = kInf;
  for (const auto& p : psi.conjuncts) {
    // Predicate values are inputs here; their formulas are checked separately.
    if (p.kind() != stl::Predicate::Kind::kTrue) r = std::min(r, p.value(x));
  }
  return r;
}

/// Enumerates the discretized robust semantics directly.
inline double brute_robust(const stl::Formula& f, const std::vector<double>& ts, const std::vector<Vector>& xs,
                           double t) {
  auto at = [&](double s) { return interpolate(ts, xs, s); };
  if (const auto* g = std::get_if<stl::Always>(&f.node)) {
    double r = kInf;
    for (double s : window_points(ts, t + g->interval.a, t + g->interval.b)) r = std::min(r, h_of(g->body, at(s)));
    return r;
  }
  if (const auto* e = std::get_if<stl::Eventually>(&f.node)) {
    double r = -kInf;
    for (double s : window_points(ts, t + e->interval.a, t + e->interval.b)) r = std::max(r, h_of(e->body, at(s)));
    return r;
  }
  if (const auto* u = std::get_if<stl::Until>(&f.node)) {
    double best = -kInf;
    for (double tp : window_points(ts, t + u->interval.a, t + u->interval.b)) {
      double left = std::min(h_of(u->left, at(t)), h_of(u->left, at(tp)));
      for (double s : ts) {
        if (s >= t && s <= tp) left = std::min(left, h_of(u->left, at(s)));
      }
      best = std::max(best, std::min(left, h_of(u->right, at(tp))));
    }
    return best;
  }
  const auto& c = std::get<stl::Conjunction>(f.node);
  double r = kInf;
  for (const auto& p : c.parts) r = std::min(r, brute_robust(p, ts, xs, t));
  return r;
}

struct RandomFormulas {
  std::mt19937_64 rng;
  Eigen::Index dim = 2;
  double horizon = 10.0;

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

  stl::Predicate predicate() {
    const int kind = std::uniform_int_distribution<int>(0, 5)(rng);
    if (kind == 0) return stl::Predicate::truth();
    if (kind <= 2) {
      Vector w = Vector::NullaryExpr(dim, [&] { return uniform(-1, 1); });
      return stl::Predicate::affine(w, uniform(-1, 1));
    }
    Matrix L = Matrix::Identity(dim, dim);
    if (kind == 5) L = Matrix::NullaryExpr(dim, dim, [&] { return uniform(-1, 1); });
    Vector o = Vector::NullaryExpr(dim, [&] { return uniform(-1, 1); });
    return stl::Predicate::ball(L, o, uniform(0.1, 1.5));
  }

  stl::BoolFormula body() {
    stl::BoolFormula psi;
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int i = 0; i < n; ++i) psi.conjuncts.push_back(predicate());
    return psi;
  }

  stl::Interval interval(double budget) {
    // Endpoints on a coarse grid so they often coincide with samples.
    const double a = std::round(uniform(0.0, budget * 0.6) * 4.0) / 4.0;
    double b = std::round(uniform(a, budget) * 4.0) / 4.0;
    if (b <= a) b = a + 0.25;
    if (b <= 0.0) b = 0.25;
    return {a, std::min(b, budget)};
  }

  stl::Formula temporal(double budget) {
    const int op = std::uniform_int_distribution<int>(0, 2)(rng);
    const auto iv = interval(budget);
    if (op == 0) return {stl::Always{iv, body()}};
    if (op == 1) return {stl::Eventually{iv, body()}};
    return {stl::Until{iv, body(), body()}};
  }

  /// One or two temporal operators whose windows fit in [0, horizon].
  stl::Formula formula() {
    if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) return temporal(horizon);
    std::vector<stl::Formula> parts{temporal(horizon), temporal(horizon)};
    return stl::make_conjunction(std::move(parts));
  }

  /// n samples on [0, horizon] with jittered times.
  std::pair<std::vector<double>, std::vector<Vector>> signal(int n) {
    std::vector<double> ts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ts[static_cast<std::size_t>(i)] = horizon * i / (n - 1);
    for (int i = 1; i + 1 < n; ++i) {
      if (uniform(0, 1) < 0.5) ts[static_cast<std::size_t>(i)] += uniform(-0.3, 0.3) * horizon / (n - 1);
    }
    std::vector<Vector> xs;
    for (int i = 0; i < n; ++i) xs.push_back(Vector::NullaryExpr(dim, [&] { return uniform(-2, 2); }));
    return {ts, xs};
  }
};

/// Central difference of a scalar function along every coordinate.
inline Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Fourth-order five-point stencil of a scalar function of one variable.
inline double five_point(const std::function<double(double)>& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12.0 * h);
}

inline Vector five_point_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    g[i] = five_point(
        [&](double s) {
          Vector y = x;
          y[i] = s;
          return f(y);
        },
        x[i], h);
  }
  return g;
}

/// min u^T u s.t. a^T u >= beta by a two-case active-set method: try the
/// unconstrained minimizer, otherwise solve the equality-constrained KKT system
/// [2I a; a^T 0][u; -lam] = [0; beta] with a dense LU.
inline Vector project_halfspace(const Vector& a, double beta) {
  const Eigen::Index n = a.size();
  if (beta <= 0.0) return Vector::Zero(n);
  Matrix K = Matrix::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = 2.0 * Matrix::Identity(n, n);
  K.topRightCorner(n, 1) = a;
  K.bottomLeftCorner(1, n) = a.transpose();
  Vector rhs = Vector::Zero(n + 1);
  rhs[n] = beta;
  const Vector sol = K.fullPivLu().solve(rhs);
  return sol.head(n);
}

}  // namespace oracle
