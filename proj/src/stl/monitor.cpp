#include "stl/monitor.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlcbf::stl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  // Samples strictly inside (lo, hi) are ts[first, last).
  std::size_t first = 0;
  std::size_t last = 0;
};

Window make_window(const Signal& s, double lo, double hi) {
  const double tol = 1e-9 * std::max(1.0, std::abs(s.end()));
  if (lo < s.start() - tol || hi > s.end() + tol) {
    throw HorizonError("window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is outside the signal span [" +
                       std::to_string(s.start()) + ", " + std::to_string(s.end()) + "]");
  }
  Window w;
  w.lo = std::clamp(lo, s.start(), s.end());
  w.hi = std::clamp(hi, s.start(), s.end());
  const auto& ts = s.times();
  w.first = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), w.lo) - ts.begin());
  w.last = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), w.hi) - ts.begin());
  if (w.last < w.first) w.last = w.first;
  return w;
}

// Calls fn(time, state) for lo, every interior sample, then hi.
template <typename Fn>
void for_each_point(const Signal& s, const Window& w, Fn&& fn) {
  fn(w.lo, s.at(w.lo));
  for (std::size_t j = w.first; j < w.last; ++j) fn(s.times()[j], s.values()[j]);
  if (w.hi > w.lo) fn(w.hi, s.at(w.hi));
}

double robust_until(const Until& u, const Signal& s, double t) {
  const Window w = make_window(s, t + u.interval.a, t + u.interval.b);
  const auto& ts = s.times();
  const double t0 = std::max(t, s.start());
  double left_min = robustness(u.left, s.at(t0));
  std::size_t k = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), t0) - ts.begin());
  double best = -kInf;
  for_each_point(s, w, [&](double tp, const Vector& x) {
    while (k < ts.size() && ts[k] <= tp) left_min = std::min(left_min, robustness(u.left, s.values()[k++]));
    best = std::max(best, std::min({robustness(u.right, x), left_min, robustness(u.left, x)}));
  });
  return best;
}

bool boolean_until(const Until& u, const Signal& s, double t) {
  const Window w = make_window(s, t + u.interval.a, t + u.interval.b);
  const auto& ts = s.times();
  const double t0 = std::max(t, s.start());
  bool run = satisfied(u.left, s.at(t0));
  std::size_t k = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), t0) - ts.begin());
  bool found = false;
  for_each_point(s, w, [&](double tp, const Vector& x) {
    while (k < ts.size() && ts[k] <= tp) run = satisfied(u.left, s.values()[k++]) && run;
    found = found || (run && satisfied(u.left, x) && satisfied(u.right, x));
  });
  return found;
}

}  // namespace

Signal::Signal(std::vector<double> times, std::vector<Vector> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() < 2 || times_.size() != values_.size()) {
    throw std::invalid_argument("a signal needs at least two samples and one state per time");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || (i > 0 && !(times_[i] > times_[i - 1]))) {
      throw std::invalid_argument("signal times must be finite and strictly increasing");
    }
    if (values_[i].size() == 0 || values_[i].size() != values_[0].size()) {
      throw std::invalid_argument("signal states must share one positive dimension");
    }
  }
}

Vector Signal::at(double t) const {
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - times_.begin());
  if (times_[j] == t) return values_[j];
  const double lam = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
  return (1.0 - lam) * values_[j - 1] + lam * values_[j];
}

double robustness(const BoolFormula& psi, const Vector& x) {
  double r = kInf;
  for (const auto& p : psi.conjuncts) {
    if (p.kind() != Predicate::Kind::kTrue) r = std::min(r, p.value(x));
  }
  return r;
}

bool satisfied(const BoolFormula& psi, const Vector& x) {
  for (const auto& p : psi.conjuncts) {
    if (p.kind() != Predicate::Kind::kTrue && !(p.value(x) >= 0.0)) return false;
  }
  return true;
}

double eval_robust(const Formula& formula, const Signal& s, double t) {
  return std::visit(
      [&](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Always>) {
          const Window w = make_window(s, t + node.interval.a, t + node.interval.b);
          double r = kInf;
          for_each_point(s, w, [&](double, const Vector& x) { r = std::min(r, robustness(node.body, x)); });
          return r;
        } else if constexpr (std::is_same_v<T, Eventually>) {
          const Window w = make_window(s, t + node.interval.a, t + node.interval.b);
          double r = -kInf;
          for_each_point(s, w, [&](double, const Vector& x) { r = std::max(r, robustness(node.body, x)); });
          return r;
        } else if constexpr (std::is_same_v<T, Until>) {
          return robust_until(node, s, t);
        } else {
          double r = kInf;
          for (const auto& part : node.parts) r = std::min(r, eval_robust(part, s, t));
          return r;
        }
      },
      formula.node);
}

bool eval_boolean(const Formula& formula, const Signal& s, double t) {
  return std::visit(
      [&](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Always>) {
          const Window w = make_window(s, t + node.interval.a, t + node.interval.b);
          bool ok = true;
          for_each_point(s, w, [&](double, const Vector& x) { ok = ok && satisfied(node.body, x); });
          return ok;
        } else if constexpr (std::is_same_v<T, Eventually>) {
          const Window w = make_window(s, t + node.interval.a, t + node.interval.b);
          bool ok = false;
          for_each_point(s, w, [&](double, const Vector& x) { ok = ok || satisfied(node.body, x); });
          return ok;
        } else if constexpr (std::is_same_v<T, Until>) {
          return boolean_until(node, s, t);
        } else {
          for (const auto& part : node.parts) {
            if (!eval_boolean(part, s, t)) return false;
          }
          return true;
        }
      },
      formula.node);
}

}  // namespace stlcbf::stl
