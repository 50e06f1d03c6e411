#pragma once

#include "stl/formula.hpp"

#include <vector>

namespace stlcbf::stl {

/// Piecewise-linear signal through sampled states.
class Signal {
 public:
  Signal(std::vector<double> times, std::vector<Vector> values);

  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& values() const { return values_; }
  Eigen::Index dim() const { return values_.front().size(); }
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }

  /// Linear interpolation; exact sample values at sample instants.
  Vector at(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Vector> values_;
};

/// min over conjuncts of h(x); +inf for an all-true formula.
double robustness(const BoolFormula& psi, const Vector& x);
bool satisfied(const BoolFormula& psi, const Vector& x);

/// Robust semantics on the sampled signal. A window [t+a, t+b] is evaluated
/// at its two interpolated endpoints and every sample instant inside it.
/// Throws HorizonError if the window leaves the signal span.
double eval_robust(const Formula& formula, const Signal& signal, double t);

/// Boolean semantics with the same discretization, computed independently.
bool eval_boolean(const Formula& formula, const Signal& signal, double t);

}  // namespace stlcbf::stl
