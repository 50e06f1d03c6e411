#pragma once

#include "stl/formula.hpp"

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace stlcbf::barrier {

using stl::Matrix;
using stl::Vector;

enum class TermOrigin { kAlways, kEventually, kUntilLeft, kUntilRight };

std::string to_string(TermOrigin origin);
TermOrigin origin_from_string(const std::string& text);

/// One predicate of one temporal operator, before gamma parameters are chosen.
struct TermSpec {
  stl::Predicate predicate;
  TermOrigin origin = TermOrigin::kAlways;
  stl::Interval interval;
  double t_star = 0.0;
  double deadline = 0.0;
};

/// gamma(t) = (gamma_inf - gamma0) / t_star * t + gamma0 for t < t_star, gamma_inf afterwards.
struct GammaFn {
  double gamma0 = 0.0;
  double gamma_inf = 0.0;
  double t_star = 0.0;

  double value(double t) const;
  // Right derivative.
  double rate(double t) const;
};

struct BarrierTerm {
  stl::Predicate predicate;
  GammaFn gamma;
  double deadline = 0.0;
  TermOrigin origin = TermOrigin::kAlways;

  double value(const Vector& x, double t) const { return predicate.value(x) - gamma.value(t); }
};

/// kValue uses the right-continuous mask (a term is gone at its deadline);
/// kLeftLimit keeps terms active up to and including their deadline.
enum class MaskSide { kValue, kLeftLimit };

struct Evaluation {
  double value = 0.0;
  Vector grad;
  double dt = 0.0;
  // Softmin weights, one per term plus the state-bound term last.
  std::vector<double> weights;
};

class CompositeBarrier {
 public:
  static constexpr double kNoBound = std::numeric_limits<double>::infinity();

  /// `state_bound` = +inf drops the D - ||x|| term.
  CompositeBarrier(std::vector<BarrierTerm> terms, double eta, double state_bound, Eigen::Index dim);

  const std::vector<BarrierTerm>& terms() const { return terms_; }
  double eta() const { return eta_; }
  double state_bound() const { return state_bound_; }
  Eigen::Index dim() const { return dim_; }
  const std::vector<double>& switch_times() const { return switch_times_; }
  double last_switch() const { return switch_times_.empty() ? 0.0 : switch_times_.back(); }

  /// One flag per term plus a trailing flag for the state-bound term.
  std::vector<bool> active_mask(double t, MaskSide side = MaskSide::kValue) const;

  double eval(const Vector& x, double t, MaskSide side = MaskSide::kValue) const;
  Vector grad_x(const Vector& x, double t, MaskSide side = MaskSide::kValue) const;
  double partial_t(const Vector& x, double t, MaskSide side = MaskSide::kValue) const;
  Evaluation evaluate_all(const Vector& x, double t, MaskSide side = MaskSide::kValue) const;

  Vector slice_gradient(const Vector& x, double t, Eigen::Index offset, Eigen::Index length) const;

  nlohmann::json to_json() const;
  static CompositeBarrier from_json(const nlohmann::json& j);

 private:
  std::vector<BarrierTerm> terms_;
  double eta_;
  double state_bound_;
  Eigen::Index dim_;
  std::vector<double> switch_times_;
};

/// -1/eta log sum exp(-eta b_l), evaluated around min b_l. Never exceeds min b_l.
double smooth_min(const std::vector<double>& b, double eta);

/// Terms of every temporal operator; `true` predicates contribute nothing.
std::vector<TermSpec> decompose(const stl::Formula& formula);

/// Sorted distinct union of Always t* values and all deadlines in (0, max deadline].
std::vector<double> switching_times(const std::vector<TermSpec>& specs);
std::vector<double> switching_times(const std::vector<BarrierTerm>& terms);

/// Sorted distinct deadlines.
std::vector<double> deadline_times(const std::vector<TermSpec>& specs);

CompositeBarrier make_barrier(const std::vector<TermSpec>& specs, double eta, double state_bound,
                              const Vector& gamma0, const Vector& gamma_inf, Eigen::Index dim);

nlohmann::json predicate_to_json(const stl::Predicate& p);
stl::Predicate predicate_from_json(const nlohmann::json& j);

}  // namespace stlcbf::barrier
