#pragma once

#include "barrier/barrier.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stlcbf::synthesis {

using barrier::CompositeBarrier;
using barrier::MaskSide;
using barrier::TermSpec;
using stl::Vector;

struct InnerMaxOptions {
  int starts = 6;
  int max_iterations = 4000;
  double grad_tol = 1e-8;
  double agree_tol = 1e-6;
  std::uint64_t seed = 1;
  // Tried first when present.
  std::optional<Vector> warm_start;
};

struct InnerMaxResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  // Largest disagreement between starts.
  double spread = 0.0;
};

/// Maximizes the concave map x -> b(x, t). Gradient ascent with
/// Barzilai-Borwein steps and Armijo backtracking; iterates that stall at a
/// ball kink are snapped onto the ball's center set. Throws NonConvergence if
/// the starts disagree by more than `agree_tol`.
InnerMaxResult inner_max(const CompositeBarrier& barrier, double t, MaskSide side, const InnerMaxOptions& opts = {});

enum class Mode { kMaximizeR, kFeasibility };

struct Bounds {
  double eta_min = 0.5;
  double eta_max = 50.0;
  // Non-positive values select the default range around 2 (max offset + ||x0||).
  double D_min = 0.0;
  double D_max = 0.0;
  double gamma0_span = 10.0;
  // Upper bound for gamma_inf on predicates with an unbounded optimum.
  double gamma_inf_cap = 10.0;
  // Non-positive selects the largest admissible r.
  double r_max = 0.0;
};

struct SynthesisProblem {
  std::vector<TermSpec> specs;
  Vector x0;
  double chi = 0.0;
  Mode mode = Mode::kMaximizeR;
  double fixed_r = 0.0;
  Bounds bounds;
  int restarts = 32;
  int max_evaluations = 2500;
  std::uint64_t seed = 1;
  Eigen::Index dim = 0;
};

struct Constraint {
  std::string name;
  double slack = 0.0;
  // Strict constraints need slack > 0, the others slack >= -1e-9.
  bool strict = false;

  bool satisfied() const;
};

struct ConstraintReport {
  std::vector<Constraint> constraints;
  bool feasible = false;
  std::string note;

  double min_slack() const;
};

struct SynthesisResult {
  double eta = 0.0;
  double r = 0.0;
  double D = 0.0;
  Vector gamma0;
  Vector gamma_inf;
  std::vector<Vector> xi;
  std::vector<double> xi_times;
  double kappa = 0.0;
  double epsilon_margin = 0.0;
  bool feasible = false;
  ConstraintReport report;
  int evaluations = 0;

  CompositeBarrier barrier(const SynthesisProblem& problem) const;
};

/// Default state bound: 2 (largest predicate offset norm + ||x0||).
double default_state_bound(const SynthesisProblem& problem);

SynthesisResult synthesize(const SynthesisProblem& problem);

/// Re-checks every constraint with fresh multi-start inner maximizations.
ConstraintReport verify_candidate(const SynthesisResult& result, const SynthesisProblem& problem);

/// Gain with kappa * chi >= epsilon - zeta. Throws SpecError if chi <= 0.
double select_kappa(const SynthesisResult& result, const SynthesisProblem& problem, double epsilon_margin);

}  // namespace stlcbf::synthesis
