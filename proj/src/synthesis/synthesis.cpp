#include "synthesis/synthesis.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stlcbf::synthesis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDelta = 1e-6;
constexpr double kSlackTol = 1e-9;
constexpr double kPenalty = 100.0;
// Feasibility mode stops pushing slack beyond this margin.
constexpr double kSlackCap = 0.1;

double lerp(double a, double b, double u) { return a + (b - a) * u; }

struct Candidate {
  double eta = 1.0;
  double r = 0.0;
  double D = 1.0;
  Vector gamma0;
  Vector gamma_inf;
};

struct Scored {
  double objective = kInf;
  bool feasible = false;
  double min_slack = -kInf;
  std::vector<Vector> xi;
};

// Maps the unit cube onto candidates that satisfy the gamma bounds by construction.
class Encoding {
 public:
  explicit Encoding(const SynthesisProblem& p) : p_(p) {
    const std::size_t n_terms = p.specs.size();
    h0_.resize(n_terms);
    hcap_.resize(n_terms);
    for (std::size_t l = 0; l < n_terms; ++l) {
      const auto& s = p.specs[l];
      h0_[l] = s.predicate.value(p.x0);
      const double opt = s.predicate.optimum();
      if (opt < 0.0) {
        throw SpecError("predicate " + stl::print(s.predicate) + " is not satisfiable (h_opt = " +
                        std::to_string(opt) + ")");
      }
      hcap_[l] = std::min(opt, p.bounds.gamma_inf_cap);
      if (s.t_star <= 0.0) {
        if (h0_[l] <= 0.0) {
          throw SpecError("term " + stl::print(s.predicate) + " must hold from t = 0 but h(x0) = " +
                          std::to_string(h0_[l]) + " <= 0; no robustness r > 0 is attainable");
        }
        hcap_[l] = std::min(hcap_[l], h0_[l]);
      }
    }
    r_max_ = kInf;
    for (double c : hcap_) r_max_ = std::min(r_max_, c);
    if (p.bounds.r_max > 0.0) r_max_ = std::min(r_max_, p.bounds.r_max);
    if (p.mode == Mode::kFeasibility) {
      if (!(p.fixed_r > 0.0)) throw SpecError("feasibility mode needs r > 0");
      if (p.fixed_r >= r_max_) {
        throw SpecError("requested r = " + std::to_string(p.fixed_r) + " leaves no room below gamma_inf bound " +
                        std::to_string(r_max_));
      }
    } else if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) {
      throw SpecError("no admissible robustness interval (r_max = " + std::to_string(r_max_) + ")");
    }
    const double d_def = default_state_bound(p);
    d_lo_ = p.bounds.D_min > 0.0 ? p.bounds.D_min : 0.5 * d_def;
    d_hi_ = p.bounds.D_max > 0.0 ? p.bounds.D_max : 2.0 * d_def;
    if (d_hi_ < d_lo_) std::swap(d_lo_, d_hi_);

    idx_r_ = p.mode == Mode::kMaximizeR ? 2 : -1;
    std::size_t next = p.mode == Mode::kMaximizeR ? 3 : 2;
    for (std::size_t l = 0; l < n_terms; ++l) {
      idx_ginf_.push_back(next++);
      idx_g0_.push_back(p.specs[l].t_star > 0.0 ? static_cast<long>(next++) : -1);
    }
    size_ = next;
  }

  std::size_t size() const { return size_; }

  Candidate decode(const std::vector<double>& u) const {
    Candidate c;
    c.eta = p_.bounds.eta_min * std::pow(p_.bounds.eta_max / p_.bounds.eta_min, u[0]);
    c.D = lerp(d_lo_, d_hi_, u[1]);
    c.r = idx_r_ >= 0 ? lerp(1e-4 * r_max_, r_max_ * (1.0 - kDelta), u[static_cast<std::size_t>(idx_r_)]) : p_.fixed_r;
    const auto n = static_cast<Eigen::Index>(p_.specs.size());
    c.gamma0.resize(n);
    c.gamma_inf.resize(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      const auto k = static_cast<std::size_t>(l);
      const double gi = c.r + lerp(kDelta, 1.0 - kDelta, u[idx_ginf_[k]]) * (hcap_[k] - c.r);
      c.gamma_inf[l] = gi;
      const double hi = std::min(h0_[k], gi) - kDelta;
      if (idx_g0_[k] >= 0) {
        c.gamma0[l] = hi - (1.0 - u[static_cast<std::size_t>(idx_g0_[k])]) * p_.bounds.gamma0_span;
      } else {
        c.gamma0[l] = std::min(h0_[k], gi) - 1.0;
      }
    }
    return c;
  }

 private:
  const SynthesisProblem& p_;
  std::vector<double> h0_;
  std::vector<double> hcap_;
  double r_max_ = 0.0;
  double d_lo_ = 0.0;
  double d_hi_ = 0.0;
  long idx_r_ = -1;
  std::vector<std::size_t> idx_ginf_;
  std::vector<long> idx_g0_;
  std::size_t size_ = 0;
};

CompositeBarrier build(const Candidate& c, const SynthesisProblem& p) {
  return barrier::make_barrier(p.specs, c.eta, c.D, c.gamma0, c.gamma_inf, p.dim);
}

class Evaluator {
 public:
  Evaluator(const SynthesisProblem& p, std::vector<double> deadlines)
      : p_(p), deadlines_(std::move(deadlines)), warm_(deadlines_.size()) {}

  Scored operator()(const Candidate& c) {
    ++evaluations;
    const CompositeBarrier b = build(c, p_);
    Scored s;
    double violation = 0.0;
    double min_slack = b.eval(p_.x0, 0.0) - p_.chi;
    violation += std::max(0.0, -min_slack);
    s.xi.resize(deadlines_.size());
    for (std::size_t j = 0; j < deadlines_.size(); ++j) {
      InnerMaxOptions opts;
      opts.starts = 1;
      opts.agree_tol = kInf;
      opts.warm_start = warm_[j];
      const auto res = inner_max(b, deadlines_[j], MaskSide::kLeftLimit, opts);
      warm_[j] = res.x;
      s.xi[j] = res.x;
      const double slack = res.value - p_.chi;
      min_slack = std::min(min_slack, slack);
      violation += std::max(0.0, -slack);
    }
    s.min_slack = min_slack;
    s.feasible = min_slack >= 0.0;
    if (p_.mode == Mode::kMaximizeR) {
      s.objective = -c.r + kPenalty * violation;
    } else {
      s.objective = -std::min(min_slack, kSlackCap);
    }
    return s;
  }

  int evaluations = 0;

 private:
  const SynthesisProblem& p_;
  std::vector<double> deadlines_;
  std::vector<std::optional<Vector>> warm_;
};

struct Found {
  double objective;
  std::size_t restart;
  Candidate candidate;
  std::vector<Vector> xi;
};

void check_problem(const SynthesisProblem& p) {
  if (p.specs.empty()) throw SpecError("formula has no barrier terms");
  if (p.dim <= 0 || p.x0.size() != p.dim) throw SpecError("initial state dimension does not match the group state");
  if (!(p.chi >= 0.0)) throw SpecError("chi must be nonnegative");
  if (!(p.bounds.eta_min > 0.0) || p.bounds.eta_max < p.bounds.eta_min) throw SpecError("invalid eta bounds");
  if (p.restarts < 1) throw SpecError("restarts must be positive");
}

}  // namespace

bool Constraint::satisfied() const { return strict ? slack > 0.0 : slack >= -kSlackTol; }

double ConstraintReport::min_slack() const {
  double m = kInf;
  for (const auto& c : constraints) m = std::min(m, c.slack);
  return m;
}

CompositeBarrier SynthesisResult::barrier(const SynthesisProblem& problem) const {
  return barrier::make_barrier(problem.specs, eta, D, gamma0, gamma_inf, problem.dim);
}

double default_state_bound(const SynthesisProblem& problem) {
  double offset = 0.0;
  for (const auto& s : problem.specs) {
    const auto& p = s.predicate;
    if (p.kind() == stl::Predicate::Kind::kBall) {
      offset = std::max(offset, p.center().norm());
    } else if (p.kind() == stl::Predicate::Kind::kAffine) {
      const double wn = p.map().norm();
      if (wn > 0.0) offset = std::max(offset, std::abs(p.scalar()) / wn);
    }
  }
  const double d = 2.0 * (offset + problem.x0.norm());
  return d > 0.0 ? d : 1.0;
}

SynthesisResult synthesize(const SynthesisProblem& problem) {
  check_problem(problem);
  const Encoding enc(problem);
  const auto deadlines = barrier::deadline_times(problem.specs);

  std::vector<Found> feasible;
  Found best_infeasible{kInf, 0, {}, {}};
  int evaluations = 0;

  for (int restart = 0; restart < problem.restarts; ++restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(problem.seed), static_cast<std::uint32_t>(problem.seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> u(enc.size(), 0.5);
    if (restart > 0) {
      for (auto& v : u) v = unif(rng);
    }
    Evaluator evaluate(problem, deadlines);
    Scored cur = evaluate(enc.decode(u));
    Found restart_best{kInf, static_cast<std::size_t>(restart), {}, {}};
    auto record = [&](const std::vector<double>& point, const Scored& s) {
      if (s.feasible && s.objective < restart_best.objective) {
        restart_best = Found{s.objective, static_cast<std::size_t>(restart), enc.decode(point), s.xi};
      }
      if (!s.feasible && feasible.empty() && s.objective < best_infeasible.objective) {
        best_infeasible = Found{s.objective, static_cast<std::size_t>(restart), enc.decode(point), s.xi};
      }
    };
    record(u, cur);

    double step = 0.25;
    while (step > 1e-4 && evaluate.evaluations < problem.max_evaluations) {
      bool improved = false;
      for (std::size_t i = 0; i < u.size() && evaluate.evaluations < problem.max_evaluations; ++i) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> v = u;
          v[i] = std::clamp(v[i] + dir * step, 0.0, 1.0);
          if (v[i] == u[i]) continue;
          Scored s = evaluate(enc.decode(v));
          record(v, s);
          if (s.objective < cur.objective - 1e-12) {
            u = std::move(v);
            cur = std::move(s);
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    evaluations += evaluate.evaluations;
    if (restart_best.objective < kInf) feasible.push_back(std::move(restart_best));
  }

  std::stable_sort(feasible.begin(), feasible.end(),
                   [](const Found& a, const Found& b) { return a.objective < b.objective; });

  auto to_result = [&](const Found& f) {
    SynthesisResult res;
    res.eta = f.candidate.eta;
    res.r = f.candidate.r;
    res.D = f.candidate.D;
    res.gamma0 = f.candidate.gamma0;
    res.gamma_inf = f.candidate.gamma_inf;
    res.xi = f.xi;
    res.xi_times = deadlines;
    res.evaluations = evaluations;
    return res;
  };

  for (const auto& f : feasible) {
    SynthesisResult res = to_result(f);
    res.report = verify_candidate(res, problem);
    res.feasible = res.report.feasible;
    if (res.feasible) return res;
  }
  if (best_infeasible.objective == kInf && !feasible.empty()) best_infeasible = feasible.front();
  if (best_infeasible.objective == kInf) {
    SynthesisResult res;
    res.report.note = "no candidate evaluated";
    return res;
  }
  SynthesisResult res = to_result(best_infeasible);
  res.report = verify_candidate(res, problem);
  res.feasible = false;
  if (res.report.note.empty()) res.report.note = "no restart found a feasible point";
  return res;
}

ConstraintReport verify_candidate(const SynthesisResult& result, const SynthesisProblem& problem) {
  ConstraintReport rep;
  auto add = [&](std::string name, double slack, bool strict) {
    rep.constraints.push_back(Constraint{std::move(name), slack, strict});
  };
  const auto n = static_cast<Eigen::Index>(problem.specs.size());
  if (result.gamma0.size() != n || result.gamma_inf.size() != n) {
    rep.note = "gamma vectors do not match the terms";
    return rep;
  }
  add("eta > 0", result.eta, true);
  add("r > 0", result.r, true);
  add("D > 0", result.D, true);
  for (Eigen::Index l = 0; l < n; ++l) {
    const auto& s = problem.specs[static_cast<std::size_t>(l)];
    const std::string tag = "[" + std::to_string(l) + "]";
    add("gamma0 < h(x0)" + tag, s.predicate.value(problem.x0) - result.gamma0[l], true);
    add("gamma_inf > max(r, gamma0)" + tag, result.gamma_inf[l] - std::max(result.r, result.gamma0[l]), true);
    add("gamma_inf < h_opt" + tag, s.predicate.optimum() - result.gamma_inf[l], true);
  }

  std::optional<CompositeBarrier> b;
  try {
    b.emplace(result.barrier(problem));
  } catch (const std::exception& e) {
    rep.note = e.what();
  }
  if (b) {
    add("b(x0, 0) >= chi", b->eval(problem.x0, 0.0) - problem.chi, false);
    for (double s : barrier::deadline_times(problem.specs)) {
      InnerMaxOptions opts;
      opts.seed = problem.seed;
      char name[64];
      std::snprintf(name, sizeof(name), "max b(x, %g-) >= chi", s);
      try {
        const auto res = inner_max(*b, s, MaskSide::kLeftLimit, opts);
        add(name, res.value - problem.chi, false);
      } catch (const NonConvergence& e) {
        add(name, -kInf, false);
        rep.note = e.what();
      }
    }
  }
  rep.feasible = b.has_value();
  for (const auto& c : rep.constraints) rep.feasible = rep.feasible && c.satisfied();
  return rep;
}

double select_kappa(const SynthesisResult& result, const SynthesisProblem& problem, double epsilon_margin) {
  if (!(problem.chi > 0.0)) throw SpecError("gain selection needs chi > 0");
  if (!(epsilon_margin > 0.0)) throw SpecError("gain selection needs a positive epsilon margin");
  double delta_max = 0.0;
  double b_max = result.D;
  for (std::size_t l = 0; l < problem.specs.size(); ++l) {
    const auto& s = problem.specs[l];
    const auto k = static_cast<Eigen::Index>(l);
    if (s.t_star > 0.0) delta_max = std::max(delta_max, (result.gamma_inf[k] - result.gamma0[k]) / s.t_star);
    b_max = std::max(b_max, s.predicate.optimum_within(result.D) - result.gamma0[k]);
  }
  const double zeta = delta_max == 0.0 ? 0.0 : -delta_max * std::exp(result.eta * (b_max - problem.chi));
  return (epsilon_margin - zeta) / problem.chi;
}

}  // namespace stlcbf::synthesis
