#include "barrier/barrier.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stlcbf::barrier {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCenterRadius = 1e-9;

void append_terms(const stl::BoolFormula& psi, TermOrigin origin, const stl::Interval& iv, double t_star,
                  double deadline, std::vector<TermSpec>& out) {
  for (const auto& p : psi.conjuncts) {
    if (p.kind() == stl::Predicate::Kind::kTrue) continue;
    out.push_back(TermSpec{p, origin, iv, t_star, deadline});
  }
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<double> switch_union(const std::vector<std::pair<TermOrigin, std::pair<double, double>>>& items) {
  // items: (origin, (t_star, deadline))
  double max_deadline = 0.0;
  for (const auto& it : items) max_deadline = std::max(max_deadline, it.second.second);
  std::vector<double> out;
  for (const auto& [origin, td] : items) {
    if (origin == TermOrigin::kAlways && td.first > 0.0 && td.first <= max_deadline) out.push_back(td.first);
    if (td.second > 0.0) out.push_back(td.second);
  }
  return sorted_unique(std::move(out));
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }

}  // namespace

std::string to_string(TermOrigin origin) {
  switch (origin) {
    case TermOrigin::kAlways: return "always";
    case TermOrigin::kEventually: return "eventually";
    case TermOrigin::kUntilLeft: return "until_left";
    case TermOrigin::kUntilRight: return "until_right";
  }
  return "always";
}

TermOrigin origin_from_string(const std::string& text) {
  if (text == "always") return TermOrigin::kAlways;
  if (text == "eventually") return TermOrigin::kEventually;
  if (text == "until_left") return TermOrigin::kUntilLeft;
  if (text == "until_right") return TermOrigin::kUntilRight;
  throw std::invalid_argument("unknown term origin '" + text + "'");
}

double GammaFn::value(double t) const {
  if (t_star <= 0.0 || t >= t_star) return gamma_inf;
  return (gamma_inf - gamma0) / t_star * t + gamma0;
}

double GammaFn::rate(double t) const {
  if (t_star <= 0.0 || t >= t_star) return 0.0;
  return (gamma_inf - gamma0) / t_star;
}

CompositeBarrier::CompositeBarrier(std::vector<BarrierTerm> terms, double eta, double state_bound, Eigen::Index dim)
    : terms_(std::move(terms)), eta_(eta), state_bound_(state_bound), dim_(dim) {
  if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw std::invalid_argument("eta must be positive and finite");
  if (!(state_bound_ > 0.0)) throw std::invalid_argument("state bound D must be positive");
  if (dim_ <= 0) throw std::invalid_argument("barrier dimension must be positive");
  for (const auto& term : terms_) {
    if (term.predicate.dim() != dim_) throw std::invalid_argument("barrier term dimension mismatch");
    if (!(term.deadline > 0.0)) throw std::invalid_argument("barrier term deadline must be positive");
    if (term.gamma.gamma_inf < term.gamma.gamma0) {
      throw std::invalid_argument("gamma must be non-decreasing (gamma_inf >= gamma0)");
    }
  }
  switch_times_ = switching_times(terms_);
}

std::vector<bool> CompositeBarrier::active_mask(double t, MaskSide side) const {
  std::vector<bool> mask(terms_.size() + 1, true);
  for (std::size_t l = 0; l < terms_.size(); ++l) {
    mask[l] = side == MaskSide::kValue ? t < terms_[l].deadline : t <= terms_[l].deadline;
  }
  mask.back() = std::isfinite(state_bound_);
  return mask;
}

Evaluation CompositeBarrier::evaluate_all(const Vector& x, double t, MaskSide side) const {
  if (x.size() != dim_) throw std::invalid_argument("state dimension does not match the barrier");
  const std::size_t p = terms_.size();
  const auto mask = active_mask(t, side);
  std::vector<double> b(p + 1, kInf);
  const double xnorm = x.norm();
  for (std::size_t l = 0; l < p; ++l) {
    if (mask[l]) b[l] = terms_[l].value(x, t);
  }
  if (mask[p]) b[p] = state_bound_ - xnorm;

  double m = kInf;
  for (std::size_t l = 0; l <= p; ++l) {
    if (mask[l]) m = std::min(m, b[l]);
  }
  bool any = false;
  for (bool on : mask) any = any || on;
  if (!any) throw std::logic_error("composite barrier has no active term at this time");

  Evaluation ev;
  ev.weights.assign(p + 1, 0.0);
  ev.grad = Vector::Zero(dim_);
  if (!std::isfinite(m)) {
    ev.value = m;
    return ev;
  }
  double sum = 0.0;
  for (std::size_t l = 0; l <= p; ++l) {
    if (!mask[l] || !std::isfinite(b[l])) continue;
    ev.weights[l] = std::exp(-eta_ * (b[l] - m));
    sum += ev.weights[l];
  }
  ev.value = m - std::log(sum) / eta_;
  for (std::size_t l = 0; l <= p; ++l) {
    if (ev.weights[l] == 0.0) continue;
    const double w = ev.weights[l] / sum;
    ev.weights[l] = w;
    if (l < p) {
      ev.grad += w * terms_[l].predicate.gradient(x);
      ev.dt -= w * terms_[l].gamma.rate(t);
    } else if (xnorm > kCenterRadius) {
      ev.grad -= w * x / xnorm;
    }
  }
  return ev;
}

double smooth_min(const std::vector<double>& b, double eta) {
  if (b.empty()) throw std::invalid_argument("smooth_min of an empty set");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  const double m = *std::min_element(b.begin(), b.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : b) sum += std::exp(-eta * (v - m));
  // sum >= 1 exactly (the minimum contributes exp(0)), so the correction is never negative.
  return m - std::log(sum) / eta;
}

double CompositeBarrier::eval(const Vector& x, double t, MaskSide side) const {
  return evaluate_all(x, t, side).value;
}

Vector CompositeBarrier::grad_x(const Vector& x, double t, MaskSide side) const {
  return evaluate_all(x, t, side).grad;
}

double CompositeBarrier::partial_t(const Vector& x, double t, MaskSide side) const {
  return evaluate_all(x, t, side).dt;
}

Vector CompositeBarrier::slice_gradient(const Vector& x, double t, Eigen::Index offset, Eigen::Index length) const {
  if (offset < 0 || length < 0 || offset + length > dim_) throw std::out_of_range("gradient slice out of range");
  return grad_x(x, t).segment(offset, length);
}

nlohmann::json CompositeBarrier::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& term : terms_) {
    terms.push_back({{"predicate", predicate_to_json(term.predicate)},
                     {"origin", to_string(term.origin)},
                     {"t_star", term.gamma.t_star},
                     {"deadline", term.deadline},
                     {"gamma0", term.gamma.gamma0},
                     {"gamma_inf", term.gamma.gamma_inf}});
  }
  return {{"eta", eta_},
          {"D", number_or_null(state_bound_)},
          {"dim", dim_},
          {"switch_times", switch_times_},
          {"terms", terms}};
}

CompositeBarrier CompositeBarrier::from_json(const nlohmann::json& j) {
  std::vector<BarrierTerm> terms;
  for (const auto& jt : j.at("terms")) {
    BarrierTerm term;
    term.predicate = predicate_from_json(jt.at("predicate"));
    term.origin = origin_from_string(jt.at("origin").get<std::string>());
    term.gamma = GammaFn{jt.at("gamma0").get<double>(), jt.at("gamma_inf").get<double>(),
                         jt.at("t_star").get<double>()};
    term.deadline = jt.at("deadline").get<double>();
    terms.push_back(std::move(term));
  }
  return CompositeBarrier(std::move(terms), j.at("eta").get<double>(), number_from(j.at("D")),
                          j.at("dim").get<Eigen::Index>());
}

std::vector<TermSpec> decompose(const stl::Formula& formula) {
  std::vector<TermSpec> out;
  for (const stl::Formula* op : stl::temporal_operators(formula)) {
    if (const auto* g = std::get_if<stl::Always>(&op->node)) {
      append_terms(g->body, TermOrigin::kAlways, g->interval, g->interval.a, g->interval.b, out);
    } else if (const auto* f = std::get_if<stl::Eventually>(&op->node)) {
      append_terms(f->body, TermOrigin::kEventually, f->interval, f->interval.b, f->interval.b, out);
    } else if (const auto* u = std::get_if<stl::Until>(&op->node)) {
      append_terms(u->right, TermOrigin::kUntilRight, u->interval, u->interval.b, u->interval.b, out);
      append_terms(u->left, TermOrigin::kUntilLeft, u->interval, 0.0, u->interval.b, out);
    }
  }
  return out;
}

std::vector<double> switching_times(const std::vector<TermSpec>& specs) {
  std::vector<std::pair<TermOrigin, std::pair<double, double>>> items;
  for (const auto& s : specs) items.push_back({s.origin, {s.t_star, s.deadline}});
  return switch_union(items);
}

std::vector<double> switching_times(const std::vector<BarrierTerm>& terms) {
  std::vector<std::pair<TermOrigin, std::pair<double, double>>> items;
  for (const auto& s : terms) items.push_back({s.origin, {s.gamma.t_star, s.deadline}});
  return switch_union(items);
}

std::vector<double> deadline_times(const std::vector<TermSpec>& specs) {
  std::vector<double> out;
  for (const auto& s : specs) out.push_back(s.deadline);
  return sorted_unique(std::move(out));
}

CompositeBarrier make_barrier(const std::vector<TermSpec>& specs, double eta, double state_bound,
                              const Vector& gamma0, const Vector& gamma_inf, Eigen::Index dim) {
  const auto n = static_cast<Eigen::Index>(specs.size());
  if (gamma0.size() != n || gamma_inf.size() != n) throw std::invalid_argument("gamma vectors must match the terms");
  std::vector<BarrierTerm> terms;
  terms.reserve(specs.size());
  for (Eigen::Index l = 0; l < n; ++l) {
    const auto& s = specs[static_cast<std::size_t>(l)];
    terms.push_back(BarrierTerm{s.predicate, GammaFn{gamma0[l], gamma_inf[l], s.t_star}, s.deadline, s.origin});
  }
  return CompositeBarrier(std::move(terms), eta, state_bound, dim);
}

nlohmann::json predicate_to_json(const stl::Predicate& p) {
  using Kind = stl::Predicate::Kind;
  switch (p.kind()) {
    case Kind::kTrue: return {{"kind", "true"}};
    case Kind::kAffine: {
      const Vector w = p.map().row(0).transpose();
      return {{"kind", "affine"}, {"w", std::vector<double>(w.data(), w.data() + w.size())}, {"beta", p.scalar()}};
    }
    case Kind::kBall: {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index r = 0; r < p.map().rows(); ++r) {
        const Vector row = p.map().row(r).transpose();
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
      }
      const Vector& o = p.offset();
      return {{"kind", "ball"},
              {"L", rows},
              {"o", std::vector<double>(o.data(), o.data() + o.size())},
              {"eps", p.scalar()}};
    }
  }
  return {{"kind", "true"}};
}

stl::Predicate predicate_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  auto to_vector = [](const nlohmann::json& arr) {
    const auto v = arr.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  if (kind == "true") return stl::Predicate::truth();
  if (kind == "affine") return stl::Predicate::affine(to_vector(j.at("w")), j.at("beta").get<double>());
  if (kind == "ball") {
    const auto& rows = j.at("L");
    if (rows.empty()) throw std::invalid_argument("ball predicate needs a nonempty map");
    Matrix L(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Vector row = to_vector(rows[r]);
      if (row.size() != L.cols()) throw std::invalid_argument("ragged ball map");
      L.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return stl::Predicate::ball(std::move(L), to_vector(j.at("o")), j.at("eps").get<double>());
  }
  throw std::invalid_argument("unknown predicate kind '" + kind + "'");
}

}  // namespace stlcbf::barrier
