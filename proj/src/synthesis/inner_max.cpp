#include "common/error.hpp"
#include "synthesis/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stlcbf::synthesis {

namespace {

using stl::Matrix;

// Affine set {x : L x + o = 0} on which a term has its norm kink.
struct Kink {
  Matrix L;
  Vector o;
};

// Projection onto the intersection of a set of kink sets.
struct Face {
  Matrix L;
  Vector o;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  bool empty = true;

  void build(const std::vector<Kink>& kinks, const std::vector<std::size_t>& ids, Eigen::Index dim) {
    empty = ids.empty();
    if (empty) return;
    Eigen::Index rows = 0;
    for (auto i : ids) rows += kinks[i].L.rows();
    L.resize(rows, dim);
    o.resize(rows);
    Eigen::Index r = 0;
    for (auto i : ids) {
      L.middleRows(r, kinks[i].L.rows()) = kinks[i].L;
      o.segment(r, kinks[i].o.size()) = kinks[i].o;
      r += kinks[i].L.rows();
    }
    cod.compute(L);
  }

  Vector snap(const Vector& x) const { return empty ? x : Vector(x - cod.solve(L * x + o)); }
  Vector tangent(const Vector& d) const { return empty ? d : Vector(d - cod.solve(L * d)); }
};

class Ascent {
 public:
  Ascent(const CompositeBarrier& barrier, double t, MaskSide side, const InnerMaxOptions& opts)
      : barrier_(barrier), t_(t), side_(side), opts_(opts) {
    const auto mask = barrier.active_mask(t, side);
    for (std::size_t l = 0; l < barrier.terms().size(); ++l) {
      const auto& p = barrier.terms()[l].predicate;
      if (mask[l] && p.kind() == stl::Predicate::Kind::kBall) kinks_.push_back({p.map(), p.offset()});
    }
    if (mask.back()) {
      kinks_.push_back({Matrix::Identity(barrier.dim(), barrier.dim()), Vector::Zero(barrier.dim())});
    }
  }

  const std::vector<Kink>& kinks() const { return kinks_; }

  InnerMaxResult run(Vector x) {
    std::vector<std::size_t> pinned;
    Face face;
    auto ev = barrier_.evaluate_all(x, t_, side_);
    double f = ev.value;
    double alpha = 0.1;
    Vector x_prev;
    Vector d_prev;
    bool have_prev = false;
    int stall = 0;
    int it = 0;
    for (; it < opts_.max_iterations; ++it) {
      const Vector d = face.tangent(ev.grad);
      const double dn = d.norm();
      if (dn > opts_.grad_tol && stall < 5) {
        if (have_prev) {
          const Vector s = x - x_prev;
          const double sy = s.dot(d - d_prev);
          alpha = sy < 0.0 ? std::clamp(-s.squaredNorm() / sy, 1e-12, 1e6) : std::min(alpha * 2.0, 1e6);
        }
        double a = alpha;
        bool accepted = false;
        for (int k = 0; k < 80; ++k, a *= 0.5) {
          const Vector xn = face.snap(x + a * d);
          auto evn = barrier_.evaluate_all(xn, t_, side_);
          if (evn.value >= f + 1e-4 * a * dn * dn) {
            const bool tiny = evn.value - f <= 1e-13 * (1.0 + std::abs(f));
            stall = tiny ? stall + 1 : 0;
            x_prev = x;
            d_prev = d;
            have_prev = true;
            x = xn;
            f = evn.value;
            ev = std::move(evn);
            alpha = a;
            accepted = true;
            break;
          }
        }
        if (accepted) continue;
      }
      // Stationary on the current face, or stalled at a kink.
      stall = 0;
      have_prev = false;
      if (!pinned.empty() && try_release(x, f, ev)) {
        pinned.clear();
        face.build(kinks_, pinned, barrier_.dim());
        continue;
      }
      if (try_pin(x, f, ev, pinned, face)) continue;
      break;
    }
    InnerMaxResult res;
    res.x = std::move(x);
    res.value = f;
    res.iterations = it;
    return res;
  }

 private:
  bool improves(double fn, double f) const { return fn > f + 1e-14 * (1.0 + std::abs(f)); }

  bool try_release(Vector& x, double& f, barrier::Evaluation& ev) {
    const Vector& g = ev.grad;
    const double gn = g.norm();
    if (gn <= opts_.grad_tol) return false;
    double a = 1.0;
    for (int k = 0; k < 60; ++k, a *= 0.5) {
      const Vector xn = x + a * g;
      auto evn = barrier_.evaluate_all(xn, t_, side_);
      if (improves(evn.value, f) && evn.value >= f + 1e-4 * a * gn * gn) {
        x = xn;
        f = evn.value;
        ev = std::move(evn);
        return true;
      }
    }
    return false;
  }

  bool try_pin(Vector& x, double& f, barrier::Evaluation& ev, std::vector<std::size_t>& pinned, Face& face) {
    std::size_t best_id = kinks_.size();
    double best_f = f;
    Vector best_x;
    for (std::size_t i = 0; i < kinks_.size(); ++i) {
      if (std::find(pinned.begin(), pinned.end(), i) != pinned.end()) continue;
      auto ids = pinned;
      ids.push_back(i);
      Face trial;
      trial.build(kinks_, ids, barrier_.dim());
      const Vector xs = trial.snap(x);
      const double fs = barrier_.eval(xs, t_, side_);
      if (improves(fs, best_f)) {
        best_f = fs;
        best_id = i;
        best_x = xs;
      }
    }
    if (best_id == kinks_.size()) return false;
    pinned.push_back(best_id);
    face.build(kinks_, pinned, barrier_.dim());
    x = best_x;
    ev = barrier_.evaluate_all(x, t_, side_);
    f = ev.value;
    return true;
  }

  const CompositeBarrier& barrier_;
  double t_;
  MaskSide side_;
  const InnerMaxOptions& opts_;
  std::vector<Kink> kinks_;
};

}  // namespace

InnerMaxResult inner_max(const CompositeBarrier& barrier, double t, MaskSide side, const InnerMaxOptions& opts) {
  Ascent ascent(barrier, t, side, opts);
  const Eigen::Index n = barrier.dim();

  // Starts: warm start, mean of kink centers, then random spread around it.
  std::vector<Vector> starts;
  if (opts.warm_start && opts.warm_start->size() == n) starts.push_back(*opts.warm_start);
  Vector mean = Vector::Zero(n);
  double scale = 1.0;
  {
    int count = 0;
    std::vector<Vector> centers;
    for (const auto& k : ascent.kinks()) {
      centers.push_back(k.L.completeOrthogonalDecomposition().solve(-k.o));
      mean += centers.back();
      ++count;
    }
    if (count > 0) mean /= count;
    for (const auto& c : centers) scale = std::max(scale, (c - mean).norm());
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<int>(starts.size()) < std::max(1, opts.starts)) {
    if (starts.empty() || (starts.size() == 1 && opts.warm_start)) {
      starts.push_back(mean);
      continue;
    }
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    starts.push_back(mean + scale * z);
  }

  InnerMaxResult best;
  best.value = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (const auto& s : starts) {
    auto r = ascent.run(s);
    iterations += r.iterations;
    worst = std::min(worst, r.value);
    if (r.value > best.value) best = std::move(r);
  }
  best.iterations = iterations;
  best.spread = best.value - worst;
  if (!(best.spread <= opts.agree_tol)) {
    throw NonConvergence("inner maximization starts disagree by " + std::to_string(best.spread) + " at t = " +
                         std::to_string(t));
  }
  return best;
}

}  // namespace stlcbf::synthesis
