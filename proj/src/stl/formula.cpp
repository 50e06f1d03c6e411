#include "stl/formula.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stlcbf::stl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCenterRadius = 1e-9;

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string vector_literal(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += number(v[i]);
  }
  return out + "]";
}

std::string matrix_literal(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += ",";
    out += vector_literal(m.row(r).transpose());
  }
  return out + "]";
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

Predicate Predicate::truth() {
  Predicate p;
  p.kind_ = Kind::kTrue;
  p.optimum_ = kInf;
  p.label = "true";
  return p;
}

Predicate Predicate::affine(Vector weights, double beta) {
  if (weights.size() == 0) throw std::invalid_argument("affine predicate needs a nonempty weight vector");
  Predicate p;
  p.kind_ = Kind::kAffine;
  p.dim_ = weights.size();
  p.map_ = weights.transpose();
  p.scalar_ = beta;
  p.optimum_ = weights.isZero(0.0) ? beta : kInf;
  p.center_ = Vector::Zero(p.dim_);
  return p;
}

Predicate Predicate::ball(Matrix map, Vector offset, double radius) {
  if (map.rows() == 0 || map.cols() == 0) throw std::invalid_argument("ball predicate needs a nonempty map");
  if (map.rows() != offset.size()) throw std::invalid_argument("ball predicate map/offset size mismatch");
  Predicate p;
  p.kind_ = Kind::kBall;
  p.dim_ = map.cols();
  p.map_ = std::move(map);
  p.offset_ = std::move(offset);
  p.scalar_ = radius;
  p.center_ = p.map_.completeOrthogonalDecomposition().solve(-p.offset_);
  const double residual = (p.map_ * p.center_ + p.offset_).norm();
  // A surjective map reaches zero exactly; keep h_opt = eps in that case.
  p.optimum_ = residual <= 1e-12 * (1.0 + p.offset_.norm()) ? radius : radius - residual;
  return p;
}

double Predicate::value(const Vector& x) const {
  switch (kind_) {
    case Kind::kTrue: return kInf;
    case Kind::kAffine: return map_.row(0).dot(x) + scalar_;
    case Kind::kBall: return scalar_ - (map_ * x + offset_).norm();
  }
  return kInf;
}

Vector Predicate::gradient(const Vector& x) const {
  switch (kind_) {
    case Kind::kTrue: return Vector::Zero(x.size());
    case Kind::kAffine: return map_.row(0).transpose();
    case Kind::kBall: {
      const Vector z = map_ * x + offset_;
      const double n = z.norm();
      if (n <= kCenterRadius) return Vector::Zero(dim_);
      return -(map_.transpose() * z) / n;
    }
  }
  return Vector::Zero(x.size());
}

double Predicate::optimum_within(double radius) const {
  switch (kind_) {
    case Kind::kTrue: return kInf;
    case Kind::kAffine: return std::min(optimum_, map_.row(0).norm() * radius + scalar_);
    case Kind::kBall: return optimum_;
  }
  return kInf;
}

bool Predicate::operator==(const Predicate& other) const {
  return kind_ == other.kind_ && dim_ == other.dim_ && scalar_ == other.scalar_ &&
         same_matrix(map_, other.map_) && same_matrix(offset_, other.offset_);
}

double horizon(const Formula& formula) {
  double h = 0.0;
  for (const Formula* op : temporal_operators(formula)) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (!std::is_same_v<T, Conjunction>) h = std::max(h, node.interval.b);
        },
        op->node);
  }
  return h;
}

Eigen::Index state_dim(const Formula& formula) {
  Eigen::Index dim = 0;
  auto visit_bool = [&](const BoolFormula& psi) {
    for (const auto& p : psi.conjuncts) dim = std::max(dim, p.dim());
  };
  for (const Formula* op : temporal_operators(formula)) {
    if (const auto* g = std::get_if<Always>(&op->node)) visit_bool(g->body);
    if (const auto* f = std::get_if<Eventually>(&op->node)) visit_bool(f->body);
    if (const auto* u = std::get_if<Until>(&op->node)) {
      visit_bool(u->left);
      visit_bool(u->right);
    }
  }
  return dim;
}

std::vector<const Formula*> temporal_operators(const Formula& formula) {
  std::vector<const Formula*> out;
  if (const auto* c = std::get_if<Conjunction>(&formula.node)) {
    for (const auto& part : c->parts) {
      auto sub = temporal_operators(part);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else {
    out.push_back(&formula);
  }
  return out;
}

std::string print(const Predicate& p) {
  switch (p.kind()) {
    case Predicate::Kind::kTrue: return "true";
    case Predicate::Kind::kAffine:
      return "affine(" + vector_literal(p.map().row(0).transpose()) + ", " + number(p.scalar()) + ")";
    case Predicate::Kind::kBall:
      return "ball(" + matrix_literal(p.map()) + "*x + " + vector_literal(p.offset()) + ", " +
             number(p.scalar()) + ")";
  }
  return "true";
}

std::string print(const BoolFormula& psi) {
  std::string out;
  for (std::size_t i = 0; i < psi.conjuncts.size(); ++i) {
    if (i > 0) out += " & ";
    out += print(psi.conjuncts[i]);
  }
  return out;
}

std::string print(const Formula& formula) {
  auto interval = [](const Interval& iv) { return "[" + number(iv.a) + "," + number(iv.b) + "]"; };
  return std::visit(
      [&](const auto& node) -> std::string {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Always>) {
          return "G" + interval(node.interval) + "(" + print(node.body) + ")";
        } else if constexpr (std::is_same_v<T, Eventually>) {
          return "F" + interval(node.interval) + "(" + print(node.body) + ")";
        } else if constexpr (std::is_same_v<T, Until>) {
          return "(" + print(node.left) + ") U" + interval(node.interval) + " (" + print(node.right) + ")";
        } else {
          std::string out;
          for (std::size_t i = 0; i < node.parts.size(); ++i) {
            if (i > 0) out += " && ";
            out += print(node.parts[i]);
          }
          return out;
        }
      },
      formula.node);
}

Formula make_conjunction(std::vector<Formula> parts) {
  std::vector<Formula> flat;
  for (auto& part : parts) {
    if (auto* c = std::get_if<Conjunction>(&part.node)) {
      for (auto& sub : c->parts) flat.push_back(std::move(sub));
    } else {
      flat.push_back(std::move(part));
    }
  }
  if (flat.size() == 1) return std::move(flat.front());
  return Formula{Conjunction{std::move(flat)}};
}

}  // namespace stlcbf::stl
