#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace stlcbf::stl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Interval {
  double a = 0.0;
  double b = 0.0;

  bool operator==(const Interval&) const = default;
};

/// Concave predicate function h over a group state.
///
/// Three forms are supported:
///   - true:   h(x) = +inf
///   - affine: h(x) = w^T x + beta
///   - ball:   h(x) = eps - ||L x + o||
///
/// The predicate holds at x iff h(x) >= 0.
class Predicate {
 public:
  enum class Kind { kTrue, kAffine, kBall };

  static Predicate truth();
  static Predicate affine(Vector weights, double beta);
  static Predicate ball(Matrix map, Vector offset, double radius);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  double value(const Vector& x) const;
  // Zero at (and within 1e-9 of) the center of a ball predicate.
  Vector gradient(const Vector& x) const;

  /// sup_x h(x) over the whole state space; +inf for a non-constant affine predicate.
  double optimum() const { return optimum_; }
  /// Upper bound of h over {||x|| <= radius}.
  double optimum_within(double radius) const;

  // Ball: L. Affine: the 1 x n row w^T.
  const Matrix& map() const { return map_; }
  // Ball: o. Affine: empty.
  const Vector& offset() const { return offset_; }
  // Ball: eps. Affine: beta.
  double scalar() const { return scalar_; }

  // Ball: min-norm point with L x + o = 0 (least squares if L is not surjective).
  const Vector& center() const { return center_; }

  std::string label;

  // Structural equality; the label is ignored.
  bool operator==(const Predicate& other) const;

 private:
  Kind kind_ = Kind::kTrue;
  Eigen::Index dim_ = 0;
  Matrix map_;
  Vector offset_;
  double scalar_ = 0.0;
  double optimum_ = 0.0;
  Vector center_;
};

struct BoolFormula {
  std::vector<Predicate> conjuncts;

  bool operator==(const BoolFormula&) const = default;
};

struct Formula;

struct Always {
  Interval interval;
  BoolFormula body;
  bool operator==(const Always&) const = default;
};

struct Eventually {
  Interval interval;
  BoolFormula body;
  bool operator==(const Eventually&) const = default;
};

struct Until {
  Interval interval;
  BoolFormula left;
  BoolFormula right;
  bool operator==(const Until&) const = default;
};

struct Conjunction {
  std::vector<Formula> parts;
  bool operator==(const Conjunction&) const;
};

struct Formula {
  std::variant<Always, Eventually, Until, Conjunction> node;

  bool operator==(const Formula& other) const { return node == other.node; }
};

inline bool Conjunction::operator==(const Conjunction& other) const { return parts == other.parts; }

/// Latest time offset any temporal operator looks at.
double horizon(const Formula& formula);

/// State dimension shared by all predicates (0 if every predicate is `true`).
Eigen::Index state_dim(const Formula& formula);

/// Flat list of the temporal operators (conjunctions expanded).
std::vector<const Formula*> temporal_operators(const Formula& formula);

/// Canonical text that parses back to a structurally equal formula.
std::string print(const Formula& formula);
std::string print(const BoolFormula& formula);
std::string print(const Predicate& predicate);

Formula make_conjunction(std::vector<Formula> parts);

}  // namespace stlcbf::stl
