#include "stl/parser.hpp"

#include "common/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>

namespace stlcbf::stl {

namespace {

using Kind = ParseError::Kind;

enum class Tok {
  kIdent,
  kNumber,
  kLBracket,
  kRBracket,
  kLParen,
  kRParen,
  kComma,
  kAmp,
  kAmpAmp,
  kPlus,
  kMinus,
  kStar,
  kForbidden,
  kEnd,
};

struct Token {
  Tok type;
  std::string text;
  std::size_t pos;
  double value = 0.0;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      std::string word(src.substr(start, i - start));
      if (word == "not" || word == "or" || word == "implies") {
        out.push_back({Tok::kForbidden, word, start});
      } else {
        out.push_back({Tok::kIdent, word, start});
      }
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string tmp(src.substr(start));
      char* end = nullptr;
      const double v = std::strtod(tmp.c_str(), &end);
      const std::size_t len = static_cast<std::size_t>(end - tmp.c_str());
      if (len == 0) throw ParseError(Kind::kSyntax, start, "malformed number");
      out.push_back({Tok::kNumber, tmp.substr(0, len), start, v});
      i += len;
      continue;
    }
    switch (c) {
      case '[': out.push_back({Tok::kLBracket, "[", start}); break;
      case ']': out.push_back({Tok::kRBracket, "]", start}); break;
      case '(': out.push_back({Tok::kLParen, "(", start}); break;
      case ')': out.push_back({Tok::kRParen, ")", start}); break;
      case ',': out.push_back({Tok::kComma, ",", start}); break;
      case '+': out.push_back({Tok::kPlus, "+", start}); break;
      case '*': out.push_back({Tok::kStar, "*", start}); break;
      case '&':
        if (i + 1 < src.size() && src[i + 1] == '&') {
          out.push_back({Tok::kAmpAmp, "&&", start});
          ++i;
        } else {
          out.push_back({Tok::kAmp, "&", start});
        }
        break;
      case '-':
        if (i + 1 < src.size() && src[i + 1] == '>') {
          out.push_back({Tok::kForbidden, "->", start});
          ++i;
        } else {
          out.push_back({Tok::kMinus, "-", start});
        }
        break;
      case '|':
        if (i + 1 < src.size() && src[i + 1] == '|') ++i;
        out.push_back({Tok::kForbidden, "|", start});
        break;
      case '!':
      case '~': out.push_back({Tok::kForbidden, std::string(1, c), start}); break;
      default: throw ParseError(Kind::kSyntax, start, std::string("unexpected character '") + c + "'");
    }
    ++i;
  }
  out.push_back({Tok::kEnd, "", src.size()});
  return out;
}

// Predicate terms are kept symbolic until the state dimension is known.
struct Term {
  enum class Type { kScaledSlice, kConstant, kMatrixSlice, kDotSlice, kWeights };
  Type type;
  double coef = 1.0;
  std::string name;
  Matrix mat;
  Vector vec;
  std::size_t pos = 0;
};

struct SymbolicPredicate {
  Predicate::Kind kind;
  std::vector<Term> terms;
  double scalar = 0.0;
  std::size_t pos = 0;
};

const std::set<std::string> kKeywords = {"G", "F", "U", "ball", "affine", "true"};

class Parser {
 public:
  Parser(std::string_view text, const StateLayout& layout) : tokens_(lex(text)), layout_(layout) {}

  Formula parse() {
    Formula f = parse_phi();
    if (peek().type != Tok::kEnd) fail_unexpected("end of formula");
    const Eigen::Index dim = resolve_dim();
    resolve(f, dim);
    return f;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(idx_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (idx_ < tokens_.size() - 1) ++idx_;
    return t;
  }
  bool is_ident(const Token& t, std::string_view word) const { return t.type == Tok::kIdent && t.text == word; }
  bool is_temporal(const Token& t) const { return is_ident(t, "G") || is_ident(t, "F"); }
  bool is_pred_start(const Token& t) const {
    return is_ident(t, "ball") || is_ident(t, "affine") || is_ident(t, "true");
  }

  [[noreturn]] void fail_unexpected(const std::string& expected) const {
    const Token& t = peek();
    if (t.type == Tok::kForbidden) {
      throw ParseError(Kind::kFragment, t.pos, "operator '" + t.text + "' (disjunction/negation) is not supported");
    }
    const std::string got = t.type == Tok::kEnd ? "end of input" : "'" + t.text + "'";
    throw ParseError(Kind::kSyntax, t.pos, "expected " + expected + ", got " + got);
  }

  void expect(Tok type, const std::string& what) {
    if (peek().type != type) fail_unexpected(what);
    next();
  }

  double parse_number() {
    double sign = 1.0;
    if (peek().type == Tok::kMinus) {
      next();
      sign = -1.0;
    } else if (peek().type == Tok::kPlus) {
      next();
    }
    if (peek().type != Tok::kNumber) fail_unexpected("number");
    return sign * next().value;
  }

  Interval parse_interval() {
    const std::size_t pos = peek().pos;
    expect(Tok::kLBracket, "'['");
    Interval iv;
    iv.a = parse_number();
    expect(Tok::kComma, "','");
    iv.b = parse_number();
    expect(Tok::kRBracket, "']'");
    if (!std::isfinite(iv.a) || !std::isfinite(iv.b)) throw ParseError(Kind::kInterval, pos, "bounds must be finite");
    if (iv.a < 0.0) throw ParseError(Kind::kInterval, pos, "lower bound must be nonnegative");
    if (iv.a > iv.b) throw ParseError(Kind::kInterval, pos, "lower bound exceeds upper bound");
    if (iv.b <= 0.0) throw ParseError(Kind::kInterval, pos, "upper bound must be positive");
    return iv;
  }

  Formula parse_phi() {
    std::vector<Formula> parts;
    parts.push_back(parse_phi_atom());
    while (peek().type == Tok::kAmpAmp) {
      next();
      parts.push_back(parse_phi_atom());
    }
    return make_conjunction(std::move(parts));
  }

  Formula parse_phi_atom() {
    const Token& t = peek();
    if (is_temporal(t)) {
      const bool always = t.text == "G";
      next();
      const Interval iv = parse_interval();
      expect(Tok::kLParen, "'('");
      BoolFormula body = parse_psi();
      close_temporal_body();
      if (always) return Formula{Always{iv, std::move(body)}};
      return Formula{Eventually{iv, std::move(body)}};
    }
    if (t.type == Tok::kLParen) {
      // Either a parenthesized boolean operand of an until, or a parenthesized phi.
      const std::size_t save = idx_;
      const std::size_t save_preds = preds_.size();
      if (!is_temporal(peek(1))) {
        try {
          next();
          BoolFormula left = parse_psi();
          expect(Tok::kRParen, "')'");
          if (is_ident(peek(), "U")) return parse_until_rest(std::move(left));
        } catch (const ParseError&) {
        }
      }
      idx_ = save;
      preds_.resize(save_preds);
      next();
      Formula inner = parse_phi();
      expect(Tok::kRParen, "')'");
      return inner;
    }
    if (is_pred_start(t)) {
      BoolFormula left = parse_psi();
      if (!is_ident(peek(), "U")) {
        if (peek().type == Tok::kEnd || peek().type == Tok::kAmpAmp || peek().type == Tok::kRParen) {
          throw ParseError(Kind::kFragment, t.pos, "a boolean formula must appear under G, F or U");
        }
        fail_unexpected("'U'");
      }
      return parse_until_rest(std::move(left));
    }
    fail_unexpected("'G', 'F', a predicate, or '('");
  }

  Formula parse_until_rest(BoolFormula left) {
    next();  // U
    const Interval iv = parse_interval();
    BoolFormula right;
    if (peek().type == Tok::kLParen) {
      next();
      right = parse_psi();
      expect(Tok::kRParen, "')'");
    } else {
      right = parse_psi();
    }
    if (is_ident(peek(), "U")) {
      throw ParseError(Kind::kFragment, peek().pos, "until operands must be boolean formulas");
    }
    return Formula{Until{iv, std::move(left), std::move(right)}};
  }

  void close_temporal_body() {
    const Token& t = peek();
    if (t.type == Tok::kAmpAmp) {
      throw ParseError(Kind::kFragment, t.pos, "'&&' joins temporal formulas; use '&' inside a temporal operator");
    }
    if (is_ident(t, "U")) throw ParseError(Kind::kFragment, t.pos, "until nested inside a temporal operator");
    expect(Tok::kRParen, "')'");
  }

  BoolFormula parse_psi() {
    BoolFormula psi;
    psi.conjuncts.push_back(parse_predicate());
    while (peek().type == Tok::kAmp) {
      next();
      psi.conjuncts.push_back(parse_predicate());
    }
    return psi;
  }

  Predicate parse_predicate() {
    const Token& t = peek();
    if (is_temporal(t) || is_ident(t, "U")) {
      throw ParseError(Kind::kFragment, t.pos, "temporal operator nested inside a boolean formula");
    }
    if (t.type == Tok::kLParen) {
      throw ParseError(Kind::kFragment, t.pos, "parenthesized sub-formulas are not allowed inside a boolean formula");
    }
    if (!is_pred_start(t)) fail_unexpected("predicate ('ball', 'affine' or 'true')");
    const std::string word = t.text;
    const std::size_t pos = t.pos;
    next();
    if (word == "true") return Predicate::truth();

    SymbolicPredicate sp;
    sp.pos = pos;
    expect(Tok::kLParen, "'('");
    if (word == "ball") {
      sp.kind = Predicate::Kind::kBall;
      sp.terms = parse_expression(false);
    } else {
      sp.kind = Predicate::Kind::kAffine;
      sp.terms = parse_expression(true);
    }
    expect(Tok::kComma, "','");
    sp.scalar = parse_number();
    expect(Tok::kRParen, "')'");
    preds_.push_back(std::move(sp));
    Predicate placeholder = Predicate::truth();
    placeholder.label = "#" + std::to_string(preds_.size() - 1);
    return placeholder;
  }

  Vector parse_vector_literal() {
    expect(Tok::kLBracket, "'['");
    std::vector<double> vals;
    vals.push_back(parse_number());
    while (peek().type == Tok::kComma) {
      next();
      vals.push_back(parse_number());
    }
    expect(Tok::kRBracket, "']'");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }

  Matrix parse_matrix_literal() {
    const std::size_t pos = peek().pos;
    expect(Tok::kLBracket, "'['");
    std::vector<Vector> rows;
    rows.push_back(parse_vector_literal());
    while (peek().type == Tok::kComma) {
      next();
      rows.push_back(parse_vector_literal());
    }
    expect(Tok::kRBracket, "']'");
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols()) throw ParseError(Kind::kSyntax, pos, "ragged matrix literal");
      m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    return m;
  }

  std::string parse_name() {
    const Token& t = peek();
    if (t.type != Tok::kIdent || kKeywords.count(t.text) != 0) fail_unexpected("state slice name");
    return next().text;
  }

  std::vector<Term> parse_expression(bool scalar_valued) {
    std::vector<Term> terms;
    double sign = 1.0;
    if (peek().type == Tok::kMinus) {
      next();
      sign = -1.0;
    }
    for (;;) {
      terms.push_back(parse_term(sign, scalar_valued));
      if (peek().type == Tok::kPlus) {
        next();
        sign = 1.0;
      } else if (peek().type == Tok::kMinus) {
        next();
        sign = -1.0;
      } else {
        break;
      }
    }
    return terms;
  }

  Term parse_term(double sign, bool scalar_valued) {
    Term term;
    term.pos = peek().pos;
    const Token& t = peek();
    if (t.type == Tok::kNumber) {
      term.coef = sign * next().value;
      expect(Tok::kStar, "'*'");
      term.type = Term::Type::kScaledSlice;
      term.name = parse_name();
      return term;
    }
    if (t.type == Tok::kIdent) {
      term.type = Term::Type::kScaledSlice;
      term.coef = sign;
      term.name = parse_name();
      return term;
    }
    if (t.type == Tok::kLBracket) {
      if (!scalar_valued && peek(1).type == Tok::kLBracket) {
        term.type = Term::Type::kMatrixSlice;
        term.mat = sign * parse_matrix_literal();
        expect(Tok::kStar, "'*'");
        term.name = parse_name();
        return term;
      }
      term.vec = sign * parse_vector_literal();
      if (scalar_valued && peek().type == Tok::kStar) {
        next();
        term.type = Term::Type::kDotSlice;
        term.name = parse_name();
      } else {
        term.type = scalar_valued ? Term::Type::kWeights : Term::Type::kConstant;
      }
      return term;
    }
    fail_unexpected("expression term");
  }

  std::optional<Slice> lookup(const std::string& name, Eigen::Index dim) const {
    if (name == "x") return Slice{0, dim};
    auto it = layout_.slices.find(name);
    if (it == layout_.slices.end()) return std::nullopt;
    return it->second;
  }

  Eigen::Index resolve_dim() const {
    if (layout_.dim > 0) return layout_.dim;
    Eigen::Index dim = 0;
    std::size_t where = 0;
    auto propose = [&](Eigen::Index d, std::size_t pos) {
      if (d <= 0) return;
      if (dim != 0 && dim != d) {
        throw ParseError(Kind::kSyntax, pos, "inconsistent state dimension (" + std::to_string(dim) + " vs " +
                                                 std::to_string(d) + ")");
      }
      dim = d;
      where = pos;
    };
    for (const auto& sp : preds_) {
      bool has_slice = false;
      for (const auto& term : sp.terms) {
        if (term.type != Term::Type::kConstant && term.type != Term::Type::kWeights) {
          has_slice = true;
          if (term.name != "x") {
            throw ParseError(Kind::kSyntax, term.pos, "unknown state slice '" + term.name + "'");
          }
        }
        switch (term.type) {
          case Term::Type::kWeights:
          case Term::Type::kDotSlice: propose(term.vec.size(), term.pos); break;
          case Term::Type::kMatrixSlice: propose(term.mat.cols(), term.pos); break;
          default: break;
        }
      }
      if (sp.kind == Predicate::Kind::kBall) {
        for (const auto& term : sp.terms) {
          // Without slice terms a constant is a center point in the full state;
          // with `c*x` terms the expression rows equal the state dimension.
          if (term.type == Term::Type::kConstant) propose(term.vec.size(), term.pos);
        }
      }
      (void)has_slice;
    }
    if (dim == 0 && !preds_.empty()) {
      throw ParseError(Kind::kSyntax, 0, "cannot infer the state dimension; declare a state layout");
    }
    (void)where;
    return dim;
  }

  Predicate build(const SymbolicPredicate& sp, Eigen::Index dim) const {
    auto slice_of = [&](const Term& term) {
      auto s = lookup(term.name, dim);
      if (!s) throw ParseError(Kind::kSyntax, term.pos, "unknown state slice '" + term.name + "'");
      if (s->offset < 0 || s->length <= 0 || s->offset + s->length > dim) {
        throw ParseError(Kind::kSyntax, term.pos, "state slice '" + term.name + "' is out of range");
      }
      return *s;
    };

    if (sp.kind == Predicate::Kind::kAffine) {
      Vector w = Vector::Zero(dim);
      for (const auto& term : sp.terms) {
        switch (term.type) {
          case Term::Type::kWeights:
            if (term.vec.size() != dim) {
              throw ParseError(Kind::kSyntax, term.pos, "weight vector length does not match the state dimension");
            }
            w += term.vec;
            break;
          case Term::Type::kDotSlice: {
            const Slice s = slice_of(term);
            if (term.vec.size() != s.length) {
              throw ParseError(Kind::kSyntax, term.pos, "weight length does not match slice '" + term.name + "'");
            }
            w.segment(s.offset, s.length) += term.vec;
            break;
          }
          case Term::Type::kScaledSlice: {
            const Slice s = slice_of(term);
            if (s.length != 1) {
              throw ParseError(Kind::kSyntax, term.pos,
                               "slice '" + term.name + "' is not scalar; use a weight vector '[..]*" + term.name + "'");
            }
            w[s.offset] += term.coef;
            break;
          }
          default: throw ParseError(Kind::kSyntax, term.pos, "unsupported term in affine predicate");
        }
      }
      return Predicate::affine(std::move(w), sp.scalar);
    }

    bool has_slice = false;
    for (const auto& term : sp.terms) has_slice |= term.type != Term::Type::kConstant;
    if (!has_slice) {
      Vector c = Vector::Zero(dim);
      for (const auto& term : sp.terms) {
        if (term.vec.size() != dim) {
          throw ParseError(Kind::kSyntax, term.pos, "ball center length does not match the state dimension");
        }
        c += term.vec;
      }
      return Predicate::ball(Matrix::Identity(dim, dim), -c, sp.scalar);
    }

    Eigen::Index rows = -1;
    auto set_rows = [&](Eigen::Index r, std::size_t pos) {
      if (rows >= 0 && rows != r) throw ParseError(Kind::kSyntax, pos, "expression terms have different lengths");
      rows = r;
    };
    for (const auto& term : sp.terms) {
      switch (term.type) {
        case Term::Type::kConstant: set_rows(term.vec.size(), term.pos); break;
        case Term::Type::kScaledSlice: set_rows(slice_of(term).length, term.pos); break;
        case Term::Type::kMatrixSlice: set_rows(term.mat.rows(), term.pos); break;
        default: break;
      }
    }
    Matrix L = Matrix::Zero(rows, dim);
    Vector o = Vector::Zero(rows);
    for (const auto& term : sp.terms) {
      switch (term.type) {
        case Term::Type::kConstant: o += term.vec; break;
        case Term::Type::kScaledSlice: {
          const Slice s = slice_of(term);
          L.block(0, s.offset, rows, s.length) += term.coef * Matrix::Identity(rows, s.length);
          break;
        }
        case Term::Type::kMatrixSlice: {
          const Slice s = slice_of(term);
          if (term.mat.cols() != s.length) {
            throw ParseError(Kind::kSyntax, term.pos, "matrix columns do not match slice '" + term.name + "'");
          }
          L.block(0, s.offset, rows, s.length) += term.mat;
          break;
        }
        default: break;
      }
    }
    return Predicate::ball(std::move(L), std::move(o), sp.scalar);
  }

  void resolve(BoolFormula& psi, Eigen::Index dim) const {
    for (auto& p : psi.conjuncts) {
      if (p.label.empty() || p.label[0] != '#') continue;
      const std::size_t k = std::stoul(p.label.substr(1));
      p = build(preds_[k], dim);
      p.label = print(p);
    }
  }

  void resolve(Formula& f, Eigen::Index dim) const {
    std::visit(
        [&](auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Always> || std::is_same_v<T, Eventually>) {
            resolve(node.body, dim);
          } else if constexpr (std::is_same_v<T, Until>) {
            resolve(node.left, dim);
            resolve(node.right, dim);
          } else {
            for (auto& part : node.parts) resolve(part, dim);
          }
        },
        f.node);
  }

  std::vector<Token> tokens_;
  std::size_t idx_ = 0;
  const StateLayout& layout_;
  std::vector<SymbolicPredicate> preds_;
};

}  // namespace

Formula parse_formula(std::string_view text, const StateLayout& layout) {
  Parser parser(text, layout);
  return parser.parse();
}

}  // namespace stlcbf::stl
