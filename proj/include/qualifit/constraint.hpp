#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qualifit/error.hpp"
#include "qualifit/likelihood.hpp"

namespace qualifit {

// Lexer ------------------------------------------------------------------

struct Token {
  enum class Kind { Ident, Number, Less, LessEq, Greater, GreaterEq, Equals, Comma };
  Kind kind = Kind::Ident;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;  // 1-based
};

// One statement per line; '#' starts a comment; whitespace-insensitive.
inline std::vector<Token> tokenize(std::string_view s, int line_no = 1) {
  std::vector<Token> out;
  auto ident_start = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  };
  auto ident_cont = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  };
  auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)); };

  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') break;
    int col = static_cast<int>(i) + 1;

    if (c == '<' || c == '>') {
      bool eq = i + 1 < s.size() && s[i + 1] == '=';
      std::size_t after = i + (eq ? 2 : 1);
      if (after < s.size() && (s[after] == '<' || s[after] == '>' ||
                               s[after] == '=')) {
        std::size_t j = after;
        while (j < s.size() && (s[j] == '<' || s[j] == '>' || s[j] == '='))
          ++j;
        throw parse_error(
            "malformed operator '" + std::string(s.substr(i, j - i)) + "'",
            line_no, col);
      }
      Token t;
      t.kind = (c == '<') ? (eq ? Token::Kind::LessEq : Token::Kind::Less)
                          : (eq ? Token::Kind::GreaterEq : Token::Kind::Greater);
      t.text = eq ? std::string{c, '='} : std::string{c};
      t.line = line_no;
      t.column = col;
      out.push_back(std::move(t));
      i += eq ? 2 : 1;
      continue;
    }
    if (c == '=' || c == ',') {
      out.push_back({c == '=' ? Token::Kind::Equals : Token::Kind::Comma,
                     std::string{c}, 0.0, line_no, col});
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && ident_cont(s[j])) ++j;
      out.push_back({Token::Kind::Ident, std::string(s.substr(i, j - i)), 0.0,
                     line_no, col});
      i = j;
      continue;
    }
    bool number_start =
        digit(c) ||
        ((c == '+' || c == '-') && i + 1 < s.size() &&
         (digit(s[i + 1]) ||
          (s[i + 1] == '.' && i + 2 < s.size() && digit(s[i + 2])))) ||
        (c == '.' && i + 1 < s.size() && digit(s[i + 1]));
    if (number_start) {
      std::size_t j = i;
      if (s[j] == '+' || s[j] == '-') ++j;
      while (j < s.size() && digit(s[j])) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && digit(s[j])) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k >= s.size() || !digit(s[k]))
          throw parse_error("malformed number", line_no, col);
        j = k;
        while (j < s.size() && digit(s[j])) ++j;
      }
      std::string text(s.substr(i, j - i));
      char* end = nullptr;
      double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size())
        throw parse_error("malformed number '" + text + "'", line_no, col);
      out.push_back({Token::Kind::Number, std::move(text), v, line_no, col});
      i = j;
      continue;
    }
    throw parse_error(std::string("unexpected character '") + c + "'", line_no,
                      col);
  }
  return out;
}

// AST --------------------------------------------------------------------

enum class RelOp { Less, LessEq, Greater, GreaterEq };

struct Enforcement {
  enum class Mode { AtTime, Always, Once };
  Mode mode = Mode::AtTime;
  double time = 0.0;                                // AtTime
  std::optional<std::pair<double, double>> window;  // Always/Once
};

inline bool operator==(const Enforcement& a, const Enforcement& b) {
  if (a.mode != b.mode) return false;
  if (a.mode == Enforcement::Mode::AtTime) return a.time == b.time;
  return a.window == b.window;
}

struct Qualifier {
  enum class Kind { Weight, Likelihood, LikelihoodAsym };
  Kind kind = Kind::Weight;
  double weight = 0.0;      // Weight
  double confidence = 0.0;  // Likelihood
  double pmin = 0.0;        // LikelihoodAsym
  double pmax = 0.0;        // LikelihoodAsym
  double tolerance = 0.0;   // Likelihood / LikelihoodAsym
};

inline bool operator==(const Qualifier& a, const Qualifier& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Qualifier::Kind::Weight:
      return a.weight == b.weight;
    case Qualifier::Kind::Likelihood:
      return a.confidence == b.confidence && a.tolerance == b.tolerance;
    case Qualifier::Kind::LikelihoodAsym:
      return a.pmin == b.pmin && a.pmax == b.pmax &&
             a.tolerance == b.tolerance;
  }
  return false;
}

struct ConstraintStatement {
  Operand lhs;
  RelOp op = RelOp::Less;
  Operand rhs;
  Enforcement enforcement;
  Qualifier qualifier;
  std::string group;   // optional trailing `group <tag>`
  std::string source;  // original text, kept for diagnostics
  int line = 1;
};

inline bool operator==(const ConstraintStatement& a,
                       const ConstraintStatement& b) {
  return a.lhs == b.lhs && a.op == b.op && a.rhs == b.rhs &&
         a.enforcement == b.enforcement && a.qualifier == b.qualifier &&
         a.group == b.group;
}

// Parser -----------------------------------------------------------------

namespace detail {

struct Parser {
  std::span<const Token> toks;
  int line;
  std::size_t pos = 0;
  int last_number_col = 1;

  bool at_end() const { return pos >= toks.size(); }

  int err_col() const {
    if (pos < toks.size()) return toks[pos].column;
    if (toks.empty()) return 1;
    return toks.back().column + static_cast<int>(toks.back().text.size());
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(msg, line, err_col());
  }

  const Token& need(const std::string& what) {
    if (at_end()) fail("expected " + what + " at end of statement");
    return toks[pos];
  }

  bool peek_keyword(std::string_view kw) const {
    return pos < toks.size() && toks[pos].kind == Token::Kind::Ident &&
           toks[pos].text == kw;
  }

  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    ++pos;
    return true;
  }

  void expect_keyword(const std::string& kw) {
    if (!accept_keyword(kw)) fail("expected '" + kw + "'");
  }

  double number(const std::string& what) {
    const Token& t = need(what);
    if (t.kind != Token::Kind::Number) fail("expected " + what);
    last_number_col = t.column;
    ++pos;
    return t.number;
  }

  Operand operand() {
    const Token& t = need("observable name or number");
    if (t.kind == Token::Kind::Ident) {
      ++pos;
      return Operand::observable(t.text);
    }
    if (t.kind == Token::Kind::Number) {
      ++pos;
      return Operand::number(t.number);
    }
    fail("expected observable name or number");
  }

  RelOp relop() {
    const Token& t = need("comparison operator ('<', '<=', '>', '>=')");
    RelOp op;
    switch (t.kind) {
      case Token::Kind::Less: op = RelOp::Less; break;
      case Token::Kind::LessEq: op = RelOp::LessEq; break;
      case Token::Kind::Greater: op = RelOp::Greater; break;
      case Token::Kind::GreaterEq: op = RelOp::GreaterEq; break;
      default: fail("expected comparison operator ('<', '<=', '>', '>=')");
    }
    ++pos;
    return op;
  }

  double time_value() {
    expect_keyword("time");
    const Token& t = need("'='");
    if (t.kind != Token::Kind::Equals) fail("expected '=' after 'time'");
    ++pos;
    return number("a time value");
  }

  std::pair<double, double> timepair() {
    double t1 = time_value();
    const Token& t = need("','");
    if (t.kind != Token::Kind::Comma) fail("expected ',' in time window");
    ++pos;
    double t2 = time_value();
    if (!(t1 < t2))
      throw parse_error("window start must be before its end", line,
                        last_number_col);
    return {t1, t2};
  }

  Enforcement enforcement() {
    Enforcement e;
    if (accept_keyword("at")) {
      e.mode = Enforcement::Mode::AtTime;
      e.time = time_value();
      if (e.time < 0.0)
        throw parse_error("enforcement time must be non-negative", line,
                          last_number_col);
      return e;
    }
    if (accept_keyword("always")) {
      e.mode = Enforcement::Mode::Always;
      if (accept_keyword("between")) e.window = timepair();
      return e;
    }
    if (accept_keyword("once")) {
      e.mode = Enforcement::Mode::Once;
      if (accept_keyword("between")) e.window = timepair();
      return e;
    }
    if (accept_keyword("between")) {  // alias for 'always between'
      e.mode = Enforcement::Mode::Always;
      e.window = timepair();
      return e;
    }
    fail("expected 'at', 'always', 'once', or 'between'");
  }

  Qualifier qualifier() {
    Qualifier q;
    if (accept_keyword("weight")) {
      q.kind = Qualifier::Kind::Weight;
      q.weight = number("a weight value");
      return q;
    }
    if (accept_keyword("confidence")) {
      q.kind = Qualifier::Kind::Likelihood;
      q.confidence = number("a confidence value");
      expect_keyword("tolerance");
      q.tolerance = number("a tolerance value");
      return q;
    }
    if (accept_keyword("pmin")) {
      q.kind = Qualifier::Kind::LikelihoodAsym;
      q.pmin = number("a pmin value");
      expect_keyword("pmax");
      q.pmax = number("a pmax value");
      expect_keyword("tolerance");
      q.tolerance = number("a tolerance value");
      return q;
    }
    fail("expected 'weight', 'confidence', or 'pmin'");
  }

  std::string group_tag() {
    const Token& t = need("a group tag");
    if (t.kind != Token::Kind::Ident) fail("expected a group tag");
    ++pos;
    return t.text;
  }
};

inline std::string strip_line(std::string_view text) {
  auto hash = text.find('#');
  if (hash != std::string_view::npos) text = text.substr(0, hash);
  std::size_t b = text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(b, e - b + 1));
}

}  // namespace detail

inline ConstraintStatement parse_statement(std::span<const Token> toks,
                                           int line_no = 1,
                                           std::string source = "") {
  detail::Parser p{toks, line_no};
  ConstraintStatement st;
  st.line = line_no;
  st.source = std::move(source);
  int lhs_col = p.err_col();
  st.lhs = p.operand();
  st.op = p.relop();
  st.rhs = p.operand();
  if (st.lhs.is_literal && st.rhs.is_literal)
    throw parse_error("inequality needs at least one observable", line_no,
                      lhs_col);
  st.enforcement = p.enforcement();
  st.qualifier = p.qualifier();
  if (p.accept_keyword("group")) st.group = p.group_tag();
  if (!p.at_end())
    p.fail("unexpected trailing input '" + p.toks[p.pos].text + "'");
  return st;
}

inline ConstraintStatement parse_statement(const std::string& text,
                                           int line_no = 1) {
  return parse_statement(tokenize(text, line_no), line_no,
                         detail::strip_line(text));
}

// Whole-file parse: blank and comment lines skipped, first error thrown.
inline std::vector<ConstraintStatement> parse_constraints(
    const std::string& text) {
  std::vector<ConstraintStatement> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line(text.data() + start,
                          (nl == std::string::npos ? text.size() : nl) - start);
    ++line_no;
    std::vector<Token> toks = tokenize(line, line_no);
    if (!toks.empty())
      out.push_back(parse_statement(toks, line_no, detail::strip_line(line)));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

inline std::vector<ConstraintStatement> parse_constraints_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open constraint file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_constraints(text);
}

// Printing ---------------------------------------------------------------

// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string pretty_print(const ConstraintStatement& st) {
  auto operand_text = [](const Operand& o) {
    return o.is_literal ? format_number(o.literal) : o.name;
  };
  std::string s = operand_text(st.lhs);
  switch (st.op) {
    case RelOp::Less: s += " < "; break;
    case RelOp::LessEq: s += " <= "; break;
    case RelOp::Greater: s += " > "; break;
    case RelOp::GreaterEq: s += " >= "; break;
  }
  s += operand_text(st.rhs);
  switch (st.enforcement.mode) {
    case Enforcement::Mode::AtTime:
      s += " at time=" + format_number(st.enforcement.time);
      break;
    case Enforcement::Mode::Always: s += " always"; break;
    case Enforcement::Mode::Once: s += " once"; break;
  }
  if (st.enforcement.mode != Enforcement::Mode::AtTime &&
      st.enforcement.window) {
    s += " between time=" + format_number(st.enforcement.window->first) +
         ",time=" + format_number(st.enforcement.window->second);
  }
  switch (st.qualifier.kind) {
    case Qualifier::Kind::Weight:
      s += " weight " + format_number(st.qualifier.weight);
      break;
    case Qualifier::Kind::Likelihood:
      s += " confidence " + format_number(st.qualifier.confidence) +
           " tolerance " + format_number(st.qualifier.tolerance);
      break;
    case Qualifier::Kind::LikelihoodAsym:
      s += " pmin " + format_number(st.qualifier.pmin) + " pmax " +
           format_number(st.qualifier.pmax) + " tolerance " +
           format_number(st.qualifier.tolerance);
      break;
  }
  if (!st.group.empty()) s += " group " + st.group;
  return s;
}

// Normalization ----------------------------------------------------------

using NormalizedConstraint = std::variant<QualitativeObservation, PenaltyTerm>;

// Orient every inequality to "reduced value < 0" and map the qualifier onto
// discrepancy rates.  `>`-type statements swap operands (e = rhs - lhs), so
// no separate negation state is carried around.
inline NormalizedConstraint normalize(const ConstraintStatement& st) {
  const std::string label =
      st.source.empty() ? pretty_print(st) : st.source;
  auto bad = [&](const std::string& why) {
    return data_error("statement '" + label + "': " + why);
  };

  bool flip = st.op == RelOp::Greater || st.op == RelOp::GreaterEq;
  ReducedBinding b;
  b.lhs = flip ? st.rhs : st.lhs;
  b.rhs = flip ? st.lhs : st.rhs;
  b.label = label;
  switch (st.enforcement.mode) {
    case Enforcement::Mode::AtTime:
      b.reduction = Reduction::PointInTime;
      b.time = st.enforcement.time;
      break;
    case Enforcement::Mode::Always:
      b.reduction = Reduction::MaxOverWindow;
      b.window = st.enforcement.window;
      break;
    case Enforcement::Mode::Once:
      b.reduction = Reduction::MinOverWindow;
      b.window = st.enforcement.window;
      break;
  }

  const Qualifier& q = st.qualifier;
  if (q.kind == Qualifier::Kind::Weight) {
    if (q.weight < 0.0) throw bad("weight must be non-negative");
    PenaltyTerm p;
    p.binding = std::move(b);
    p.weight = q.weight;
    return p;
  }

  QualitativeObservation o;
  o.binding = std::move(b);
  o.threshold = 0.0;
  o.sigma = q.tolerance;
  if (q.tolerance < 0.0) throw bad("tolerance must be non-negative");
  if (q.kind == Qualifier::Kind::Likelihood) {
    if (!(q.confidence > 0.0 && q.confidence <= 1.0))
      throw bad("confidence must be in (0, 1]");
    o.eps_plus = o.eps_minus = (1.0 - q.confidence) / 2.0;
  } else {
    if (!(q.pmin >= 0.0 && q.pmin < 1.0)) throw bad("pmin must be in [0, 1)");
    if (!(q.pmax > 0.0 && q.pmax <= 1.0)) throw bad("pmax must be in (0, 1]");
    if (!(q.pmin < q.pmax)) throw bad("pmin must be smaller than pmax");
    // the observed probability lives in [pmin, pmax]: pmin is the floor
    // (satisfied regardless), 1-pmax the ceiling loss (violated regardless)
    o.eps_plus = q.pmin;
    o.eps_minus = 1.0 - q.pmax;
  }
  return o;
}

struct NormalizedSet {
  std::vector<QualitativeObservation> observations;
  std::vector<PenaltyTerm> penalties;
};

inline NormalizedSet normalize_all(std::span<const ConstraintStatement> stmts) {
  NormalizedSet set;
  for (const ConstraintStatement& st : stmts) {
    NormalizedConstraint n = normalize(st);
    if (std::holds_alternative<QualitativeObservation>(n))
      set.observations.push_back(std::get<QualitativeObservation>(std::move(n)));
    else
      set.penalties.push_back(std::get<PenaltyTerm>(std::move(n)));
  }
  return set;
}

// The canonical statement a normalized observation denotes; feeding it back
// through normalize() reproduces the observation (coefficients to one ulp).
inline ConstraintStatement canonical_statement(const QualitativeObservation& o,
                                               std::string group = "") {
  ConstraintStatement st;
  st.lhs = o.binding.lhs;
  st.op = RelOp::Less;
  st.rhs = o.binding.rhs;
  switch (o.binding.reduction) {
    case Reduction::PointInTime:
      st.enforcement.mode = Enforcement::Mode::AtTime;
      st.enforcement.time = o.binding.time;
      break;
    case Reduction::MaxOverWindow:
      st.enforcement.mode = Enforcement::Mode::Always;
      st.enforcement.window = o.binding.window;
      break;
    case Reduction::MinOverWindow:
      st.enforcement.mode = Enforcement::Mode::Once;
      st.enforcement.window = o.binding.window;
      break;
  }
  st.qualifier.kind = Qualifier::Kind::LikelihoodAsym;
  st.qualifier.pmin = o.eps_plus;
  st.qualifier.pmax = 1.0 - o.eps_minus;
  st.qualifier.tolerance = o.sigma;
  st.group = std::move(group);
  return st;
}

inline ConstraintStatement canonical_statement(const PenaltyTerm& p,
                                               std::string group = "") {
  ConstraintStatement st;
  st.lhs = p.binding.lhs;
  st.op = RelOp::Less;
  st.rhs = p.binding.rhs;
  switch (p.binding.reduction) {
    case Reduction::PointInTime:
      st.enforcement.mode = Enforcement::Mode::AtTime;
      st.enforcement.time = p.binding.time;
      break;
    case Reduction::MaxOverWindow:
      st.enforcement.mode = Enforcement::Mode::Always;
      st.enforcement.window = p.binding.window;
      break;
    case Reduction::MinOverWindow:
      st.enforcement.mode = Enforcement::Mode::Once;
      st.enforcement.window = p.binding.window;
      break;
  }
  st.qualifier.kind = Qualifier::Kind::Weight;
  st.qualifier.weight = p.weight;
  st.group = std::move(group);
  return st;
}

// Sampling-model diagnostics ----------------------------------------------

struct Diagnostic {
  std::string message;
  int line = 0;
};

// Cross-checks statements that share a `group` tag ("family.category"):
// implied outcome probabilities should sum to 1, middle categories need
// 6sigma-separated thresholds, and always/once complements must pair up.
// Warnings only -- nothing here rejects a file.
inline std::vector<Diagnostic> validate_category_family(
    std::span<const ConstraintStatement> stmts) {
  std::vector<Diagnostic> diags;

  struct Category {
    std::vector<const ConstraintStatement*> stmts;
    double pmin = -1.0, pmax = -1.0, sigma = 0.0;
    bool usable = true;
    int line = 0;
  };
  std::map<std::string, std::map<std::string, Category>> families;
  for (const ConstraintStatement& st : stmts) {
    if (st.group.empty()) continue;
    std::string family = st.group.substr(0, st.group.find('.'));
    Category& cat = families[family][st.group];
    cat.stmts.push_back(&st);
    if (cat.line == 0) cat.line = st.line;

    double pmin, pmax;
    if (st.qualifier.kind == Qualifier::Kind::Likelihood) {
      pmin = (1.0 - st.qualifier.confidence) / 2.0;
      pmax = 1.0 - pmin;
    } else if (st.qualifier.kind == Qualifier::Kind::LikelihoodAsym) {
      pmin = st.qualifier.pmin;
      pmax = st.qualifier.pmax;
    } else {
      diags.push_back({"category '" + st.group +
                           "': weight-qualified statement has no sampling "
                           "model; ignored in family checks",
                       st.line});
      continue;
    }
    if (cat.pmin < 0.0) {
      cat.pmin = pmin;
      cat.pmax = pmax;
    } else if (std::abs(cat.pmin - pmin) > 1e-12 ||
               std::abs(cat.pmax - pmax) > 1e-12) {
      diags.push_back({"category '" + st.group +
                           "': statements disagree on pmin/pmax",
                       st.line});
      cat.usable = false;
    }
    cat.sigma = std::max(cat.sigma, st.qualifier.tolerance);
  }

  for (const auto& [family, cats] : families) {
    bool all_usable = true;
    for (const auto& [tag, cat] : cats)
      if (!cat.usable || cat.pmin < 0.0) all_usable = false;

    if (all_usable) {
      // when one category saturates at its ceiling, the others sit on their
      // floors; the outcomes are exhaustive only if those sum to 1
      for (const auto& [tag, cat] : cats) {
        double sum = cat.pmax;
        for (const auto& [tag2, cat2] : cats)
          if (tag2 != tag) sum += cat2.pmin;
        if (std::abs(sum - 1.0) > 1e-9) {
          char msg[160];
          std::snprintf(msg, sizeof msg,
                        "family '%s': with category '%s' saturated, outcome "
                        "probabilities sum to %.6g, not 1",
                        family.c_str(), tag.c_str(), sum);
          diags.push_back({msg, cat.line});
        }
      }
    }

    // middle categories: need both thresholds and enough separation
    for (const auto& [tag, cat] : cats) {
      if (cat.stmts.size() != 2) continue;
      double lo = 0.0, hi = 0.0;
      bool have_lo = false, have_hi = false;
      for (const ConstraintStatement* st : cat.stmts) {
        const Operand* lit = nullptr;
        bool lit_on_rhs = false;
        if (st->rhs.is_literal && !st->lhs.is_literal) {
          lit = &st->rhs;
          lit_on_rhs = true;
        } else if (st->lhs.is_literal && !st->rhs.is_literal) {
          lit = &st->lhs;
        } else {
          continue;
        }
        bool less = st->op == RelOp::Less || st->op == RelOp::LessEq;
        // "x < c" / "c > x" bound from above; the mirrored forms from below
        bool upper = (lit_on_rhs && less) || (!lit_on_rhs && !less);
        if (upper) {
          hi = lit->literal;
          have_hi = true;
        } else {
          lo = lit->literal;
          have_lo = true;
        }
      }
      if (have_lo && have_hi && cat.sigma > 0.0 &&
          hi - lo < 6.0 * cat.sigma - 1e-12) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "category '%s': threshold separation %.6g is below "
                      "6*sigma = %.6g; categories are not distinguishable",
                      tag.c_str(), hi - lo, 6.0 * cat.sigma);
        diags.push_back({msg, cat.line});
      }
    }
  }

  // complement pairing for window reductions, grouped or not: the negation
  // of "always" is "once" over the same window (and vice versa)
  auto oriented = [](const ConstraintStatement& st) {
    bool flip = st.op == RelOp::Greater || st.op == RelOp::GreaterEq;
    return std::pair<const Operand&, const Operand&>(flip ? st.rhs : st.lhs,
                                                     flip ? st.lhs : st.rhs);
  };
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    for (std::size_t j = i + 1; j < stmts.size(); ++j) {
      const ConstraintStatement& a = stmts[i];
      const ConstraintStatement& b = stmts[j];
      if (a.enforcement.mode == Enforcement::Mode::AtTime ||
          b.enforcement.mode == Enforcement::Mode::AtTime)
        continue;
      auto [al, ar] = oriented(a);
      auto [bl, br] = oriented(b);
      if (!(al == br && ar == bl)) continue;  // not mutual negations
      if (a.enforcement.window != b.enforcement.window) continue;
      if (a.enforcement.mode == b.enforcement.mode) {
        const char* need =
            a.enforcement.mode == Enforcement::Mode::Always ? "'once'"
                                                            : "'always'";
        diags.push_back(
            {"statements on line " + std::to_string(a.line) + " and line " +
                 std::to_string(b.line) +
                 ": the complement of this statement must be enforced " +
                 need + " for the categories to be exclusive and exhaustive",
             b.line});
      }
    }
  }
  return diags;
}

}  // namespace qualifit
