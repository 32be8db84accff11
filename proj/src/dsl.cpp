#include "cauda/dsl.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <optional>
#include <vector>

#include "cauda/error.hpp"

namespace cauda::logic {
namespace {

enum class Tok { Atom, Not, And, Or, Arrow, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t column = 0;  // 1-based
  Atom atom{};
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Atom: return "atom";
    case Tok::Not: return "'!'";
    case Tok::And: return "'&'";
    case Tok::Or: return "'|'";
    case Tok::Arrow: return "'->'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::End: return "end of line";
  }
  return "?";
}

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    Token t;
    t.column = pos_ + 1;
    if (pos_ >= text_.size() || text_[pos_] == '#') {
      pos_ = text_.size();
      t.kind = Tok::End;
      return t;
    }
    char c = text_[pos_];
    switch (c) {
      case '!': ++pos_; t.kind = Tok::Not; return t;
      case '&': ++pos_; t.kind = Tok::And; return t;
      case '|': ++pos_; t.kind = Tok::Or; return t;
      case '(': ++pos_; t.kind = Tok::LParen; return t;
      case ')': ++pos_; t.kind = Tok::RParen; return t;
      case '-':
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
          pos_ += 2;
          t.kind = Tok::Arrow;
          return t;
        }
        fail(t.column, "expected '->'");
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return lex_atom(t);
    fail(t.column, std::string("unexpected character '") + c + "'");
  }

  [[noreturn]] void fail(std::size_t column, const std::string& msg) const {
    throw SyntaxError(line_, column, msg);
  }

 private:
  Token lex_atom(Token t) {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view word = text_.substr(start, pos_ - start);
    if (word == "verb") {
      t.atom.branch = Branch::Verb;
    } else if (word == "noun") {
      t.atom.branch = Branch::Noun;
    } else {
      fail(t.column, "unknown identifier '" + std::string(word) + "', expected verb or noun");
    }
    if (pos_ >= text_.size() || text_[pos_] != ':')
      fail(pos_ + 1, "expected ':' after '" + std::string(word) + "'");
    ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (digits == pos_) fail(digits + 1, "expected class index after '" + std::string(word) + ":'");
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, value);
    if (ec != std::errc{} || ptr != text_.data() + pos_)
      fail(digits + 1, "class index does not fit in 32 bits");
    t.atom.index = value;
    t.kind = Tok::Atom;
    return t;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view text, std::size_t line) : lexer_(text, line) { advance(); }

  Formula parse_line() {
    if (cur_.kind == Tok::End) lexer_.fail(cur_.column, "empty formula");
    Formula f = parse_implies();
    if (cur_.kind != Tok::End)
      lexer_.fail(cur_.column, std::string("unexpected ") + describe(cur_.kind));
    return f;
  }

 private:
  void advance() { cur_ = lexer_.next(); }

  Formula parse_implies() {
    Formula lhs = parse_or();
    if (cur_.kind == Tok::Arrow) {
      advance();
      return Formula::implication(std::move(lhs), parse_implies());
    }
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (cur_.kind == Tok::Or) {
      advance();
      lhs = Formula::disjunction(std::move(lhs), parse_and());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_unary();
    while (cur_.kind == Tok::And) {
      advance();
      lhs = Formula::conjunction(std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Formula parse_unary() {
    switch (cur_.kind) {
      case Tok::Not: {
        advance();
        return Formula::negation(parse_unary());
      }
      case Tok::Atom: {
        Atom a = cur_.atom;
        advance();
        return Formula::atom(a);
      }
      case Tok::LParen: {
        advance();
        Formula inner = parse_implies();
        if (cur_.kind != Tok::RParen)
          lexer_.fail(cur_.column, std::string("expected ')' but found ") + describe(cur_.kind));
        advance();
        return inner;
      }
      default:
        lexer_.fail(cur_.column, std::string("expected operand but found ") + describe(cur_.kind));
    }
  }

  Lexer lexer_;
  Token cur_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::uint32_t parse_dim(std::string_view word, std::string_view key, std::size_t line,
                        std::size_t column) {
  if (word.substr(0, key.size()) != key || word.size() <= key.size() || word[key.size()] != '=')
    throw SyntaxError(line, column, "expected '" + std::string(key) + "=<count>'");
  auto digits = word.substr(key.size() + 1);
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value == 0)
    throw SyntaxError(line, column, "invalid count in '" + std::string(word) + "'");
  return value;
}

bool binds_left_chain(Formula::Kind parent, const Formula& child) {
  return child.kind() == parent &&
         (parent == Formula::Kind::And || parent == Formula::Kind::Or);
}

void render_into(const Formula& f, std::string& out);

void render_operand(const Formula& f, std::string& out) {
  if (f.is_binary()) {
    out += '(';
    render_into(f, out);
    out += ')';
  } else {
    render_into(f, out);
  }
}

void render_into(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const Atom& a = f.as_atom();
      out += a.branch == Branch::Verb ? "verb:" : "noun:";
      out += std::to_string(a.index);
      return;
    }
    case Formula::Kind::Not:
      out += '!';
      render_operand(f.operand(), out);
      return;
    case Formula::Kind::Implies:
      render_operand(f.lhs(), out);
      out += " -> ";
      render_operand(f.rhs(), out);
      return;
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      // Walk the left spine iteratively so long chains do not recurse.
      const char* op = f.kind() == Formula::Kind::And ? " & " : " | ";
      std::vector<const Formula*> right_operands;
      const Formula* node = &f;
      while (binds_left_chain(f.kind(), *node)) {
        right_operands.push_back(&node->rhs());
        node = &node->lhs();
      }
      render_operand(*node, out);
      for (auto it = right_operands.rbegin(); it != right_operands.rend(); ++it) {
        out += op;
        render_operand(**it, out);
      }
      return;
    }
  }
}

}  // namespace

Formula parse_formula(std::string_view text, std::size_t line) {
  return Parser(text, line).parse_line();
}

ConstraintSet parse_constraints(std::string_view text) {
  std::vector<Formula> formulas;
  std::optional<VocabDims> dims;
  ConstraintMode mode = ConstraintMode::InvalidNegations;
  std::vector<std::size_t> formula_lines;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::string_view body = trim(line);
    std::size_t indent = static_cast<std::size_t>(body.data() - line.data());
    if (body.empty()) continue;
    if (body.substr(0, 2) == "#!") {
      auto words = split_words(body.substr(2));
      std::size_t col = indent + 3;
      if (words.empty()) throw SyntaxError(line_no, col, "empty directive");
      auto column_of = [&](std::string_view w) {
        return static_cast<std::size_t>(w.data() - line.data()) + 1;
      };
      if (words[0] == "vocab") {
        if (!formulas.empty())
          throw SyntaxError(line_no, column_of(words[0]), "vocab header must precede formulas");
        if (words.size() != 3)
          throw SyntaxError(line_no, column_of(words[0]), "expected 'vocab verbs=<V> nouns=<N>'");
        dims = VocabDims{parse_dim(words[1], "verbs", line_no, column_of(words[1])),
                         parse_dim(words[2], "nouns", line_no, column_of(words[2]))};
      } else if (words[0] == "mode") {
        if (words.size() != 2)
          throw SyntaxError(line_no, column_of(words[0]), "expected 'mode <invalid-negations|valid-disjunction>'");
        if (words[1] == "invalid-negations") {
          mode = ConstraintMode::InvalidNegations;
        } else if (words[1] == "valid-disjunction") {
          mode = ConstraintMode::ValidDisjunction;
        } else {
          throw SyntaxError(line_no, column_of(words[1]), "unknown mode '" + std::string(words[1]) + "'");
        }
      } else {
        throw SyntaxError(line_no, column_of(words[0]), "unknown directive '" + std::string(words[0]) + "'");
      }
      continue;
    }
    if (body.front() == '#') continue;

    // Parse against the untrimmed line so columns match the source.
    Formula f = parse_formula(line, line_no);
    if (dims) {
      for (const auto& a : f.atoms()) {
        if (!dims->contains(a))
          throw BoundsError("line " + std::to_string(line_no) + ": " +
                                (a.branch == Branch::Verb ? "verb:" : "noun:") +
                                std::to_string(a.index) + " exceeds the declared vocabulary",
                            line_no);
      }
    }
    formulas.push_back(std::move(f));
  }
  return ConstraintSet(std::move(formulas), mode, dims);
}

std::string render_formula(const Formula& f) {
  std::string out;
  render_into(f, out);
  return out;
}

std::string render_constraints(const ConstraintSet& set) {
  std::string out;
  if (set.dims()) {
    out += "#! vocab verbs=" + std::to_string(set.dims()->verbs) +
           " nouns=" + std::to_string(set.dims()->nouns) + "\n";
  }
  if (set.mode() == ConstraintMode::ValidDisjunction) out += "#! mode valid-disjunction\n";
  for (const auto& f : set.formulas()) {
    render_into(f, out);
    out += '\n';
  }
  return out;
}

}  // namespace cauda::logic
