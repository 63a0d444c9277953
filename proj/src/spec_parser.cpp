#include <cctype>
#include <charconv>
#include <optional>

#include "genrl/spec_lang.hpp"

namespace genrl {

namespace {

enum class Tok { Ident, Number, LParen, RParen, Comma, Semi, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t line = 1, column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = src_[pos_];
    auto single = [&](Tok k) {
      t.kind = k;
      t.text = std::string(1, c);
      advance();
      return t;
    };
    switch (c) {
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case ',': return single(Tok::Comma);
      case ';': return single(Tok::Semi);
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance();
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      std::size_t start = pos_;
      if (c == '+') advance(), ++start;
      const char* first = src_.data() + pos_;
      double value = 0.0;
      auto res = std::from_chars(first, src_.data() + src_.size(), value);
      if (res.ec != std::errc() || res.ptr == first)
        throw SyntaxError("malformed number", t.line, t.column);
      while (src_.data() + pos_ < res.ptr) advance();
      t.kind = Tok::Number;
      t.number = value;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", t.line, t.column);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0, line_ = 1, column_ = 1;
};

std::optional<PredicateKind> keyword_kind(std::string_view name) {
  for (auto k : {PredicateKind::ReachBall, PredicateKind::InRect, PredicateKind::AvoidRect,
                 PredicateKind::HoldPole, PredicateKind::ReachTheta, PredicateKind::ReachTip})
    if (predicate_keyword(k) == name) return k;
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::string_view text, const RegionTable& regions) : lex_(text), regions_(regions) {
    cur_ = lex_.next();
  }

  Spec parse() {
    Spec s = spec();
    if (cur_.kind != Tok::End) fail("unexpected '" + cur_.text + "'");
    return s;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, cur_.line, cur_.column);
  }

  bool at_keyword(std::string_view kw) const { return cur_.kind == Tok::Ident && cur_.text == kw; }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    cur_ = lex_.next();
  }

  Spec spec() {
    Spec s = seq();
    while (at_keyword("ensuring")) {
      cur_ = lex_.next();
      s = Spec::ensuring(std::move(s), pred());
    }
    return s;
  }

  Spec seq() {
    Spec s = choice();
    while (cur_.kind == Tok::Semi) {
      cur_ = lex_.next();
      s = Spec::seq(std::move(s), choice());
    }
    return s;
  }

  Spec choice() {
    Spec s = atom();
    while (at_keyword("or")) {
      cur_ = lex_.next();
      s = Spec::choice(std::move(s), atom());
    }
    return s;
  }

  Spec atom() {
    if (at_keyword("achieve")) {
      cur_ = lex_.next();
      return Spec::achieve(pred());
    }
    if (cur_.kind == Tok::LParen) {
      cur_ = lex_.next();
      Spec s = spec();
      expect(Tok::RParen, "')'");
      return s;
    }
    if (cur_.kind == Tok::End) fail("unexpected end of input, expected 'achieve' or '('");
    fail("expected 'achieve' or '(' but found '" + cur_.text + "'");
  }

  AtomicPredicate pred() {
    if (cur_.kind != Tok::Ident) fail("expected a predicate name");
    auto kind = keyword_kind(cur_.text);
    if (!kind) fail("unknown predicate '" + cur_.text + "'");
    Token head = cur_;
    cur_ = lex_.next();
    expect(Tok::LParen, "'('");
    Vec params;
    std::string label;
    for (;;) {
      if (cur_.kind == Tok::Number) {
        params.push_back(cur_.number);
      } else if (cur_.kind == Tok::Ident) {
        auto it = regions_.find(cur_.text);
        if (it == regions_.end()) fail("unknown region name '" + cur_.text + "'");
        if (label.empty()) label = cur_.text;
        params.insert(params.end(), it->second.begin(), it->second.end());
      } else {
        fail("expected a number or region name");
      }
      cur_ = lex_.next();
      if (cur_.kind == Tok::Comma) {
        cur_ = lex_.next();
        continue;
      }
      expect(Tok::RParen, "',' or ')'");
      break;
    }
    try {
      return AtomicPredicate::from_params(*kind, std::move(params), std::move(label));
    } catch (const InvalidInput& e) {
      throw SyntaxError(e.what(), head.line, head.column);
    }
  }

  Lexer lex_;
  const RegionTable& regions_;
  Token cur_;
};

// Binding strength: ensuring 0, seq 1, choice 2, atoms 3.
int precedence(const Spec& s) {
  switch (s.kind()) {
    case SpecKind::Ensuring: return 0;
    case SpecKind::Seq: return 1;
    case SpecKind::Choice: return 2;
    case SpecKind::Achieve: return 3;
  }
  return 3;
}

void print(const Spec& s, int min_prec, std::string& out) {
  bool paren = precedence(s) < min_prec;
  if (paren) out += '(';
  switch (s.kind()) {
    case SpecKind::Achieve:
      out += "achieve ";
      out += to_string(s.predicate());
      break;
    case SpecKind::Ensuring:
      print(s.lhs(), 0, out);
      out += " ensuring ";
      out += to_string(s.predicate());
      break;
    case SpecKind::Seq:
      print(s.lhs(), 1, out);
      out += "; ";
      print(s.rhs(), 2, out);
      break;
    case SpecKind::Choice:
      print(s.lhs(), 2, out);
      out += " or ";
      print(s.rhs(), 3, out);
      break;
  }
  if (paren) out += ')';
}

}  // namespace

Spec parse_spec(std::string_view text, const RegionTable& regions) {
  return Parser(text, regions).parse();
}

std::string to_string(const Spec& spec) {
  std::string out;
  print(spec, 0, out);
  return out;
}

}  // namespace genrl
