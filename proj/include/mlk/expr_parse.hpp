#pragma once

// Text form for expression trees, prefix style:
//
//   expr   := number | "i" | identifier | "(" op expr... ")"
//   op     := add | sub | mul | div | neg | pow | exp | sin | cos | sqrt
//             | bump
//
// "add" and "mul" accept two or more arguments (folded left), "sub" and
// "div" exactly two, the unary functions exactly one. "pow" takes an
// expression and a numeric exponent; "bump" takes an expression, a numeric
// center, and a numeric radius. "neg" is sugar for multiplication by -1.
// Example: (mul (bump x 0 1) xi) is the symbol cutoff(x) * xi.
//
// Parse failures throw parse_error carrying the 1-based line and column of
// the offending token and the token text itself.

#include <cctype>
#include <cstdlib>
#include <string>
#include <vector>

#include "mlk/expr.hpp"

namespace mlk {

class parse_error : public error {
 public:
  parse_error(const std::string& what, int line, int column,
              const std::string& token)
      : error("parse error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what +
              (token.empty() ? std::string() : " (token '" + token + "')")),
        line(line),
        column(column),
        token(token) {}
  int line;
  int column;
  std::string token;
};

namespace detail {

struct Token {
  enum class Kind { lparen, rparen, atom, end };
  Kind kind;
  std::string text;
  int line;
  int column;
};

inline std::vector<Token> tokenize_expression(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++col;
      ++i;
      continue;
    }
    if (c == '(' || c == ')') {
      out.push_back({c == '(' ? Token::Kind::lparen : Token::Kind::rparen,
                     std::string(1, c), line, col});
      ++col;
      ++i;
      continue;
    }
    int start_col = col;
    std::string text;
    while (i < src.size() && src[i] != '(' && src[i] != ')' &&
           !std::isspace(static_cast<unsigned char>(src[i]))) {
      text.push_back(src[i]);
      ++i;
      ++col;
    }
    out.push_back({Token::Kind::atom, text, line, start_col});
  }
  out.push_back({Token::Kind::end, "", line, col});
  return out;
}

inline bool token_number(const Token& t, double& out) {
  const char* s = t.text.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') return false;
  out = v;
  return true;
}

class ExprParser {
 public:
  explicit ExprParser(const std::string& src)
      : tokens_(tokenize_expression(src)) {}

  Expr parse() {
    Expr e = parse_one();
    const Token& t = peek();
    if (t.kind != Token::Kind::end)
      throw parse_error("trailing input after expression", t.line, t.column,
                        t.text);
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& what) const {
    throw parse_error(what, t.line, t.column, t.text);
  }

  double require_number(const std::string& role) {
    const Token& t = take();
    double v = 0.0;
    if (t.kind != Token::Kind::atom || !token_number(t, v))
      fail(t, "expected a number for " + role);
    return v;
  }

  Expr parse_one() {
    const Token& t = take();
    switch (t.kind) {
      case Token::Kind::end:
        fail(t, "unexpected end of input");
      case Token::Kind::rparen:
        fail(t, "unexpected ')'");
      case Token::Kind::atom: {
        double v = 0.0;
        if (token_number(t, v)) return constant(v);
        if (t.text == "i") return constant(cplx(0.0, 1.0));
        if (!valid_identifier(t.text))
          fail(t, "not a number or variable name");
        return variable(t.text);
      }
      case Token::Kind::lparen:
        break;
    }
    const Token& op = take();
    if (op.kind != Token::Kind::atom)
      fail(op, "expected an operator name after '('");
    Expr result = parse_form(op);
    const Token& close = take();
    if (close.kind != Token::Kind::rparen)
      fail(close, "expected ')' to close '" + op.text + "'");
    return result;
  }

  Expr parse_form(const Token& op) {
    const std::string& name = op.text;
    if (name == "add" || name == "mul") {
      std::vector<Expr> args = parse_args(op, 2, -1);
      Expr acc = args[0];
      for (std::size_t i = 1; i < args.size(); ++i)
        acc = name == "add" ? add(acc, args[i]) : mul(acc, args[i]);
      return acc;
    }
    if (name == "sub" || name == "div") {
      std::vector<Expr> args = parse_args(op, 2, 2);
      return name == "sub" ? sub(args[0], args[1]) : div(args[0], args[1]);
    }
    if (name == "neg") {
      std::vector<Expr> args = parse_args(op, 1, 1);
      return mul(constant(-1.0), args[0]);
    }
    if (name == "exp" || name == "sin" || name == "cos" || name == "sqrt") {
      std::vector<Expr> args = parse_args(op, 1, 1);
      if (name == "exp") return exp(args[0]);
      if (name == "sin") return sin(args[0]);
      if (name == "cos") return cos(args[0]);
      return sqrt(args[0]);
    }
    if (name == "pow") {
      Expr base = parse_one();
      double e = require_number("the exponent of pow");
      return pow(base, e);
    }
    if (name == "bump") {
      Expr arg = parse_one();
      double c = require_number("the bump center");
      double r = require_number("the bump radius");
      if (!(r > 0.0)) fail(op, "bump radius must be positive");
      return bump(arg, c, r);
    }
    fail(op, "unknown operator '" + name + "'");
  }

  std::vector<Expr> parse_args(const Token& op, int min_count, int max_count) {
    std::vector<Expr> args;
    while (peek().kind != Token::Kind::rparen) {
      if (peek().kind == Token::Kind::end)
        fail(peek(), "missing ')' for '" + op.text + "'");
      args.push_back(parse_one());
      if (max_count >= 0 && static_cast<int>(args.size()) > max_count)
        fail(op, "'" + op.text + "' takes at most " +
                     std::to_string(max_count) + " arguments");
    }
    if (static_cast<int>(args.size()) < min_count)
      fail(op, "'" + op.text + "' needs at least " +
                   std::to_string(min_count) + " arguments, got " +
                   std::to_string(args.size()));
    return args;
  }

  static bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
      return false;
    for (char c : s)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
        return false;
    return true;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(const std::string& src) {
  return detail::ExprParser(src).parse();
}

}  // namespace mlk
