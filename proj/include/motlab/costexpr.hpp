#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "motlab/errors.hpp"
#include "motlab/numeric.hpp"

namespace motlab {

namespace expr_detail {

enum class Op {
  number,
  var_x1,
  var_x2,
  add,
  sub,
  mul,
  div,
  neg,
  abs_fn,
  max_fn,
  min_fn,
  call_fn,  // call(a, k) = max(a - k, 0)
  put_fn    // put(a, k)  = max(k - a, 0)
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0;  // for number
  NodePtr a, b;
};

inline bool same_tree(const NodePtr& x, const NodePtr& y) {
  if (!x || !y) return !x && !y;
  if (x->op != y->op || x->value != y->value) return false;
  return same_tree(x->a, y->a) && same_tree(x->b, y->b);
}

struct Token {
  enum class Kind { number, ident, plus, minus, star, slash, lparen, rparen, comma, end };
  Kind kind;
  double value = 0;
  std::string text;
  std::size_t column = 0;  // 1-based
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    tok_ = Token{Token::Kind::end, 0, "", pos_ + 1};
    if (pos_ >= src_.size()) return;
    char c = src_[pos_];
    std::size_t col = pos_ + 1;
    auto single = [&](Token::Kind k) {
      tok_ = Token{k, 0, std::string(1, c), col};
      ++pos_;
    };
    switch (c) {
      case '+': single(Token::Kind::plus); return;
      case '-': single(Token::Kind::minus); return;
      case '*': single(Token::Kind::star); return;
      case '/': single(Token::Kind::slash); return;
      case '(': single(Token::Kind::lparen); return;
      case ')': single(Token::Kind::rparen); return;
      case ',': single(Token::Kind::comma); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '.'))
        ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t mark = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        if (pos_ < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          while (pos_ < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        } else {
          pos_ = mark;  // bare 'e' is not part of the number
        }
      }
      std::string text(src_.substr(start, pos_ - start));
      char* endp = nullptr;
      double v = std::strtod(text.c_str(), &endp);
      if (endp != text.c_str() + text.size() || !std::isfinite(v))
        throw ParseError("invalid number '" + text + "'", col);
      tok_ = Token{Token::Kind::number, v, text, col};
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_ = Token{Token::Kind::ident, 0,
                   std::string(src_.substr(start, pos_ - start)), col};
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", col);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

// Grammar (unary minus binds tighter than * and /):
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | primary
//   primary := number | x1 | x2 | fn '(' expr [',' expr] ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  NodePtr parse() {
    NodePtr e = expr();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::end)
      throw ParseError("unexpected token '" + t.text + "'", t.column);
    return e;
  }

 private:
  static NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr,
                      double v = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = v;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      auto k = lex_.peek().kind;
      if (k == Token::Kind::plus) {
        lex_.take();
        lhs = make(Op::add, lhs, term());
      } else if (k == Token::Kind::minus) {
        lex_.take();
        lhs = make(Op::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      auto k = lex_.peek().kind;
      if (k == Token::Kind::star) {
        lex_.take();
        lhs = make(Op::mul, lhs, unary());
      } else if (k == Token::Kind::slash) {
        lex_.take();
        lhs = make(Op::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (lex_.peek().kind == Token::Kind::minus) {
      lex_.take();
      return make(Op::neg, unary());
    }
    return primary();
  }

  NodePtr primary() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::number:
        return make(Op::number, nullptr, nullptr, t.value);
      case Token::Kind::lparen: {
        NodePtr e = expr();
        expect(Token::Kind::rparen, ")");
        return e;
      }
      case Token::Kind::ident: {
        if (t.text == "x1") return make(Op::var_x1);
        if (t.text == "x2") return make(Op::var_x2);
        Op op;
        int arity;
        if (t.text == "abs") {
          op = Op::abs_fn;
          arity = 1;
        } else if (t.text == "max") {
          op = Op::max_fn;
          arity = 2;
        } else if (t.text == "min") {
          op = Op::min_fn;
          arity = 2;
        } else if (t.text == "call") {
          op = Op::call_fn;
          arity = 2;
        } else if (t.text == "put") {
          op = Op::put_fn;
          arity = 2;
        } else {
          throw ParseError("unknown identifier '" + t.text + "'", t.column);
        }
        expect(Token::Kind::lparen, "(");
        NodePtr a = expr();
        NodePtr b;
        if (arity == 2) {
          expect(Token::Kind::comma, ",");
          b = expr();
        }
        expect(Token::Kind::rparen, ")");
        return make(op, a, b);
      }
      default:
        throw ParseError("unexpected token '" +
                             (t.kind == Token::Kind::end ? std::string("<end>")
                                                         : t.text) +
                             "'",
                         t.column);
    }
  }

  void expect(Token::Kind k, const char* what) {
    Token t = lex_.take();
    if (t.kind != k)
      throw ParseError(std::string("expected '") + what + "', got '" +
                           (t.kind == Token::Kind::end ? std::string("<end>")
                                                       : t.text) +
                           "'",
                       t.column);
  }

  Lexer lex_;
};

inline double eval_node(const Node& n, double x1, double x2) {
  switch (n.op) {
    case Op::number: return n.value;
    case Op::var_x1: return x1;
    case Op::var_x2: return x2;
    case Op::add: return eval_node(*n.a, x1, x2) + eval_node(*n.b, x1, x2);
    case Op::sub: return eval_node(*n.a, x1, x2) - eval_node(*n.b, x1, x2);
    case Op::mul: return eval_node(*n.a, x1, x2) * eval_node(*n.b, x1, x2);
    case Op::div: return eval_node(*n.a, x1, x2) / eval_node(*n.b, x1, x2);
    case Op::neg: return -eval_node(*n.a, x1, x2);
    case Op::abs_fn: return std::abs(eval_node(*n.a, x1, x2));
    case Op::max_fn:
      return std::max(eval_node(*n.a, x1, x2), eval_node(*n.b, x1, x2));
    case Op::min_fn:
      return std::min(eval_node(*n.a, x1, x2), eval_node(*n.b, x1, x2));
    case Op::call_fn:
      return std::max(eval_node(*n.a, x1, x2) - eval_node(*n.b, x1, x2), 0.0);
    case Op::put_fn:
      return std::max(eval_node(*n.b, x1, x2) - eval_node(*n.a, x1, x2), 0.0);
  }
  return 0;  // unreachable
}

// Precedence levels for printing: additive 1, multiplicative 2, unary 3.
inline void print_node(const Node& n, std::string& out, int min_prec) {
  auto binary = [&](const char* sym, int prec) {
    bool parens = prec < min_prec;
    if (parens) out += '(';
    print_node(*n.a, out, prec);
    out += ' ';
    out += sym;
    out += ' ';
    print_node(*n.b, out, prec + 1);
    if (parens) out += ')';
  };
  auto fn = [&](const char* name) {
    out += name;
    out += '(';
    print_node(*n.a, out, 0);
    if (n.b) {
      out += ", ";
      print_node(*n.b, out, 0);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::number: out += format_double(n.value); return;
    case Op::var_x1: out += "x1"; return;
    case Op::var_x2: out += "x2"; return;
    case Op::add: binary("+", 1); return;
    case Op::sub: binary("-", 1); return;
    case Op::mul: binary("*", 2); return;
    case Op::div: binary("/", 2); return;
    case Op::neg: {
      bool parens = 3 < min_prec;
      if (parens) out += '(';
      out += '-';
      print_node(*n.a, out, 4);
      if (parens) out += ')';
      return;
    }
    case Op::abs_fn: fn("abs"); return;
    case Op::max_fn: fn("max"); return;
    case Op::min_fn: fn("min"); return;
    case Op::call_fn: fn("call"); return;
    case Op::put_fn: fn("put"); return;
  }
}

inline bool depends_on_var(const Node& n) {
  if (n.op == Op::var_x1 || n.op == Op::var_x2) return true;
  if (n.a && depends_on_var(*n.a)) return true;
  if (n.b && depends_on_var(*n.b)) return true;
  return false;
}

inline const char* lint_node(const Node& n) {
  if (n.op == Op::mul && depends_on_var(*n.a) && depends_on_var(*n.b))
    return "product of variable terms";
  if (n.op == Op::div && depends_on_var(*n.b))
    return "division by variable term";
  if (n.a)
    if (const char* r = lint_node(*n.a)) return r;
  if (n.b)
    if (const char* r = lint_node(*n.b)) return r;
  return nullptr;
}

}  // namespace expr_detail

/// Advisory linear-growth lint result.
struct LintResult {
  bool ok = true;
  std::string reason;
};

/// Immutable parsed payoff expression over variables x1, x2.
class PayoffExpr {
 public:
  static PayoffExpr parse(std::string_view text) {
    return PayoffExpr(expr_detail::Parser(text).parse());
  }

  double eval(double x1, double x2) const {
    double v = expr_detail::eval_node(*root_, x1, x2);
    if (!std::isfinite(v))
      throw EvalError("payoff evaluates to a non-finite value at (" +
                      format_double(x1) + ", " + format_double(x2) + ")");
    return v;
  }

  std::string to_string() const {
    std::string out;
    expr_detail::print_node(*root_, out, 0);
    return out;
  }

  /// Syntactic linear-growth check: warns on products of two
  /// variable-dependent subtrees and on division by a variable term.
  LintResult lint_linear_growth() const {
    if (const char* r = expr_detail::lint_node(*root_)) return {false, r};
    return {true, ""};
  }

  bool same_ast(const PayoffExpr& other) const {
    return expr_detail::same_tree(root_, other.root_);
  }

 private:
  explicit PayoffExpr(expr_detail::NodePtr root) : root_(std::move(root)) {}
  expr_detail::NodePtr root_;
};

inline PayoffExpr parse_payoff(std::string_view text) {
  return PayoffExpr::parse(text);
}

inline double eval(const PayoffExpr& e, double x1, double x2) {
  return e.eval(x1, x2);
}

inline LintResult lint_linear_growth(const PayoffExpr& e) {
  return e.lint_linear_growth();
}

}  // namespace motlab
