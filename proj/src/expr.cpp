#include "causalgeo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "causalgeo/errors.hpp"

namespace causalgeo {

namespace {

const std::set<std::string>& known_functions() {
  static const std::set<std::string> fns = {"exp", "log", "sin", "cos", "sqrt"};
  return fns;
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      // decimal or scientific notation
      std::size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < n && src[j] == '.') {
        ++j;
        while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < n && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < n && std::isdigit(static_cast<unsigned char>(src[k]))) {
          ++k;
          while (k < n && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      std::string text(src.substr(start, j - start));
      Token t{TokenKind::Number, text, std::strtod(text.c_str(), nullptr), start};
      out.push_back(std::move(t));
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      out.push_back(Token{TokenKind::Ident, std::string(src.substr(start, j - start)),
                          0.0, start});
      i = j;
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      out.push_back(Token{TokenKind::Op, std::string(1, c), 0.0, start});
      ++i;
    } else if (c == '(') {
      out.push_back(Token{TokenKind::LParen, "(", 0.0, start});
      ++i;
    } else if (c == ')') {
      out.push_back(Token{TokenKind::RParen, ")", 0.0, start});
      ++i;
    } else if (c == ',') {
      out.push_back(Token{TokenKind::Comma, ",", 0.0, start});
      ++i;
    } else {
      throw ParseError(start, std::string("invalid character '") + c + "'");
    }
  }
  out.push_back(Token{TokenKind::End, "", 0.0, n});
  return out;
}

AstPtr Ast::constant(double v) {
  auto a = std::make_shared<Ast>();
  a->kind = Kind::Constant;
  a->number = v;
  return a;
}
AstPtr Ast::var(std::string name) {
  auto a = std::make_shared<Ast>();
  a->kind = Kind::Var;
  a->name = std::move(name);
  return a;
}
AstPtr Ast::unary(Kind k, AstPtr x) {
  auto a = std::make_shared<Ast>();
  a->kind = k;
  a->args = {std::move(x)};
  return a;
}
AstPtr Ast::binary(Kind k, AstPtr x, AstPtr y) {
  auto a = std::make_shared<Ast>();
  a->kind = k;
  a->args = {std::move(x), std::move(y)};
  return a;
}
AstPtr Ast::call(std::string fn, std::vector<AstPtr> args, std::size_t pos) {
  if (!known_functions().count(fn))
    throw ParseError(pos, "unknown function '" + fn + "'");
  if (args.size() != 1)
    throw ParseError(pos, "function '" + fn + "' takes one argument");
  auto a = std::make_shared<Ast>();
  a->kind = Kind::Call;
  a->name = std::move(fn);
  a->args = std::move(args);
  return a;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  AstPtr run() {
    AstPtr e = expression(0);
    if (peek().kind != TokenKind::End)
      throw ParseError(peek().pos, "unexpected token '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() { return toks_[pos_++]; }

  static int binary_prec(const std::string& op) {
    if (op == "+" || op == "-") return 1;
    if (op == "*" || op == "/") return 2;
    if (op == "^") return 4;
    return -1;
  }

  AstPtr expression(int min_prec) {
    AstPtr lhs = prefix();
    for (;;) {
      const Token& t = peek();
      if (t.kind != TokenKind::Op) break;
      int prec = binary_prec(t.text);
      if (prec < min_prec) break;
      advance();
      // ^ is right-associative
      int next_min = (t.text == "^") ? prec : prec + 1;
      AstPtr rhs = expression(next_min);
      Ast::Kind k = t.text == "+"   ? Ast::Kind::Add
                    : t.text == "-" ? Ast::Kind::Sub
                    : t.text == "*" ? Ast::Kind::Mul
                    : t.text == "/" ? Ast::Kind::Div
                                    : Ast::Kind::Pow;
      lhs = Ast::binary(k, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  AstPtr prefix() {
    const Token& t = peek();
    if (t.kind == TokenKind::Op && t.text == "-") {
      advance();
      // unary minus binds between */ and ^, so -x^2 is -(x^2)
      AstPtr inner = expression(4);
      // fold a directly negated literal so printing round-trips
      if (inner->kind == Ast::Kind::Constant)
        return Ast::constant(-inner->number);
      return Ast::unary(Ast::Kind::Neg, std::move(inner));
    }
    if (t.kind == TokenKind::Op && t.text == "+") {
      advance();
      return expression(4);
    }
    return primary();
  }

  AstPtr primary() {
    const Token& t = advance();
    switch (t.kind) {
      case TokenKind::Number:
        return Ast::constant(t.number);
      case TokenKind::Ident: {
        if (peek().kind == TokenKind::LParen) {
          std::size_t call_pos = t.pos;
          advance();  // '('
          std::vector<AstPtr> args;
          if (peek().kind != TokenKind::RParen) {
            args.push_back(expression(0));
            while (peek().kind == TokenKind::Comma) {
              advance();
              args.push_back(expression(0));
            }
          }
          if (peek().kind != TokenKind::RParen)
            throw ParseError(peek().pos, "unbalanced parenthesis");
          advance();
          return Ast::call(t.text, std::move(args), call_pos);
        }
        return Ast::var(t.text);
      }
      case TokenKind::LParen: {
        AstPtr e = expression(0);
        if (peek().kind != TokenKind::RParen)
          throw ParseError(peek().pos, "unbalanced parenthesis");
        advance();
        return e;
      }
      default:
        throw ParseError(t.pos, "unexpected token '" + t.text + "'");
    }
  }

  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
};

}  // namespace

AstPtr parse(const std::vector<Token>& toks) { return Parser(toks).run(); }

AstPtr parse(std::string_view src) { return parse(tokenize(src)); }

double eval_real(const Ast& ast, const std::map<std::string, double>& env) {
  switch (ast.kind) {
    case Ast::Kind::Constant:
      return ast.number;
    case Ast::Kind::Var: {
      auto it = env.find(ast.name);
      if (it == env.end())
        throw Error(ErrorKind::UnboundVariable, "unbound variable '" + ast.name + "'");
      return it->second;
    }
    case Ast::Kind::Neg:
      return -eval_real(*ast.args[0], env);
    case Ast::Kind::Add:
      return eval_real(*ast.args[0], env) + eval_real(*ast.args[1], env);
    case Ast::Kind::Sub:
      return eval_real(*ast.args[0], env) - eval_real(*ast.args[1], env);
    case Ast::Kind::Mul:
      return eval_real(*ast.args[0], env) * eval_real(*ast.args[1], env);
    case Ast::Kind::Div:
      return eval_real(*ast.args[0], env) / eval_real(*ast.args[1], env);
    case Ast::Kind::Pow:
      return std::pow(eval_real(*ast.args[0], env), eval_real(*ast.args[1], env));
    case Ast::Kind::Call: {
      double a = eval_real(*ast.args[0], env);
      if (ast.name == "exp") return std::exp(a);
      if (ast.name == "log") {
        if (!(a > 0.0))
          throw Error(ErrorKind::DomainError, "log of non-positive value");
        return std::log(a);
      }
      if (ast.name == "sin") return std::sin(a);
      if (ast.name == "cos") return std::cos(a);
      if (ast.name == "sqrt") {
        if (!(a >= 0.0))
          throw Error(ErrorKind::DomainError, "sqrt of negative value");
        return std::sqrt(a);
      }
      throw Error(ErrorKind::BadInput, "unknown function");
    }
  }
  throw Error(ErrorKind::BadInput, "bad ast");
}

Jet eval_jet(const Ast& ast, const std::map<std::string, Jet>& env) {
  switch (ast.kind) {
    case Ast::Kind::Constant: {
      if (env.empty())
        throw Error(ErrorKind::BadInput, "empty jet environment");
      const Jet& probe = env.begin()->second;
      return Jet::constant(ast.number, probe.nvars(), probe.order());
    }
    case Ast::Kind::Var: {
      auto it = env.find(ast.name);
      if (it == env.end())
        throw Error(ErrorKind::UnboundVariable, "unbound variable '" + ast.name + "'");
      return it->second;
    }
    case Ast::Kind::Neg:
      return -eval_jet(*ast.args[0], env);
    case Ast::Kind::Add:
      return eval_jet(*ast.args[0], env) + eval_jet(*ast.args[1], env);
    case Ast::Kind::Sub:
      return eval_jet(*ast.args[0], env) - eval_jet(*ast.args[1], env);
    case Ast::Kind::Mul:
      return eval_jet(*ast.args[0], env) * eval_jet(*ast.args[1], env);
    case Ast::Kind::Div:
      return eval_jet(*ast.args[0], env) / eval_jet(*ast.args[1], env);
    case Ast::Kind::Pow: {
      Jet base = eval_jet(*ast.args[0], env);
      const Ast& e = *ast.args[1];
      if (e.kind == Ast::Kind::Constant)
        return pow(base, e.number);
      if (e.kind == Ast::Kind::Neg && e.args[0]->kind == Ast::Kind::Constant)
        return pow(base, -e.args[0]->number);
      Jet ej = eval_jet(e, env);
      return exp(ej * log(base));
    }
    case Ast::Kind::Call: {
      Jet a = eval_jet(*ast.args[0], env);
      if (ast.name == "exp") return exp(a);
      if (ast.name == "log") return log(a);
      if (ast.name == "sin") return sin(a);
      if (ast.name == "cos") return cos(a);
      if (ast.name == "sqrt") return sqrt(a);
      throw Error(ErrorKind::BadInput, "unknown function");
    }
  }
  throw Error(ErrorKind::BadInput, "bad ast");
}

namespace {

void print_ast(const Ast& a, std::string& out) {
  switch (a.kind) {
    case Ast::Kind::Constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", a.number);
      out += buf;
      break;
    }
    case Ast::Kind::Var:
      out += a.name;
      break;
    case Ast::Kind::Neg:
      out += "(-";
      print_ast(*a.args[0], out);
      out += ")";
      break;
    case Ast::Kind::Add:
    case Ast::Kind::Sub:
    case Ast::Kind::Mul:
    case Ast::Kind::Div:
    case Ast::Kind::Pow: {
      const char* op = a.kind == Ast::Kind::Add   ? "+"
                       : a.kind == Ast::Kind::Sub ? "-"
                       : a.kind == Ast::Kind::Mul ? "*"
                       : a.kind == Ast::Kind::Div ? "/"
                                                  : "^";
      out += "(";
      print_ast(*a.args[0], out);
      out += op;
      print_ast(*a.args[1], out);
      out += ")";
      break;
    }
    case Ast::Kind::Call:
      out += a.name;
      out += "(";
      print_ast(*a.args[0], out);
      out += ")";
      break;
  }
}

}  // namespace

std::string to_string(const Ast& ast) {
  std::string s;
  print_ast(ast, s);
  return s;
}

void collect_vars(const Ast& ast, std::set<std::string>& out) {
  if (ast.kind == Ast::Kind::Var) out.insert(ast.name);
  for (const auto& a : ast.args) collect_vars(*a, out);
}

bool ast_equal(const Ast& a, const Ast& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Ast::Kind::Constant) return a.number == b.number;
  if (a.name != b.name) return false;
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!ast_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

bool uses_only(const Ast& ast, const std::set<std::string>& allowed) {
  std::set<std::string> vars;
  collect_vars(ast, vars);
  for (const auto& v : vars)
    if (!allowed.count(v)) return false;
  return true;
}

}  // namespace causalgeo
