#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "causalgeo/jet.hpp"

namespace causalgeo {

enum class TokenKind { Number, Ident, Op, LParen, RParen, Comma, End };

struct Token {
  TokenKind kind;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view src);

struct Ast;
using AstPtr = std::shared_ptr<const Ast>;

struct Ast {
  enum class Kind { Constant, Var, Neg, Add, Sub, Mul, Div, Pow, Call } kind;
  double number = 0.0;     // Constant
  std::string name;        // Var or Call
  std::vector<AstPtr> args;

  static AstPtr constant(double v);
  static AstPtr var(std::string name);
  static AstPtr unary(Kind k, AstPtr a);
  static AstPtr binary(Kind k, AstPtr a, AstPtr b);
  static AstPtr call(std::string fn, std::vector<AstPtr> args, std::size_t pos);
};

// Precedence climbing; ^ binds tighter than unary minus and is
// right-associative, * / + - are left-associative.
AstPtr parse(std::string_view src);
AstPtr parse(const std::vector<Token>& toks);

double eval_real(const Ast& ast, const std::map<std::string, double>& env);
Jet eval_jet(const Ast& ast, const std::map<std::string, Jet>& env);

std::string to_string(const Ast& ast);
void collect_vars(const Ast& ast, std::set<std::string>& out);
bool ast_equal(const Ast& a, const Ast& b);
// True when no variable other than the given set appears.
bool uses_only(const Ast& ast, const std::set<std::string>& allowed);

}  // namespace causalgeo
