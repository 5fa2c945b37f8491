#pragma once

// A small closed-form expression language with symbolic differentiation.
//
// Grammar (lowest to highest precedence):
//
//   expr    := term   (('+' | '-') term)*          left associative
//   term    := unary  (('*' | '/') unary)*         left associative
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?                right associative, binds
//                                                  tighter than unary minus:
//                                                  -x^2 == -(x^2)
//   primary := number | name | func '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: exp, log, sqrt, sin, cos (one argument); min, max (two).
// Constants: pi.  Variable names are supplied by the caller (VarTable).

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace heisvisc::expr {

enum class Op {
    Const,
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Min,
    Max,
    // PickMin(f, g, a, b) = f < g ? a : b, undefined where f == g.  These
    // carry derivatives of min/max and refuse to evaluate on a kink.
    PickMin,
    PickMax,
};

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    double value = 0.0;  // Const
    int var = -1;        // Var
    std::vector<Expr> args;
};

/// Name -> variable index mapping used by the parser and printer.
class VarTable {
public:
    void add(std::string name, int index) { names_.emplace_back(std::move(name), index); }
    /// -1 if unknown.
    int lookup(std::string_view name) const;
    /// First name bound to index, or "v<index>".
    std::string name_of(int index) const;

private:
    std::vector<std::pair<std::string, int>> names_;
};

/// Branch decisions taken by min/max during one evaluation, in evaluation order.
struct EvalTrace {
    std::uint64_t signature = 0x84222325CBF29CE4ULL;
    int branches = 0;
    void record(bool first_smaller);
};

Expr constant(double c);
Expr variable(int index);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, Expr b);
Expr exp(Expr a);
Expr log(Expr a);
Expr sqrt(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
Expr min(Expr a, Expr b);
Expr max(Expr a, Expr b);

bool is_const(const Expr& e, double* value = nullptr);
bool depends_on(const Expr& e, int var);
bool has_kinks(const Expr& e);
/// Largest variable index referenced, or -1.
int max_variable(const Expr& e);

/// Parses src; throws ParseError (with position) on malformed text or unknown names.
Expr parse(std::string_view src, const VarTable& vars);

/// Evaluates at vars.  Throws EvalError on non-finite results, logarithms or
/// fractional powers of non-positive numbers, and derivatives taken on a
/// min/max kink.
double evaluate(const Expr& e, std::span<const double> vars, EvalTrace* trace = nullptr);

/// Symbolic partial derivative with light algebraic simplification.
Expr differentiate(const Expr& e, int var);

/// Fully parenthesized text that parses back to an equivalent tree.
std::string to_string(const Expr& e, const VarTable& vars);

}  // namespace heisvisc::expr
