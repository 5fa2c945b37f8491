#include "heisvisc/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "heisvisc/error.hpp"

namespace heisvisc::expr {

// ---------------------------------------------------------------- VarTable

int VarTable::lookup(std::string_view name) const {
    for (const auto& [n, i] : names_)
        if (n == name) return i;
    return -1;
}

std::string VarTable::name_of(int index) const {
    for (const auto& [n, i] : names_)
        if (i == index) return n;
    return "v" + std::to_string(index);
}

void EvalTrace::record(bool first_smaller) {
    signature = (signature ^ (first_smaller ? 0x9Bu : 0x37u)) * 0x100000001B3ULL;
    ++branches;
}

// ---------------------------------------------------------------- builders

namespace {

Expr make(Op op, std::vector<Expr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
}

}  // namespace

bool is_const(const Expr& e, double* value) {
    if (e->op != Op::Const) return false;
    if (value) *value = e->value;
    return true;
}

Expr constant(double c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = c;
    return n;
}

Expr variable(int index) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = index;
    return n;
}

Expr neg(Expr a) {
    double c;
    if (is_const(a, &c)) return constant(-c);
    if (a->op == Op::Neg) return a->args[0];
    return make(Op::Neg, {std::move(a)});
}

Expr add(Expr a, Expr b) {
    double ca = 0.0, cb = 0.0;
    const bool ka = is_const(a, &ca), kb = is_const(b, &cb);
    if (ka && kb) return constant(ca + cb);
    if (ka && ca == 0.0) return b;
    if (kb && cb == 0.0) return a;
    if (b->op == Op::Neg) return sub(std::move(a), b->args[0]);
    return make(Op::Add, {std::move(a), std::move(b)});
}

Expr sub(Expr a, Expr b) {
    double ca = 0.0, cb = 0.0;
    const bool ka = is_const(a, &ca), kb = is_const(b, &cb);
    if (ka && kb) return constant(ca - cb);
    if (kb && cb == 0.0) return a;
    if (ka && ca == 0.0) return neg(std::move(b));
    if (b->op == Op::Neg) return add(std::move(a), b->args[0]);
    return make(Op::Sub, {std::move(a), std::move(b)});
}

Expr mul(Expr a, Expr b) {
    double ca = 0.0, cb = 0.0;
    const bool ka = is_const(a, &ca), kb = is_const(b, &cb);
    if (ka && kb) return constant(ca * cb);
    if ((ka && ca == 0.0) || (kb && cb == 0.0)) return constant(0.0);
    if (ka && ca == 1.0) return b;
    if (kb && cb == 1.0) return a;
    if (ka && ca == -1.0) return neg(std::move(b));
    if (kb && cb == -1.0) return neg(std::move(a));
    if (kb) return make(Op::Mul, {std::move(b), std::move(a)});  // constants first
    return make(Op::Mul, {std::move(a), std::move(b)});
}

Expr div(Expr a, Expr b) {
    double ca = 0.0, cb = 0.0;
    const bool ka = is_const(a, &ca), kb = is_const(b, &cb);
    if (ka && kb && cb != 0.0) return constant(ca / cb);
    if (ka && ca == 0.0) return constant(0.0);
    if (kb && cb == 1.0) return a;
    return make(Op::Div, {std::move(a), std::move(b)});
}

Expr pow(Expr a, Expr b) {
    double ca = 0.0, cb = 0.0;
    const bool ka = is_const(a, &ca), kb = is_const(b, &cb);
    if (kb && cb == 0.0) return constant(1.0);
    if (kb && cb == 1.0) return a;
    if (ka && kb) {
        const double v = std::pow(ca, cb);
        if (std::isfinite(v)) return constant(v);
    }
    return make(Op::Pow, {std::move(a), std::move(b)});
}

#define HEISVISC_UNARY(fn, OP, folder)               \
    Expr fn(Expr a) {                                \
        double c;                                    \
        if (is_const(a, &c)) {                       \
            const double v = folder(c);              \
            if (std::isfinite(v)) return constant(v); \
        }                                            \
        return make(Op::OP, {std::move(a)});         \
    }

HEISVISC_UNARY(exp, Exp, std::exp)
HEISVISC_UNARY(log, Log, std::log)
HEISVISC_UNARY(sqrt, Sqrt, std::sqrt)
HEISVISC_UNARY(sin, Sin, std::sin)
HEISVISC_UNARY(cos, Cos, std::cos)
#undef HEISVISC_UNARY

Expr min(Expr a, Expr b) { return make(Op::Min, {std::move(a), std::move(b)}); }
Expr max(Expr a, Expr b) { return make(Op::Max, {std::move(a), std::move(b)}); }

namespace {

Expr pick(Op op, Expr f, Expr g, Expr a, Expr b) {
    double ca = 0.0, cb = 0.0;
    if (is_const(a, &ca) && is_const(b, &cb) && ca == cb) return a;
    return make(op, {std::move(f), std::move(g), std::move(a), std::move(b)});
}

}  // namespace

bool depends_on(const Expr& e, int var) {
    if (e->op == Op::Var) return e->var == var;
    for (const auto& a : e->args)
        if (depends_on(a, var)) return true;
    return false;
}

bool has_kinks(const Expr& e) {
    if (e->op == Op::Min || e->op == Op::Max || e->op == Op::PickMin || e->op == Op::PickMax)
        return true;
    for (const auto& a : e->args)
        if (has_kinks(a)) return true;
    return false;
}

int max_variable(const Expr& e) {
    int m = e->op == Op::Var ? e->var : -1;
    for (const auto& a : e->args) m = std::max(m, max_variable(a));
    return m;
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
public:
    Parser(std::string_view src, const VarTable& vars) : src_(src), vars_(vars) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = add(lhs, parse_term());
            else if (accept('-'))
                lhs = sub(lhs, parse_term());
            else
                return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = mul(lhs, parse_unary());
            else if (accept('/'))
                lhs = div(lhs, parse_unary());
            else
                return lhs;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return neg(parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) return pow(base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (accept('(')) {
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        fail(std::string("unexpected '") + c + "'");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (ec != std::errc()) fail("malformed number");
        pos_ = static_cast<std::size_t>(ptr - src_.data());
        if (pos_ == start) fail("malformed number");
        return constant(v);
    }

    Expr parse_name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            ++pos_;
            std::vector<Expr> args{parse_expr()};
            while (accept(',')) args.push_back(parse_expr());
            expect(')');
            return call(name, std::move(args), start);
        }
        if (name == "pi") return constant(std::numbers::pi);
        const int idx = vars_.lookup(name);
        if (idx < 0) throw ParseError("unknown identifier '" + name + "'", start);
        return variable(idx);
    }

    Expr call(const std::string& name, std::vector<Expr> args, std::size_t at) {
        auto arity = [&](std::size_t k) {
            if (args.size() != k)
                throw ParseError(name + " takes " + std::to_string(k) + " argument(s)", at);
        };
        if (name == "exp") return arity(1), exp(args[0]);
        if (name == "log") return arity(1), log(args[0]);
        if (name == "sqrt") return arity(1), sqrt(args[0]);
        if (name == "sin") return arity(1), sin(args[0]);
        if (name == "cos") return arity(1), cos(args[0]);
        if (name == "min") return arity(2), min(args[0], args[1]);
        if (name == "max") return arity(2), max(args[0], args[1]);
        throw ParseError("unknown function '" + name + "'", at);
    }

    std::string_view src_;
    const VarTable& vars_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view src, const VarTable& vars) { return Parser(src, vars).parse_all(); }

// ---------------------------------------------------------------- evaluation

namespace {

bool on_kink(double f, double g) { return std::abs(f - g) <= 1e-12 * (1.0 + std::abs(f) + std::abs(g)); }

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
    return v;
}

double eval_pow(double b, double e) {
    if (b < 0.0 && e != std::nearbyint(e))
        throw EvalError("fractional power of a negative number");
    return checked(std::pow(b, e), "power");
}

}  // namespace

double evaluate(const Expr& e, std::span<const double> vars, EvalTrace* trace) {
    const auto& a = e->args;
    switch (e->op) {
        case Op::Const:
            return e->value;
        case Op::Var:
            if (e->var < 0 || static_cast<std::size_t>(e->var) >= vars.size())
                throw EvalError("variable index out of range");
            return vars[e->var];
        case Op::Neg:
            return -evaluate(a[0], vars, trace);
        case Op::Add:
            return evaluate(a[0], vars, trace) + evaluate(a[1], vars, trace);
        case Op::Sub:
            return evaluate(a[0], vars, trace) - evaluate(a[1], vars, trace);
        case Op::Mul:
            return evaluate(a[0], vars, trace) * evaluate(a[1], vars, trace);
        case Op::Div: {
            const double num = evaluate(a[0], vars, trace);
            const double den = evaluate(a[1], vars, trace);
            if (den == 0.0) throw EvalError("division by zero");
            return checked(num / den, "division");
        }
        case Op::Pow:
            return eval_pow(evaluate(a[0], vars, trace), evaluate(a[1], vars, trace));
        case Op::Exp:
            return checked(std::exp(evaluate(a[0], vars, trace)), "exp");
        case Op::Log: {
            const double v = evaluate(a[0], vars, trace);
            if (!(v > 0.0)) throw EvalError("log of a non-positive number");
            return std::log(v);
        }
        case Op::Sqrt: {
            const double v = evaluate(a[0], vars, trace);
            if (v < 0.0) throw EvalError("sqrt of a negative number");
            return std::sqrt(v);
        }
        case Op::Sin:
            return std::sin(evaluate(a[0], vars, trace));
        case Op::Cos:
            return std::cos(evaluate(a[0], vars, trace));
        case Op::Min:
        case Op::Max: {
            const double f = evaluate(a[0], vars, trace);
            const double g = evaluate(a[1], vars, trace);
            if (trace) trace->record(f < g);
            return e->op == Op::Min ? std::min(f, g) : std::max(f, g);
        }
        case Op::PickMin:
        case Op::PickMax: {
            const double f = evaluate(a[0], vars, trace);
            const double g = evaluate(a[1], vars, trace);
            if (on_kink(f, g)) throw EvalError("derivative requested on a min/max kink");
            const bool first = e->op == Op::PickMin ? f < g : f > g;
            return evaluate(first ? a[2] : a[3], vars, trace);
        }
    }
    throw EvalError("corrupt expression node");
}

// ---------------------------------------------------------------- differentiation

Expr differentiate(const Expr& e, int var) {
    if (!depends_on(e, var)) return constant(0.0);
    const auto& a = e->args;
    auto d = [var](const Expr& x) { return differentiate(x, var); };
    switch (e->op) {
        case Op::Const:
            return constant(0.0);
        case Op::Var:
            return constant(e->var == var ? 1.0 : 0.0);
        case Op::Neg:
            return neg(d(a[0]));
        case Op::Add:
            return add(d(a[0]), d(a[1]));
        case Op::Sub:
            return sub(d(a[0]), d(a[1]));
        case Op::Mul:
            return add(mul(d(a[0]), a[1]), mul(a[0], d(a[1])));
        case Op::Div:
            return div(sub(mul(d(a[0]), a[1]), mul(a[0], d(a[1]))), mul(a[1], a[1]));
        case Op::Pow: {
            double c;
            if (is_const(a[1], &c)) {
                if (c == 2.0) return mul(mul(constant(2.0), a[0]), d(a[0]));
                return mul(mul(constant(c), pow(a[0], constant(c - 1.0))), d(a[0]));
            }
            // d(f^g) = f^g (g' log f + g f' / f)
            return mul(e, add(mul(d(a[1]), log(a[0])), div(mul(a[1], d(a[0])), a[0])));
        }
        case Op::Exp:
            return mul(e, d(a[0]));
        case Op::Log:
            return div(d(a[0]), a[0]);
        case Op::Sqrt:
            return div(d(a[0]), mul(constant(2.0), e));
        case Op::Sin:
            return mul(cos(a[0]), d(a[0]));
        case Op::Cos:
            return neg(mul(sin(a[0]), d(a[0])));
        case Op::Min:
            return pick(Op::PickMin, a[0], a[1], d(a[0]), d(a[1]));
        case Op::Max:
            return pick(Op::PickMax, a[0], a[1], d(a[0]), d(a[1]));
        case Op::PickMin:
        case Op::PickMax:
            return pick(e->op, a[0], a[1], d(a[2]), d(a[3]));
    }
    throw EvalError("corrupt expression node");
}

// ---------------------------------------------------------------- printing

std::string to_string(const Expr& e, const VarTable& vars) {
    const auto& a = e->args;
    auto s = [&](const Expr& x) { return to_string(x, vars); };
    auto bin = [&](const char* op) { return "(" + s(a[0]) + " " + op + " " + s(a[1]) + ")"; };
    auto fn = [&](const char* name) {
        std::string out = std::string(name) + "(";
        for (std::size_t i = 0; i < a.size(); ++i) out += (i ? ", " : "") + s(a[i]);
        return out + ")";
    };
    switch (e->op) {
        case Op::Const: {
            std::ostringstream os;
            os.precision(17);
            os << e->value;
            return e->value < 0 ? "(" + os.str() + ")" : os.str();
        }
        case Op::Var:
            return vars.name_of(e->var);
        case Op::Neg:
            return "(-" + s(a[0]) + ")";
        case Op::Add:
            return bin("+");
        case Op::Sub:
            return bin("-");
        case Op::Mul:
            return bin("*");
        case Op::Div:
            return bin("/");
        case Op::Pow:
            return bin("^");
        case Op::Exp:
            return fn("exp");
        case Op::Log:
            return fn("log");
        case Op::Sqrt:
            return fn("sqrt");
        case Op::Sin:
            return fn("sin");
        case Op::Cos:
            return fn("cos");
        case Op::Min:
            return fn("min");
        case Op::Max:
            return fn("max");
        case Op::PickMin:
            return fn("pickmin");
        case Op::PickMax:
            return fn("pickmax");
    }
    return "?";
}

}  // namespace heisvisc::expr
