#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "tfem/expression.hpp"

using namespace tfem;

namespace {

// Independent reference AST + interpreter used to cross-check the production
// parser/evaluator on randomly generated expressions.
struct RefNode {
    enum Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Abs, Sqrt, PowFn };
    Kind kind;
    double value = 0;
    int var = 0;
    std::unique_ptr<RefNode> a, b;
};

using RefPtr = std::unique_ptr<RefNode>;

RefPtr ref_num(double v) {
    auto n = std::make_unique<RefNode>();
    n->kind = RefNode::Num;
    n->value = v;
    return n;
}

double ref_eval(const RefNode& n, const EvalContext& c) {
    switch (n.kind) {
        case RefNode::Num: return n.value;
        case RefNode::Var:
            return n.var == 0 ? c.x : n.var == 1 ? c.y : n.var == 2 ? c.r : c.theta;
        case RefNode::Neg: return -ref_eval(*n.a, c);
        case RefNode::Add: return ref_eval(*n.a, c) + ref_eval(*n.b, c);
        case RefNode::Sub: return ref_eval(*n.a, c) - ref_eval(*n.b, c);
        case RefNode::Mul: return ref_eval(*n.a, c) * ref_eval(*n.b, c);
        case RefNode::Div: return ref_eval(*n.a, c) / ref_eval(*n.b, c);
        case RefNode::Pow:
        case RefNode::PowFn: return std::pow(ref_eval(*n.a, c), ref_eval(*n.b, c));
        case RefNode::Sin: return std::sin(ref_eval(*n.a, c));
        case RefNode::Cos: return std::cos(ref_eval(*n.a, c));
        case RefNode::Exp: return std::exp(ref_eval(*n.a, c));
        case RefNode::Log: return std::log(ref_eval(*n.a, c));
        case RefNode::Abs: return std::abs(ref_eval(*n.a, c));
        case RefNode::Sqrt: return std::sqrt(ref_eval(*n.a, c));
    }
    return 0;
}

void ref_print(const RefNode& n, std::string& out) {
    char buf[40];
    switch (n.kind) {
        case RefNode::Num:
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        case RefNode::Var: {
            static const char* v[] = {"x", "y", "r", "theta"};
            out += v[n.var];
            return;
        }
        case RefNode::Neg:
            out += "(-";
            ref_print(*n.a, out);
            out += ")";
            return;
        case RefNode::Add:
        case RefNode::Sub:
        case RefNode::Mul:
        case RefNode::Div:
        case RefNode::Pow: {
            const char* sym = n.kind == RefNode::Add   ? "+"
                              : n.kind == RefNode::Sub ? "-"
                              : n.kind == RefNode::Mul ? "*"
                              : n.kind == RefNode::Div ? "/"
                                                       : "^";
            out += "(";
            ref_print(*n.a, out);
            out += sym;
            ref_print(*n.b, out);
            out += ")";
            return;
        }
        default: {
            static const char* names[] = {"sin", "cos", "exp", "log", "abs", "sqrt", "pow"};
            out += names[n.kind - RefNode::Sin];
            out += "(";
            ref_print(*n.a, out);
            if (n.kind == RefNode::PowFn) {
                out += ", ";
                ref_print(*n.b, out);
            }
            out += ")";
            return;
        }
    }
}

RefPtr random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_real_distribution<double> u01(0, 1);
    std::uniform_real_distribution<double> uval(0.1, 4.0);
    auto n = std::make_unique<RefNode>();
    if (depth == 0 || u01(rng) < 0.3) {
        if (u01(rng) < 0.5) {
            n->kind = RefNode::Num;
            n->value = uval(rng);
        } else {
            n->kind = RefNode::Var;
            n->var = static_cast<int>(u01(rng) * 4) % 4;
        }
        return n;
    }
    double k = u01(rng);
    if (k < 0.18)
        n->kind = RefNode::Add;
    else if (k < 0.36)
        n->kind = RefNode::Sub;
    else if (k < 0.54)
        n->kind = RefNode::Mul;
    else if (k < 0.62)
        n->kind = RefNode::Div;
    else if (k < 0.68)
        n->kind = RefNode::Neg;
    else if (k < 0.76)
        n->kind = RefNode::Sin;
    else if (k < 0.84)
        n->kind = RefNode::Cos;
    else if (k < 0.90)
        n->kind = RefNode::Abs;
    else if (k < 0.95)
        n->kind = RefNode::Sqrt;
    else
        n->kind = RefNode::PowFn;
    n->a = random_tree(rng, depth - 1);
    if (n->kind == RefNode::Add || n->kind == RefNode::Sub || n->kind == RefNode::Mul ||
        n->kind == RefNode::Div)
        n->b = random_tree(rng, depth - 1);
    if (n->kind == RefNode::PowFn) n->b = ref_num(std::floor(uval(rng)));
    return n;
}

}  // namespace

TEST_CASE("basic evaluation and precedence") {
    EvalContext c;
    c.x = 2;
    c.y = 3;
    CHECK(Expression::parse("2+3*4^2").eval(c) == doctest::Approx(50.0));
    CHECK(Expression::parse("-x^2").eval(c) == doctest::Approx(-4.0));  // -(x^2)
    CHECK(Expression::parse("2^3^2").eval(c) == doctest::Approx(512.0));  // right assoc
    CHECK(Expression::parse("(x+y)/2 - 1").eval(c) == doctest::Approx(1.5));
    CHECK(Expression::parse("pow(x, 3)").eval(c) == doctest::Approx(8.0));
    CHECK(Expression::parse("x^-1").eval(c) == doctest::Approx(0.5));
    CHECK(Expression::parse("sin(0) + cos(0)").eval(c) == doctest::Approx(1.0));
}

TEST_CASE("guarded evaluation raises EvalError instead of NaN") {
    EvalContext c;
    c.x = 1;
    Expression div = Expression::parse("1/(x-x)");  // accepted at parse time
    CHECK_THROWS_AS(div.eval(c), EvalError);
    CHECK_THROWS_AS(Expression::parse("log(0-1)").eval(c), EvalError);
    CHECK_THROWS_AS(Expression::parse("sqrt(0-4)").eval(c), EvalError);
    CHECK_THROWS_AS(Expression::parse("pow(0-1, 0.5)").eval(c), EvalError);
}

TEST_CASE("parse errors carry position") {
    try {
        Expression::parse("1 + foo(3)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.col >= 5);
    }
    CHECK_THROWS_AS(Expression::parse("1 + "), ParseError);
    CHECK_THROWS_AS(Expression::parse("(1 + 2"), ParseError);
    CHECK_THROWS_AS(Expression::parse("1 2"), ParseError);
    CHECK_THROWS_AS(Expression::parse("pow(1)"), ParseError);
}

TEST_CASE("parse(print(e)) is structurally stable") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    while (checked < 1000) {
        RefPtr tree = random_tree(rng, 4);
        std::string text;
        ref_print(*tree, text);
        Expression e1 = Expression::parse(text);
        Expression e2 = Expression::parse(e1.print());
        CHECK(e1.structurally_equal(e2));
        ++checked;
    }
}

TEST_CASE("evaluator matches an independent reference interpreter") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> up(-2.0, 2.0);
    int valid = 0;
    while (valid < 1000) {
        RefPtr tree = random_tree(rng, 5);
        std::string text;
        ref_print(*tree, text);
        Expression e = Expression::parse(text);
        EvalContext c;
        c.x = up(rng);
        c.y = up(rng);
        c.r = std::abs(up(rng));
        c.theta = up(rng);
        double ref;
        ref = ref_eval(*tree, c);
        if (!std::isfinite(ref) || std::abs(ref) > 1e12) continue;  // guarded by Expression
        double got;
        try {
            got = e.eval(c);
        } catch (const EvalError&) {
            continue;  // reference hit a guarded domain edge with finite result? skip
        }
        ++valid;
        double tol = 1e-14 * std::max(1.0, std::abs(ref));
        CHECK(std::abs(got - ref) <= tol);
    }
}

TEST_CASE("structural equality distinguishes different trees") {
    CHECK(Expression::parse("x + y").structurally_equal(Expression::parse("x+y")));
    CHECK_FALSE(Expression::parse("x + y").structurally_equal(Expression::parse("y + x")));
    CHECK_FALSE(Expression::parse("2").structurally_equal(Expression::parse("2.5")));
    CHECK(Expression::constant(-8.0 / 3.0)
              .structurally_equal(Expression::parse(Expression::constant(-8.0 / 3.0).print())));
}
