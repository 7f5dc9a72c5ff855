#include "tfem/expression.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace tfem {

namespace {

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Fn { Sin, Cos, Exp, Log, Abs, Sqrt, PowFn };

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Exp: return "exp";
        case Fn::Log: return "log";
        case Fn::Abs: return "abs";
        case Fn::Sqrt: return "sqrt";
        case Fn::PowFn: return "pow";
    }
    return "?";
}

}  // namespace

struct Expression::Node {
    Op op = Op::Num;
    double value = 0.0;
    int var = 0;  // 0=x 1=y 2=r 3=theta
    Fn fn = Fn::Sin;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_num(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Num;
    n->value = v;
    return n;
}

struct Token {
    enum Kind { Num, Ident, Sym, End } kind;
    double value = 0;
    std::string text;
    int line, col;
};

class Lexer {
  public:
    explicit Lexer(const std::string& s) : s_(s) { advance(); }
    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n')) {
            if (s_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= s_.size()) {
            tok_.kind = Token::End;
            tok_.text.clear();
            return;
        }
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(start, &end);
            if (end == start) throw ParseError("invalid number", line_, col_);
            std::size_t len = end - start;
            tok_.kind = Token::Num;
            tok_.value = v;
            tok_.text = s_.substr(pos_, len);
            pos_ += len;
            col_ += static_cast<int>(len);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
                ++col_;
            }
            tok_.kind = Token::Ident;
            tok_.text = s_.substr(start, pos_ - start);
            return;
        }
        tok_.kind = Token::Sym;
        tok_.text = std::string(1, c);
        ++pos_;
        ++col_;
    }

    std::string s_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
  public:
    explicit Parser(const std::string& s) : lex_(s) {}

    NodePtr parse_full() {
        NodePtr e = parse_expr();
        const Token& t = lex_.peek();
        if (t.kind != Token::End)
            throw ParseError("unexpected trailing input '" + t.text + "'", t.line, t.col);
        return e;
    }

  private:
    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Token::Sym && (t.text == "+" || t.text == "-")) {
                bool add = t.text == "+";
                lex_.take();
                NodePtr rhs = parse_term();
                auto n = std::make_shared<Expression::Node>();
                n->op = add ? Op::Add : Op::Sub;
                n->a = lhs;
                n->b = rhs;
                lhs = n;
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Token::Sym && (t.text == "*" || t.text == "/")) {
                bool mul = t.text == "*";
                lex_.take();
                NodePtr rhs = parse_unary();
                auto n = std::make_shared<Expression::Node>();
                n->op = mul ? Op::Mul : Op::Div;
                n->a = lhs;
                n->b = rhs;
                lhs = n;
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Sym && t.text == "-") {
            lex_.take();
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::Neg;
            n->a = parse_unary();
            return n;
        }
        if (t.kind == Token::Sym && t.text == "+") {
            lex_.take();
            return parse_unary();
        }
        return parse_power();
    }

    // Right-associative '^' binding tighter than unary minus on the left.
    NodePtr parse_power() {
        NodePtr base = parse_atom();
        const Token& t = lex_.peek();
        if (t.kind == Token::Sym && t.text == "^") {
            lex_.take();
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::Pow;
            n->a = base;
            n->b = parse_unary();
            return n;
        }
        return base;
    }

    NodePtr parse_atom() {
        Token t = lex_.take();
        if (t.kind == Token::Num) return make_num(t.value);
        if (t.kind == Token::Ident) {
            static const struct {
                const char* name;
                Fn fn;
                int arity;
            } fns[] = {{"sin", Fn::Sin, 1},  {"cos", Fn::Cos, 1}, {"exp", Fn::Exp, 1},
                       {"log", Fn::Log, 1},  {"abs", Fn::Abs, 1}, {"sqrt", Fn::Sqrt, 1},
                       {"pow", Fn::PowFn, 2}};
            for (const auto& f : fns)
                if (t.text == f.name) {
                    expect("(");
                    auto n = std::make_shared<Expression::Node>();
                    n->op = Op::Call;
                    n->fn = f.fn;
                    n->a = parse_expr();
                    if (f.arity == 2) {
                        expect(",");
                        n->b = parse_expr();
                    }
                    expect(")");
                    return n;
                }
            static const char* vars[] = {"x", "y", "r", "theta"};
            for (int v = 0; v < 4; ++v)
                if (t.text == vars[v]) {
                    auto n = std::make_shared<Expression::Node>();
                    n->op = Op::Var;
                    n->var = v;
                    return n;
                }
            if (t.text == "pi") return make_num(3.14159265358979323846);
            throw ParseError("unknown identifier '" + t.text + "'", t.line, t.col);
        }
        if (t.kind == Token::Sym && t.text == "(") {
            NodePtr e = parse_expr();
            expect(")");
            return e;
        }
        throw ParseError("unexpected token '" + t.text + "'", t.line, t.col);
    }

    void expect(const std::string& sym) {
        Token t = lex_.take();
        if (t.kind != Token::Sym || t.text != sym)
            throw ParseError("expected '" + sym + "'", t.line, t.col);
    }

    Lexer lex_;
};

double eval_node(const Expression::Node& n, const EvalContext& ctx) {
    switch (n.op) {
        case Op::Num:
            return n.value;
        case Op::Var:
            switch (n.var) {
                case 0: return ctx.x;
                case 1: return ctx.y;
                case 2: return ctx.r;
                default: return ctx.theta;
            }
        case Op::Neg:
            return -eval_node(*n.a, ctx);
        case Op::Add:
            return eval_node(*n.a, ctx) + eval_node(*n.b, ctx);
        case Op::Sub:
            return eval_node(*n.a, ctx) - eval_node(*n.b, ctx);
        case Op::Mul:
            return eval_node(*n.a, ctx) * eval_node(*n.b, ctx);
        case Op::Div: {
            double d = eval_node(*n.b, ctx);
            if (d == 0.0) throw EvalError("division by zero");
            return eval_node(*n.a, ctx) / d;
        }
        case Op::Pow: {
            double base = eval_node(*n.a, ctx), ex = eval_node(*n.b, ctx);
            double v = std::pow(base, ex);
            if (std::isnan(v) || std::isinf(v)) throw EvalError("invalid power");
            return v;
        }
        case Op::Call: {
            double a = eval_node(*n.a, ctx);
            switch (n.fn) {
                case Fn::Sin: return std::sin(a);
                case Fn::Cos: return std::cos(a);
                case Fn::Exp: {
                    double v = std::exp(a);
                    if (std::isinf(v)) throw EvalError("exp overflow");
                    return v;
                }
                case Fn::Log:
                    if (a <= 0.0) throw EvalError("log of nonpositive value");
                    return std::log(a);
                case Fn::Abs: return std::abs(a);
                case Fn::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of negative value");
                    return std::sqrt(a);
                case Fn::PowFn: {
                    double b = eval_node(*n.b, ctx);
                    double v = std::pow(a, b);
                    if (std::isnan(v) || std::isinf(v)) throw EvalError("invalid power");
                    return v;
                }
            }
            throw EvalError("unknown function");
        }
    }
    throw EvalError("corrupt expression");
}

int precedence(Op op) {
    switch (op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        default: return 5;
    }
}

void print_node(const Expression::Node& n, std::string& out, int parent_prec) {
    int prec = precedence(n.op);
    bool paren = prec < parent_prec;
    if (paren) out += "(";
    switch (n.op) {
        case Op::Num: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            break;
        }
        case Op::Var: {
            static const char* vars[] = {"x", "y", "r", "theta"};
            out += vars[n.var];
            break;
        }
        case Op::Neg:
            out += "-";
            print_node(*n.a, out, precedence(Op::Neg) + 1);
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const char* sym = n.op == Op::Add   ? " + "
                              : n.op == Op::Sub ? " - "
                              : n.op == Op::Mul ? " * "
                                                : " / ";
            print_node(*n.a, out, prec);
            out += sym;
            print_node(*n.b, out, prec + 1);  // left-associative
            break;
        }
        case Op::Pow:
            print_node(*n.a, out, prec + 1);
            out += "^";
            print_node(*n.b, out, prec);
            break;
        case Op::Call:
            out += fn_name(n.fn);
            out += "(";
            print_node(*n.a, out, 0);
            if (n.b) {
                out += ", ";
                print_node(*n.b, out, 0);
            }
            out += ")";
            break;
    }
    if (paren) out += ")";
}

bool equal_nodes(const Expression::Node& a, const Expression::Node& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::Num:
            return a.value == b.value;
        case Op::Var:
            return a.var == b.var;
        case Op::Call:
            if (a.fn != b.fn) return false;
            break;
        default:
            break;
    }
    if (!!a.a != !!b.a || !!a.b != !!b.b) return false;
    if (a.a && !equal_nodes(*a.a, *b.a)) return false;
    if (a.b && !equal_nodes(*a.b, *b.b)) return false;
    return true;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Parser p(text);
    Expression e;
    e.root_ = p.parse_full();
    return e;
}

Expression Expression::constant(double v) {
    Expression e;
    if (v < 0) {
        // Keep parse(print(e)) structural: negative literals print as unary
        // minus, so store them that way too.
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Neg;
        n->a = make_num(-v);
        e.root_ = n;
    } else {
        e.root_ = make_num(v);
    }
    return e;
}

double Expression::eval(const EvalContext& ctx) const {
    if (!root_) throw EvalError("empty expression");
    return eval_node(*root_, ctx);
}

std::string Expression::print() const {
    std::string out;
    if (root_) print_node(*root_, out, 0);
    return out;
}

bool Expression::structurally_equal(const Expression& other) const {
    if (!root_ || !other.root_) return root_ == other.root_;
    return equal_nodes(*root_, *other.root_);
}

bool Expression::is_zero() const { return root_ && root_->op == Op::Num && root_->value == 0.0; }

}  // namespace tfem
