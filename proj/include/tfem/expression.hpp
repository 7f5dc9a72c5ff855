#pragma once

#include <memory>
#include <string>

#include "tfem/core.hpp"

namespace tfem {

/// Variables available to coefficient/data expressions. In volume
/// expressions r/theta are polar coordinates about the global origin; on an
/// interface, theta is the curve parameter angle and r the distance to the
/// curve center.
struct EvalContext {
    double x = 0, y = 0, r = 0, theta = 0;
    static EvalContext at_point(const Vec2& p) {
        EvalContext c;
        c.x = p.x();
        c.y = p.y();
        c.r = p.norm();
        c.theta = std::atan2(p.y(), p.x());
        return c;
    }
};

/// Arithmetic expression over x, y, r, theta with + - * / ^, unary minus,
/// and sin, cos, exp, log, abs, sqrt, pow. Parsed to an AST; evaluation is
/// guarded (division by zero, log of a nonpositive value, invalid pow all
/// raise EvalError rather than producing NaN).
class Expression {
  public:
    struct Node;

    /// Throws ParseError (with line/col) on malformed input.
    static Expression parse(const std::string& text);
    static Expression constant(double v);

    double eval(const EvalContext& ctx) const;
    double eval_at(const Vec2& p) const { return eval(EvalContext::at_point(p)); }

    /// Canonical text form; parse(print(e)) reproduces the AST structurally.
    std::string print() const;
    bool structurally_equal(const Expression& other) const;

    bool is_zero() const;  // literal 0 (after parse of "0", "0.0", ...)

  private:
    std::shared_ptr<const Node> root_;
};

}  // namespace tfem
