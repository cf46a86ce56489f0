#ifndef ARCD_EXPR_HPP
#define ARCD_EXPR_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "arcd/errors.hpp"

namespace arcd::expr {

/**
 * Node kinds of the immutable expression tree.
 *
 * Coordinates are indexed 0..n with 0 = x (the frame parameter) and
 * i >= 1 = z_i.  IntPow keeps an integer exponent in Node::exponent.
 */
enum class Kind {
    Literal,
    Coord,
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Add,
    Sub,
    Mul,
    Div,
    IntPow,
};

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

/**
 * One node of an expression tree.  Nodes are immutable and shared;
 * build them through the factory functions below, which perform
 * constant folding and keep trees in the canonical shape the printer
 * and parser agree on.
 */
struct Node {
    Kind kind = Kind::Literal;
    double value = 0.0;  ///< Literal payload
    int coord = 0;       ///< Coord payload
    int exponent = 0;    ///< IntPow payload
    ExprPtr a, b;        ///< children (unary: a; binary: a, b)
};

// Factory functions.  Literal arithmetic is folded when the result is
// finite and inside the operation's domain; identities with 0 and 1
// are simplified.  No other rewriting happens, so the tree a caller
// builds is the tree that prints.
ExprPtr literal(double v);
ExprPtr coord(int index);
ExprPtr neg(ExprPtr e);
ExprPtr sin(ExprPtr e);
ExprPtr cos(ExprPtr e);
ExprPtr exp(ExprPtr e);
ExprPtr log(ExprPtr e);
ExprPtr sqrt(ExprPtr e);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr pow_int(ExprPtr base, int k);

/**
 * Evaluates the expression at a point, where point[i] is the value of
 * coordinate i.  Throws ArError(DivisionByZero) on an exact zero
 * denominator and ArError(DomainError) when log or sqrt is applied
 * outside its domain; both messages quote the offending subexpression.
 */
double evaluate(const ExprPtr& e, std::span<const double> point);

/** Exact symbolic partial derivative with respect to coordinate `index`. */
ExprPtr diff(const ExprPtr& e, int index);

/** Renders the tree so that parse(to_string(e)) rebuilds e node for node. */
std::string to_string(const ExprPtr& e);

/** Structural equality (same shape, same payloads). */
bool identical(const ExprPtr& a, const ExprPtr& b);

/** Largest coordinate index appearing in the tree, or -1 if none. */
int max_coord_index(const ExprPtr& e);

/** True if the tree contains no Coord node whatsoever. */
bool is_constant(const ExprPtr& e);

/**
 * Parses the textual grammar
 *
 *   expr   := ['-'] term (('+'|'-') term)*
 *   term   := factor (('*'|'/') factor)*
 *   factor := base ['^' integer]
 *   base   := number | 'x' | 'z' digits | func '(' expr ')' | '(' expr ')'
 *   func   := sin | cos | exp | log | sqrt
 *
 * with left-associative operators.  Throws ArError(ParseError) with a
 * character position on malformed input.
 */
ExprPtr parse(std::string_view src);

/**
 * Smallest k <= max_order such that the k-th derivative of e along
 * coordinate `index` is nonzero (absolute value > tol) at `point`.
 * Returns nullopt when all probed derivatives vanish.
 */
std::optional<int> vanishing_order(const ExprPtr& e, int index,
                                   std::span<const double> point,
                                   int max_order, double tol = 1e-9);

} // namespace arcd::expr

namespace arcd {
using expr::ExprPtr;
}

#endif
