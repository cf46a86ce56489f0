#include "arcd/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

namespace arcd::expr {

namespace {

ExprPtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_literal(const ExprPtr& e, double v) {
    return e->kind == Kind::Literal && e->value == v;
}

/** Shortest decimal form that parses back to exactly the same double. */
std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace

ExprPtr literal(double v) {
    Node n;
    n.kind = Kind::Literal;
    n.value = v;
    return make(std::move(n));
}

ExprPtr coord(int index) {
    if (index < 0) throw ArError(ErrorCode::BadInput, "coordinate index must be nonnegative");
    Node n;
    n.kind = Kind::Coord;
    n.coord = index;
    return make(std::move(n));
}

ExprPtr neg(ExprPtr e) {
    if (e->kind == Kind::Literal) return literal(-e->value);
    if (e->kind == Kind::Neg) return e->a;
    Node n;
    n.kind = Kind::Neg;
    n.a = std::move(e);
    return make(std::move(n));
}

namespace {

ExprPtr unary(Kind k, ExprPtr e, double (*fn)(double), bool (*domain)(double)) {
    if (e->kind == Kind::Literal && domain(e->value)) {
        double v = fn(e->value);
        if (std::isfinite(v)) return literal(v);
    }
    Node n;
    n.kind = k;
    n.a = std::move(e);
    return make(std::move(n));
}

bool any_domain(double) { return true; }

} // namespace

ExprPtr sin(ExprPtr e) { return unary(Kind::Sin, std::move(e), std::sin, any_domain); }
ExprPtr cos(ExprPtr e) { return unary(Kind::Cos, std::move(e), std::cos, any_domain); }
ExprPtr exp(ExprPtr e) { return unary(Kind::Exp, std::move(e), std::exp, any_domain); }
ExprPtr log(ExprPtr e) {
    return unary(Kind::Log, std::move(e), std::log, [](double v) { return v > 0.0; });
}
ExprPtr sqrt(ExprPtr e) {
    return unary(Kind::Sqrt, std::move(e), std::sqrt, [](double v) { return v >= 0.0; });
}

ExprPtr add(ExprPtr a, ExprPtr b) {
    if (a->kind == Kind::Literal && b->kind == Kind::Literal) {
        double v = a->value + b->value;
        if (std::isfinite(v)) return literal(v);
    }
    if (is_literal(a, 0.0)) return b;
    if (is_literal(b, 0.0)) return a;
    Node n;
    n.kind = Kind::Add;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

ExprPtr sub(ExprPtr a, ExprPtr b) {
    if (a->kind == Kind::Literal && b->kind == Kind::Literal) {
        double v = a->value - b->value;
        if (std::isfinite(v)) return literal(v);
    }
    if (is_literal(b, 0.0)) return a;
    if (is_literal(a, 0.0)) return neg(std::move(b));
    Node n;
    n.kind = Kind::Sub;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

ExprPtr mul(ExprPtr a, ExprPtr b) {
    if (a->kind == Kind::Literal && b->kind == Kind::Literal) {
        double v = a->value * b->value;
        if (std::isfinite(v)) return literal(v);
    }
    if (is_literal(a, 0.0) || is_literal(b, 0.0)) return literal(0.0);
    if (is_literal(a, 1.0)) return b;
    if (is_literal(b, 1.0)) return a;
    Node n;
    n.kind = Kind::Mul;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

ExprPtr div(ExprPtr a, ExprPtr b) {
    // A zero denominator is never folded away: it must surface as a
    // DivisionByZero during evaluation, not silently at build time.
    if (a->kind == Kind::Literal && b->kind == Kind::Literal && b->value != 0.0) {
        double v = a->value / b->value;
        if (std::isfinite(v)) return literal(v);
    }
    if (is_literal(b, 1.0)) return a;
    Node n;
    n.kind = Kind::Div;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

ExprPtr pow_int(ExprPtr base, int k) {
    if (k == 0) return literal(1.0);
    if (k == 1) return base;
    if (base->kind == Kind::Literal && !(base->value == 0.0 && k < 0)) {
        double v = std::pow(base->value, k);
        if (std::isfinite(v)) return literal(v);
    }
    Node n;
    n.kind = Kind::IntPow;
    n.exponent = k;
    n.a = std::move(base);
    return make(std::move(n));
}

double evaluate(const ExprPtr& e, std::span<const double> point) {
    switch (e->kind) {
    case Kind::Literal:
        return e->value;
    case Kind::Coord:
        if (e->coord >= static_cast<int>(point.size()))
            throw ArError(ErrorCode::BadInput,
                          "point has no coordinate " + std::to_string(e->coord));
        return point[e->coord];
    case Kind::Neg:
        return -evaluate(e->a, point);
    case Kind::Sin:
        return std::sin(evaluate(e->a, point));
    case Kind::Cos:
        return std::cos(evaluate(e->a, point));
    case Kind::Exp:
        return std::exp(evaluate(e->a, point));
    case Kind::Log: {
        double v = evaluate(e->a, point);
        if (v <= 0.0)
            throw ArError(ErrorCode::DomainError,
                          "log of nonpositive value " + format_double(v) + " in " + to_string(e));
        return std::log(v);
    }
    case Kind::Sqrt: {
        double v = evaluate(e->a, point);
        if (v < 0.0)
            throw ArError(ErrorCode::DomainError,
                          "sqrt of negative value " + format_double(v) + " in " + to_string(e));
        return std::sqrt(v);
    }
    case Kind::Add:
        return evaluate(e->a, point) + evaluate(e->b, point);
    case Kind::Sub:
        return evaluate(e->a, point) - evaluate(e->b, point);
    case Kind::Mul:
        return evaluate(e->a, point) * evaluate(e->b, point);
    case Kind::Div: {
        double num = evaluate(e->a, point);
        double den = evaluate(e->b, point);
        if (den == 0.0)
            throw ArError(ErrorCode::DivisionByZero, "in " + to_string(e));
        return num / den;
    }
    case Kind::IntPow: {
        double v = evaluate(e->a, point);
        if (v == 0.0 && e->exponent < 0)
            throw ArError(ErrorCode::DivisionByZero, "in " + to_string(e));
        return std::pow(v, e->exponent);
    }
    }
    throw ArError(ErrorCode::BadInput, "corrupt expression node");
}

ExprPtr diff(const ExprPtr& e, int index) {
    switch (e->kind) {
    case Kind::Literal:
        return literal(0.0);
    case Kind::Coord:
        return literal(e->coord == index ? 1.0 : 0.0);
    case Kind::Neg:
        return neg(diff(e->a, index));
    case Kind::Sin:
        return mul(cos(e->a), diff(e->a, index));
    case Kind::Cos:
        return neg(mul(sin(e->a), diff(e->a, index)));
    case Kind::Exp:
        return mul(exp(e->a), diff(e->a, index));
    case Kind::Log:
        return div(diff(e->a, index), e->a);
    case Kind::Sqrt:
        return div(diff(e->a, index), mul(literal(2.0), sqrt(e->a)));
    case Kind::Add:
        return add(diff(e->a, index), diff(e->b, index));
    case Kind::Sub:
        return sub(diff(e->a, index), diff(e->b, index));
    case Kind::Mul:
        return add(mul(diff(e->a, index), e->b), mul(e->a, diff(e->b, index)));
    case Kind::Div:
        return div(sub(mul(diff(e->a, index), e->b), mul(e->a, diff(e->b, index))),
                   pow_int(e->b, 2));
    case Kind::IntPow:
        return mul(mul(literal(static_cast<double>(e->exponent)),
                       pow_int(e->a, e->exponent - 1)),
                   diff(e->a, index));
    }
    throw ArError(ErrorCode::BadInput, "corrupt expression node");
}

namespace {

// Printer precedence; a child is parenthesized when its level is below
// the minimum its position requires.  Neg (and negative literals) sit
// below Add so they are always wrapped in operand position, matching a
// grammar whose unary minus exists only at the start of an expression.
int precedence(const Node& e) {
    switch (e.kind) {
    case Kind::Add:
    case Kind::Sub:
        return 10;
    case Kind::Mul:
    case Kind::Div:
        return 20;
    case Kind::IntPow:
        return 30;
    case Kind::Neg:
        return 5;
    case Kind::Literal:
        return e.value < 0.0 ? 5 : 40;
    default:
        return 40;
    }
}

void print(const ExprPtr& e, int min_prec, std::string& out) {
    if (precedence(*e) < min_prec) {
        out += '(';
        print(e, 0, out);
        out += ')';
        return;
    }
    switch (e->kind) {
    case Kind::Literal:
        out += format_double(e->value);
        return;
    case Kind::Coord:
        if (e->coord == 0)
            out += 'x';
        else
            out += "z" + std::to_string(e->coord);
        return;
    case Kind::Neg:
        out += '-';
        print(e->a, 20, out);
        return;
    case Kind::Sin:
    case Kind::Cos:
    case Kind::Exp:
    case Kind::Log:
    case Kind::Sqrt: {
        switch (e->kind) {
        case Kind::Sin: out += "sin"; break;
        case Kind::Cos: out += "cos"; break;
        case Kind::Exp: out += "exp"; break;
        case Kind::Log: out += "log"; break;
        default: out += "sqrt"; break;
        }
        out += '(';
        print(e->a, 0, out);
        out += ')';
        return;
    }
    case Kind::Add:
        print(e->a, 10, out);
        out += '+';
        print(e->b, 11, out);
        return;
    case Kind::Sub:
        print(e->a, 10, out);
        out += '-';
        print(e->b, 11, out);
        return;
    case Kind::Mul:
        print(e->a, 20, out);
        out += '*';
        print(e->b, 21, out);
        return;
    case Kind::Div:
        print(e->a, 20, out);
        out += '/';
        print(e->b, 21, out);
        return;
    case Kind::IntPow:
        print(e->a, 31, out);
        out += '^';
        out += std::to_string(e->exponent);
        return;
    }
}

} // namespace

std::string to_string(const ExprPtr& e) {
    std::string out;
    print(e, 0, out);
    return out;
}

bool identical(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case Kind::Literal:
        return a->value == b->value;
    case Kind::Coord:
        return a->coord == b->coord;
    case Kind::IntPow:
        return a->exponent == b->exponent && identical(a->a, b->a);
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
        return identical(a->a, b->a) && identical(a->b, b->b);
    default:
        return identical(a->a, b->a);
    }
}

int max_coord_index(const ExprPtr& e) {
    switch (e->kind) {
    case Kind::Literal:
        return -1;
    case Kind::Coord:
        return e->coord;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
        return std::max(max_coord_index(e->a), max_coord_index(e->b));
    default:
        return max_coord_index(e->a);
    }
}

bool is_constant(const ExprPtr& e) { return max_coord_index(e) < 0; }

namespace {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    ExprPtr run() {
        ExprPtr e = expression();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    std::string_view src_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) {
        throw ArError(ErrorCode::ParseError,
                      what + " at position " + std::to_string(pos_) + " in \"" +
                          std::string(src_) + "\"");
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    ExprPtr expression() {
        bool negate = eat('-');
        ExprPtr e = term();
        if (negate) e = neg(std::move(e));
        for (;;) {
            if (eat('+'))
                e = add(std::move(e), term());
            else if (eat('-'))
                e = sub(std::move(e), term());
            else
                return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = factor();
        for (;;) {
            if (eat('*'))
                e = mul(std::move(e), factor());
            else if (eat('/'))
                e = div(std::move(e), factor());
            else
                return e;
        }
    }

    ExprPtr factor() {
        ExprPtr e = base();
        if (eat('^')) return pow_int(std::move(e), integer());
        return e;
    }

    int integer() {
        skip_ws();
        bool negate = eat('-');
        skip_ws();
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected integer exponent");
        int v = 0;
        auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc{}) fail("exponent out of range");
        return negate ? -v : v;
    }

    ExprPtr base() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            ExprPtr e = expression();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail("expected a number, coordinate, function, or '('");
    }

    ExprPtr number() {
        skip_ws();
        double v = 0.0;
        auto res = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v,
                                   std::chars_format::general);
        if (res.ec != std::errc{}) fail("malformed number");
        pos_ = static_cast<size_t>(res.ptr - src_.data());
        return literal(v);
    }

    ExprPtr identifier() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::string_view name = src_.substr(start, pos_ - start);
        if (name == "x") return coord(0);
        if (name == "z") {
            size_t dstart = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ == dstart) fail("expected digits after 'z'");
            int idx = 0;
            auto res = std::from_chars(src_.data() + dstart, src_.data() + pos_, idx);
            if (res.ec != std::errc{} || idx < 1) fail("bad coordinate index");
            return coord(idx);
        }
        ExprPtr (*fn)(ExprPtr) = nullptr;
        if (name == "sin") fn = sin;
        else if (name == "cos") fn = cos;
        else if (name == "exp") fn = exp;
        else if (name == "log") fn = log;
        else if (name == "sqrt") fn = sqrt;
        if (!fn) fail("unknown identifier '" + std::string(name) + "'");
        if (!eat('(')) fail("expected '(' after function name");
        ExprPtr arg = expression();
        if (!eat(')')) fail("expected ')'");
        return fn(std::move(arg));
    }
};

} // namespace

ExprPtr parse(std::string_view src) { return Parser(src).run(); }

std::optional<int> vanishing_order(const ExprPtr& e, int index,
                                   std::span<const double> point,
                                   int max_order, double tol) {
    ExprPtr d = e;
    for (int k = 0; k <= max_order; ++k) {
        if (std::abs(evaluate(d, point)) > tol) return k;
        d = diff(d, index);
    }
    return std::nullopt;
}

} // namespace arcd::expr
