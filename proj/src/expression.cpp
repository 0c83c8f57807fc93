#include "morseflow/expression.hpp"

#include "morseflow/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

namespace morseflow::expr {

namespace {

NodePtr make_const(double v, std::size_t pos = 0)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = v;
    n->pos = pos;
    return n;
}

NodePtr make_var(int index, std::size_t pos = 0)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->index = index;
    n->pos = pos;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Builders with constant folding. Folding never hides a domain error that a
// constant subtree would raise: 1/0 and sqrt(-1) stay unfolded.
NodePtr make_binary(Op op, NodePtr a, NodePtr b, std::size_t pos)
{
    if (a->op == Op::Const && b->op == Op::Const) {
        switch (op) {
        case Op::Add: return make_const(a->value + b->value, pos);
        case Op::Sub: return make_const(a->value - b->value, pos);
        case Op::Mul: return make_const(a->value * b->value, pos);
        case Op::Div:
            if (b->value != 0.0)
                return make_const(a->value / b->value, pos);
            break;
        default: break;
        }
    }
    switch (op) {
    case Op::Add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
    case Op::Sub:
        if (is_const(b, 0.0)) return a;
        break;
    case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0, pos);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
    case Op::Div:
        if (is_const(b, 1.0)) return a;
        if (is_const(a, 0.0) && b->op == Op::Const && b->value != 0.0) return make_const(0.0, pos);
        break;
    default: break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    n->pos = pos;
    return n;
}

NodePtr make_pow(NodePtr base, int exponent, std::size_t pos)
{
    if (exponent == 0) return make_const(1.0, pos);
    if (exponent == 1) return base;
    if (base->op == Op::Const) return make_const(std::pow(base->value, exponent), pos);
    auto n = std::make_shared<Node>();
    n->op = Op::Pow;
    n->index = exponent;
    n->lhs = std::move(base);
    n->pos = pos;
    return n;
}

NodePtr make_unary(Op op, NodePtr a, std::size_t pos)
{
    if (a->op == Op::Const) {
        switch (op) {
        case Op::Sin: return make_const(std::sin(a->value), pos);
        case Op::Cos: return make_const(std::cos(a->value), pos);
        case Op::Exp: return make_const(std::exp(a->value), pos);
        case Op::Sqrt:
            if (a->value >= 0.0) return make_const(std::sqrt(a->value), pos);
            break;
        default: break;
        }
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->pos = pos;
    return n;
}

class Parser {
public:
    Parser(std::string_view text, std::size_t n_vars) : text_(text), n_vars_(n_vars) {}

    NodePtr parse()
    {
        auto e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError(pos_, std::string("unexpected '") + text_[pos_] + "'");
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr()
    {
        auto lhs = parse_term();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (accept('+'))
                lhs = make_binary(Op::Add, lhs, parse_term(), at);
            else if (accept('-'))
                lhs = make_binary(Op::Sub, lhs, parse_term(), at);
            else
                return lhs;
        }
    }

    NodePtr parse_term()
    {
        auto lhs = parse_factor();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (accept('*'))
                lhs = make_binary(Op::Mul, lhs, parse_factor(), at);
            else if (accept('/'))
                lhs = make_binary(Op::Div, lhs, parse_factor(), at);
            else
                return lhs;
        }
    }

    NodePtr parse_factor()
    {
        auto base = parse_atom();
        skip_ws();
        std::size_t at = pos_;
        if (accept('^')) {
            skip_ws();
            std::size_t start = pos_;
            int exponent = 0;
            auto [end, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), exponent);
            if (ec != std::errc() || end == text_.data() + start || exponent < 0 || text_[start] == '-' ||
                text_[start] == '+')
                throw ParseError(start, "expected non-negative integer exponent");
            pos_ = static_cast<std::size_t>(end - text_.data());
            return make_pow(base, exponent, at);
        }
        return base;
    }

    NodePtr parse_number()
    {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                throw ParseError(mark, "malformed number exponent");
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        double v = 0.0;
        auto [end, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || end != text_.data() + pos_)
            throw ParseError(start, "malformed number");
        return make_const(v, start);
    }

    NodePtr parse_atom()
    {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError(pos_, "unexpected end of input");
        std::size_t start = pos_;
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            if (!accept(')'))
                throw ParseError(pos_, "expected ')'");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            std::string_view word = text_.substr(start, pos_ - start);
            if (word == "x" && pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                std::size_t digits = pos_;
                std::size_t index = 0;
                auto [end, ec] = std::from_chars(text_.data() + digits, text_.data() + text_.size(), index);
                pos_ = static_cast<std::size_t>(end - text_.data());
                if (ec != std::errc() || index == 0 || index > n_vars_)
                    throw ParseError(start, "variable index out of range: " +
                                                std::string(text_.substr(start, pos_ - start)) + " (dimension " +
                                                std::to_string(n_vars_) + ")");
                return make_var(static_cast<int>(index - 1), start);
            }
            Op op;
            if (word == "sin") op = Op::Sin;
            else if (word == "cos") op = Op::Cos;
            else if (word == "exp") op = Op::Exp;
            else if (word == "sqrt") op = Op::Sqrt;
            else
                throw ParseError(start, "unknown identifier '" + std::string(word) + "'");
            if (!accept('('))
                throw ParseError(pos_, "expected '(' after " + std::string(word));
            auto arg = parse_expr();
            if (!accept(')'))
                throw ParseError(pos_, "expected ')'");
            return make_unary(op, arg, start);
        }
        throw ParseError(pos_, std::string("unexpected '") + c + "'");
    }

    std::string_view text_;
    std::size_t n_vars_;
    std::size_t pos_ = 0;
};

NodePtr derive(const NodePtr& n, int var)
{
    const std::size_t at = n->pos;
    switch (n->op) {
    case Op::Const: return make_const(0.0, at);
    case Op::Var: return make_const(n->index == var ? 1.0 : 0.0, at);
    case Op::Add: return make_binary(Op::Add, derive(n->lhs, var), derive(n->rhs, var), at);
    case Op::Sub: return make_binary(Op::Sub, derive(n->lhs, var), derive(n->rhs, var), at);
    case Op::Mul:
        return make_binary(Op::Add, make_binary(Op::Mul, derive(n->lhs, var), n->rhs, at),
                           make_binary(Op::Mul, n->lhs, derive(n->rhs, var), at), at);
    case Op::Div: {
        // (u'v - uv') / v^2
        auto num = make_binary(Op::Sub, make_binary(Op::Mul, derive(n->lhs, var), n->rhs, at),
                               make_binary(Op::Mul, n->lhs, derive(n->rhs, var), at), at);
        return make_binary(Op::Div, num, make_pow(n->rhs, 2, at), at);
    }
    case Op::Pow: {
        auto inner = make_binary(Op::Mul, make_const(static_cast<double>(n->index), at),
                                 make_pow(n->lhs, n->index - 1, at), at);
        return make_binary(Op::Mul, inner, derive(n->lhs, var), at);
    }
    case Op::Sin:
        return make_binary(Op::Mul, make_unary(Op::Cos, n->lhs, at), derive(n->lhs, var), at);
    case Op::Cos:
        return make_binary(Op::Sub, make_const(0.0, at),
                           make_binary(Op::Mul, make_unary(Op::Sin, n->lhs, at), derive(n->lhs, var), at), at);
    case Op::Exp: return make_binary(Op::Mul, n, derive(n->lhs, var), at);
    case Op::Sqrt:
        return make_binary(Op::Div, derive(n->lhs, var), make_binary(Op::Mul, make_const(2.0, at), n, at), at);
    }
    return make_const(0.0, at);
}

int precedence(Op op)
{
    switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Pow: return 3;
    default: return 4;
    }
}

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

void print(const NodePtr& n, std::string& out)
{
    auto child = [&](const NodePtr& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };
    switch (n->op) {
    case Op::Const:
        if (n->value < 0.0 || std::signbit(n->value))
            out += "(0-" + format_number(-n->value) + ")";
        else
            out += format_number(n->value);
        return;
    case Op::Var: out += "x" + std::to_string(n->index + 1); return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
        int p = precedence(n->op);
        child(n->lhs, precedence(n->lhs->op) < p);
        out += n->op == Op::Add ? "+" : n->op == Op::Sub ? "-" : n->op == Op::Mul ? "*" : "/";
        // equal precedence on the right keeps its parens so reparsing
        // reproduces the same association (and the same rounding)
        child(n->rhs, precedence(n->rhs->op) <= p);
        return;
    }
    case Op::Pow:
        child(n->lhs, precedence(n->lhs->op) <= 3 || n->lhs->op == Op::Const);
        out += "^" + std::to_string(n->index);
        return;
    case Op::Sin: out += "sin("; print(n->lhs, out); out += ")"; return;
    case Op::Cos: out += "cos("; print(n->lhs, out); out += ")"; return;
    case Op::Exp: out += "exp("; print(n->lhs, out); out += ")"; return;
    case Op::Sqrt: out += "sqrt("; print(n->lhs, out); out += ")"; return;
    }
}

NodePtr shift(const NodePtr& n, int offset)
{
    switch (n->op) {
    case Op::Const: return n;
    case Op::Var: return make_var(n->index + offset, n->pos);
    default: {
        auto copy = std::make_shared<Node>(*n);
        if (n->lhs) copy->lhs = shift(n->lhs, offset);
        if (n->rhs) copy->rhs = shift(n->rhs, offset);
        return copy;
    }
    }
}

}  // namespace

Expr::Expr() : Expr(make_const(0.0), 0) {}

Expr::Expr(NodePtr root, std::size_t n_vars) : root_(std::move(root)), n_vars_(n_vars) { compile(); }

Expr Expr::parse(std::string_view text, std::size_t n_vars)
{
    return Expr(Parser(text, n_vars).parse(), n_vars);
}

Expr Expr::constant(double value, std::size_t n_vars) { return Expr(make_const(value), n_vars); }

Expr Expr::variable(std::size_t index, std::size_t n_vars)
{
    if (index >= n_vars)
        throw PreconditionError("variable index " + std::to_string(index + 1) + " exceeds dimension " +
                                std::to_string(n_vars));
    return Expr(make_var(static_cast<int>(index)), n_vars);
}

bool Expr::is_constant() const noexcept { return root_->op == Op::Const; }

void Expr::compile()
{
    auto tape = std::make_shared<std::vector<Instr>>();
    std::size_t depth = 0;
    std::size_t max_depth = 0;
    std::function<void(const NodePtr&)> emit = [&](const NodePtr& n) {
        if (n->lhs) emit(n->lhs);
        if (n->rhs) emit(n->rhs);
        tape->push_back({n->op, n->index, n->value, n->pos});
        if (n->op == Op::Const || n->op == Op::Var)
            ++depth;
        else if (n->rhs)
            --depth;
        max_depth = std::max(max_depth, depth);
    };
    emit(root_);
    tape_ = std::move(tape);
    stack_depth_ = max_depth;
}

double Expr::evaluate(std::span<const double> point) const
{
    if (point.size() != n_vars_)
        throw PreconditionError("point has " + std::to_string(point.size()) + " coordinates, expression expects " +
                                std::to_string(n_vars_));
    constexpr std::size_t inline_depth = 64;
    std::array<double, inline_depth> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (stack_depth_ > inline_depth) {
        large.resize(stack_depth_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const Instr& in : *tape_) {
        switch (in.op) {
        case Op::Const: stack[top++] = in.value; break;
        case Op::Var: stack[top++] = point[static_cast<std::size_t>(in.index)]; break;
        case Op::Add: --top; stack[top - 1] += stack[top]; break;
        case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::Div:
            --top;
            if (stack[top] == 0.0) throw DomainError(in.pos, "division by zero");
            stack[top - 1] /= stack[top];
            break;
        case Op::Pow: {
            double b = stack[top - 1];
            double r = 1.0;
            for (int i = 0; i < in.index; ++i) r *= b;
            stack[top - 1] = r;
            break;
        }
        case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
        case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
        case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
        case Op::Sqrt:
            if (stack[top - 1] < 0.0) throw DomainError(in.pos, "sqrt of negative number");
            stack[top - 1] = std::sqrt(stack[top - 1]);
            break;
        }
    }
    return stack[0];
}

Expr Expr::differentiate(std::size_t var) const
{
    if (var >= n_vars_)
        throw PreconditionError("cannot differentiate by x" + std::to_string(var + 1) + " in dimension " +
                                std::to_string(n_vars_));
    return Expr(derive(root_, static_cast<int>(var)), n_vars_);
}

std::string Expr::to_string() const
{
    std::string out;
    print(root_, out);
    return out;
}

Expr Expr::embed(std::size_t offset, std::size_t n_vars) const
{
    if (offset + n_vars_ > n_vars)
        throw PreconditionError("embedding exceeds target dimension");
    return Expr(shift(root_, static_cast<int>(offset)), n_vars);
}

namespace {
std::size_t common_dim(const Expr& a, const Expr& b)
{
    if (a.n_vars() != b.n_vars())
        throw PreconditionError("expressions over different dimensions");
    return a.n_vars();
}
}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Add, a.root_, b.root_, 0), common_dim(a, b)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Sub, a.root_, b.root_, 0), common_dim(a, b)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Mul, a.root_, b.root_, 0), common_dim(a, b)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(Op::Div, a.root_, b.root_, 0), common_dim(a, b)); }
Expr pow(const Expr& base, int exponent)
{
    if (exponent < 0) throw PreconditionError("negative exponent");
    return Expr(make_pow(base.root_, exponent, 0), base.n_vars_);
}
Expr sin(const Expr& a) { return Expr(make_unary(Op::Sin, a.root_, 0), a.n_vars_); }
Expr cos(const Expr& a) { return Expr(make_unary(Op::Cos, a.root_, 0), a.n_vars_); }
Expr exp(const Expr& a) { return Expr(make_unary(Op::Exp, a.root_, 0), a.n_vars_); }
Expr sqrt(const Expr& a) { return Expr(make_unary(Op::Sqrt, a.root_, 0), a.n_vars_); }
Expr Expr::operator-() const { return Expr(make_binary(Op::Sub, make_const(0.0), root_, 0), n_vars_); }

Derivatives derivatives(const Expr& e)
{
    const std::size_t n = e.n_vars();
    Derivatives d;
    d.gradient.reserve(n);
    for (std::size_t i = 0; i < n; ++i) d.gradient.push_back(e.differentiate(i));
    d.hessian.assign(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            d.hessian[i][j] = d.gradient[i].differentiate(j);
            d.hessian[j][i] = d.hessian[i][j];
        }
    return d;
}

}  // namespace morseflow::expr
