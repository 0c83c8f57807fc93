#pragma once

// Scalar expressions over ambient coordinates x1..xN.
//
// Grammar (whitespace insignificant):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := atom ('^' integer)?
//   atom   := number | 'x' integer | func '(' expr ')' | '(' expr ')'
//   func   := sin | cos | exp | sqrt
//
// Expr values are immutable; a compiled postfix tape is built once at
// construction so evaluation in the flow integrator stays cheap.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morseflow::expr {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt };

struct Node {
    Op op = Op::Const;
    double value = 0.0;     // Const
    int index = 0;          // Var: 0-based variable; Pow: exponent
    std::size_t pos = 0;    // source offset, inherited by derived nodes
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

class Expr {
public:
    Expr();  // the constant 0 over zero variables

    static Expr parse(std::string_view text, std::size_t n_vars);
    static Expr constant(double value, std::size_t n_vars);
    static Expr variable(std::size_t index, std::size_t n_vars);

    std::size_t n_vars() const noexcept { return n_vars_; }
    const NodePtr& root() const noexcept { return root_; }
    bool is_constant() const noexcept;

    // Throws DomainError on division by zero or sqrt of a negative number.
    double evaluate(std::span<const double> point) const;

    // Exact symbolic partial derivative with respect to the 0-based variable.
    Expr differentiate(std::size_t var) const;

    // Parseable text; parse(to_string()) evaluates identically.
    std::string to_string() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr pow(const Expr& base, int exponent);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);
    friend Expr exp(const Expr& a);
    friend Expr sqrt(const Expr& a);
    Expr operator-() const;

    // Same tree, reinterpreted over a larger variable set with variable
    // indices shifted by `offset` (used to build product manifolds).
    Expr embed(std::size_t offset, std::size_t n_vars) const;

private:
    struct Instr {
        Op op;
        int index;
        double value;
        std::size_t pos;
    };

    Expr(NodePtr root, std::size_t n_vars);
    void compile();

    NodePtr root_;
    std::size_t n_vars_ = 0;
    std::shared_ptr<const std::vector<Instr>> tape_;
    std::size_t stack_depth_ = 0;
};

// Gradient and Hessian expressions of one scalar expression.
struct Derivatives {
    std::vector<Expr> gradient;              // n entries
    std::vector<std::vector<Expr>> hessian;  // n x n, symmetric (shared entries)
};

Derivatives derivatives(const Expr& e);

}  // namespace morseflow::expr
