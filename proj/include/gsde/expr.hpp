#pragma once

// Arithmetic expressions over the coordinates x1..xd.
//
// Grammar, lowest to highest precedence:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := atom ('^' unary)?          (right associative)
//   atom    := number | 'x' index | name '(' args ')' | '(' expr ')'
// Functions: sin cos exp log sqrt tanh abs (one argument), pow (two).
// Whitespace is insignificant. Numbers are decimal doubles.

#include "gsde/common.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsde::expr {

enum class Op { Constant, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Sin, Cos, Exp, Log, Sqrt, Tanh, Abs, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Constant;
    double value = 0.0;    // Constant
    int var = 0;           // Variable, 1-based
    Func fn = Func::Sin;   // Call
    std::size_t pos = 0;   // byte offset in the source text
    std::vector<NodePtr> args;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Evaluation outside a function's domain; carries the offending node's offset.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::size_t offset)
        : Error(what + " (node at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

NodePtr parse_tree(std::string_view text, int dim);
std::string to_string(const NodePtr& n);
bool equal(const NodePtr& a, const NodePtr& b);
int max_variable(const NodePtr& n);
bool is_constant(const NodePtr& n, double* value = nullptr);

// Builders. They fold constants and drop neutral elements.
NodePtr constant(double c);
NodePtr variable(int index);
NodePtr neg(NodePtr a);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr pow(NodePtr a, NodePtr b);
NodePtr call(Func f, NodePtr a);

NodePtr derivative(const NodePtr& n, int var);
/// Replaces every x_i by replacements[i-1].
NodePtr substitute(const NodePtr& n, std::span<const NodePtr> replacements);

/// Value with first and (optionally) second derivatives.
struct Dual {
    double value = 0.0;
    Vec first;
    Mat second;   // empty unless order 2 was requested
};

/// Straight-line program compiled from a tree; evaluation is allocation-light
/// and safe to call concurrently.
class Program {
public:
    Program() = default;
    Program(const NodePtr& root, int dim);

    int dim() const noexcept { return dim_; }
    bool constant() const noexcept { return constant_; }

    double value(const double* x) const;
    /// Writes value, gradient (d) and, for order 2, the row-major Hessian (d*d).
    void jet(const double* x, int order, double* out) const;

private:
    enum class Code {
        Const, Var, Neg, Add, Sub, Mul, Div, PowInt, PowReal, PowLog,
        Sin, Cos, Exp, Log, Sqrt, Tanh, Abs
    };
    struct Instr {
        Code code;
        int a = -1;
        int b = -1;
        double c = 0.0;
        int var = 0;
        std::size_t pos = 0;
    };

    int emit(const NodePtr& n);
    int push(Instr in);

    std::vector<Instr> code_;
    int dim_ = 0;
    bool constant_ = false;
};

/// An immutable parsed or built expression in a fixed number of variables.
class Expression {
public:
    Expression() = default;
    Expression(NodePtr root, int dim);

    static Expression parse(std::string_view text, int dim);
    static Expression constant(double c, int dim);

    const NodePtr& tree() const noexcept { return root_; }
    int dim() const noexcept { return dim_; }
    bool is_constant(double* value = nullptr) const { return expr::is_constant(root_, value); }

    double value(const Vec& x) const;
    Dual eval_dual(const Vec& x, int order) const;
    void jet(const double* x, int order, double* out) const { program_->jet(x, order, out); }
    double value(const double* x) const { return program_->value(x); }

    Expression derivative(int var) const;
    /// Composes with a map given by one expression per variable of this one.
    Expression compose(std::span<const Expression> inner) const;

    std::string str() const { return to_string(root_); }

private:
    NodePtr root_;
    int dim_ = 0;
    std::shared_ptr<const Program> program_;
};

} // namespace gsde::expr
