#ifndef FLOQPATCH_EXPR_HPP
#define FLOQPATCH_EXPR_HPP

// Arithmetic expression DSL: parsing, exact symbolic differentiation and
// IEEE-double evaluation. Used to define kinetic systems and their exact
// Jacobians. The grammar is documented in docs/expression-grammar.md.

#include "floqpatch/common.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace floq::expr {

// Ordered state variables plus named parameters with current values.
// Names must be unique across both lists.
class SymbolTable {
public:
    SymbolTable(std::vector<std::string> vars,
                std::vector<std::string> params,
                std::vector<double> param_values);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_params() const { return static_cast<int>(params_.size()); }
    const std::vector<std::string>& vars() const { return vars_; }
    const std::vector<std::string>& params() const { return params_; }
    const std::vector<double>& param_values() const { return values_; }

    int var_index(std::string_view name) const;    // -1 if absent
    int param_index(std::string_view name) const;  // -1 if absent
    void set_param(std::string_view name, double value);
    void set_param(int index, double value) { values_.at(index) = value; }

private:
    std::vector<std::string> vars_, params_;
    std::vector<double> values_;
};

enum class NodeKind {
    constant,
    variable,
    parameter,
    add, sub, mul, div,
    neg,
    pow,   // non-integer exponent, positive base required
    exp_, ln_, sin_, cos_, sqrt_,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;    // constant value or pow exponent
    int index = -1;        // variable/parameter slot
    NodePtr a, b;
    std::size_t src_offset = 0;  // byte offset in the source text, for diagnostics
};

struct ParseError : Error {
    std::size_t offset;
    ParseError(std::size_t off, const std::string& msg) : Error(ErrorCode::parse, msg), offset(off) {}
};

struct EvalError : Error {
    std::string node_text;  // offending subexpression, pretty-printed
    EvalError(const std::string& msg, std::string node) : Error(ErrorCode::domain, msg), node_text(std::move(node)) {}
};

// Immutable expression over a shared symbol table. Safe to share across threads.
class Expr {
public:
    Expr() = default;
    Expr(NodePtr root, std::shared_ptr<const SymbolTable> syms);

    static Expr parse(std::string_view source, std::shared_ptr<const SymbolTable> syms);
    static Expr constant(double c, std::shared_ptr<const SymbolTable> syms);

    // Exact symbolic partial derivative with respect to a state variable.
    Expr diff(std::string_view var) const;
    Expr diff_var(int var_index) const;

    // Evaluation; parameter values default to the symbol table's.
    double eval(std::span<const double> state) const;
    double eval(std::span<const double> state, std::span<const double> params) const;

    std::string str() const;  // pretty print; parse(str()) evaluates identically

    const NodePtr& root() const { return root_; }
    const std::shared_ptr<const SymbolTable>& symbols() const { return syms_; }
    bool empty() const { return !root_; }

private:
    NodePtr root_;
    std::shared_ptr<const SymbolTable> syms_;
};

// Flattened post-order view of an Expr for fast repeated evaluation in
// integration loops. Holds the AST alive; stateless apart from scratch space
// supplied by the caller, so one CompiledExpr may be shared across threads.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const Expr& e);

    double eval(std::span<const double> state, std::span<const double> params,
                std::vector<double>& stack) const;
    int stack_size() const { return max_stack_; }

private:
    std::vector<const Node*> post_;
    NodePtr root_;
    int max_stack_ = 0;
};

} // namespace floq::expr

#endif
