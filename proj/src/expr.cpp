#include "floqpatch/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace floq::expr {

SymbolTable::SymbolTable(std::vector<std::string> vars,
                         std::vector<std::string> params,
                         std::vector<double> param_values)
    : vars_(std::move(vars)), params_(std::move(params)), values_(std::move(param_values))
{
    if (params_.size() != values_.size())
        fail(ErrorCode::invalid_argument, "symbol table: parameter names and values differ in length");
    for (std::size_t i = 0; i < vars_.size(); ++i)
        for (std::size_t j = i + 1; j < vars_.size(); ++j)
            if (vars_[i] == vars_[j])
                fail(ErrorCode::invalid_argument, "symbol table: duplicate variable '" + vars_[i] + "'");
    for (const auto& p : params_) {
        if (var_index(p) >= 0)
            fail(ErrorCode::invalid_argument, "symbol table: name '" + p + "' is both variable and parameter");
    }
    for (std::size_t i = 0; i < params_.size(); ++i)
        for (std::size_t j = i + 1; j < params_.size(); ++j)
            if (params_[i] == params_[j])
                fail(ErrorCode::invalid_argument, "symbol table: duplicate parameter '" + params_[i] + "'");
}

int SymbolTable::var_index(std::string_view name) const
{
    for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) return static_cast<int>(i);
    return -1;
}

int SymbolTable::param_index(std::string_view name) const
{
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i] == name) return static_cast<int>(i);
    return -1;
}

void SymbolTable::set_param(std::string_view name, double value)
{
    int i = param_index(name);
    if (i < 0) fail(ErrorCode::invalid_argument, "unknown parameter '" + std::string(name) + "'");
    values_[static_cast<std::size_t>(i)] = value;
}

// --- node construction with constant folding and 0/1 elimination ---

namespace {

NodePtr make_node(NodeKind k, double value, int index, NodePtr a, NodePtr b, std::size_t off)
{
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->value = value;
    n->index = index;
    n->a = std::move(a);
    n->b = std::move(b);
    n->src_offset = off;
    return n;
}

NodePtr con(double c, std::size_t off = 0) { return make_node(NodeKind::constant, c, -1, nullptr, nullptr, off); }

bool is_const(const NodePtr& n, double c) { return n->kind == NodeKind::constant && n->value == c; }
bool is_const(const NodePtr& n) { return n->kind == NodeKind::constant; }

NodePtr neg(NodePtr a, std::size_t off = 0);

NodePtr add(NodePtr a, NodePtr b, std::size_t off = 0)
{
    if (is_const(a) && is_const(b)) return con(a->value + b->value, off);
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    return make_node(NodeKind::add, 0, -1, std::move(a), std::move(b), off);
}

NodePtr sub(NodePtr a, NodePtr b, std::size_t off = 0)
{
    if (is_const(a) && is_const(b)) return con(a->value - b->value, off);
    if (is_const(b, 0)) return a;
    if (is_const(a, 0)) return neg(std::move(b), off);
    return make_node(NodeKind::sub, 0, -1, std::move(a), std::move(b), off);
}

NodePtr mul(NodePtr a, NodePtr b, std::size_t off = 0)
{
    if (is_const(a) && is_const(b)) return con(a->value * b->value, off);
    if (is_const(a, 0) || is_const(b, 0)) return con(0.0, off);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    return make_node(NodeKind::mul, 0, -1, std::move(a), std::move(b), off);
}

NodePtr div(NodePtr a, NodePtr b, std::size_t off = 0)
{
    if (is_const(b, 1)) return a;
    if (is_const(a, 0) && !is_const(b, 0)) return con(0.0, off);
    if (is_const(a) && is_const(b) && b->value != 0.0) return con(a->value / b->value, off);
    return make_node(NodeKind::div, 0, -1, std::move(a), std::move(b), off);
}

NodePtr neg(NodePtr a, std::size_t off)
{
    if (is_const(a)) return con(-a->value, off);
    if (a->kind == NodeKind::neg) return a->a;
    return make_node(NodeKind::neg, 0, -1, std::move(a), nullptr, off);
}

NodePtr unary(NodeKind k, NodePtr a, std::size_t off = 0)
{
    if (is_const(a)) {
        double x = a->value;
        switch (k) {
            case NodeKind::exp_: return con(std::exp(x), off);
            case NodeKind::ln_: if (x > 0) return con(std::log(x), off); break;
            case NodeKind::sin_: return con(std::sin(x), off);
            case NodeKind::cos_: return con(std::cos(x), off);
            case NodeKind::sqrt_: if (x >= 0) return con(std::sqrt(x), off); break;
            default: break;
        }
    }
    return make_node(k, 0, -1, std::move(a), nullptr, off);
}

// Integer powers expand to repeated multiplication; other exponents keep a
// pow node that requires a positive base at evaluation time.
NodePtr power(NodePtr base, double expnt, std::size_t off)
{
    double ip = 0.0;
    if (std::modf(expnt, &ip) == 0.0 && std::abs(ip) <= 64) {
        long n = static_cast<long>(ip);
        if (n == 0) return con(1.0, off);
        bool inv = n < 0;
        n = std::labs(n);
        NodePtr acc = base;
        for (long i = 1; i < n; ++i) acc = mul(acc, base, off);
        return inv ? div(con(1.0, off), acc, off) : acc;
    }
    if (is_const(base) && base->value > 0) return con(std::pow(base->value, expnt), off);
    return make_node(NodeKind::pow, expnt, -1, std::move(base), nullptr, off);
}

// --- parser: left-associative + - * /, unary minus, ^ with constant exponent ---

struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    const SymbolTable& syms;

    explicit Parser(std::string_view s, const SymbolTable& st) : src(s), syms(st) {}

    void skip_ws()
    {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool peek(char c)
    {
        skip_ws();
        return pos < src.size() && src[pos] == c;
    }
    bool consume(char c)
    {
        if (peek(c)) { ++pos; return true; }
        return false;
    }

    [[noreturn]] void err(const std::string& what, std::size_t at)
    {
        throw ParseError(at, "syntax error at byte " + std::to_string(at) + ": " + what);
    }

    NodePtr parse_expression()
    {
        NodePtr lhs = parse_term();
        for (;;) {
            std::size_t at = pos;
            if (consume('+')) lhs = add(lhs, parse_term(), at);
            else if (consume('-')) lhs = sub(lhs, parse_term(), at);
            else return lhs;
        }
    }

    NodePtr parse_term()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            std::size_t at = pos;
            if (consume('*')) lhs = mul(lhs, parse_unary(), at);
            else if (consume('/')) lhs = div(lhs, parse_unary(), at);
            else return lhs;
        }
    }

    NodePtr parse_unary()
    {
        std::size_t at = pos;
        if (consume('-')) return neg(parse_unary(), at);
        if (consume('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        std::size_t at = pos;
        if (consume('^')) {
            NodePtr e = parse_unary();  // right-associative; folds to a constant or errors
            if (!is_const(e)) err("exponent must be a numeric constant", at);
            return power(base, e->value, at);
        }
        return base;
    }

    NodePtr parse_primary()
    {
        skip_ws();
        std::size_t at = pos;
        if (pos >= src.size()) err("unexpected end of input", at);
        char c = src[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        if (consume('(')) {
            NodePtr e = parse_expression();
            if (!consume(')')) err("expected ')'", pos);
            return e;
        }
        err(std::string("unexpected character '") + c + "'", at);
    }

    NodePtr parse_number()
    {
        std::size_t at = pos;
        std::size_t end = pos;
        auto digits = [&] {
            while (end < src.size() && std::isdigit(static_cast<unsigned char>(src[end]))) ++end;
        };
        digits();
        if (end < src.size() && src[end] == '.') { ++end; digits(); }
        if (end < src.size() && (src[end] == 'e' || src[end] == 'E')) {
            std::size_t mark = end;
            ++end;
            if (end < src.size() && (src[end] == '+' || src[end] == '-')) ++end;
            if (end >= src.size() || !std::isdigit(static_cast<unsigned char>(src[end]))) end = mark;
            else digits();
        }
        double v = 0;
        try {
            v = std::stod(std::string(src.substr(at, end - at)));
        } catch (...) {
            err("malformed number", at);
        }
        pos = end;
        return con(v, at);
    }

    NodePtr parse_identifier()
    {
        std::size_t at = pos;
        std::size_t end = pos;
        while (end < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[end])) || src[end] == '_'))
            ++end;
        std::string name(src.substr(at, end - at));
        pos = end;
        if (peek('(')) {
            NodeKind k;
            if (name == "exp") k = NodeKind::exp_;
            else if (name == "ln" || name == "log") k = NodeKind::ln_;
            else if (name == "sin") k = NodeKind::sin_;
            else if (name == "cos") k = NodeKind::cos_;
            else if (name == "sqrt") k = NodeKind::sqrt_;
            else err("unknown function '" + name + "'", at);
            consume('(');
            NodePtr arg = parse_expression();
            if (!consume(')')) err("expected ')' after function argument", pos);
            return unary(k, std::move(arg), at);
        }
        if (int vi = syms.var_index(name); vi >= 0)
            return make_node(NodeKind::variable, 0, vi, nullptr, nullptr, at);
        if (int pi = syms.param_index(name); pi >= 0)
            return make_node(NodeKind::parameter, 0, pi, nullptr, nullptr, at);
        throw ParseError(at, "unknown identifier '" + name + "' at byte " + std::to_string(at));
    }
};

// --- printing ---

int precedence(NodeKind k)
{
    switch (k) {
        case NodeKind::add: case NodeKind::sub: return 1;
        case NodeKind::mul: case NodeKind::div: return 2;
        case NodeKind::neg: return 3;
        case NodeKind::pow: return 4;
        default: return 5;
    }
}

void print_node(std::ostream& os, const Node* n, const SymbolTable& syms, int parent_prec)
{
    int prec = precedence(n->kind);
    bool paren = prec < parent_prec;
    if (paren) os << '(';
    switch (n->kind) {
        case NodeKind::constant: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n->value);
            if (n->value < 0) os << '(' << buf << ')';
            else os << buf;
            break;
        }
        case NodeKind::variable: os << syms.vars()[static_cast<std::size_t>(n->index)]; break;
        case NodeKind::parameter: os << syms.params()[static_cast<std::size_t>(n->index)]; break;
        // right operands take prec + 1: the parser is left-associative, so
        // reparsing "a + b + c" would otherwise regroup (and reround) the tree
        case NodeKind::add:
            print_node(os, n->a.get(), syms, prec); os << " + "; print_node(os, n->b.get(), syms, prec + 1);
            break;
        case NodeKind::sub:
            print_node(os, n->a.get(), syms, prec); os << " - "; print_node(os, n->b.get(), syms, prec + 1);
            break;
        case NodeKind::mul:
            print_node(os, n->a.get(), syms, prec); os << "*"; print_node(os, n->b.get(), syms, prec + 1);
            break;
        case NodeKind::div:
            print_node(os, n->a.get(), syms, prec); os << "/"; print_node(os, n->b.get(), syms, prec + 1);
            break;
        case NodeKind::neg:
            os << "-"; print_node(os, n->a.get(), syms, prec + 1);
            break;
        case NodeKind::pow: {
            print_node(os, n->a.get(), syms, prec + 1);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n->value);
            os << "^(" << buf << ')';
            break;
        }
        case NodeKind::exp_: os << "exp("; print_node(os, n->a.get(), syms, 0); os << ')'; break;
        case NodeKind::ln_: os << "ln("; print_node(os, n->a.get(), syms, 0); os << ')'; break;
        case NodeKind::sin_: os << "sin("; print_node(os, n->a.get(), syms, 0); os << ')'; break;
        case NodeKind::cos_: os << "cos("; print_node(os, n->a.get(), syms, 0); os << ')'; break;
        case NodeKind::sqrt_: os << "sqrt("; print_node(os, n->a.get(), syms, 0); os << ')'; break;
    }
    if (paren) os << ')';
}

std::string node_text(const Node* n, const SymbolTable& syms)
{
    std::ostringstream os;
    print_node(os, n, syms, 0);
    return os.str();
}

// --- differentiation ---

NodePtr diff_node(const NodePtr& n, int var)
{
    switch (n->kind) {
        case NodeKind::constant:
        case NodeKind::parameter:
            return con(0.0);
        case NodeKind::variable:
            return con(n->index == var ? 1.0 : 0.0);
        case NodeKind::add: return add(diff_node(n->a, var), diff_node(n->b, var));
        case NodeKind::sub: return sub(diff_node(n->a, var), diff_node(n->b, var));
        case NodeKind::mul:
            return add(mul(diff_node(n->a, var), n->b), mul(n->a, diff_node(n->b, var)));
        case NodeKind::div:
            // (a/b)' = a'/b - a b'/b^2
            return sub(div(diff_node(n->a, var), n->b),
                       div(mul(n->a, diff_node(n->b, var)), mul(n->b, n->b)));
        case NodeKind::neg: return neg(diff_node(n->a, var));
        case NodeKind::pow:
            // d(a^c) = c a^(c-1) a'
            return mul(mul(con(n->value), power(n->a, n->value - 1.0, n->src_offset)),
                       diff_node(n->a, var));
        case NodeKind::exp_: return mul(unary(NodeKind::exp_, n->a), diff_node(n->a, var));
        case NodeKind::ln_: return div(diff_node(n->a, var), n->a);
        case NodeKind::sin_: return mul(unary(NodeKind::cos_, n->a), diff_node(n->a, var));
        case NodeKind::cos_: return neg(mul(unary(NodeKind::sin_, n->a), diff_node(n->a, var)));
        case NodeKind::sqrt_:
            return div(diff_node(n->a, var), mul(con(2.0), unary(NodeKind::sqrt_, n->a)));
    }
    fail(ErrorCode::invalid_argument, "unreachable node kind");
}

// --- evaluation ---

[[noreturn]] void eval_fail(const char* what, const Node* n, const SymbolTable& syms)
{
    throw EvalError(std::string(what) + " in subexpression '" + node_text(n, syms) +
                        "' (source byte " + std::to_string(n->src_offset) + ")",
                    node_text(n, syms));
}

double eval_node(const Node* n, std::span<const double> state, std::span<const double> params,
                 const SymbolTable& syms)
{
    switch (n->kind) {
        case NodeKind::constant: return n->value;
        case NodeKind::variable: return state[static_cast<std::size_t>(n->index)];
        case NodeKind::parameter: return params[static_cast<std::size_t>(n->index)];
        case NodeKind::add: return eval_node(n->a.get(), state, params, syms) + eval_node(n->b.get(), state, params, syms);
        case NodeKind::sub: return eval_node(n->a.get(), state, params, syms) - eval_node(n->b.get(), state, params, syms);
        case NodeKind::mul: return eval_node(n->a.get(), state, params, syms) * eval_node(n->b.get(), state, params, syms);
        case NodeKind::div: {
            double num = eval_node(n->a.get(), state, params, syms);
            double den = eval_node(n->b.get(), state, params, syms);
            double r = num / den;
            if (!std::isfinite(r)) eval_fail("division by zero", n, syms);
            return r;
        }
        case NodeKind::neg: return -eval_node(n->a.get(), state, params, syms);
        case NodeKind::pow: {
            double b = eval_node(n->a.get(), state, params, syms);
            if (b <= 0) eval_fail("non-integer power of non-positive base", n, syms);
            return std::pow(b, n->value);
        }
        case NodeKind::exp_: {
            double r = std::exp(eval_node(n->a.get(), state, params, syms));
            if (!std::isfinite(r)) eval_fail("exp overflow", n, syms);
            return r;
        }
        case NodeKind::ln_: {
            double a = eval_node(n->a.get(), state, params, syms);
            if (a <= 0) eval_fail("ln of non-positive argument", n, syms);
            return std::log(a);
        }
        case NodeKind::sin_: return std::sin(eval_node(n->a.get(), state, params, syms));
        case NodeKind::cos_: return std::cos(eval_node(n->a.get(), state, params, syms));
        case NodeKind::sqrt_: {
            double a = eval_node(n->a.get(), state, params, syms);
            if (a < 0) eval_fail("sqrt of negative argument", n, syms);
            return std::sqrt(a);
        }
    }
    fail(ErrorCode::invalid_argument, "unreachable node kind");
}

void collect_post_order(const Node* n, std::vector<const Node*>& out)
{
    if (n->a) collect_post_order(n->a.get(), out);
    if (n->b) collect_post_order(n->b.get(), out);
    out.push_back(n);
}

} // namespace

Expr::Expr(NodePtr root, std::shared_ptr<const SymbolTable> syms)
    : root_(std::move(root)), syms_(std::move(syms))
{
}

Expr Expr::parse(std::string_view source, std::shared_ptr<const SymbolTable> syms)
{
    if (!syms) fail(ErrorCode::invalid_argument, "parse: null symbol table");
    Parser p(source, *syms);
    NodePtr root = p.parse_expression();
    p.skip_ws();
    if (p.pos != source.size()) p.err("trailing input", p.pos);
    return Expr(std::move(root), std::move(syms));
}

Expr Expr::constant(double c, std::shared_ptr<const SymbolTable> syms)
{
    return Expr(con(c), std::move(syms));
}

Expr Expr::diff_var(int var_index) const
{
    if (var_index < 0 || var_index >= syms_->num_vars())
        fail(ErrorCode::invalid_argument, "diff: variable index out of range");
    return Expr(diff_node(root_, var_index), syms_);
}

Expr Expr::diff(std::string_view var) const
{
    int vi = syms_->var_index(var);
    if (vi < 0) fail(ErrorCode::invalid_argument, "diff: '" + std::string(var) + "' is not a state variable");
    return diff_var(vi);
}

double Expr::eval(std::span<const double> state) const
{
    return eval(state, syms_->param_values());
}

double Expr::eval(std::span<const double> state, std::span<const double> params) const
{
    if (static_cast<int>(state.size()) != syms_->num_vars())
        fail(ErrorCode::invalid_argument, "eval: state size mismatch");
    if (static_cast<int>(params.size()) != syms_->num_params())
        fail(ErrorCode::invalid_argument, "eval: parameter size mismatch");
    double r = eval_node(root_.get(), state, params, *syms_);
    if (!std::isfinite(r)) eval_fail("non-finite result", root_.get(), *syms_);
    return r;
}

std::string Expr::str() const
{
    return node_text(root_.get(), *syms_);
}

CompiledExpr::CompiledExpr(const Expr& e) : root_(e.root())
{
    collect_post_order(root_.get(), post_);
    int depth = 0;
    max_stack_ = 0;
    for (const Node* n : post_) {
        switch (n->kind) {
            case NodeKind::constant:
            case NodeKind::variable:
            case NodeKind::parameter:
                ++depth;
                break;
            case NodeKind::add: case NodeKind::sub: case NodeKind::mul: case NodeKind::div:
                --depth;
                break;
            default:
                break;  // unary: net zero
        }
        max_stack_ = std::max(max_stack_, depth);
    }
}

double CompiledExpr::eval(std::span<const double> state, std::span<const double> params,
                          std::vector<double>& stack) const
{
    if (static_cast<int>(stack.size()) < max_stack_) stack.resize(static_cast<std::size_t>(max_stack_));
    std::size_t top = 0;
    const Node* bad = nullptr;
    const char* what = nullptr;
    for (const Node* n : post_) {
        switch (n->kind) {
            case NodeKind::constant: stack[top++] = n->value; break;
            case NodeKind::variable: stack[top++] = state[static_cast<std::size_t>(n->index)]; break;
            case NodeKind::parameter: stack[top++] = params[static_cast<std::size_t>(n->index)]; break;
            case NodeKind::add: --top; stack[top - 1] += stack[top]; break;
            case NodeKind::sub: --top; stack[top - 1] -= stack[top]; break;
            case NodeKind::mul: --top; stack[top - 1] *= stack[top]; break;
            case NodeKind::div: {
                --top;
                double r = stack[top - 1] / stack[top];
                if (!std::isfinite(r) && !bad) { bad = n; what = "division by zero"; }
                stack[top - 1] = r;
                break;
            }
            case NodeKind::neg: stack[top - 1] = -stack[top - 1]; break;
            case NodeKind::pow:
                if (stack[top - 1] <= 0 && !bad) { bad = n; what = "non-integer power of non-positive base"; }
                stack[top - 1] = std::pow(stack[top - 1], n->value);
                break;
            case NodeKind::exp_: stack[top - 1] = std::exp(stack[top - 1]); break;
            case NodeKind::ln_:
                if (stack[top - 1] <= 0 && !bad) { bad = n; what = "ln of non-positive argument"; }
                stack[top - 1] = std::log(stack[top - 1]);
                break;
            case NodeKind::sin_: stack[top - 1] = std::sin(stack[top - 1]); break;
            case NodeKind::cos_: stack[top - 1] = std::cos(stack[top - 1]); break;
            case NodeKind::sqrt_:
                if (stack[top - 1] < 0 && !bad) { bad = n; what = "sqrt of negative argument"; }
                stack[top - 1] = std::sqrt(stack[top - 1]);
                break;
        }
    }
    double r = stack[0];
    if (bad || !std::isfinite(r)) {
        const Node* n = bad ? bad : root_.get();
        const char* w = what ? what : "non-finite result";
        throw EvalError(std::string(w) + " (source byte " + std::to_string(n->src_offset) + ")", "");
    }
    return r;
}

} // namespace floq::expr
