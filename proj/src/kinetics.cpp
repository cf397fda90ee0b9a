#include "floqpatch/kinetics.hpp"

#include <cmath>

namespace floq::kinetics {

Eigen::MatrixXd small_inverse(const Eigen::MatrixXd& A)
{
    const auto n = A.rows();
    if (A.cols() != n) fail(ErrorCode::invalid_argument, "small_inverse: matrix not square");
    if (n <= 4) {
        double det = A.determinant();
        if (std::abs(det) <= 1e-12)
            fail(ErrorCode::numerical, "singular matrix: |det| = " + std::to_string(std::abs(det)));
        Eigen::MatrixXd inv(n, n);
        switch (n) {
            case 1: inv(0, 0) = 1.0 / A(0, 0); break;
            case 2:
                inv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
                inv /= det;
                break;
            default: {
                // adjugate via signed cofactors
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < n; ++j) {
                        Eigen::MatrixXd minor(n - 1, n - 1);
                        for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
                            if (r == i) continue;
                            for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
                                if (c == j) continue;
                                minor(rr, cc++) = A(r, c);
                            }
                            ++rr;
                        }
                        double cof = minor.determinant();
                        inv(j, i) = (((i + j) % 2) ? -cof : cof) / det;
                    }
                break;
            }
        }
        return inv;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible() || std::abs(lu.determinant()) <= 1e-12)
        fail(ErrorCode::numerical, "singular matrix in small_inverse");
    return lu.inverse();
}

void KineticSystem::compile()
{
    rhs_c_.clear();
    jac_c_.clear();
    for (const auto& e : rhs_) rhs_c_.emplace_back(e);
    for (const auto& e : jac_) jac_c_.emplace_back(e);
}

KineticSystem KineticSystem::from_expressions(std::shared_ptr<SymbolTable> syms,
                                              const std::vector<std::string>& rhs_sources,
                                              std::string name)
{
    if (!syms) fail(ErrorCode::invalid_argument, "null symbol table");
    KineticSystem ks;
    ks.m_ = syms->num_vars();
    if (static_cast<int>(rhs_sources.size()) != ks.m_)
        fail(ErrorCode::invalid_argument, "kinetic system: need one RHS expression per state variable");
    ks.name_ = std::move(name);
    ks.syms_ = std::move(syms);
    std::shared_ptr<const SymbolTable> csyms = ks.syms_;
    for (const auto& src : rhs_sources) ks.rhs_.push_back(Expr::parse(src, csyms));
    for (int i = 0; i < ks.m_; ++i)
        for (int j = 0; j < ks.m_; ++j)
            ks.jac_.push_back(ks.rhs_[static_cast<std::size_t>(i)].diff_var(j));
    ks.compile();
    return ks;
}

KineticSystem KineticSystem::holling_tanner(double a, double h, double K, double m,
                                            double r, double s)
{
    for (auto [v, n] : {std::pair{a, "a"}, {h, "h"}, {K, "K"}, {m, "m"}, {r, "r"}, {s, "s"}})
        if (!(v > 0)) fail(ErrorCode::invalid_argument,
                           std::string("holling_tanner: parameter ") + n + " must be positive");
    auto syms = std::make_shared<SymbolTable>(
        std::vector<std::string>{"u", "v"},
        std::vector<std::string>{"a", "h", "K", "m", "r", "s"},
        std::vector<double>{a, h, K, m, r, s});
    auto ks = from_expressions(syms,
                               {"r*u*(1 - u/K) - m*u*v/(u + a)",
                                "s*v*(1 - h*v/u)"},
                               "holling_tanner");
    ks.positive_vars_ = {0};  // u > 0; v = 0 gives Q = 0 by the formula itself
    return ks;
}

double KineticSystem::param(const std::string& name) const
{
    int i = syms_->param_index(name);
    if (i < 0) fail(ErrorCode::invalid_argument, "unknown parameter '" + name + "'");
    return syms_->param_values()[static_cast<std::size_t>(i)];
}

void KineticSystem::set_param(const std::string& name, double value)
{
    syms_->set_param(name, value);
}

KineticSystem KineticSystem::with_param(const std::string& name, double value) const
{
    KineticSystem copy = *this;
    // symbol table is shared; give the copy its own before mutating
    copy.syms_ = std::make_shared<SymbolTable>(*syms_);
    copy.syms_->set_param(name, value);
    // expressions reference symbols by index only, parameter values are passed
    // at evaluation, so the ASTs and tapes can be reused as-is
    return copy;
}

void KineticSystem::check_domain(std::span<const double> y) const
{
    for (int vi : positive_vars_)
        if (!(y[static_cast<std::size_t>(vi)] > 0.0))
            fail(ErrorCode::domain,
                 name_ + ": state variable '" + syms_->vars()[static_cast<std::size_t>(vi)] +
                     "' left its domain (must stay positive, got " +
                     std::to_string(y[static_cast<std::size_t>(vi)]) + ")");
}

void KineticSystem::rhs(std::span<const double> y, std::span<double> out) const
{
    check_domain(y);
    thread_local std::vector<double> stack;
    std::span<const double> pv = syms_->param_values();
    for (int i = 0; i < m_; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = rhs_c_[static_cast<std::size_t>(i)].eval(y, pv, stack);
        } catch (const expr::EvalError&) {
            rhs_[static_cast<std::size_t>(i)].eval(y, pv);  // rethrows with full node text
            throw;
        }
    }
}

Eigen::VectorXd KineticSystem::rhs(const Eigen::VectorXd& y) const
{
    Eigen::VectorXd out(m_);
    rhs(std::span<const double>(y.data(), static_cast<std::size_t>(m_)),
        std::span<double>(out.data(), static_cast<std::size_t>(m_)));
    return out;
}

void KineticSystem::jacobian(std::span<const double> y, Eigen::MatrixXd& out) const
{
    check_domain(y);
    out.resize(m_, m_);
    thread_local std::vector<double> stack;
    std::span<const double> pv = syms_->param_values();
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j)
            out(i, j) = jac_c_[static_cast<std::size_t>(i * m_ + j)].eval(y, pv, stack);
}

Eigen::MatrixXd KineticSystem::jacobian(const Eigen::VectorXd& y) const
{
    Eigen::MatrixXd out;
    jacobian(std::span<const double>(y.data(), static_cast<std::size_t>(m_)), out);
    return out;
}

double KineticSystem::jacobian_trace(std::span<const double> y) const
{
    check_domain(y);
    thread_local std::vector<double> stack;
    std::span<const double> pv = syms_->param_values();
    double tr = 0;
    for (int i = 0; i < m_; ++i) tr += jac_c_[static_cast<std::size_t>(i * m_ + i)].eval(y, pv, stack);
    return tr;
}

PerturbedSystem::PerturbedSystem(KineticSystem ks, Eigen::MatrixXd D, double eps)
    : ks_(std::move(ks)), D_(std::move(D)), eps_(eps)
{
    const int m = ks_.dim();
    if (D_.rows() != m || D_.cols() != m)
        fail(ErrorCode::invalid_argument, "perturbed system: D must be m x m");
    if (!D_.allFinite())
        fail(ErrorCode::invalid_argument, "perturbed system: D has non-finite entries");
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m) + eps_ * D_;
    minv_ = small_inverse(M);  // fails when |det(I + eps D)| <= 1e-12
}

void PerturbedSystem::rhs(std::span<const double> y, std::span<double> out) const
{
    const int m = ks_.dim();
    thread_local std::vector<double> f;
    f.resize(static_cast<std::size_t>(m));
    ks_.rhs(y, f);
    for (int i = 0; i < m; ++i) {
        double acc = 0;
        for (int j = 0; j < m; ++j) acc += minv_(i, j) * f[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
}

Eigen::VectorXd PerturbedSystem::rhs(const Eigen::VectorXd& y) const
{
    Eigen::VectorXd out(ks_.dim());
    rhs(std::span<const double>(y.data(), static_cast<std::size_t>(ks_.dim())),
        std::span<double>(out.data(), static_cast<std::size_t>(ks_.dim())));
    return out;
}

void PerturbedSystem::jacobian(std::span<const double> y, Eigen::MatrixXd& out) const
{
    Eigen::MatrixXd J;
    ks_.jacobian(y, J);
    out = minv_ * J;
}

Eigen::VectorXd perturbation_first_order(const KineticSystem& ks, const Eigen::MatrixXd& D,
                                         const Eigen::VectorXd& y)
{
    if (D.rows() != ks.dim() || D.cols() != ks.dim())
        fail(ErrorCode::invalid_argument, "perturbation_first_order: D must be m x m");
    return -D * ks.rhs(y);
}

} // namespace floq::kinetics
