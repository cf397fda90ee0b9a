#ifndef FLOQPATCH_KINETICS_HPP
#define FLOQPATCH_KINETICS_HPP

// m-dimensional kinetic systems U' = F(U) with exact symbolic Jacobians,
// plus the (I + eps*D)-perturbed auxiliary systems.

#include "floqpatch/expr.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace floq::kinetics {

using expr::Expr;
using expr::SymbolTable;

// Closed-form adjugate inverse for m <= 4, LU otherwise.
// Fails when |det| <= 1e-12.
Eigen::MatrixXd small_inverse(const Eigen::MatrixXd& A);

class KineticSystem {
public:
    static KineticSystem from_expressions(std::shared_ptr<SymbolTable> syms,
                                          const std::vector<std::string>& rhs_sources,
                                          std::string name = "custom");

    // Holling-Tanner predator-prey kinetics; all parameters must be positive.
    // State (u, v), domain u > 0.
    static KineticSystem holling_tanner(double a, double h, double K, double m,
                                        double r, double s);

    int dim() const { return m_; }
    const std::string& name() const { return name_; }
    const SymbolTable& symbols() const { return *syms_; }

    const Expr& rhs_expr(int i) const { return rhs_[static_cast<std::size_t>(i)]; }
    const Expr& jacobian_expr(int i, int j) const { return jac_[static_cast<std::size_t>(i * m_ + j)]; }

    double param(const std::string& name) const;
    void set_param(const std::string& name, double value);
    KineticSystem with_param(const std::string& name, double value) const;

    // F(y); errors when y violates the domain or an expression leaves its domain.
    void rhs(std::span<const double> y, std::span<double> out) const;
    Eigen::VectorXd rhs(const Eigen::VectorXd& y) const;

    // F_U(y), exact symbolic Jacobian.
    void jacobian(std::span<const double> y, Eigen::MatrixXd& out) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const;
    double jacobian_trace(std::span<const double> y) const;

    // Variables required strictly positive along any evaluation.
    const std::vector<int>& positive_vars() const { return positive_vars_; }

private:
    KineticSystem() = default;
    void compile();
    void check_domain(std::span<const double> y) const;

    int m_ = 0;
    std::string name_;
    std::shared_ptr<SymbolTable> syms_;
    std::vector<Expr> rhs_, jac_;
    std::vector<expr::CompiledExpr> rhs_c_, jac_c_;
    std::vector<int> positive_vars_;
};

// (I_m + eps*D)^{-1} F; the inverse is cached at construction.
class PerturbedSystem {
public:
    PerturbedSystem(KineticSystem ks, Eigen::MatrixXd D, double eps);

    const KineticSystem& base() const { return ks_; }
    const Eigen::MatrixXd& diffusion() const { return D_; }
    double eps() const { return eps_; }
    const Eigen::MatrixXd& premultiplier() const { return minv_; }

    void rhs(std::span<const double> y, std::span<double> out) const;
    Eigen::VectorXd rhs(const Eigen::VectorXd& y) const;
    void jacobian(std::span<const double> y, Eigen::MatrixXd& out) const;

private:
    KineticSystem ks_;
    Eigen::MatrixXd D_;
    double eps_;
    Eigen::MatrixXd minv_;
};

// -D*F(y): the first-order term in eps of the perturbed right-hand side.
Eigen::VectorXd perturbation_first_order(const KineticSystem& ks, const Eigen::MatrixXd& D,
                                         const Eigen::VectorXd& y);

} // namespace floq::kinetics

#endif
