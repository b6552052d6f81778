#pragma once

// Scalar expressions over t, eps and x1..xn: parsing, evaluation, symbolic
// differentiation, and the SystemSpec that bundles the unperturbed field psi
// with the periodic perturbation phi.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cycledeg {

enum class NodeKind : std::uint8_t { Constant, Variable, Unary, Binary };

// Sign is produced only by differentiating abs; it is not part of the input grammar.
enum class UnaryOp : std::uint8_t { Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sign };

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

/// Variable slot: Time, Eps, or state index 0..n-1 (x1 is index 0).
struct Variable {
    static constexpr int kTime = -1;
    static constexpr int kEps = -2;
    int slot = kTime;

    [[nodiscard]] bool is_state() const { return slot >= 0; }
    [[nodiscard]] std::string name() const;
    friend bool operator==(Variable, Variable) = default;
};

struct ExprNode;

/// Immutable, shareable expression tree handle.
class Expr {
public:
    Expr() = default;

    static Expr constant(double value);
    static Expr variable(Variable var);
    static Expr unary(UnaryOp op, Expr arg);
    /// For Pow the right operand must be an integer constant.
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

    [[nodiscard]] const ExprNode& node() const { return *node_; }
    [[nodiscard]] bool valid() const { return node_ != nullptr; }

    [[nodiscard]] bool is_constant() const;
    [[nodiscard]] bool is_constant(double value) const;
    /// True if the variable occurs anywhere in the tree.
    [[nodiscard]] bool depends_on(Variable var) const;
    [[nodiscard]] std::size_t size() const;

    /// Fully parenthesized text that parses back to an equivalent tree.
    [[nodiscard]] std::string to_string() const;

private:
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;   // Constant; exponent for Pow is stored in the rhs constant
    Variable var;         // Variable
    UnaryOp unary_op = UnaryOp::Neg;
    BinaryOp binary_op = BinaryOp::Add;
    std::vector<Expr> children;
};

/// Parse `text` for a system of dimension n. Throws SyntaxError,
/// UnknownVariable or UnknownFunction.
Expr parse_expression(std::string_view text, int n);

/// Evaluate with IEEE doubles. Throws NonFiniteValue naming the offending
/// subexpression when any intermediate result is not finite.
double evaluate(const Expr& e, double t, std::span<const double> x, double eps);
double evaluate(const Expr& e, double t, const Eigen::VectorXd& x, double eps);

/// Exact symbolic derivative with respect to `var`; constant subtrees are
/// folded, nothing else is simplified.
Expr differentiate(const Expr& e, Variable var);

/// Flat postfix program for hot loops. Produces the same value as evaluate()
/// but only checks finiteness of the final result.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const Expr& e);

    [[nodiscard]] double operator()(double t, const double* x, double eps) const;
    [[nodiscard]] const Expr& source() const { return source_; }
    [[nodiscard]] bool is_zero() const { return zero_; }

private:
    struct Instr {
        std::uint8_t code;
        int slot;
        double value;
    };
    std::vector<Instr> program_;
    int max_depth_ = 0;
    bool zero_ = false;
    Expr source_;
};

/// Problem definition: xdot = psi(x) + eps * phi(t, x, eps), phi T-periodic in t.
class SystemSpec {
public:
    /// Throws InvalidSystem if psi depends on t or eps, or the sizes do not match n.
    SystemSpec(int n, double period, std::vector<Expr> psi, std::vector<Expr> phi);

    /// Parses the component strings; parse errors propagate unchanged.
    static SystemSpec from_strings(int n, double period, const std::vector<std::string>& psi,
                                   const std::vector<std::string>& phi);

    [[nodiscard]] int dimension() const { return n_; }
    [[nodiscard]] double period() const { return period_; }
    /// Copy with a different period; expressions are shared.
    [[nodiscard]] SystemSpec with_period(double period) const;
    /// Copy with a different perturbation.
    [[nodiscard]] SystemSpec with_phi(std::vector<Expr> phi) const;

    [[nodiscard]] const std::vector<Expr>& psi() const { return psi_; }
    [[nodiscard]] const std::vector<Expr>& phi() const { return phi_; }
    /// psi_jacobian()[i][j] = d psi_i / d x_j
    [[nodiscard]] const std::vector<std::vector<Expr>>& psi_jacobian() const { return psi_jac_; }
    [[nodiscard]] const std::vector<std::vector<Expr>>& phi_jacobian() const { return phi_jac_; }

    void eval_psi(const double* x, double* out) const;
    /// Row-major n*n.
    void eval_psi_jacobian(const double* x, double* out) const;
    /// Time is reduced modulo the period before evaluation.
    void eval_phi(double t, const double* x, double eps, double* out) const;
    void eval_phi_jacobian(double t, const double* x, double eps, double* out) const;

    [[nodiscard]] Eigen::VectorXd psi_at(const Eigen::VectorXd& x) const;
    [[nodiscard]] Eigen::MatrixXd psi_jacobian_at(const Eigen::VectorXd& x) const;
    [[nodiscard]] Eigen::VectorXd phi_at(double t, const Eigen::VectorXd& x, double eps) const;

    [[nodiscard]] double reduce_time(double t) const;

private:
    int n_;
    double period_;
    std::vector<Expr> psi_, phi_;
    std::vector<std::vector<Expr>> psi_jac_, phi_jac_;
    std::shared_ptr<const std::vector<CompiledExpr>> psi_c_, psi_jac_c_, phi_c_, phi_jac_c_;
};

}  // namespace cycledeg
