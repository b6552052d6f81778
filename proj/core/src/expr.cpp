#include "cycledeg/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "cycledeg/errors.hpp"

namespace cycledeg {

namespace {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Tan: return "tan";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Abs: return "abs";
        case UnaryOp::Sign: return "sign";
    }
    return "?";
}

const char* binary_symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Pow: return "^";
    }
    return "?";
}

double apply_unary(UnaryOp op, double a) {
    switch (op) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Sin: return std::sin(a);
        case UnaryOp::Cos: return std::cos(a);
        case UnaryOp::Tan: return std::tan(a);
        case UnaryOp::Exp: return std::exp(a);
        case UnaryOp::Log: return std::log(a);
        case UnaryOp::Sqrt: return std::sqrt(a);
        case UnaryOp::Abs: return std::fabs(a);
        case UnaryOp::Sign: return static_cast<double>((a > 0.0) - (a < 0.0));
    }
    return std::nan("");
}

double int_pow(double base, int k) {
    if (k < 0) return 1.0 / int_pow(base, -k);
    double result = 1.0;
    while (k > 0) {
        if (k & 1) result *= base;
        base *= base;
        k >>= 1;
    }
    return result;
}

double apply_binary(BinaryOp op, double a, double b) {
    switch (op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
        case BinaryOp::Pow: return int_pow(a, static_cast<int>(b));
    }
    return std::nan("");
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(std::string_view text, int n) : text_(text), n_(n) {}

    Expr parse() {
        Expr e = expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& message) const { throw SyntaxError(pos_, message); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' before end of input");
            fail(std::string("expected '") + c + "'");
        }
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            if (accept('+')) lhs = Expr::binary(BinaryOp::Add, lhs, term());
            else if (accept('-')) lhs = Expr::binary(BinaryOp::Sub, lhs, term());
            else return lhs;
        }
    }

    Expr term() {
        Expr lhs = factor();
        for (;;) {
            if (accept('*')) lhs = Expr::binary(BinaryOp::Mul, lhs, factor());
            else if (accept('/')) lhs = Expr::binary(BinaryOp::Div, lhs, factor());
            else return lhs;
        }
    }

    Expr factor() {
        if (accept('-')) return Expr::unary(UnaryOp::Neg, factor());
        Expr b = base();
        if (accept('^')) {
            skip_space();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("exponent must be a non-negative integer constant");
            std::string digits(text_.substr(start, pos_ - start));
            if (digits.size() > 6) fail("exponent too large");
            return Expr::binary(BinaryOp::Pow, b, Expr::constant(std::stod(digits)));
        }
        return b;
    }

    Expr base() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr number() {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t s = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            return pos_ - s;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) fail("malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) fail("malformed exponent in number");
        }
        std::string lexeme(text_.substr(start, pos_ - start));
        double v = std::strtod(lexeme.c_str(), nullptr);
        if (!std::isfinite(v)) fail("number out of range");
        return Expr::constant(v);
    }

    Expr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (accept('(')) {
            static constexpr std::array<std::pair<const char*, UnaryOp>, 7> functions{{
                {"sin", UnaryOp::Sin}, {"cos", UnaryOp::Cos}, {"tan", UnaryOp::Tan},
                {"exp", UnaryOp::Exp}, {"log", UnaryOp::Log}, {"sqrt", UnaryOp::Sqrt},
                {"abs", UnaryOp::Abs},
            }};
            for (const auto& [fname, op] : functions) {
                if (name == fname) {
                    Expr arg = expr();
                    expect(')');
                    return Expr::unary(op, arg);
                }
            }
            throw UnknownFunction("unknown function '" + name + "' at position " +
                                  std::to_string(start));
        }
        if (name == "t") return Expr::variable({Variable::kTime});
        if (name == "eps") return Expr::variable({Variable::kEps});
        if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
            bool all_digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                all_digits = all_digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (all_digits && name.size() <= 8) {
                int k = std::stoi(name.substr(1));
                if (k >= 1 && k <= n_) return Expr::variable({k - 1});
            }
        }
        throw UnknownVariable("unknown variable '" + name + "' at position " +
                              std::to_string(start) + " (dimension " + std::to_string(n_) + ")");
    }

    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Builders used by differentiate(); they fold constants and drop additive
// zeros and multiplicative ones.

Expr add(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    return Expr::binary(BinaryOp::Add, a, b);
}

Expr neg(const Expr& a) {
    if (a.is_constant(0.0)) return a;
    return Expr::unary(UnaryOp::Neg, a);
}

Expr sub(const Expr& a, const Expr& b) {
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return neg(b);
    return Expr::binary(BinaryOp::Sub, a, b);
}

Expr mul(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    return Expr::binary(BinaryOp::Mul, a, b);
}

Expr div(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0)) return a;
    if (b.is_constant(1.0)) return a;
    return Expr::binary(BinaryOp::Div, a, b);
}

Expr ipow(const Expr& a, int k) {
    if (k == 1) return a;
    return Expr::binary(BinaryOp::Pow, a, Expr::constant(k));
}

// Walks the tree, throwing at the innermost node whose value is not finite.
double eval_checked(const Expr& e, double t, std::span<const double> x, double eps) {
    const ExprNode& node = e.node();
    double v = 0.0;
    switch (node.kind) {
        case NodeKind::Constant: v = node.value; break;
        case NodeKind::Variable:
            if (node.var.slot == Variable::kTime) v = t;
            else if (node.var.slot == Variable::kEps) v = eps;
            else {
                if (static_cast<std::size_t>(node.var.slot) >= x.size())
                    throw InvalidArgument("state vector too short for " + node.var.name());
                v = x[static_cast<std::size_t>(node.var.slot)];
            }
            break;
        case NodeKind::Unary:
            v = apply_unary(node.unary_op, eval_checked(node.children[0], t, x, eps));
            break;
        case NodeKind::Binary:
            v = apply_binary(node.binary_op, eval_checked(node.children[0], t, x, eps),
                             eval_checked(node.children[1], t, x, eps));
            break;
    }
    if (!std::isfinite(v)) throw NonFiniteValue("non-finite value in subexpression " + e.to_string());
    return v;
}

int max_slot(const Expr& e) {
    const ExprNode& node = e.node();
    int best = node.kind == NodeKind::Variable ? node.var.slot : -1;
    for (const Expr& c : node.children) best = std::max(best, max_slot(c));
    return best;
}

}  // namespace

std::string Variable::name() const {
    if (slot == kTime) return "t";
    if (slot == kEps) return "eps";
    return "x" + std::to_string(slot + 1);
}

Expr Expr::constant(double value) {
    auto node = std::make_shared<ExprNode>();
    node->kind = NodeKind::Constant;
    node->value = value;
    return Expr(std::move(node));
}

Expr Expr::variable(Variable var) {
    auto node = std::make_shared<ExprNode>();
    node->kind = NodeKind::Variable;
    node->var = var;
    return Expr(std::move(node));
}

Expr Expr::unary(UnaryOp op, Expr arg) {
    if (arg.is_constant()) {
        double v = apply_unary(op, arg.node().value);
        if (std::isfinite(v)) return constant(v);
    }
    auto node = std::make_shared<ExprNode>();
    node->kind = NodeKind::Unary;
    node->unary_op = op;
    node->children = {std::move(arg)};
    return Expr(std::move(node));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    if (op == BinaryOp::Pow) {
        if (!rhs.is_constant() || rhs.node().value != std::floor(rhs.node().value))
            throw InvalidArgument("pow exponent must be an integer constant");
    }
    if (lhs.is_constant() && rhs.is_constant()) {
        double v = apply_binary(op, lhs.node().value, rhs.node().value);
        if (std::isfinite(v)) return constant(v);
    }
    auto node = std::make_shared<ExprNode>();
    node->kind = NodeKind::Binary;
    node->binary_op = op;
    node->children = {std::move(lhs), std::move(rhs)};
    return Expr(std::move(node));
}

bool Expr::is_constant() const { return node_ && node_->kind == NodeKind::Constant; }

bool Expr::is_constant(double value) const { return is_constant() && node_->value == value; }

bool Expr::depends_on(Variable var) const {
    if (node_->kind == NodeKind::Variable) return node_->var == var;
    for (const Expr& c : node_->children)
        if (c.depends_on(var)) return true;
    return false;
}

std::size_t Expr::size() const {
    std::size_t s = 1;
    for (const Expr& c : node_->children) s += c.size();
    return s;
}

std::string Expr::to_string() const {
    const ExprNode& node = *node_;
    switch (node.kind) {
        case NodeKind::Constant:
            if (node.value < 0.0 || (node.value == 0.0 && std::signbit(node.value)))
                return "(-" + format_number(-node.value) + ")";
            return format_number(node.value);
        case NodeKind::Variable: return node.var.name();
        case NodeKind::Unary:
            if (node.unary_op == UnaryOp::Neg) return "(-" + node.children[0].to_string() + ")";
            return std::string(unary_name(node.unary_op)) + "(" + node.children[0].to_string() + ")";
        case NodeKind::Binary:
            if (node.binary_op == BinaryOp::Pow)
                return "((" + node.children[0].to_string() + ")^" +
                       format_number(node.children[1].node().value) + ")";
            return "(" + node.children[0].to_string() + " " + binary_symbol(node.binary_op) + " " +
                   node.children[1].to_string() + ")";
    }
    return "?";
}

Expr parse_expression(std::string_view text, int n) {
    if (n < 1) throw InvalidArgument("dimension must be positive");
    return Parser(text, n).parse();
}

double evaluate(const Expr& e, double t, std::span<const double> x, double eps) {
    return eval_checked(e, t, x, eps);
}

double evaluate(const Expr& e, double t, const Eigen::VectorXd& x, double eps) {
    return eval_checked(e, t, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                        eps);
}

Expr differentiate(const Expr& e, Variable var) {
    const ExprNode& node = e.node();
    switch (node.kind) {
        case NodeKind::Constant: return Expr::constant(0.0);
        case NodeKind::Variable: return Expr::constant(node.var == var ? 1.0 : 0.0);
        case NodeKind::Unary: {
            const Expr& u = node.children[0];
            Expr du = differentiate(u, var);
            if (du.is_constant(0.0)) return du;
            switch (node.unary_op) {
                case UnaryOp::Neg: return neg(du);
                case UnaryOp::Sin: return mul(Expr::unary(UnaryOp::Cos, u), du);
                case UnaryOp::Cos: return neg(mul(Expr::unary(UnaryOp::Sin, u), du));
                case UnaryOp::Tan: return div(du, ipow(Expr::unary(UnaryOp::Cos, u), 2));
                case UnaryOp::Exp: return mul(e, du);
                case UnaryOp::Log: return div(du, u);
                case UnaryOp::Sqrt: return div(du, mul(Expr::constant(2.0), e));
                case UnaryOp::Abs: return mul(Expr::unary(UnaryOp::Sign, u), du);
                case UnaryOp::Sign: return Expr::constant(0.0);
            }
            break;
        }
        case NodeKind::Binary: {
            const Expr& u = node.children[0];
            const Expr& v = node.children[1];
            Expr du = differentiate(u, var);
            switch (node.binary_op) {
                case BinaryOp::Add: return add(du, differentiate(v, var));
                case BinaryOp::Sub: return sub(du, differentiate(v, var));
                case BinaryOp::Mul: {
                    Expr dv = differentiate(v, var);
                    return add(mul(du, v), mul(u, dv));
                }
                case BinaryOp::Div: {
                    Expr dv = differentiate(v, var);
                    if (dv.is_constant(0.0)) return div(du, v);
                    return div(sub(mul(du, v), mul(u, dv)), ipow(v, 2));
                }
                case BinaryOp::Pow: {
                    int k = static_cast<int>(v.node().value);
                    if (k == 0 || du.is_constant(0.0)) return Expr::constant(0.0);
                    return mul(mul(Expr::constant(k), ipow(u, k - 1)), du);
                }
            }
            break;
        }
    }
    return Expr::constant(0.0);
}

// ---------------------------------------------------------------------------
// CompiledExpr

namespace {
enum Code : std::uint8_t {
    kConst,
    kTime,
    kEps,
    kState,
    kUnaryBase,                    // + UnaryOp
    kBinaryBase = kUnaryBase + 16  // + BinaryOp
};

void emit(const Expr& e, std::vector<std::tuple<std::uint8_t, int, double>>& out, int depth,
          int& max_depth) {
    const ExprNode& node = e.node();
    switch (node.kind) {
        case NodeKind::Constant: out.emplace_back(kConst, 0, node.value); break;
        case NodeKind::Variable:
            if (node.var.slot == Variable::kTime) out.emplace_back(kTime, 0, 0.0);
            else if (node.var.slot == Variable::kEps) out.emplace_back(kEps, 0, 0.0);
            else out.emplace_back(kState, node.var.slot, 0.0);
            break;
        case NodeKind::Unary:
            emit(node.children[0], out, depth, max_depth);
            out.emplace_back(kUnaryBase + static_cast<std::uint8_t>(node.unary_op), 0, 0.0);
            break;
        case NodeKind::Binary:
            emit(node.children[0], out, depth, max_depth);
            if (node.binary_op == BinaryOp::Pow) {
                out.emplace_back(kBinaryBase + static_cast<std::uint8_t>(BinaryOp::Pow),
                                 static_cast<int>(node.children[1].node().value), 0.0);
                break;
            }
            emit(node.children[1], out, depth + 1, max_depth);
            out.emplace_back(kBinaryBase + static_cast<std::uint8_t>(node.binary_op), 0, 0.0);
            break;
    }
    max_depth = std::max(max_depth, depth + 1);
}
}  // namespace

CompiledExpr::CompiledExpr(const Expr& e) : source_(e) {
    std::vector<std::tuple<std::uint8_t, int, double>> code;
    emit(e, code, 0, max_depth_);
    program_.reserve(code.size());
    for (auto [c, s, v] : code) program_.push_back({c, s, v});
    zero_ = e.is_constant(0.0);
}

double CompiledExpr::operator()(double t, const double* x, double eps) const {
    constexpr int kInline = 64;
    double inline_stack[kInline];
    inline_stack[0] = 0.0;
    std::vector<double> heap;
    double* stack = inline_stack;
    if (max_depth_ > kInline) {
        heap.resize(static_cast<std::size_t>(max_depth_));
        stack = heap.data();
    }
    int top = -1;
    for (const Instr& in : program_) {
        switch (in.code) {
            case kConst: stack[++top] = in.value; break;
            case kTime: stack[++top] = t; break;
            case kEps: stack[++top] = eps; break;
            case kState: stack[++top] = x[in.slot]; break;
            default:
                if (in.code >= kBinaryBase) {
                    auto op = static_cast<BinaryOp>(in.code - kBinaryBase);
                    if (op == BinaryOp::Pow) {
                        stack[top] = int_pow(stack[top], in.slot);
                    } else {
                        double b = stack[top--];
                        stack[top] = apply_binary(op, stack[top], b);
                    }
                } else {
                    stack[top] = apply_unary(static_cast<UnaryOp>(in.code - kUnaryBase), stack[top]);
                }
        }
    }
    double v = stack[0];
    if (!std::isfinite(v)) {
        // Re-walk the tree to name the offending subexpression.
        std::size_t n = static_cast<std::size_t>(std::max(0, max_slot(source_) + 1));
        eval_checked(source_, t, std::span<const double>(x, n), eps);
        throw NonFiniteValue("non-finite value in " + source_.to_string());
    }
    return v;
}

// ---------------------------------------------------------------------------
// SystemSpec

namespace {
std::shared_ptr<const std::vector<CompiledExpr>> compile_all(const std::vector<Expr>& exprs) {
    auto out = std::make_shared<std::vector<CompiledExpr>>();
    out->reserve(exprs.size());
    for (const Expr& e : exprs) out->emplace_back(e);
    return out;
}

std::vector<Expr> flatten(const std::vector<std::vector<Expr>>& m) {
    std::vector<Expr> out;
    for (const auto& row : m) out.insert(out.end(), row.begin(), row.end());
    return out;
}

std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& f, int n) {
    std::vector<std::vector<Expr>> jac(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        for (int j = 0; j < n; ++j) jac[i].push_back(differentiate(f[i], Variable{j}));
    return jac;
}
}  // namespace

SystemSpec::SystemSpec(int n, double period, std::vector<Expr> psi, std::vector<Expr> phi)
    : n_(n), period_(period), psi_(std::move(psi)), phi_(std::move(phi)) {
    if (n_ < 1) throw InvalidSystem("dimension must be positive");
    if (!(period_ > 0.0) || !std::isfinite(period_)) throw InvalidSystem("period must be positive");
    if (psi_.size() != static_cast<std::size_t>(n_) || phi_.size() != static_cast<std::size_t>(n_))
        throw InvalidSystem("psi and phi must each have " + std::to_string(n_) + " components");
    for (std::size_t i = 0; i < psi_.size(); ++i) {
        if (psi_[i].depends_on({Variable::kTime}) || psi_[i].depends_on({Variable::kEps}))
            throw InvalidSystem("psi component " + std::to_string(i + 1) +
                                " must not depend on t or eps");
        if (max_slot(psi_[i]) >= n_ || max_slot(phi_[i]) >= n_)
            throw InvalidSystem("component references a state beyond the dimension");
    }
    psi_jac_ = jacobian(psi_, n_);
    phi_jac_ = jacobian(phi_, n_);
    psi_c_ = compile_all(psi_);
    phi_c_ = compile_all(phi_);
    psi_jac_c_ = compile_all(flatten(psi_jac_));
    phi_jac_c_ = compile_all(flatten(phi_jac_));
}

SystemSpec SystemSpec::from_strings(int n, double period, const std::vector<std::string>& psi,
                                    const std::vector<std::string>& phi) {
    std::vector<Expr> p, q;
    for (const auto& s : psi) p.push_back(parse_expression(s, n));
    for (const auto& s : phi) q.push_back(parse_expression(s, n));
    return SystemSpec(n, period, std::move(p), std::move(q));
}

SystemSpec SystemSpec::with_period(double period) const {
    SystemSpec copy = *this;
    if (!(period > 0.0) || !std::isfinite(period)) throw InvalidSystem("period must be positive");
    copy.period_ = period;
    return copy;
}

SystemSpec SystemSpec::with_phi(std::vector<Expr> phi) const {
    return SystemSpec(n_, period_, psi_, std::move(phi));
}

double SystemSpec::reduce_time(double t) const {
    double r = std::fmod(t, period_);
    if (r < 0.0) r += period_;
    return r;
}

void SystemSpec::eval_psi(const double* x, double* out) const {
    const auto& c = *psi_c_;
    for (int i = 0; i < n_; ++i) out[i] = c[static_cast<std::size_t>(i)](0.0, x, 0.0);
}

void SystemSpec::eval_psi_jacobian(const double* x, double* out) const {
    const auto& c = *psi_jac_c_;
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].is_zero() ? 0.0 : c[k](0.0, x, 0.0);
}

void SystemSpec::eval_phi(double t, const double* x, double eps, double* out) const {
    const auto& c = *phi_c_;
    double tr = reduce_time(t);
    for (int i = 0; i < n_; ++i) out[i] = c[static_cast<std::size_t>(i)](tr, x, eps);
}

void SystemSpec::eval_phi_jacobian(double t, const double* x, double eps, double* out) const {
    const auto& c = *phi_jac_c_;
    double tr = reduce_time(t);
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].is_zero() ? 0.0 : c[k](tr, x, eps);
}

Eigen::VectorXd SystemSpec::psi_at(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(n_);
    eval_psi(x.data(), out.data());
    return out;
}

Eigen::MatrixXd SystemSpec::psi_jacobian_at(const Eigen::VectorXd& x) const {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n_, n_);
    eval_psi_jacobian(x.data(), out.data());
    return out;
}

Eigen::VectorXd SystemSpec::phi_at(double t, const Eigen::VectorXd& x, double eps) const {
    Eigen::VectorXd out(n_);
    eval_phi(t, x.data(), eps, out.data());
    return out;
}

}  // namespace cycledeg
