#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/rational.hpp>

namespace morsevanish {

using Rational = boost::rational<std::int64_t>;

enum class NodeKind {
    constant,
    variable,
    sum,
    product,
    int_power,       // base^k, k integer (may be negative)
    rational_power,  // base^(p/q), base must stay > 0
    quotient,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;              // constant
    std::optional<Rational> exact;   // constant, when known exactly
    int variable = -1;               // variable index
    Rational exponent{1};            // powers
    std::vector<NodePtr> children;
};

/// Immutable symbolic scalar expression over real variables x_0..x_{n-1}.
///
/// Nodes are shared, so copies are cheap and expressions can be used from
/// several threads at once.
class Expression {
public:
    Expression();  // the constant 0

    static Expression constant(Rational value);
    static Expression constant(double value);
    static Expression variable(int index);

    [[nodiscard]] Expression pow(int k) const;
    [[nodiscard]] Expression pow(Rational p) const;

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);

    [[nodiscard]] const Node& node() const { return *node_; }
    [[nodiscard]] const NodePtr& shared() const { return node_; }
    [[nodiscard]] NodeKind kind() const { return node_->kind; }
    [[nodiscard]] bool is_constant(double v) const;

    /// Largest variable index referenced, or -1.
    [[nodiscard]] int max_variable() const;

    /// Infix rendering, parseable by parse_expression with the same names.
    [[nodiscard]] std::string to_string(std::span<const std::string> names) const;

private:
    explicit Expression(NodePtr node) : node_(std::move(node)) {}
    NodePtr node_;
};

/// Parses the infix grammar
///
///     expr   := term (('+' | '-') term)*
///     term   := unary (('*' | '/') unary)*
///     unary  := ('-' | '+') unary | power
///     power  := atom ('^' exponent)?
///     atom   := number | name | '(' expr ')' | 'pow' '(' expr ',' exponent ')'
///
/// Exponents are constant rationals such as `2`, `-1`, `(1/2)` or `(-3/2)`.
/// Decimal literals are read exactly (0.01 becomes 1/100).
/// Throws ParseError carrying the 1-based column of the offending token.
Expression parse_expression(std::string_view text, std::span<const std::string> variables);

/// Value, gradient and Hessian at one point.
struct Derivatives {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// Postorder tape of an Expression; evaluation is allocation-free after
/// warm-up and safe to call concurrently.
class CompiledExpression {
public:
    CompiledExpression() = default;
    CompiledExpression(const Expression& expr, int dimension);

    [[nodiscard]] int dimension() const { return dimension_; }

    /// Throws DomainViolation outside the domain of a power or quotient.
    [[nodiscard]] double value(std::span<const double> x) const;

    /// Second-order forward mode: one pass yields value, gradient and a
    /// symmetric Hessian.
    void derivatives(std::span<const double> x, Derivatives& out) const;
    [[nodiscard]] Derivatives derivatives(std::span<const double> x) const;

private:
    struct Instr {
        NodeKind kind;
        double constant = 0.0;
        int variable = -1;
        int power = 0;
        double exponent = 0.0;
        int arg_begin = 0;
        int arg_count = 0;
    };
    std::vector<Instr> tape_;
    std::vector<int> args_;
    int dimension_ = 0;
};

double evaluate(const Expression& expr, std::span<const double> point);
Derivatives differentiate(const Expression& expr, std::span<const double> point);

/// Default variable names: x / x,y / x,y,z / x1..xn.
std::vector<std::string> default_variable_names(int dimension);

}  // namespace morsevanish
