#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "morsevanish/expression.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish {

struct PolynomialTerm {
    std::vector<int> monomial;  // exponent of each complex variable
    Rational re{0};
    Rational im{0};
};

/// Polynomial in n complex variables with complex rational coefficients.
class ComplexPolynomial {
public:
    ComplexPolynomial() = default;
    ComplexPolynomial(int n, std::vector<PolynomialTerm> terms);

    static ComplexPolynomial monomial(int n, std::vector<int> exponents, Rational re = 1,
                                      Rational im = 0);

    [[nodiscard]] int variables() const { return n_; }
    [[nodiscard]] const std::vector<PolynomialTerm>& terms() const { return terms_; }

    /// Max total degree over nonzero terms, -1 for the zero polynomial.
    [[nodiscard]] int degree() const;
    [[nodiscard]] std::complex<double> evaluate(const std::vector<std::complex<double>>& z) const;

private:
    int n_ = 0;
    std::vector<PolynomialTerm> terms_;
};

ComplexPolynomial operator+(const ComplexPolynomial& a, const ComplexPolynomial& b);

/// F on C^n compactified in CP^n, with divisor weight alpha.
struct AlgebraicProblem {
    std::string name;
    ComplexPolynomial F;
    int alpha = 0;  // 0 selects alpha = deg F
    double box_half_width = 4.0;
    WindowSpec window = WindowSpec::symmetric(1.0);
    MetricKind metric = MetricKind::kahler_cone;

    [[nodiscard]] int effective_alpha() const;
};

/// Total degree of F, which is minus the order of F along the hyperplane at
/// infinity. Throws ZeroPolynomial.
int pole_order_at_infinity(const ComplexPolynomial& F);

/// tau = (1 + |z|^2)^(-alpha/2) over (u1, v1, ..., un, vn), alpha defaulting
/// to deg F. Throws AlphaTooSmall when alpha < max(deg F, 1).
Expression build_tau(const ComplexPolynomial& F, std::optional<int> alpha = std::nullopt);

/// Re(e^{i theta} F) expanded as a real polynomial in (u_k, v_k), z_k = u_k + i v_k.
Expression realify_expression(const ComplexPolynomial& F, double theta);

/// The real problem on R^{2n} for f_theta = Re(e^{i theta} F).
ProblemSpec realify(const AlgebraicProblem& problem, double theta);

/// Variable names u1, v1, ... (u, v when n = 1).
std::vector<std::string> realified_variable_names(int complex_dimension);

struct CompactificationOptions {
    double bound = 1e6;       // admissible sup |tau f|
    double min_distance = 1e-6;  // closest approach to an end (1/R for infinite ends)
    int rays = 16;
    std::uint64_t seed = 0;
};

struct EndReport {
    std::string label;          // "infinity", "x0=lo", ...
    double max_abs_tau_f = 0.0;
    double tau_near_end = 0.0;  // largest tau at the closest samples
    bool tau_to_zero = false;
    bool finite = true;
};

struct CompactificationReport {
    std::vector<EndReport> ends;
    double max_abs_tau_f = 0.0;
    bool tau_to_zero = true;
    bool tau_positive_inside = true;
    bool pass = false;
    double bound = 0.0;
};

/// Samples tau * f on rays toward every declared end.
CompactificationReport check_compactification(const ProblemSpec& problem,
                                              const CompactificationOptions& options = {});

}  // namespace morsevanish
