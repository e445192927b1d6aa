#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "morsevanish/compactify.hpp"
#include "morsevanish/errors.hpp"
#include "morsevanish/sampling.hpp"

using namespace morsevanish;
using cd = std::complex<double>;

namespace {

ComplexPolynomial x_plus_x2y()
{
    return ComplexPolynomial::monomial(2, {1, 0}) + ComplexPolynomial::monomial(2, {2, 1});
}

ComplexPolynomial mixed()
{
    // (1/2 - i) z1^3 + 3 i z1 z2 - 2 z2^2 + 7/3
    return ComplexPolynomial(2, {{{3, 0}, Rational{1, 2}, Rational{-1}},
                                 {{1, 1}, Rational{0}, Rational{3}},
                                 {{0, 2}, Rational{-2}, Rational{0}},
                                 {{0, 0}, Rational{7, 3}, Rational{0}}});
}

cd mixed_direct(cd z1, cd z2)
{
    return cd(0.5, -1) * z1 * z1 * z1 + cd(0, 3) * z1 * z2 - 2.0 * z2 * z2 + 7.0 / 3.0;
}

}  // namespace

TEST(Compactify, PoleOrder)
{
    EXPECT_EQ(pole_order_at_infinity(ComplexPolynomial::monomial(1, {2})), 2);
    EXPECT_EQ(pole_order_at_infinity(x_plus_x2y()), 3);
    EXPECT_EQ(pole_order_at_infinity(ComplexPolynomial::monomial(1, {1})), 1);
    EXPECT_THROW((void)pole_order_at_infinity(ComplexPolynomial(1, {})), ZeroPolynomial);
}

TEST(Compactify, TauDefault)
{
    const Expression tau = build_tau(ComplexPolynomial::monomial(1, {2}));
    for (auto [u, v] : {std::pair{0.0, 0.0}, {1.0, 2.0}, {-0.5, 3.0}}) {
        std::vector<double> p{u, v};
        EXPECT_NEAR(evaluate(tau, p), 1.0 / (1 + u * u + v * v), 1e-15);
    }
    const Expression t3 = build_tau(x_plus_x2y());
    std::vector<double> q{0.1, 0.2, 0.3, 0.4};
    EXPECT_NEAR(evaluate(t3, q), std::pow(1.3, -1.5), 1e-15);
}

TEST(Compactify, AlphaTooSmall)
{
    EXPECT_THROW((void)build_tau(ComplexPolynomial::monomial(1, {3}), 2), AlphaTooSmall);
    EXPECT_NO_THROW((void)build_tau(ComplexPolynomial::monomial(1, {3}), 3));
}

TEST(Compactify, TauMonotoneInAlpha)
{
    const ComplexPolynomial F = ComplexPolynomial::monomial(1, {2});
    std::mt19937_64 rng(5);
    for (int alpha = 2; alpha < 6; ++alpha) {
        const Expression lo = build_tau(F, alpha), hi = build_tau(F, alpha + 1);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> p{-5 + 10 * portable_uniform(rng), -5 + 10 * portable_uniform(rng)};
            EXPECT_LE(evaluate(hi, p), evaluate(lo, p));
        }
    }
}

TEST(Realify, SquareExamples)
{
    const ComplexPolynomial F = ComplexPolynomial::monomial(1, {2});
    const Expression f0 = realify_expression(F, 0.0);
    const Expression fpi = realify_expression(F, std::numbers::pi);
    std::vector<double> p{1.3, -0.4};
    EXPECT_NEAR(evaluate(f0, p), 1.69 - 0.16, 1e-14);
    EXPECT_NEAR(evaluate(fpi, p), 0.16 - 1.69, 1e-14);
}

TEST(Realify, XPlusX2YExpansion)
{
    const Expression f = realify_expression(x_plus_x2y(), 0.0);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        const double u1 = portable_normal(rng), v1 = portable_normal(rng);
        const double u2 = portable_normal(rng), v2 = portable_normal(rng);
        std::vector<double> p{u1, v1, u2, v2};
        const double expected = u1 + u1 * u1 * u2 - v1 * v1 * u2 - 2 * u1 * v1 * v2;
        EXPECT_NEAR(evaluate(f, p), expected, 1e-12 * (1 + std::abs(expected)));
    }
}

TEST(Realify, MatchesComplexArithmetic)
{
    const ComplexPolynomial F = mixed();
    std::mt19937_64 rng(13);
    for (int k = 0; k < 16; ++k) {
        const double theta = 2 * std::numbers::pi * k / 16;
        const Expression f = realify_expression(F, theta);
        for (int i = 0; i < 10; ++i) {
            const cd z1(portable_normal(rng), portable_normal(rng));
            const cd z2(portable_normal(rng), portable_normal(rng));
            std::vector<double> p{z1.real(), z1.imag(), z2.real(), z2.imag()};
            const double expected = (std::polar(1.0, theta) * mixed_direct(z1, z2)).real();
            EXPECT_NEAR(evaluate(f, p), expected, 1e-11 * (1 + std::abs(expected)));
            EXPECT_NEAR(std::abs(F.evaluate({z1, z2}) - mixed_direct(z1, z2)), 0.0, 1e-11);
        }
    }
}

TEST(Realify, ProblemShape)
{
    AlgebraicProblem a;
    a.name = "xy";
    a.F = x_plus_x2y();
    const ProblemSpec p = realify(a, 0.0);
    EXPECT_EQ(p.dimension(), 4);
    EXPECT_EQ(p.variables, realified_variable_names(2));
    EXPECT_EQ(realified_variable_names(1), (std::vector<std::string>{"u", "v"}));
    EXPECT_EQ(a.effective_alpha(), 3);
    EXPECT_EQ(p.metric.kind, MetricKind::kahler_cone);
}

TEST(Compactification, Examples)
{
    ProblemSpec p;
    p.variables = {"x"};
    p.domain = DomainModel::real_space(1, 4.0);
    p.tau = parse_expression("(1+x^2)^(-1)", p.variables);
    p.f = parse_expression("x^2", p.variables);
    const CompactificationReport ok = check_compactification(p);
    EXPECT_TRUE(ok.pass);
    EXPECT_LE(ok.max_abs_tau_f, 1.0 + 1e-12);
    EXPECT_GT(ok.max_abs_tau_f, 0.99);
    for (const auto& end : ok.ends) EXPECT_TRUE(end.tau_to_zero) << end.label;

    p.f = parse_expression("x^4", p.variables);
    EXPECT_FALSE(check_compactification(p).pass);

    AlgebraicProblem a;
    a.F = ComplexPolynomial::monomial(1, {2});
    const CompactificationReport z2 = check_compactification(realify(a, 0.0));
    EXPECT_TRUE(z2.pass);
    EXPECT_LE(z2.max_abs_tau_f, 1.0 + 1e-12);
}

TEST(Compactification, PassesForAllThetas)
{
    AlgebraicProblem a;
    a.F = mixed();
    for (int k = 0; k < 16; ++k) {
        const double theta = 2 * std::numbers::pi * k / 16;
        EXPECT_TRUE(check_compactification(realify(a, theta)).pass) << theta;
    }
}
