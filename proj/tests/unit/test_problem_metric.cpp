#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "morsevanish/errors.hpp"
#include "morsevanish/metric.hpp"
#include "morsevanish/problem.hpp"
#include "morsevanish/sampling.hpp"

using namespace morsevanish;

namespace {

ProblemSpec line(const char* f, const char* tau, MetricKind kind = MetricKind::euclidean)
{
    ProblemSpec p;
    p.name = "line";
    p.variables = {"x"};
    p.domain = DomainModel::real_space(1, 4.0);
    p.f = parse_expression(f, p.variables);
    p.tau = parse_expression(tau, p.variables);
    p.metric.kind = kind;
    return p;
}

ProblemSpec corner()
{
    ProblemSpec p;
    p.name = "corner";
    p.variables = {"y1", "y2"};
    p.domain = DomainModel({Interval{0, 1, true, false}, Interval{0, 1, true, false}}, Box{{0, 0}, {1, 1}});
    p.f = parse_expression("-(1/y1+1/y2)", p.variables);
    p.tau = parse_expression("y1*y2", p.variables);
    return p;
}

}  // namespace

TEST(Perturbed, SqrtEscape)
{
    ProblemSpec p;
    p.variables = {"y"};
    p.domain = DomainModel({Interval{0, kInfinity, true, false}}, Box{{0}, {4}});
    p.f = parse_expression("y", p.variables);
    p.tau = parse_expression("y", p.variables);
    const Expression fe = perturbed_function(p, 0.01);
    for (double y : {0.05, 0.1, 2.0}) {
        std::vector<double> x{y};
        EXPECT_NEAR(evaluate(fe, x), y + 0.01 / y, 1e-15);
    }
}

TEST(Perturbed, ZeroEpsIsF)
{
    ProblemSpec p = line("x^4-x^2", "(1+x^2)^(-2)");
    const Expression fe = perturbed_function(p, 0.0);
    std::vector<double> x{1.7};
    EXPECT_DOUBLE_EQ(evaluate(fe, x), evaluate(p.f, x));
}

TEST(Perturbed, Corner)
{
    ProblemSpec p = corner();
    const double eps = 0.03;
    const Expression fe = perturbed_function(p, eps);
    std::vector<double> y{0.2, 0.7};
    EXPECT_NEAR(evaluate(fe, y), -(1 / 0.2 + 1 / 0.7) + eps / (0.2 * 0.7), 1e-13);
}

TEST(Perturbed, EvaluatorJetMatchesExpression)
{
    ProblemSpec p = corner();
    ProblemEvaluator eval(p);
    std::vector<double> y{0.4, 0.3};
    const PerturbedJet jet = eval.jet(y, 0.05);
    const Derivatives d = differentiate(perturbed_function(p, 0.05), y);
    EXPECT_NEAR(jet.total.value, d.value, 1e-13);
    EXPECT_NEAR((jet.total.gradient - d.gradient).norm(), 0.0, 1e-12);
    EXPECT_NEAR((jet.total.hessian - d.hessian).norm(), 0.0, 1e-10);
    EXPECT_DOUBLE_EQ(eval.tau(y), 0.12);
}

TEST(Domain, ContainsAndClip)
{
    ProblemSpec p = corner();
    std::vector<double> in{0.5, 0.5}, out{-0.1, 0.5};
    EXPECT_TRUE(p.domain.contains(in));
    EXPECT_FALSE(p.domain.contains(out));
    EXPECT_FALSE(p.domain.full_space());
    EXPECT_NEAR(p.domain.distance_to_boundary(std::vector<double>{0.2, 0.5}), 0.2, 1e-15);
}

TEST(Window, Validation)
{
    WindowSpec w = WindowSpec::symmetric(1.0);
    EXPECT_NO_THROW(w.validate());
    EXPECT_DOUBLE_EQ(w.Lambda, 2.0);
    w.Lambda = 0.5;
    EXPECT_THROW(w.validate(), ConfigError);
}

TEST(Tilt, AddsLinearTerm)
{
    ProblemSpec p = line("x^2", "(1+x^2)^(-1)");
    std::vector<double> c{0.25};
    ProblemSpec q = with_linear_tilt(p, c);
    std::vector<double> x{2.0};
    EXPECT_DOUBLE_EQ(evaluate(q.f, x), 4.5);
}

TEST(Metric, Examples)
{
    std::vector<double> zero{0.0};
    EXPECT_DOUBLE_EQ(metric_at(line("x^2", "(1+x^2)^(-1)"), zero)(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(metric_at(line("x^2", "(1+x^2)^(-1)", MetricKind::cone_euclidean), zero)(0, 0), 1.0);

    ProblemSpec z2;
    z2.variables = {"u", "v"};
    z2.domain = DomainModel::real_space(2, 4.0);
    z2.f = parse_expression("u^2-v^2", z2.variables);
    z2.tau = parse_expression("(1+u^2+v^2)^(-1)", z2.variables);
    z2.metric.kind = MetricKind::kahler_cone;
    std::vector<double> origin{0.0, 0.0};
    EXPECT_NEAR((metric_at(z2, origin) - Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Metric, GradientExamples)
{
    std::vector<double> one{1.0};
    EXPECT_DOUBLE_EQ(gradient_field(line("x^2", "(1+x^2)^(-1)"), 0.0, one)(0), 2.0);
    EXPECT_NEAR(gradient_field(line("x^2", "(1+x^2)^(-1)", MetricKind::cone_euclidean), 0.0, one)(0), 1.0,
                1e-15);
}

TEST(Metric, ConeGradientIsTauTimesEuclidean)
{
    ProblemSpec e = line("x^4-x^2", "(1+x^2)^(-2)");
    ProblemSpec c = e;
    c.metric.kind = MetricKind::cone_euclidean;
    for (double x : {-2.0, -0.3, 0.4, 1.9}) {
        std::vector<double> p{x};
        const double tau = std::pow(1 + x * x, -2.0);
        EXPECT_NEAR(gradient_field(c, 0.01, p)(0), tau * gradient_field(e, 0.01, p)(0),
                    1e-14 * (1 + std::abs(gradient_field(e, 0.01, p)(0))));
    }
}

TEST(Metric, KahlerConePositiveAndDescending)
{
    ProblemSpec z3;
    z3.variables = {"u", "v"};
    z3.domain = DomainModel::real_space(2, 4.0);
    z3.f = parse_expression("u^3-3*u*v^2", z3.variables);
    z3.tau = parse_expression("(1+u^2+v^2)^(-3/2)", z3.variables);
    z3.metric.kind = MetricKind::kahler_cone;
    ProblemEvaluator eval(z3);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> p{-3 + 6 * portable_uniform(rng), -3 + 6 * portable_uniform(rng)};
        const Eigen::MatrixXd g = metric_at(z3, p);
        EXPECT_NO_THROW(MetricField::certify(g));
        EXPECT_LE((g - g.transpose()).norm(), 1e-12 * g.norm());
        const Eigen::VectorXd w = gradient_field(z3, 0.05, p);
        const PerturbedJet jet = eval.jet(p, 0.05);
        EXPECT_GE(jet.total.gradient.dot(w), 0.0);
        EXPECT_NEAR(w.dot(g * w), jet.total.gradient.dot(w), 1e-9 * (1 + jet.total.gradient.dot(w)));
    }
}

TEST(Metric, ComplexStructure)
{
    const Eigen::MatrixXd I = complex_structure(4);
    EXPECT_NEAR((I * I + Eigen::MatrixXd::Identity(4, 4)).norm(), 0.0, 1e-15);
}

TEST(Metric, NotPositiveDefinite)
{
    Eigen::MatrixXd g(2, 2);
    g << 1, 2, 2, 1;
    EXPECT_THROW(MetricField::certify(g), NotPositiveDefinite);
    EXPECT_EQ(metric_kind_from_string(to_string(MetricKind::kahler_cone)), MetricKind::kahler_cone);
}
