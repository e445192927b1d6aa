#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "morsevanish/critical.hpp"
#include "morsevanish/errors.hpp"
#include "morsevanish/oracle.hpp"

using namespace morsevanish;

namespace {

ProblemSpec half_line(const char* f, const char* tau, double lambda = 1.0)
{
    ProblemSpec p;
    p.name = "half_line";
    p.variables = {"y"};
    p.domain = DomainModel({Interval{0, kInfinity, true, true}}, Box{{0}, {4}});
    p.f = parse_expression(f, p.variables);
    p.tau = parse_expression(tau, p.variables);
    p.window = WindowSpec::symmetric(lambda);
    p.window.Lambda = 10;
    return p;
}

ProblemSpec z_squared(MetricKind kind = MetricKind::kahler_cone)
{
    AlgebraicProblem a;
    a.F = ComplexPolynomial::monomial(1, {2});
    a.metric = kind;
    return realify(a, 0.0);
}

CriticalPoint with_eigenvalues(std::vector<double> eig)
{
    CriticalPoint cp;
    cp.hessian_eigenvalues = std::move(eig);
    return cp;
}

}  // namespace

TEST(Critical, SqrtEscape)
{
    const auto s = find_critical_points(half_line("y", "y"), 0.01);
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_NEAR(s.points[0].coordinates[0], 0.1, 1e-10);
    EXPECT_NEAR(s.points[0].value, 0.2, 1e-10);
    EXPECT_EQ(s.points[0].index, 0);
    EXPECT_TRUE(s.points[0].in_window());
}

TEST(Critical, InverseSquareHalfLine)
{
    const auto s = find_critical_points(half_line("-1/y", "2*y^2", 2.0), 0.1);
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_NEAR(s.points[0].coordinates[0], 0.1, 1e-10);
    // -1/y + eps/(2 y^2) at y = eps
    EXPECT_NEAR(s.points[0].value, -0.5 / 0.1, 1e-9);
}

TEST(Critical, ZSquared)
{
    const auto s = find_critical_points(z_squared(), 0.1);
    ASSERT_EQ(s.points.size(), 1u);
    const auto& p = s.points[0];
    EXPECT_NEAR(std::hypot(p.coordinates[0], p.coordinates[1]), 0.0, 1e-10);
    EXPECT_NEAR(p.value, 0.1, 1e-12);
    EXPECT_EQ(p.index, 1);
    ASSERT_EQ(p.hessian_eigenvalues.size(), 2u);
    EXPECT_NEAR(p.hessian_eigenvalues[0], -1.8, 1e-9);
    EXPECT_NEAR(p.hessian_eigenvalues[1], 2.2, 1e-9);
}

TEST(Critical, IndexIsMetricIndependent)
{
    for (MetricKind kind : {MetricKind::euclidean, MetricKind::cone_euclidean, MetricKind::kahler_cone}) {
        const auto s = find_critical_points(z_squared(kind), 0.1);
        ASSERT_EQ(s.points.size(), 1u);
        EXPECT_EQ(s.points[0].index, 1);
    }
}

TEST(MorseIndex, Examples)
{
    EXPECT_EQ(morse_index(with_eigenvalues({2, 2})), 0);
    EXPECT_EQ(morse_index(with_eigenvalues({-1.8, 2.2})), 1);
    EXPECT_EQ(morse_index(with_eigenvalues({-2, -2})), 2);
    EXPECT_THROW((void)morse_index(with_eigenvalues({0.0, 2.0})), DegenerateCriticalPoint);
}

TEST(Critical, ResidualsReverify)
{
    const ProblemSpec p = catalog_lookup("double_well_1d").problem;
    const auto s = find_critical_points(p, 0.01);
    ASSERT_EQ(s.points.size(), 3u);
    ProblemEvaluator eval(p);
    for (const auto& cp : s.points) {
        EXPECT_LT(scaled_residual(eval.jet(cp.coordinates, 0.01)), 1e-10);
        EXPECT_GT(cp.certification_radius, 0.0);
    }
    EXPECT_EQ(s.points[0].index, 0);
    EXPECT_EQ(s.points[2].index, 1);
}

TEST(Critical, Deterministic)
{
    const ProblemSpec p = catalog_lookup("z^3").problem;
    const auto a = find_critical_points(p, 0.05), b = find_critical_points(p, 0.05);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].coordinates, b.points[i].coordinates);
        EXPECT_EQ(a.points[i].value, b.points[i].value);
    }
    CriticalOptions one;
    one.jobs = 1;
    const auto c = find_critical_points(p, 0.05, one);
    ASSERT_EQ(a.points.size(), c.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].coordinates, c.points[i].coordinates);
}

TEST(Critical, CanonicalSort)
{
    std::vector<CriticalPoint> pts(3);
    pts[0].index = 1;
    pts[0].value = 0.0;
    pts[0].coordinates = {0};
    pts[1].index = 0;
    pts[1].value = 1.0;
    pts[1].coordinates = {2};
    pts[2].index = 0;
    pts[2].value = 1.0 + 1e-13;
    pts[2].coordinates = {1};
    canonical_sort(pts);
    EXPECT_EQ(pts[0].coordinates[0], 1);
    EXPECT_EQ(pts[1].coordinates[0], 2);
    EXPECT_EQ(pts[2].index, 1);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(pts[i].id, i);
}

TEST(Morsify, AlreadyMorse)
{
    const ProblemSpec p = catalog_lookup("double_well_1d").problem;
    const MorsifyResult m = morsify(p, 0.01, 0);
    EXPECT_EQ(m.delta, 0.0);
}

TEST(Morsify, Cubic)
{
    ProblemSpec p;
    p.variables = {"x"};
    p.domain = DomainModel::real_space(1, 4.0);
    p.f = parse_expression("x^3", p.variables);
    p.tau = parse_expression("(1+x^2)^(-3/2)", p.variables);
    p.window = WindowSpec::symmetric(1.0);
    p.window.Lambda = 10;
    ASSERT_TRUE(find_critical_points(p, 0.0).points.at(0).degenerate);
    const MorsifyResult m = morsify(p, 0.0, 1);
    EXPECT_GT(m.delta, 0.0);
    const auto s = find_critical_points(m.problem, 0.0);
    EXPECT_TRUE(s.points.size() == 0 || s.points.size() == 2);
    for (const auto& cp : s.points) EXPECT_FALSE(cp.degenerate);
}

TEST(Morsify, MonkeySaddleAfterPerturbation)
{
    const ProblemSpec p = catalog_lookup("z^3").problem;
    const auto s = find_critical_points(p, 0.05);
    EXPECT_EQ(s.points.size(), 4u);
    for (const auto& cp : s.points) EXPECT_FALSE(cp.degenerate);
    EXPECT_EQ(morsify(p, 0.05, 0).delta, 0.0);
}

TEST(SweepGrid, Parse)
{
    const auto g = parse_eps_grid("2^-3..2^-5");
    ASSERT_EQ(g.size(), 3u);
    EXPECT_DOUBLE_EQ(g[0], 0.125);
    EXPECT_DOUBLE_EQ(g[2], 1.0 / 32);
    EXPECT_EQ(parse_eps_grid("0.1,0.01").size(), 2u);
    EXPECT_DOUBLE_EQ(parse_eps_grid("0.5")[0], 0.5);
    EXPECT_THROW((void)parse_eps_grid("2^-3..x"), ConfigError);
}

TEST(Sweep, BoundedCluster)
{
    const auto grid = parse_eps_grid("2^-4..2^-12");
    const SweepReport r = sweep_epsilon(half_line("y", "y"), grid);
    ASSERT_EQ(r.clusters.size(), 1u);
    EXPECT_TRUE(r.clusters[0].bounded);
    EXPECT_NEAR(r.clusters[0].limit_estimate, 0.0, 0.05);
    EXPECT_TRUE(r.trichotomy_holds);
    for (const auto& [eps, v] : r.clusters[0].trail) EXPECT_NEAR(v, 2 * std::sqrt(eps), 1e-10);
}

TEST(Sweep, DivergentFamilies)
{
    const auto grid = parse_eps_grid("2^-4..2^-10");
    const SweepReport inverse = sweep_epsilon(half_line("-1/y", "2*y^2", 2.0), grid);
    ASSERT_EQ(inverse.clusters.size(), 1u);
    EXPECT_FALSE(inverse.clusters[0].bounded);
    EXPECT_NEAR(inverse.clusters[0].exponent, -1.0, 1e-6);
    EXPECT_NEAR(inverse.clusters[0].coefficient, 0.5, 1e-6);

    const SweepReport c = sweep_epsilon(catalog_lookup("corner_2d").problem, grid);
    ASSERT_EQ(c.clusters.size(), 1u);
    EXPECT_FALSE(c.clusters[0].bounded);
    for (const auto& [eps, v] : c.clusters[0].trail) EXPECT_NEAR(v, -1 / eps, 1e-6);
}

TEST(Sweep, ThetaSquare)
{
    AlgebraicProblem a;
    a.F = ComplexPolynomial::monomial(1, {2});
    const std::vector<double> eps{0.1, 0.05};
    const ThetaSweepReport r = sweep_theta(a, theta_grid(16), eps);
    ASSERT_EQ(r.per_theta.size(), 16u);
    EXPECT_TRUE(r.experimental);
    for (const auto& s : r.per_theta)
        for (const auto& sample : s.samples) {
            ASSERT_EQ(sample.points.size(), 1u);
            EXPECT_NEAR(sample.points[0].value, sample.eps, 1e-12);
        }
    const SweepReport zero = sweep_epsilon(realify(a, 0.0), eps);
    ASSERT_EQ(zero.samples.size(), r.per_theta[0].samples.size());
    for (std::size_t i = 0; i < zero.samples.size(); ++i)
        EXPECT_EQ(zero.samples[i].points[0].value, r.per_theta[0].samples[i].points[0].value);
}
