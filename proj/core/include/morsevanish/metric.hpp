#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "morsevanish/expression.hpp"

namespace morsevanish {

enum class MetricKind {
    euclidean,       // g = Id
    cone_euclidean,  // g = Id / tau
    kahler_cone,     // g = ((dtau/tau)^2 + (dtau o I / tau)^2 + Id) / tau
    custom,          // user matrix of expressions
};

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& name);

struct MetricSpec {
    MetricKind kind = MetricKind::euclidean;
    std::vector<std::vector<Expression>> custom;
};

struct ProblemSpec;

/// Standard complex structure on R^{2n} in coordinates (u1, v1, ..., un, vn):
/// I d/du = d/dv, I d/dv = -d/du.
Eigen::MatrixXd complex_structure(int real_dimension);

/// Evaluates a problem's metric. Shares nothing mutable, so one instance may
/// serve several threads.
class MetricField {
public:
    explicit MetricField(const ProblemSpec& problem);

    [[nodiscard]] MetricKind kind() const { return spec_.kind; }
    [[nodiscard]] int dimension() const { return dimension_; }

    /// The metric given tau's value and gradient at x.
    [[nodiscard]] Eigen::MatrixXd at(std::span<const double> x, double tau,
                                     const Eigen::VectorXd& dtau) const;

    /// Solves g w = covector for w; throws NotPositiveDefinite when the
    /// Cholesky factorisation fails at tolerance 1e-12.
    [[nodiscard]] static Eigen::VectorXd raise(const Eigen::MatrixXd& g,
                                               const Eigen::VectorXd& covector);

    /// Certifies g symmetric positive definite (same tolerance as raise).
    static void certify(const Eigen::MatrixXd& g);

private:
    MetricSpec spec_;
    int dimension_ = 0;
    std::vector<CompiledExpression> custom_;
};

/// Metric matrix at an interior point.
Eigen::MatrixXd metric_at(const ProblemSpec& problem, std::span<const double> point);

/// Riemannian gradient of f_eps at a point: the solution of g w = d f_eps.
Eigen::VectorXd gradient_field(const ProblemSpec& problem, double eps,
                               std::span<const double> point);

}  // namespace morsevanish
