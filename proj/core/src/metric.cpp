#include "morsevanish/metric.hpp"

#include <cmath>

#include "morsevanish/errors.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish {

std::string to_string(MetricKind kind)
{
    switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::cone_euclidean: return "cone-euclidean";
    case MetricKind::kahler_cone: return "kahler-cone";
    case MetricKind::custom: return "custom";
    }
    return "euclidean";
}

MetricKind metric_kind_from_string(const std::string& name)
{
    if (name == "euclidean") return MetricKind::euclidean;
    if (name == "cone-euclidean") return MetricKind::cone_euclidean;
    if (name == "kahler-cone") return MetricKind::kahler_cone;
    if (name == "custom") return MetricKind::custom;
    throw ConfigError("unknown metric kind '" + name + "'");
}

Eigen::MatrixXd complex_structure(int real_dimension)
{
    if (real_dimension % 2 != 0) throw ValidationError("complex structure needs even dimension");
    Eigen::MatrixXd I = Eigen::MatrixXd::Zero(real_dimension, real_dimension);
    for (int k = 0; k < real_dimension; k += 2) {
        I(k + 1, k) = 1.0;   // I e_u = e_v
        I(k, k + 1) = -1.0;  // I e_v = -e_u
    }
    return I;
}

MetricField::MetricField(const ProblemSpec& problem)
    : spec_(problem.metric), dimension_(problem.dimension())
{
    if (spec_.kind == MetricKind::custom)
        for (const auto& row : spec_.custom)
            for (const auto& e : row) custom_.emplace_back(e, dimension_);
}

Eigen::MatrixXd MetricField::at(std::span<const double> x, double tau,
                                const Eigen::VectorXd& dtau) const
{
    const int n = dimension_;
    switch (spec_.kind) {
    case MetricKind::euclidean: return Eigen::MatrixXd::Identity(n, n);
    case MetricKind::cone_euclidean: return Eigen::MatrixXd::Identity(n, n) / tau;
    case MetricKind::kahler_cone: {
        // dtau o I as a covector is I^T dtau
        Eigen::VectorXd a = dtau / tau;
        Eigen::VectorXd b = complex_structure(n).transpose() * a;
        Eigen::MatrixXd g = a * a.transpose() + b * b.transpose();
        g.diagonal().array() += 1.0;
        return g / tau;
    }
    case MetricKind::custom: {
        Eigen::MatrixXd g(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) g(r, c) = custom_[r * n + c].value(x);
        g = 0.5 * (g + g.transpose());
        certify(g);
        return g;
    }
    }
    return Eigen::MatrixXd::Identity(n, n);
}

void MetricField::certify(const Eigen::MatrixXd& g)
{
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Cholesky factorisation failed");
    const Eigen::MatrixXd L = llt.matrixL();
    double scale = std::max(1.0, g.diagonal().cwiseAbs().maxCoeff());
    double pivot = L.diagonal().cwiseAbs2().minCoeff();
    if (!(pivot > 1e-12 * scale)) throw NotPositiveDefinite("Cholesky pivot below 1e-12");
}

Eigen::VectorXd MetricField::raise(const Eigen::MatrixXd& g, const Eigen::VectorXd& covector)
{
    if (g.rows() == 1) {
        if (!(g(0, 0) > 0.0)) throw NotPositiveDefinite("metric is not positive");
        return covector / g(0, 0);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Cholesky factorisation failed");
    return llt.solve(covector);
}

Eigen::MatrixXd metric_at(const ProblemSpec& problem, std::span<const double> point)
{
    MetricField field(problem);
    Derivatives tau = differentiate(problem.tau, point);
    if (!(tau.value > 0.0)) throw DomainViolation("tau is not positive");
    return field.at(point, tau.value, tau.gradient);
}

Eigen::VectorXd gradient_field(const ProblemSpec& problem, double eps,
                               std::span<const double> point)
{
    ProblemEvaluator eval(problem);
    MetricField field(problem);
    PerturbedJet j = eval.jet(point, eps);
    Eigen::MatrixXd g = field.at(point, j.tau.value, j.tau.gradient);
    if (field.kind() == MetricKind::custom) MetricField::certify(g);
    return MetricField::raise(g, j.total.gradient);
}

}  // namespace morsevanish
