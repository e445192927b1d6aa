#include "morsevanish/problem.hpp"

#include <algorithm>
#include <cmath>

#include "morsevanish/errors.hpp"

namespace morsevanish {

Box Box::scaled(double factor) const
{
    Box out = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        double c = 0.5 * (lo[i] + hi[i]);
        double h = 0.5 * (hi[i] - lo[i]) * factor;
        out.lo[i] = c - h;
        out.hi[i] = c + h;
    }
    return out;
}

DomainModel::DomainModel(std::vector<Interval> axes, Box box)
    : axes_(std::move(axes)), box_(std::move(box))
{
    if (box_.dimension() != dimension())
        throw ConfigError("search box dimension does not match the domain");
    for (int i = 0; i < dimension(); ++i) {
        const auto& ax = axes_[i];
        if (!(ax.lo < ax.hi)) throw ConfigError("empty interval on axis " + std::to_string(i));
        if (!(box_.lo[i] < box_.hi[i]) || !std::isfinite(box_.lo[i]) || !std::isfinite(box_.hi[i]))
            throw ConfigError("search box must be finite and non-empty on axis " +
                              std::to_string(i));
    }
    box_ = clip(box_);
}

DomainModel DomainModel::real_space(int dimension, double half_width)
{
    Box b{std::vector<double>(dimension, -half_width), std::vector<double>(dimension, half_width)};
    return DomainModel(std::vector<Interval>(dimension), b);
}

bool DomainModel::full_space() const
{
    return std::all_of(axes_.begin(), axes_.end(), [](const Interval& a) {
        return std::isinf(a.lo) && std::isinf(a.hi);
    });
}

bool DomainModel::contains(std::span<const double> x) const
{
    for (int i = 0; i < dimension(); ++i)
        if (!(axes_[i].lo < x[i] && x[i] < axes_[i].hi)) return false;
    return true;
}

double DomainModel::distance_to_boundary(std::span<const double> x) const
{
    double d = kInfinity;
    for (int i = 0; i < dimension(); ++i) d = std::min({d, x[i] - axes_[i].lo, axes_[i].hi - x[i]});
    return d;
}

Box DomainModel::clip(const Box& b) const
{
    Box out = b;
    for (int i = 0; i < dimension(); ++i) {
        out.lo[i] = std::max(out.lo[i], axes_[i].lo);
        out.hi[i] = std::min(out.hi[i], axes_[i].hi);
    }
    return out;
}

WindowSpec WindowSpec::symmetric(double lambda, double sigma)
{
    WindowSpec w;
    w.a = -lambda;
    w.b = lambda;
    w.lambda = lambda;
    w.Lambda = 2.0 * lambda;
    w.sigma = sigma;
    return w;
}

void WindowSpec::validate() const
{
    if (!(a < b)) throw ConfigError("window requires a < b");
    if (!(lambda > 0.0)) throw ConfigError("window requires lambda > 0");
    if (!(lambda < Lambda)) throw ConfigError("window requires lambda < Lambda");
    if (!(sigma > 0.0)) throw ConfigError("window requires sigma > 0");
}

void ProblemSpec::validate() const
{
    const int n = dimension();
    if (n < 1) throw ConfigError("dimension must be at least 1");
    if (static_cast<int>(variables.size()) != n)
        throw ConfigError("variable list does not match the dimension");
    if (f.max_variable() >= n) throw ConfigError("f references a variable beyond the dimension");
    if (tau.max_variable() >= n)
        throw ConfigError("tau references a variable beyond the dimension");
    if (metric.kind == MetricKind::kahler_cone && n % 2 != 0)
        throw ConfigError("kahler-cone metric needs an even real dimension");
    if (metric.kind == MetricKind::custom) {
        if (static_cast<int>(metric.custom.size()) != n)
            throw ConfigError("custom metric must be an n x n matrix");
        for (const auto& row : metric.custom)
            if (static_cast<int>(row.size()) != n)
                throw ConfigError("custom metric must be an n x n matrix");
    }
    window.validate();
}

Expression perturbed_function(const ProblemSpec& problem, double eps)
{
    if (eps == 0.0) return problem.f;
    return problem.f + Expression::constant(eps) / problem.tau;
}

Expression perturbed_function(const ProblemSpec& problem, Rational eps)
{
    if (eps == Rational{0}) return problem.f;
    return problem.f + Expression::constant(eps) / problem.tau;
}

ProblemEvaluator::ProblemEvaluator(const ProblemSpec& problem)
    : problem_(problem),
      f_(problem.f, problem.dimension()),
      tau_(problem.tau, problem.dimension())
{
}

double ProblemEvaluator::value(std::span<const double> x, double eps) const
{
    double v = f_.value(x);
    if (eps != 0.0) {
        double t = tau_.value(x);
        if (!(t > 0.0)) throw DomainViolation("tau is not positive");
        v += eps / t;
    }
    return v;
}

double ProblemEvaluator::tau(std::span<const double> x) const
{
    return tau_.value(x);
}

void ProblemEvaluator::jet(std::span<const double> x, double eps, PerturbedJet& out) const
{
    f_.derivatives(x, out.f);
    tau_.derivatives(x, out.tau);
    const double t = out.tau.value;
    if (!(t > 0.0)) throw DomainViolation("tau is not positive");
    const auto& g = out.tau.gradient;
    out.inv_tau.value = 1.0 / t;
    out.inv_tau.gradient = -g / (t * t);
    out.inv_tau.hessian = 2.0 * g * g.transpose() / (t * t * t) - out.tau.hessian / (t * t);
    out.eps = eps;
    out.total.value = out.f.value + eps * out.inv_tau.value;
    out.total.gradient = out.f.gradient + eps * out.inv_tau.gradient;
    out.total.hessian = out.f.hessian + eps * out.inv_tau.hessian;
}

PerturbedJet ProblemEvaluator::jet(std::span<const double> x, double eps) const
{
    PerturbedJet j;
    jet(x, eps, j);
    return j;
}

ProblemSpec with_linear_tilt(const ProblemSpec& problem, std::span<const double> coefficients)
{
    ProblemSpec out = problem;
    for (int i = 0; i < problem.dimension(); ++i)
        if (coefficients[i] != 0.0)
            out.f = out.f + Expression::constant(coefficients[i]) * Expression::variable(i);
    return out;
}

}  // namespace morsevanish
