#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "morsevanish/expression.hpp"
#include "morsevanish/metric.hpp"

namespace morsevanish {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// One coordinate axis of a chart: an open interval, possibly unbounded.
/// Each side flagged as an end is a place where the compactification
/// attaches boundary (tau -> 0 there).
struct Interval {
    double lo = -kInfinity;
    double hi = kInfinity;
    bool lo_is_end = true;
    bool hi_is_end = true;
};

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    [[nodiscard]] int dimension() const { return static_cast<int>(lo.size()); }
    [[nodiscard]] Box scaled(double factor) const;  // about the centre
};

/// R^n or a product of open intervals and half-lines, plus the finite box
/// used by searches and the cubical oracle.
class DomainModel {
public:
    DomainModel() = default;
    DomainModel(std::vector<Interval> axes, Box box);

    static DomainModel real_space(int dimension, double half_width);

    [[nodiscard]] int dimension() const { return static_cast<int>(axes_.size()); }
    [[nodiscard]] const std::vector<Interval>& axes() const { return axes_; }
    [[nodiscard]] const Box& box() const { return box_; }
    [[nodiscard]] bool full_space() const;

    [[nodiscard]] bool contains(std::span<const double> x) const;
    /// Distance to the nearest finite wall (infinity on R^n).
    [[nodiscard]] double distance_to_boundary(std::span<const double> x) const;

    /// The search box clipped so that it stays inside the domain.
    [[nodiscard]] Box clip(const Box& b) const;

private:
    std::vector<Interval> axes_;
    Box box_;
};

struct WindowSpec {
    double a = -1.0;  // may be -infinity
    double b = 1.0;   // may be +infinity
    double lambda = 1.0;
    double Lambda = 2.0;
    double sigma = 0.1;

    /// Symmetric window (-lambda, lambda) with Lambda = 2 lambda.
    static WindowSpec symmetric(double lambda, double sigma = 0.1);

    void validate() const;  // throws ConfigError
    [[nodiscard]] bool inside(double value) const { return a < value && value < b; }
};

struct ProblemSpec {
    std::string name;
    std::vector<std::string> variables;
    DomainModel domain;
    Expression f;
    Expression tau;
    MetricSpec metric;
    WindowSpec window;

    [[nodiscard]] int dimension() const { return domain.dimension(); }
    void validate() const;  // structural checks, throws ConfigError
};

/// f + eps / tau. eps = 0 returns f itself.
Expression perturbed_function(const ProblemSpec& problem, double eps);
Expression perturbed_function(const ProblemSpec& problem, Rational eps);

/// Derivatives of f, tau and f_eps = f + eps / tau at a point.
struct PerturbedJet {
    Derivatives f;
    Derivatives tau;
    Derivatives inv_tau;
    Derivatives total;
    double eps = 0.0;
};

/// Compiled f and tau of a problem; every f_eps is evaluated from the same
/// two tapes, so one evaluator serves a whole epsilon path.
class ProblemEvaluator {
public:
    explicit ProblemEvaluator(const ProblemSpec& problem);

    [[nodiscard]] const ProblemSpec& problem() const { return problem_; }
    [[nodiscard]] int dimension() const { return f_.dimension(); }

    [[nodiscard]] double value(std::span<const double> x, double eps) const;
    [[nodiscard]] double tau(std::span<const double> x) const;
    void jet(std::span<const double> x, double eps, PerturbedJet& out) const;
    [[nodiscard]] PerturbedJet jet(std::span<const double> x, double eps) const;

    [[nodiscard]] const CompiledExpression& f_tape() const { return f_; }
    [[nodiscard]] const CompiledExpression& tau_tape() const { return tau_; }

private:
    ProblemSpec problem_;
    CompiledExpression f_;
    CompiledExpression tau_;
};

/// Re-exposes a problem with an extra linear term: f + sum_i c_i x_i.
ProblemSpec with_linear_tilt(const ProblemSpec& problem, std::span<const double> coefficients);

}  // namespace morsevanish
