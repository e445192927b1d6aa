#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "morsevanish/compactify.hpp"
#include "morsevanish/critical.hpp"
#include "morsevanish/metric.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish {

/// Slow interpolation between two parameter values. The parameter moves
/// along gamma(delta s), where gamma is the smoothstep 3u^2 - 2u^3 in
/// u = (sigma + 1) / 2, clamped to 0 below sigma = -1 and to 1 above 1.
struct ContinuationSchedule {
    enum class Path { epsilon, theta };

    Path path = Path::epsilon;
    double from = 0.0;
    double to = 0.0;
    double eps = 0.0;  // held fixed along theta paths
    double delta = 0.5;

    static double gamma(double sigma);
    static double gamma_prime(double sigma);

    static ContinuationSchedule epsilon_path(double from, double to, double delta = 0.5);
    static ContinuationSchedule theta_path(double from, double to, double eps, double delta = 0.5);

    [[nodiscard]] double begin() const { return -1.0 / delta; }
    [[nodiscard]] double end() const { return 1.0 / delta; }
    [[nodiscard]] double parameter(double s) const;
    [[nodiscard]] double rate(double s) const;  // d parameter / ds
};

/// f_s and its negative gradient flow. Autonomous when built from a single
/// epsilon; otherwise f_s follows a ContinuationSchedule.
class FlowField {
public:
    FlowField(const ProblemSpec& problem, double eps);
    FlowField(const ProblemSpec& problem, const ContinuationSchedule& schedule);
    FlowField(const AlgebraicProblem& problem, const ContinuationSchedule& schedule);

    struct Sample {
        double value = 0.0;
        double ds_value = 0.0;  // partial_s f_s at fixed x
        Eigen::VectorXd df;
        Eigen::VectorXd gradient;  // g^{-1} df
        Eigen::MatrixXd hessian;
    };

    /// Throws DomainViolation outside the domain.
    void sample(double s, const Eigen::VectorXd& x, Sample& out) const;
    [[nodiscard]] double value(double s, const Eigen::VectorXd& x) const;
    [[nodiscard]] Eigen::MatrixXd metric(const Eigen::VectorXd& x) const;

    [[nodiscard]] const ProblemSpec& problem() const { return evaluator_.problem(); }
    [[nodiscard]] int dimension() const { return evaluator_.dimension(); }
    [[nodiscard]] bool autonomous() const { return !schedule_; }
    [[nodiscard]] const std::optional<ContinuationSchedule>& schedule() const { return schedule_; }

private:
    struct Coefficients {
        double a, b, eps;     // f_s = a A + b B + eps / tau
        double da, db, deps;  // their s-derivatives
    };
    [[nodiscard]] Coefficients coefficients(double s) const;

    ProblemEvaluator evaluator_;  // f = A
    std::optional<CompiledExpression> imaginary_;  // B, theta paths only
    MetricField metric_;
    double eps_ = 0.0;
    std::optional<ContinuationSchedule> schedule_;
};

enum class Termination { converged, exited_below, exited_above, left_domain, budget };
std::string to_string(Termination t);

/// Passage through the watch ball of an index-1 point, with the side of its
/// unstable direction on which the flowline left.
struct Passage {
    int point = -1;
    int side = 0;
    double min_value_before = 0.0;  // lowest f_s reached before entering
    double max_value_before = 0.0;

    bool operator==(const Passage& o) const { return point == o.point && side == o.side; }
};

struct PathPoint {
    double s = 0.0;
    std::vector<double> x;
    double value = 0.0;
};

struct TrajectoryRecord {
    int source = -1;  // critical point the flowline leaves (upper end)
    int target = -1;  // critical point it converges to (lower end), -1 if none
    Termination termination = Termination::budget;
    int sign = 0;
    double launch = 0.0;  // launch parameter: branch, angle or xi
    double E_an = std::numeric_limits<double>::quiet_NaN();
    double E_top = std::numeric_limits<double>::quiet_NaN();
    double max_value = -std::numeric_limits<double>::infinity();
    double min_value = std::numeric_limits<double>::infinity();
    long steps = 0;
    double s_begin = 0.0;
    double s_end = 0.0;
    std::vector<double> start;
    std::vector<double> end;
    std::vector<Passage> itinerary;
    std::vector<PathPoint> path;

    [[nodiscard]] bool converged() const { return termination == Termination::converged; }
};

struct Attractor {
    int id = -1;
    Eigen::VectorXd centre;
    double radius = 0.0;
    double value = 0.0;
};

struct Watch {
    int id = -1;
    Eigen::VectorXd centre;
    double radius = 0.0;
    Eigen::VectorXd direction;  // unstable eigendirection
};

struct FlowTargets {
    std::vector<Attractor> attractors;
    std::vector<Watch> watches;
    double lower = -std::numeric_limits<double>::infinity();  // a - sigma
    double upper = std::numeric_limits<double>::infinity();   // b + sigma
    std::optional<double> anchor_value;  // critical value at the launch point
    int anchor_id = -1;
    // attractors only count for s in [armed_from, armed_until]; watches always
    double armed_from = -std::numeric_limits<double>::infinity();
    double armed_until = std::numeric_limits<double>::infinity();
    // attractor balls holding the start only count once the flowline has left them
    bool exclude_start = true;
};

struct FlowOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    long max_steps = 200'000;
    double max_duration = 1e5;
    bool ascending = false;  // integrate backwards in s along +grad
    bool record_path = false;
};

/// Dormand-Prince 5(4) integration of x' = -grad_g f_s(x) (or its reverse),
/// carrying the analytic-energy integrand as an extra state component.
/// Stops on entering an armed attractor ball, leaving [lower, upper], leaving
/// the domain or exhausting the budget. Throws StepCollapse.
TrajectoryRecord integrate_flow(const FlowField& field, const Eigen::VectorXd& start, double s0,
                                const FlowTargets& targets, const FlowOptions& options = {});

/// Autonomous convenience form: attractor balls of radius
/// min(certification radius, 1e-4) around every nondegenerate point.
TrajectoryRecord integrate_flow(const ProblemSpec& problem, double eps,
                                const std::vector<double>& start,
                                const std::vector<CriticalPoint>& points,
                                const FlowOptions& options = {});

// ---------------------------------------------------------------------------
// orientation data

/// Solutions of H v = mu g v at a critical point; columns g-orthonormal,
/// each with first significant component positive.
struct LocalFrame {
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd unstable;     // n x index
    Eigen::MatrixXd stable;       // n x (n - index)
    int orientation = 1;          // sign det [unstable, stable] when index = n
};

LocalFrame local_frame(const FlowField& field, double s, const CriticalPoint& point);

// ---------------------------------------------------------------------------
// boundary operator

struct CountOptions {
    double launch_radius = 1e-4;
    double attractor_radius = 1e-4;
    int circle_samples = 64;
    double bisection_tolerance = 1e-12;
    double watch_fraction = 0.3;
    FlowOptions flow;
    int jobs = 0;
};

struct BoundaryReport {
    std::map<std::pair<int, int>, int> counts;  // (source id, target id) -> signed count
    std::map<int, std::string> method;          // per source: branches | backward | circle
    std::vector<TrajectoryRecord> trajectories;
};

/// Signed counts <d p, q> for every window point p of index k >= 1 and
/// window q of index k - 1. Supported for ambient dimension <= 3.
/// Throws Unsupported, UnresolvedBasin.
BoundaryReport compute_boundaries(const ProblemSpec& problem, double eps,
                                  const std::vector<CriticalPoint>& points,
                                  const CountOptions& options = {});

/// Counts for one source.
std::map<int, int> count_boundary(const ProblemSpec& problem, double eps,
                                  const std::vector<CriticalPoint>& points, int source,
                                  const CountOptions& options = {});

// ---------------------------------------------------------------------------
// energies

struct Energy {
    double analytic = 0.0;
    double topological = 0.0;
};

/// Energies of a converged trajectory. Throws NotConverged.
Energy energy(const TrajectoryRecord& trajectory);

/// Energies of an arbitrary smooth path x(s), s in [s0, s1], under f_s:
/// int |x'|^2 + |grad f|^2 - 2 d_s f, and 2 (f(x(s0)) - f(x(s1))).
Energy path_energy(const FlowField& field,
                   const std::function<Eigen::VectorXd(double)>& position,
                   const std::function<Eigen::VectorXd(double)>& velocity, double s0, double s1);

// ---------------------------------------------------------------------------
// continuation

struct ContinuationOptions {
    CountOptions counting;
    double initial_delta = 0.5;
    double delta_floor = 1e-6;
    int xi_decades = 16;
};

struct ContinuationReport {
    ContinuationSchedule schedule;  // with the accepted delta
    std::map<std::pair<int, int>, int> counts;  // (source id, target id)
    std::vector<TrajectoryRecord> trajectories;
    int halvings = 0;
    bool confined = false;
    double max_excursion = -std::numeric_limits<double>::infinity();
    double min_excursion = std::numeric_limits<double>::infinity();
};

/// Counts solutions of the delta-slow equation from window generators of
/// f_from to window generators of f_to of equal index, halving delta from
/// 0.5 until every counted solution stays in [a - sigma, b + sigma] and no
/// flowline rises above b + sigma. Supported source indices: 0, 1 and n.
/// Throws DeltaFloor, Unsupported, UnresolvedBasin.
ContinuationReport continuation_trajectories(const ProblemSpec& problem,
                                             const ContinuationSchedule& schedule,
                                             const std::vector<CriticalPoint>& sources,
                                             const std::vector<CriticalPoint>& targets,
                                             const ContinuationOptions& options = {});

ContinuationReport continuation_trajectories(const AlgebraicProblem& problem,
                                             const ContinuationSchedule& schedule,
                                             const std::vector<CriticalPoint>& sources,
                                             const std::vector<CriticalPoint>& targets,
                                             const ContinuationOptions& options = {});

}  // namespace morsevanish
