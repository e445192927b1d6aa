#include "morsevanish/flow.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "morsevanish/errors.hpp"
#include "morsevanish/parallel.hpp"

namespace morsevanish {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::span<const double> as_span(const VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

VectorXd to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

}  // namespace

// ---------------------------------------------------------------------------
// schedule

double ContinuationSchedule::gamma(double sigma)
{
    if (sigma <= -1.0) return 0.0;
    if (sigma >= 1.0) return 1.0;
    double u = 0.5 * (sigma + 1.0);
    return u * u * (3.0 - 2.0 * u);
}

double ContinuationSchedule::gamma_prime(double sigma)
{
    if (sigma <= -1.0 || sigma >= 1.0) return 0.0;
    double u = 0.5 * (sigma + 1.0);
    return 3.0 * u * (1.0 - u);  // d/dsigma of 3u^2 - 2u^3 with du/dsigma = 1/2
}

ContinuationSchedule ContinuationSchedule::epsilon_path(double from, double to, double delta)
{
    ContinuationSchedule s;
    s.path = Path::epsilon;
    s.from = from;
    s.to = to;
    s.delta = delta;
    return s;
}

ContinuationSchedule ContinuationSchedule::theta_path(double from, double to, double eps,
                                                      double delta)
{
    ContinuationSchedule s;
    s.path = Path::theta;
    s.from = from;
    s.to = to;
    s.eps = eps;
    s.delta = delta;
    return s;
}

double ContinuationSchedule::parameter(double s) const
{
    return from + gamma(delta * s) * (to - from);
}

double ContinuationSchedule::rate(double s) const
{
    return delta * gamma_prime(delta * s) * (to - from);
}

// ---------------------------------------------------------------------------
// flow field

FlowField::FlowField(const ProblemSpec& problem, double eps)
    : evaluator_(problem), metric_(problem), eps_(eps)
{
}

FlowField::FlowField(const ProblemSpec& problem, const ContinuationSchedule& schedule)
    : evaluator_(problem), metric_(problem), schedule_(schedule)
{
    if (schedule.path != ContinuationSchedule::Path::epsilon)
        throw ValidationError("theta paths need an algebraic problem");
    if (!(schedule.delta > 0.0)) throw ValidationError("delta must be positive");
}

FlowField::FlowField(const AlgebraicProblem& problem, const ContinuationSchedule& schedule)
    : evaluator_(realify(problem, 0.0)),
      imaginary_(std::in_place, realify_expression(problem.F, -0.5 * std::numbers::pi),
                 2 * problem.F.variables()),
      metric_(realify(problem, 0.0)),
      schedule_(schedule)
{
    if (schedule.path != ContinuationSchedule::Path::theta)
        throw ValidationError("algebraic flow fields follow theta paths");
    if (!(schedule.delta > 0.0)) throw ValidationError("delta must be positive");
}

FlowField::Coefficients FlowField::coefficients(double s) const
{
    if (!schedule_) return {1.0, 0.0, eps_, 0.0, 0.0, 0.0};
    const auto& sc = *schedule_;
    if (sc.path == ContinuationSchedule::Path::epsilon)
        return {1.0, 0.0, sc.parameter(s), 0.0, 0.0, sc.rate(s)};
    double theta = sc.parameter(s), rate = sc.rate(s);
    double c = std::cos(theta), si = std::sin(theta);
    // Re(e^{i theta} F) = cos(theta) Re F - sin(theta) Im F
    return {c, -si, sc.eps, -si * rate, -c * rate, 0.0};
}

void FlowField::sample(double s, const VectorXd& x, Sample& out) const
{
    if (!problem().domain.contains(as_span(x))) throw DomainViolation("point left the domain");
    thread_local PerturbedJet j;
    thread_local Derivatives b;
    const Coefficients c = coefficients(s);
    evaluator_.jet(as_span(x), c.eps, j);
    out.value = c.a * j.f.value + c.eps * j.inv_tau.value;
    out.df = c.a * j.f.gradient + c.eps * j.inv_tau.gradient;
    out.hessian = c.a * j.f.hessian + c.eps * j.inv_tau.hessian;
    out.ds_value = c.da * j.f.value + c.deps * j.inv_tau.value;
    if (imaginary_) {
        imaginary_->derivatives(as_span(x), b);
        out.value += c.b * b.value;
        out.df += c.b * b.gradient;
        out.hessian += c.b * b.hessian;
        out.ds_value += c.db * b.value;
    }
    MatrixXd g = metric_.at(as_span(x), j.tau.value, j.tau.gradient);
    out.gradient = MetricField::raise(g, out.df);
}

double FlowField::value(double s, const VectorXd& x) const
{
    Sample out;
    sample(s, x, out);
    return out.value;
}

MatrixXd FlowField::metric(const VectorXd& x) const
{
    Derivatives t = evaluator_.tau_tape().derivatives(as_span(x));
    if (!(t.value > 0.0)) throw DomainViolation("tau is not positive");
    return metric_.at(as_span(x), t.value, t.gradient);
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::exited_below: return "exited-below";
    case Termination::exited_above: return "exited-above";
    case Termination::left_domain: return "left-domain";
    case Termination::budget: return "budget";
    }
    return "budget";
}

// ---------------------------------------------------------------------------
// integrator

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

class Integrator {
public:
    Integrator(const FlowField& field, double s0, bool ascending)
        : field_(field), s0_(s0), dir_(ascending ? -1.0 : 1.0), n_(field.dimension())
    {
    }

    [[nodiscard]] double s_at(double t) const { return s0_ + dir_ * t; }

    // d/dt of (x, E); throws DomainViolation. Leaves f_s in value.
    void rhs(double t, const VectorXd& y, VectorXd& dy, double& value) const
    {
        thread_local FlowField::Sample smp;
        field_.sample(s_at(t), y.head(n_), smp);
        dy.resize(n_ + 1);
        dy.head(n_) = -dir_ * smp.gradient;
        dy[n_] = 2.0 * smp.df.dot(smp.gradient) - 2.0 * smp.ds_value;
        value = smp.value;
    }

private:
    const FlowField& field_;
    double s0_;
    double dir_;
    int n_;
};

double segment_distance(const VectorXd& a, const VectorXd& b, const VectorXd& c)
{
    VectorXd d = b - a;
    double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? std::clamp((c - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (a + t * d - c).norm();
}

}  // namespace

TrajectoryRecord integrate_flow(const FlowField& field, const VectorXd& start, double s0,
                                const FlowTargets& targets, const FlowOptions& options)
{
    const int n = field.dimension();
    Integrator ode(field, s0, options.ascending);
    TrajectoryRecord rec;
    rec.start = to_std(start);
    rec.s_begin = s0;

    VectorXd y(n + 1);
    y.head(n) = start;
    y[n] = 0.0;
    VectorXd k1, k2, k3, k4, k5, k6, k7, ytmp(n + 1), y5(n + 1);
    double value = 0.0, value_new = 0.0, scratch = 0.0;
    try {
        ode.rhs(0.0, y, k1, value);
    } catch (const DomainViolation&) {
        rec.termination = Termination::left_domain;
        rec.end = rec.start;
        rec.s_end = s0;
        return rec;
    }
    const double start_value = value;
    rec.max_value = rec.min_value = value;

    double max_disp = kInfinity;
    for (const auto& w : targets.watches) max_disp = std::min(max_disp, 0.25 * w.radius);

    auto armed = [&](double s) { return targets.armed_from <= s && s <= targets.armed_until; };
    std::vector<char> attractor_live(targets.attractors.size());
    for (std::size_t i = 0; i < targets.attractors.size(); ++i)
        attractor_live[i] = !targets.exclude_start ||
                            (start - targets.attractors[i].centre).norm() >= targets.attractors[i].radius;
    double run_min = value, run_max = value;
    std::vector<char> inside_watch(targets.watches.size());
    std::vector<std::pair<double, double>> entry_extremes(targets.watches.size(), {value, value});
    for (std::size_t i = 0; i < targets.watches.size(); ++i)
        inside_watch[i] = (start - targets.watches[i].centre).norm() < targets.watches[i].radius;

    auto record_point = [&](double t, const VectorXd& x, double v) {
        if (options.record_path) rec.path.push_back({ode.s_at(t), to_std(x), v});
    };
    record_point(0.0, y.head(n), value);

    double t = 0.0;
    double h = options.initial_step;
    const Attractor* reached = nullptr;
    bool done = false;
    while (!done) {
        if (rec.steps >= options.max_steps || t >= options.max_duration) {
            rec.termination = Termination::budget;
            break;
        }
        bool domain_trouble = false;
        double err = 0.0;
        try {
            ytmp = y + h * a21 * k1;
            ode.rhs(t + c2 * h, ytmp, k2, scratch);
            ytmp = y + h * (a31 * k1 + a32 * k2);
            ode.rhs(t + c3 * h, ytmp, k3, scratch);
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            ode.rhs(t + c4 * h, ytmp, k4, scratch);
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            ode.rhs(t + c5 * h, ytmp, k5, scratch);
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            ode.rhs(t + h, ytmp, k6, scratch);
            y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            ode.rhs(t + h, y5, k7, value_new);
            VectorXd e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            for (int i = 0; i <= n; ++i) {
                double sc = options.atol +
                            options.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
                err = std::max(err, std::abs(e[i]) / sc);
            }
            if (!std::isfinite(err)) domain_trouble = true;
        } catch (const DomainViolation&) {
            domain_trouble = true;
        } catch (const NotPositiveDefinite&) {
            domain_trouble = true;
        }
        if (domain_trouble) {
            h *= 0.25;
            if (h < options.min_step) {
                rec.termination = Termination::left_domain;
                break;
            }
            continue;
        }
        if ((y5.head(n) - y.head(n)).norm() > max_disp) err = std::max(err, 2.0);
        if (err > 1.0) {
            h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
            if (h < options.min_step)
                throw StepCollapse("step size fell below " + std::to_string(options.min_step) +
                                   " at s = " + std::to_string(ode.s_at(t)));
            continue;
        }

        // accepted
        const VectorXd x_old = y.head(n);
        t += h;
        y = y5;
        std::swap(k1, k7);
        value = value_new;
        ++rec.steps;
        record_point(t, y.head(n), value);
        rec.max_value = std::max(rec.max_value, value);
        rec.min_value = std::min(rec.min_value, value);
        h *= err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2))) : 5.0;

        const VectorXd x = y.head(n);
        const double s = ode.s_at(t);
        for (std::size_t i = 0; i < targets.watches.size(); ++i) {
            const auto& w = targets.watches[i];
            bool now_inside = (x - w.centre).norm() < w.radius;
            bool swept = segment_distance(x_old, x, w.centre) < w.radius;
            if (!inside_watch[i] && (now_inside || swept)) entry_extremes[i] = {run_min, run_max};
            if ((inside_watch[i] || swept) && !now_inside) {
                double proj = (x - w.centre).dot(w.direction);
                rec.itinerary.push_back({w.id, proj >= 0.0 ? 1 : -1, entry_extremes[i].first,
                                         entry_extremes[i].second});
            }
            inside_watch[i] = now_inside;
        }
        run_min = std::min(run_min, value);
        run_max = std::max(run_max, value);

        if (value < targets.lower) {
            rec.termination = Termination::exited_below;
            break;
        }
        if (value > targets.upper) {
            rec.termination = Termination::exited_above;
            break;
        }
        for (std::size_t i = 0; i < targets.attractors.size(); ++i) {
            const auto& a = targets.attractors[i];
            double d = (x - a.centre).norm();
            if (!attractor_live[i]) {
                if (d >= a.radius) attractor_live[i] = 1;
                continue;
            }
            if (d < a.radius && armed(s)) {
                reached = &a;
                rec.termination = Termination::converged;
                rec.target = a.id;
                done = true;
                break;
            }
        }
    }

    rec.end = to_std(y.head(n));
    rec.s_end = ode.s_at(t);
    // leaving the window inside a ball still fixes the side; settling does not
    const bool left = rec.termination == Termination::exited_below ||
                      rec.termination == Termination::exited_above;
    for (std::size_t i = 0; i < targets.watches.size(); ++i)
        if (inside_watch[i]) {
            const auto& w = targets.watches[i];
            const double proj = (y.head(n) - w.centre).dot(w.direction);
            const int side = left && proj != 0.0 ? (proj > 0.0 ? 1 : -1) : 0;
            rec.itinerary.push_back({w.id, side, entry_extremes[i].first, entry_extremes[i].second});
        }

    double energy = y[n];
    if (targets.anchor_value) energy += 2.0 * std::abs(*targets.anchor_value - start_value);
    if (reached) {
        energy += 2.0 * std::abs(value - reached->value);
        const double from = targets.anchor_value.value_or(start_value);
        rec.E_top = options.ascending ? 2.0 * (reached->value - from) : 2.0 * (from - reached->value);
    }
    rec.E_an = energy;
    return rec;
}

namespace {

double attractor_radius(const CriticalPoint& p, double cap)
{
    return p.certification_radius > 0.0 ? std::min(cap, p.certification_radius) : cap;
}

std::vector<Attractor> attractors_of(const std::vector<CriticalPoint>& points,
                                     std::optional<int> index, double cap)
{
    std::vector<Attractor> out;
    for (const auto& p : points) {
        if (p.degenerate) continue;
        if (index && p.index != *index) continue;
        out.push_back({p.id, to_vector(p.coordinates), attractor_radius(p, cap), p.value});
    }
    return out;
}

}  // namespace

TrajectoryRecord integrate_flow(const ProblemSpec& problem, double eps,
                                const std::vector<double>& start,
                                const std::vector<CriticalPoint>& points,
                                const FlowOptions& options)
{
    FlowField field(problem, eps);
    FlowTargets targets;
    targets.attractors = attractors_of(points, std::nullopt, 1e-4);
    const auto& w = problem.window;
    targets.lower = w.a - w.sigma;
    targets.upper = w.b + w.sigma;
    VectorXd x = to_vector(start);
    for (const auto& p : points) {
        if (to_vector(p.coordinates) == x) {
            TrajectoryRecord rec;
            rec.source = rec.target = p.id;
            rec.termination = Termination::converged;
            rec.E_an = rec.E_top = 0.0;
            rec.max_value = rec.min_value = p.value;
            rec.start = rec.end = start;
            return rec;
        }
        if ((to_vector(p.coordinates) - x).norm() <= attractor_radius(p, 1e-4)) {
            targets.anchor_value = p.value;
            targets.anchor_id = p.id;
        }
    }
    TrajectoryRecord rec = integrate_flow(field, x, 0.0, targets, options);
    rec.source = targets.anchor_id;
    // a flowline started inside a ball is the constant solution there
    if (targets.anchor_id >= 0 && rec.converged() && rec.target < 0) rec.target = targets.anchor_id;
    return rec;
}

// ---------------------------------------------------------------------------
// frames

LocalFrame local_frame(const FlowField& field, double s, const CriticalPoint& point)
{
    const VectorXd x = to_vector(point.coordinates);
    FlowField::Sample smp;
    field.sample(s, x, smp);
    const MatrixXd g = field.metric(x);
    const int n = static_cast<int>(x.size());
    MatrixXd H = 0.5 * (smp.hessian + smp.hessian.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(H, g);
    if (ges.info() != Eigen::Success) throw NotPositiveDefinite("generalized eigenproblem failed");
    LocalFrame frame;
    frame.eigenvalues = ges.eigenvalues();
    MatrixXd V = ges.eigenvectors();
    for (int c = 0; c < n; ++c) {
        double scale = V.col(c).cwiseAbs().maxCoeff();
        for (int r = 0; r < n; ++r)
            if (std::abs(V(r, c)) > 1e-8 * scale) {
                if (V(r, c) < 0.0) V.col(c) *= -1.0;
                break;
            }
    }
    const int k = static_cast<int>((frame.eigenvalues.array() < 0.0).count());
    frame.unstable = V.leftCols(k);
    frame.stable = V.rightCols(n - k);
    frame.orientation = k == n ? (frame.unstable.determinant() > 0.0 ? 1 : -1) : 1;
    return frame;
}

// ---------------------------------------------------------------------------
// labels and bisection

namespace {

struct Label {
    std::vector<Passage> itinerary;
    Termination fate = Termination::budget;
    int target = -1;

    bool operator==(const Label& o) const
    {
        return fate == o.fate && target == o.target && itinerary == o.itinerary;
    }
};

Label label_of(const TrajectoryRecord& r)
{
    Label l;
    for (const auto& p : r.itinerary)
        if (p.side != 0) l.itinerary.push_back(p);
    l.fate = r.termination;
    l.target = r.target;
    return l;
}

// Net crossing of a stable manifold between two labels, from the first
// point where they disagree: (side_b - side_a) / 2 at a common saddle.
struct Crossing {
    bool found = false;
    int point = -1;
    int count = 0;
    Passage at_a, at_b;
};

Crossing crossing_between(const Label& a, const Label& b)
{
    std::size_t i = 0;
    while (i < a.itinerary.size() && i < b.itinerary.size() && a.itinerary[i] == b.itinerary[i])
        ++i;
    Crossing c;
    if (i < a.itinerary.size() && i < b.itinerary.size() &&
        a.itinerary[i].point == b.itinerary[i].point &&
        a.itinerary[i].side == -b.itinerary[i].side) {
        c.found = true;
        c.point = a.itinerary[i].point;
        c.count = (b.itinerary[i].side - a.itinerary[i].side) / 2;
        c.at_a = a.itinerary[i];
        c.at_b = b.itinerary[i];
    }
    return c;
}

// Whether a family with these end labels must contain a crossing.
bool brackets(const Label& a, const Label& b)
{
    if (a.fate != b.fate || a.target != b.target) return true;
    for (const auto& pa : a.itinerary)
        for (const auto& pb : b.itinerary)
            if (pa.point == pb.point && pa.side == -pb.side) return true;
    return false;
}

// Bisects every adjacent label change of a sampled one-parameter family.
// `midpoint` picks the split point of an interval; `resolved` says when an
// interval is small enough to read off its crossing.
template <class Launch, class Midpoint, class Resolved>
std::vector<Crossing> resolve_family(const std::vector<double>& params, Launch&& launch,
                                     Midpoint&& midpoint, Resolved&& resolved, bool cyclic,
                                     int jobs)
{
    std::vector<Label> labels(params.size());
    parallel_for(params.size(), jobs, [&](std::size_t i) { labels[i] = launch(params[i]); });

    struct Interval {
        double a, b;
        Label la, lb;
    };
    std::vector<Interval> work;
    const std::size_t m = params.size();
    const std::size_t pairs = cyclic ? m : m - 1;
    for (std::size_t i = 0; i < pairs; ++i) {
        std::size_t j = (i + 1) % m;
        double b = params[j] + (cyclic && j == 0 ? 2.0 * std::numbers::pi : 0.0);
        if (!(labels[i] == labels[j])) work.push_back({params[i], b, labels[i], labels[j]});
    }

    std::vector<Crossing> crossings;
    while (!work.empty()) {
        Interval iv = std::move(work.back());
        work.pop_back();
        if (resolved(iv.a, iv.b)) {
            if (iv.la.fate == Termination::budget || iv.lb.fate == Termination::budget)
                throw UnresolvedBasin("flowline exhausted its budget next to a basin boundary");
            Crossing c = crossing_between(iv.la, iv.lb);
            if (c.found) crossings.push_back(c);
            continue;
        }
        double mid = midpoint(iv.a, iv.b);
        Label lm = launch(mid);
        if (lm == iv.la) {
            work.push_back({mid, iv.b, std::move(lm), std::move(iv.lb)});
        } else if (lm == iv.lb) {
            work.push_back({iv.a, mid, std::move(iv.la), std::move(lm)});
        } else {
            work.push_back({mid, iv.b, lm, iv.lb});
            work.push_back({iv.a, mid, iv.la, std::move(lm)});
        }
    }
    return crossings;
}

double watch_radius(const CriticalPoint& q, const std::vector<CriticalPoint>& points,
                    double fraction)
{
    const VectorXd x = to_vector(q.coordinates);
    double d = kInfinity;
    for (const auto& p : points)
        if (p.id != q.id) d = std::min(d, (to_vector(p.coordinates) - x).norm());
    return std::min(0.5, fraction * d);
}

}  // namespace

// ---------------------------------------------------------------------------
// boundary operator

BoundaryReport compute_boundaries(const ProblemSpec& problem, double eps,
                                  const std::vector<CriticalPoint>& points,
                                  const CountOptions& options)
{
    const int n = problem.dimension();
    BoundaryReport report;
    FlowField field(problem, eps);
    const auto& win = problem.window;

    auto in_window = [](const CriticalPoint& p) { return p.in_window() && !p.degenerate; };
    bool any_source = std::any_of(points.begin(), points.end(), [&](const CriticalPoint& p) {
        return in_window(p) && p.index >= 1;
    });
    if (!any_source) return report;
    if (n > 3)
        throw Unsupported("trajectory counting needs ambient dimension <= 3, got " +
                          std::to_string(n));

    std::vector<LocalFrame> frames(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!points[i].degenerate) frames[i] = local_frame(field, 0.0, points[i]);

    auto base_targets = [&](std::optional<int> index) {
        FlowTargets t;
        t.attractors = attractors_of(points, index, options.attractor_radius);
        t.lower = win.a - win.sigma;
        t.upper = win.b + win.sigma;
        return t;
    };
    auto launch_radius = [&](const CriticalPoint& p) {
        return std::min(options.launch_radius, 0.5 * p.certification_radius);
    };
    auto by_id = [&](int id) -> const CriticalPoint& { return points.at(id); };
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].id != static_cast<int>(i))
            throw ValidationError("critical points must be numbered by position");

    std::mutex mutex;
    auto add_count = [&](int source, int target, int sign) {
        std::lock_guard lock(mutex);
        report.counts[{source, target}] += sign;
    };
    auto add_record = [&](TrajectoryRecord rec) {
        std::lock_guard lock(mutex);
        report.trajectories.push_back(std::move(rec));
    };

    for (const auto& p : points) {
        if (!in_window(p) || p.index < 1) continue;
        for (const auto& q : points)
            if (in_window(q) && q.index == p.index - 1) report.counts[{p.id, q.id}] += 0;
    }

    // index 1: both branches of the unstable line
    std::vector<const CriticalPoint*> branch_sources;
    for (const auto& p : points)
        if (in_window(p) && p.index == 1) branch_sources.push_back(&p);
    parallel_for(branch_sources.size() * 2, options.jobs, [&](std::size_t job) {
        const CriticalPoint& p = *branch_sources[job / 2];
        const double sigma = job % 2 == 0 ? 1.0 : -1.0;
        FlowTargets t = base_targets(0);
        t.anchor_value = p.value;
        t.anchor_id = p.id;
        VectorXd start = to_vector(p.coordinates) + sigma * launch_radius(p) * frames[p.id].unstable.col(0);
        TrajectoryRecord rec = integrate_flow(field, start, 0.0, t, options.flow);
        rec.source = p.id;
        rec.launch = sigma;
        if (rec.converged() && in_window(by_id(rec.target))) {
            rec.sign = static_cast<int>(sigma);
            add_count(p.id, rec.target, rec.sign);
        }
        add_record(std::move(rec));
    });
    for (const auto* p : branch_sources) report.method[p->id] = "branches";

    // index n >= 2: flow backwards out of each index n-1 target
    if (n >= 2) {
        std::vector<const CriticalPoint*> saddle_targets;
        for (const auto& q : points)
            if (in_window(q) && q.index == n - 1) saddle_targets.push_back(&q);
        parallel_for(saddle_targets.size() * 2, options.jobs, [&](std::size_t job) {
            const CriticalPoint& q = *saddle_targets[job / 2];
            const double sigma = job % 2 == 0 ? 1.0 : -1.0;
            FlowTargets t = base_targets(n);
            t.anchor_value = q.value;
            t.anchor_id = q.id;
            const VectorXd w = frames[q.id].stable.col(0);
            VectorXd start = to_vector(q.coordinates) + sigma * launch_radius(q) * w;
            FlowOptions fo = options.flow;
            fo.ascending = true;
            TrajectoryRecord rec = integrate_flow(field, start, 0.0, t, fo);
            rec.launch = sigma;
            if (rec.converged() && in_window(by_id(rec.target))) {
                const int p_id = rec.target;
                MatrixXd frame(n, n);
                frame.col(0) = -sigma * w;
                frame.rightCols(n - 1) = frames[q.id].unstable;
                int sign = (frame.determinant() > 0.0 ? 1 : -1) * frames[p_id].orientation;
                rec.source = p_id;
                rec.target = q.id;
                rec.sign = sign;
                add_count(p_id, q.id, sign);
            } else {
                rec.source = -1;
                rec.target = -1;
            }
            add_record(std::move(rec));
        });
        for (const auto& p : points)
            if (in_window(p) && p.index == n) report.method[p.id] = "backward";
    }

    // n = 3, index 2: circle in the unstable plane
    if (n == 3) {
        for (const auto& p : points) {
            if (!in_window(p) || p.index != 2) continue;
            report.method[p.id] = "circle";
            FlowTargets t = base_targets(0);
            t.anchor_value = p.value;
            t.anchor_id = p.id;
            for (const auto& q : points)
                if (in_window(q) && q.index == 1)
                    t.watches.push_back({q.id, to_vector(q.coordinates),
                                         watch_radius(q, points, options.watch_fraction),
                                         frames[q.id].unstable.col(0)});
            const VectorXd centre = to_vector(p.coordinates);
            const VectorXd u1 = frames[p.id].unstable.col(0), u2 = frames[p.id].unstable.col(1);
            const double r = launch_radius(p);
            auto launch = [&](double phi) {
                VectorXd start = centre + r * (std::cos(phi) * u1 + std::sin(phi) * u2);
                return label_of(integrate_flow(field, start, 0.0, t, options.flow));
            };
            std::vector<double> phis(options.circle_samples);
            for (int j = 0; j < options.circle_samples; ++j)
                phis[j] = 2.0 * std::numbers::pi * (j + 0.3090169943749474) / options.circle_samples;
            const double tol = options.bisection_tolerance * 2.0 * std::numbers::pi;
            auto crossings = resolve_family(
                phis, launch, [](double a, double b) { return 0.5 * (a + b); },
                [tol](double a, double b) { return b - a <= tol; }, true, options.jobs);
            for (const auto& c : crossings) {
                if (!in_window(by_id(c.point))) continue;
                report.counts[{p.id, c.point}] += c.count;
                TrajectoryRecord rec;
                rec.source = p.id;
                rec.target = c.point;
                rec.sign = c.count;
                rec.termination = Termination::converged;
                rec.max_value = c.at_b.max_value_before;
                rec.min_value = c.at_b.min_value_before;
                report.trajectories.push_back(std::move(rec));
            }
        }
    }

    std::sort(report.trajectories.begin(), report.trajectories.end(),
              [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
                  return std::tie(a.source, a.target, a.launch, a.start) <
                         std::tie(b.source, b.target, b.launch, b.start);
              });
    return report;
}

std::map<int, int> count_boundary(const ProblemSpec& problem, double eps,
                                  const std::vector<CriticalPoint>& points, int source,
                                  const CountOptions& options)
{
    if (source < 0 || source >= static_cast<int>(points.size()))
        throw ValidationError("no critical point with id " + std::to_string(source));
    const auto& p = points[source];
    if (p.degenerate)
        throw DegenerateCriticalPoint("source " + std::to_string(source) + " is degenerate");
    std::map<int, int> out;
    if (p.index == 0) return out;
    auto report = compute_boundaries(problem, eps, points, options);
    for (const auto& [key, count] : report.counts)
        if (key.first == source) out[key.second] = count;
    return out;
}

// ---------------------------------------------------------------------------
// energies

Energy energy(const TrajectoryRecord& trajectory)
{
    if (!trajectory.converged() || !std::isfinite(trajectory.E_top) ||
        !std::isfinite(trajectory.E_an))
        throw NotConverged("trajectory does not connect two critical points");
    return {trajectory.E_an, trajectory.E_top};
}

Energy path_energy(const FlowField& field, const std::function<VectorXd(double)>& position,
                   const std::function<VectorXd(double)>& velocity, double s0, double s1)
{
    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [&](double s) {
        FlowField::Sample smp;
        VectorXd x = position(s), v = velocity(s);
        field.sample(s, x, smp);
        MatrixXd g = field.metric(x);
        return v.dot(g * v) + smp.df.dot(smp.gradient) - 2.0 * smp.ds_value;
    };
    Energy e;
    e.analytic = gauss_kronrod<double, 31>::integrate(integrand, s0, s1, 15, 1e-12);
    e.topological = 2.0 * (field.value(s0, position(s0)) - field.value(s1, position(s1)));
    return e;
}

// ---------------------------------------------------------------------------
// continuation

namespace {

struct ContinuationAttempt {
    std::map<std::pair<int, int>, int> counts;
    std::vector<TrajectoryRecord> trajectories;
    bool confined = true;
    double max_excursion = -kInfinity;
    double min_excursion = kInfinity;
};

template <class MakeField>
ContinuationAttempt continuation_attempt(const MakeField& make_field,
                                         const ContinuationSchedule& schedule,
                                         const WindowSpec& win,
                                         const std::vector<CriticalPoint>& sources,
                                         const std::vector<CriticalPoint>& targets,
                                         const ContinuationOptions& options, int n)
{
    const FlowField field = make_field(schedule);
    const auto& co = options.counting;
    const double lower = win.a - win.sigma, upper = win.b + win.sigma;
    const double s_begin = schedule.begin(), s_end = schedule.end();
    ContinuationAttempt out;
    std::mutex mutex;

    auto in_window = [](const CriticalPoint& p) { return p.in_window() && !p.degenerate; };
    for (const auto& p : sources)
        for (const auto& q : targets)
            if (in_window(p) && in_window(q) && p.index == q.index) out.counts[{p.id, q.id}] += 0;

    auto note_solution = [&](double lo, double hi) {
        if (lo < lower || hi > upper) out.confined = false;
        out.max_excursion = std::max(out.max_excursion, hi);
        out.min_excursion = std::min(out.min_excursion, lo);
    };
    auto base = [&](const std::vector<CriticalPoint>& pts, int index) {
        FlowTargets t;
        t.attractors = attractors_of(pts, index, co.attractor_radius);
        t.lower = lower;
        t.upper = upper;
        return t;
    };

    for (const auto& p : sources) {
        if (!in_window(p)) continue;
        const int k = p.index;
        if (k == 0) {
            FlowTargets t = base(targets, 0);
            t.anchor_value = p.value;
            t.anchor_id = p.id;
            t.armed_from = s_end;
            t.exclude_start = false;
            TrajectoryRecord rec = integrate_flow(field, to_vector(p.coordinates), s_begin, t, co.flow);
            rec.source = p.id;
            if (rec.termination == Termination::exited_above) out.confined = false;
            if (rec.converged() && in_window(targets.at(rec.target))) {
                rec.sign = 1;
                out.counts[{p.id, rec.target}] += 1;
                note_solution(rec.min_value, rec.max_value);
            }
            out.trajectories.push_back(std::move(rec));
        } else if (k == n) {
            // handled per target below
        } else if (k == 1) {
            const LocalFrame frame = local_frame(field, s_begin - 1.0, p);
            const VectorXd e = frame.unstable.col(0);
            const double s0 = s_begin;
            double nearest = kInfinity;
            for (const auto& q : sources)
                if (q.id != p.id)
                    nearest = std::min(nearest, (to_vector(q.coordinates) - to_vector(p.coordinates)).norm());
            const Box& box = field.problem().domain.box();
            double half_diagonal = 0.0;
            for (int i = 0; i < box.dimension(); ++i) half_diagonal += std::pow(0.5 * (box.hi[i] - box.lo[i]), 2);
            const double r_max = std::min(0.95 * nearest, std::sqrt(half_diagonal));
            double r = std::min(co.launch_radius, 0.5 * p.certification_radius);
            FlowTargets t = base(targets, 0);
            t.anchor_value = p.value;
            t.anchor_id = p.id;
            t.armed_from = s_end;
            for (const auto& q : targets)
                if (in_window(q) && q.index == 1) {
                    FlowField end_field = make_field(schedule);
                    t.watches.push_back({q.id, to_vector(q.coordinates),
                                         watch_radius(q, targets, co.watch_fraction),
                                         local_frame(end_field, s_end + 1.0, q).unstable.col(0)});
                }
            const VectorXd centre = to_vector(p.coordinates);
            bool exited_above = false;
            auto launch = [&](double xi) {
                TrajectoryRecord rec = integrate_flow(field, centre + xi * e, s0, t, co.flow);
                if (rec.termination == Termination::exited_above) {
                    std::lock_guard lock(mutex);
                    exited_above = true;
                }
                return label_of(rec);
            };
            // the saddle drifts as the parameter moves; widen until the ends bracket something
            while (r < r_max && !brackets(launch(-r), launch(r))) r = std::min(10.0 * r, r_max);
            std::vector<double> xis;
            for (int j = 0; j <= options.xi_decades; ++j) xis.push_back(-r * std::pow(10.0, -j));
            for (int j = options.xi_decades; j >= 0; --j) xis.push_back(r * std::pow(10.0, -j));
            const double innermost = r * std::pow(10.0, -options.xi_decades);
            const double tol = co.bisection_tolerance;
            auto crossings = resolve_family(
                xis, launch,
                [](double a, double b) {
                    return a > 0.0 ? std::sqrt(a * b) : -std::sqrt(a * b);
                },
                [&](double a, double b) {
                    if (a < 0.0 && b > 0.0) return std::max(-a, b) <= innermost * 1.000001;
                    return std::abs(b - a) <= tol * std::max(std::abs(a), std::abs(b));
                },
                false, co.jobs);
            if (exited_above) out.confined = false;
            for (const auto& c : crossings) {
                if (!in_window(targets.at(c.point))) continue;
                out.counts[{p.id, c.point}] += c.count;
                note_solution(std::min(c.at_a.min_value_before, c.at_b.min_value_before),
                              std::max(c.at_a.max_value_before, c.at_b.max_value_before));
                TrajectoryRecord rec;
                rec.source = p.id;
                rec.target = c.point;
                rec.sign = c.count;
                rec.termination = Termination::converged;
                rec.min_value = c.at_b.min_value_before;
                rec.max_value = c.at_b.max_value_before;
                out.trajectories.push_back(std::move(rec));
            }
        } else {
            throw Unsupported("continuation from index " + std::to_string(k) + " in dimension " +
                              std::to_string(n));
        }
    }

    // top index: integrate backwards in s out of each target maximum
    for (const auto& q : targets) {
        if (!in_window(q) || q.index != n) continue;
        FlowTargets t = base(sources, n);
        t.anchor_value = q.value;
        t.anchor_id = q.id;
        t.armed_until = s_begin;
        t.exclude_start = false;
        FlowOptions fo = co.flow;
        fo.ascending = true;
        TrajectoryRecord rec = integrate_flow(field, to_vector(q.coordinates), s_end, t, fo);
        if (rec.termination == Termination::exited_below) out.confined = false;
        if (rec.converged() && in_window(sources.at(rec.target))) {
            const int p_id = rec.target;
            int sign = local_frame(field, s_begin - 1.0, sources.at(p_id)).orientation *
                       local_frame(field, s_end + 1.0, q).orientation;
            rec.source = p_id;
            rec.target = q.id;
            rec.sign = sign;
            out.counts[{p_id, q.id}] += sign;
            note_solution(rec.min_value, rec.max_value);
        } else {
            rec.source = -1;
            rec.target = -1;
        }
        out.trajectories.push_back(std::move(rec));
    }
    return out;
}

template <class MakeField>
ContinuationReport run_continuation(const MakeField& make_field, ContinuationSchedule schedule,
                                    const WindowSpec& window,
                                    const std::vector<CriticalPoint>& sources,
                                    const std::vector<CriticalPoint>& targets,
                                    const ContinuationOptions& options, int n)
{
    for (const auto* list : {&sources, &targets})
        for (std::size_t i = 0; i < list->size(); ++i)
            if ((*list)[i].id != static_cast<int>(i))
                throw ValidationError("critical points must be numbered by position");
    ContinuationReport report;
    int halvings = 0;
    for (double delta = options.initial_delta; delta >= options.delta_floor; delta *= 0.5) {
        schedule.delta = delta;
        ContinuationAttempt a =
            continuation_attempt(make_field, schedule, window, sources, targets, options, n);
        if (a.confined) {
            report.schedule = schedule;
            report.counts = std::move(a.counts);
            report.trajectories = std::move(a.trajectories);
            report.halvings = halvings;
            report.confined = true;
            report.max_excursion = a.max_excursion;
            report.min_excursion = a.min_excursion;
            return report;
        }
        ++halvings;
    }
    throw DeltaFloor("no delta >= " + std::to_string(options.delta_floor) +
                     " keeps the continuation inside the window");
}

}  // namespace

ContinuationReport continuation_trajectories(const ProblemSpec& problem,
                                             const ContinuationSchedule& schedule,
                                             const std::vector<CriticalPoint>& sources,
                                             const std::vector<CriticalPoint>& targets,
                                             const ContinuationOptions& options)
{
    if (schedule.path != ContinuationSchedule::Path::epsilon)
        throw ValidationError("theta paths need an algebraic problem");
    auto make = [&](const ContinuationSchedule& s) { return FlowField(problem, s); };
    return run_continuation(make, schedule, problem.window, sources, targets, options,
                            problem.dimension());
}

ContinuationReport continuation_trajectories(const AlgebraicProblem& problem,
                                             const ContinuationSchedule& schedule,
                                             const std::vector<CriticalPoint>& sources,
                                             const std::vector<CriticalPoint>& targets,
                                             const ContinuationOptions& options)
{
    auto make = [&](const ContinuationSchedule& s) { return FlowField(problem, s); };
    return run_continuation(make, schedule, problem.window, sources, targets, options,
                            2 * problem.F.variables());
}

}  // namespace morsevanish
