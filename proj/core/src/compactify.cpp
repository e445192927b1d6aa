#include "morsevanish/compactify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "morsevanish/errors.hpp"
#include "morsevanish/sampling.hpp"

namespace morsevanish {

ComplexPolynomial::ComplexPolynomial(int n, std::vector<PolynomialTerm> terms)
    : n_(n), terms_(std::move(terms))
{
    for (const auto& t : terms_)
        if (static_cast<int>(t.monomial.size()) != n_ ||
            std::any_of(t.monomial.begin(), t.monomial.end(), [](int e) { return e < 0; }))
            throw ConfigError("monomial must list one non-negative exponent per variable");
}

ComplexPolynomial ComplexPolynomial::monomial(int n, std::vector<int> exponents, Rational re,
                                              Rational im)
{
    return ComplexPolynomial(n, {PolynomialTerm{std::move(exponents), re, im}});
}

int ComplexPolynomial::degree() const
{
    int d = -1;
    for (const auto& t : terms_) {
        if (t.re == Rational{0} && t.im == Rational{0}) continue;
        int total = 0;
        for (int e : t.monomial) total += e;
        d = std::max(d, total);
    }
    return d;
}

std::complex<double> ComplexPolynomial::evaluate(const std::vector<std::complex<double>>& z) const
{
    std::complex<double> sum = 0.0;
    for (const auto& t : terms_) {
        std::complex<double> term(boost::rational_cast<double>(t.re),
                                  boost::rational_cast<double>(t.im));
        for (int k = 0; k < n_; ++k) term *= std::pow(z[k], t.monomial[k]);
        sum += term;
    }
    return sum;
}

ComplexPolynomial operator+(const ComplexPolynomial& a, const ComplexPolynomial& b)
{
    if (a.variables() != b.variables())
        throw ValidationError("adding polynomials in different numbers of variables");
    auto terms = a.terms();
    terms.insert(terms.end(), b.terms().begin(), b.terms().end());
    return ComplexPolynomial(a.variables(), terms);
}

int AlgebraicProblem::effective_alpha() const
{
    return alpha > 0 ? alpha : std::max(pole_order_at_infinity(F), 1);
}

int pole_order_at_infinity(const ComplexPolynomial& F)
{
    int d = F.degree();
    if (d < 0) throw ZeroPolynomial("F has no nonzero term");
    return d;
}

Expression build_tau(const ComplexPolynomial& F, std::optional<int> alpha)
{
    const int d = pole_order_at_infinity(F);
    const int a = alpha.value_or(std::max(d, 1));
    if (a < std::max(d, 1))
        throw AlphaTooSmall("alpha = " + std::to_string(a) + " but max(deg F, 1) = " +
                            std::to_string(std::max(d, 1)));
    Expression norm = Expression::constant(Rational{1});
    for (int k = 0; k < 2 * F.variables(); ++k) norm = norm + Expression::variable(k).pow(2);
    return norm.pow(Rational{-a, 2});
}

std::vector<std::string> realified_variable_names(int complex_dimension)
{
    if (complex_dimension == 1) return {"u", "v"};
    std::vector<std::string> names;
    for (int k = 1; k <= complex_dimension; ++k) {
        names.push_back("u" + std::to_string(k));
        names.push_back("v" + std::to_string(k));
    }
    return names;
}

namespace {

// Gaussian-integer polynomial in 2n real variables.
using RealMonomial = std::vector<int>;
using GaussianPoly = std::map<RealMonomial, std::pair<std::int64_t, std::int64_t>>;

GaussianPoly expand_monomial(const std::vector<int>& exponents)
{
    const int n = static_cast<int>(exponents.size());
    GaussianPoly p{{RealMonomial(2 * n, 0), {1, 0}}};
    for (int k = 0; k < n; ++k) {
        for (int rep = 0; rep < exponents[k]; ++rep) {
            GaussianPoly next;
            for (const auto& [mono, c] : p) {
                // (re + i im) * u_k
                RealMonomial mu = mono;
                ++mu[2 * k];
                next[mu].first += c.first;
                next[mu].second += c.second;
                // (re + i im) * i v_k = (-im + i re) v_k
                RealMonomial mv = mono;
                ++mv[2 * k + 1];
                next[mv].first -= c.second;
                next[mv].second += c.first;
            }
            p = std::move(next);
        }
    }
    return p;
}

// e^{i theta}, exact when theta is a multiple of pi/2.
struct Phase {
    double re, im;
    std::optional<std::pair<int, int>> exact;  // (re, im) in {-1, 0, 1}
};

Phase phase_of(double theta)
{
    double quarter = theta / (0.5 * std::numbers::pi);
    double k = std::round(quarter);
    if (std::abs(quarter - k) < 1e-12) {
        int m = static_cast<int>(((static_cast<long long>(k) % 4) + 4) % 4);
        static constexpr int re[] = {1, 0, -1, 0};
        static constexpr int im[] = {0, 1, 0, -1};
        return {static_cast<double>(re[m]), static_cast<double>(im[m]),
                std::make_pair(re[m], im[m])};
    }
    return {std::cos(theta), std::sin(theta), std::nullopt};
}

}  // namespace

Expression realify_expression(const ComplexPolynomial& F, double theta)
{
    const Phase phase = phase_of(theta);
    // exact rational coefficients when the phase is exact, doubles otherwise
    std::map<RealMonomial, Rational> exact;
    std::map<RealMonomial, double> approx;
    for (const auto& term : F.terms()) {
        if (term.re == Rational{0} && term.im == Rational{0}) continue;
        for (const auto& [mono, g] : expand_monomial(term.monomial)) {
            // Re(phase * c * (gre + i gim))
            if (phase.exact) {
                const Rational pr{phase.exact->first}, pi{phase.exact->second};
                Rational cr = term.re * pr - term.im * pi;
                Rational ci = term.re * pi + term.im * pr;
                exact[mono] += cr * g.first - ci * g.second;
            } else {
                double a = boost::rational_cast<double>(term.re);
                double b = boost::rational_cast<double>(term.im);
                double cr = a * phase.re - b * phase.im;
                double ci = a * phase.im + b * phase.re;
                approx[mono] += cr * static_cast<double>(g.first) -
                                ci * static_cast<double>(g.second);
            }
        }
    }
    auto monomial_expr = [](const RealMonomial& mono) {
        std::optional<Expression> m;
        for (std::size_t v = 0; v < mono.size(); ++v) {
            if (mono[v] == 0) continue;
            Expression factor = Expression::variable(static_cast<int>(v)).pow(mono[v]);
            m = m ? *m * factor : factor;
        }
        return m;
    };
    std::optional<Expression> sum;
    auto add = [&](Expression coef, const RealMonomial& mono) {
        auto m = monomial_expr(mono);
        Expression t = m ? (coef.is_constant(1.0) ? *m : coef * *m) : coef;
        sum = sum ? *sum + t : t;
    };
    for (const auto& [mono, c] : exact)
        if (c != Rational{0}) add(Expression::constant(c), mono);
    for (const auto& [mono, c] : approx)
        if (std::abs(c) > 1e-15) add(Expression::constant(c), mono);
    return sum.value_or(Expression::constant(Rational{0}));
}

ProblemSpec realify(const AlgebraicProblem& problem, double theta)
{
    const int n = problem.F.variables();
    ProblemSpec spec;
    spec.name = problem.name;
    spec.variables = realified_variable_names(n);
    spec.domain = DomainModel::real_space(2 * n, problem.box_half_width);
    spec.f = realify_expression(problem.F, theta);
    spec.tau = build_tau(problem.F, problem.effective_alpha());
    spec.metric.kind = problem.metric;
    spec.window = problem.window;
    return spec;
}

CompactificationReport check_compactification(const ProblemSpec& problem,
                                              const CompactificationOptions& options)
{
    const int n = problem.dimension();
    const auto& dom = problem.domain;
    const Box& box = dom.box();
    CompiledExpression f(problem.f, n);
    CompiledExpression tau(problem.tau, n);
    std::mt19937_64 rng(options.seed);

    CompactificationReport report;
    report.bound = options.bound;

    // distances from far to near; the last one is the closest approach
    std::vector<double> steps;
    for (double d = 1e-1; d >= options.min_distance * 0.999; d *= 0.1) steps.push_back(d);

    auto sample_box_point = [&]() {
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i)
            p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * (0.05 + 0.9 * portable_uniform(rng));
        return p;
    };

    auto probe = [&](EndReport& end, const std::vector<double>& x, bool closest) {
        try {
            double t = tau.value(x);
            double v = std::abs(t * f.value(x));
            if (!std::isfinite(v)) end.finite = false;
            end.max_abs_tau_f = std::max(end.max_abs_tau_f, v);
            if (closest) end.tau_near_end = std::max(end.tau_near_end, t);
        } catch (const DomainViolation&) {
            end.finite = false;
        }
    };

    const std::vector<double> centre = [&] {
        std::vector<double> c(n);
        for (int i = 0; i < n; ++i) c[i] = 0.5 * (box.lo[i] + box.hi[i]);
        return c;
    }();
    const double tau_centre = tau.value(centre);

    if (dom.full_space()) {
        EndReport end{"infinity"};
        const int rays = n == 1 ? 2 : options.rays;
        for (int r = 0; r < rays; ++r) {
            Eigen::VectorXd dir = n == 1 ? Eigen::VectorXd::Constant(1, r == 0 ? 1.0 : -1.0)
                                         : random_unit_vector(n, rng);
            for (std::size_t s = 0; s < steps.size(); ++s) {
                std::vector<double> x(n);
                for (int i = 0; i < n; ++i) x[i] = dir[i] / steps[s];
                probe(end, x, s + 1 == steps.size());
            }
        }
        report.ends.push_back(end);
    } else {
        for (int axis = 0; axis < n; ++axis) {
            const auto& ax = dom.axes()[axis];
            for (int side = 0; side < 2; ++side) {
                bool is_end = side == 0 ? ax.lo_is_end : ax.hi_is_end;
                if (!is_end) continue;
                double wall = side == 0 ? ax.lo : ax.hi;
                EndReport end{problem.variables[axis] + (side == 0 ? "->lo" : "->hi")};
                const int rays = n == 1 ? 1 : options.rays;
                for (int r = 0; r < rays; ++r) {
                    std::vector<double> base = sample_box_point();
                    for (std::size_t s = 0; s < steps.size(); ++s) {
                        std::vector<double> x = base;
                        if (std::isinf(wall))
                            x[axis] = (side == 0 ? -1.0 : 1.0) / steps[s];
                        else
                            x[axis] = wall + (side == 0 ? steps[s] : -steps[s]);
                        probe(end, x, s + 1 == steps.size());
                    }
                }
                report.ends.push_back(end);
            }
        }
    }

    report.pass = true;
    for (auto& end : report.ends) {
        end.tau_to_zero = end.tau_near_end < 1e-3 * tau_centre;
        report.max_abs_tau_f = std::max(report.max_abs_tau_f, end.max_abs_tau_f);
        report.tau_to_zero = report.tau_to_zero && end.tau_to_zero;
        if (!end.finite || end.max_abs_tau_f > options.bound) report.pass = false;
    }

    for (int k = 0; k < 64; ++k) {
        auto x = sample_box_point();
        if (!dom.contains(x)) continue;
        try {
            if (!(tau.value(x) > 0.0)) report.tau_positive_inside = false;
        } catch (const DomainViolation&) {
            report.tau_positive_inside = false;
        }
    }
    report.pass = report.pass && report.tau_positive_inside;
    return report;
}

}  // namespace morsevanish
