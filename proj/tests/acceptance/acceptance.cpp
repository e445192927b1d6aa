// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "morsevanish/critical.hpp"
#include "morsevanish/errors.hpp"
#include "morsevanish/flow.hpp"
#include "morsevanish/homology.hpp"
#include "morsevanish/oracle.hpp"
#include "morsevanish_cli/config.hpp"
#include "morsevanish_cli/runner.hpp"

using namespace morsevanish;
namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

fs::path scratch()
{
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / "morsevanish_acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

// One memoised pipeline per catalog entry, shared across criteria.
cli::Pipeline& pipeline(const std::string& name)
{
    static std::map<std::string, std::unique_ptr<cli::Pipeline>> cache;
    auto& slot = cache[name];
    if (!slot) {
        cli::Flags f;
        f.problem = name;
        f.out = scratch() / "runs";
        slot = std::make_unique<cli::Pipeline>(cli::config_from_catalog(name), f);
    }
    return *slot;
}

std::vector<const CatalogEntry*> planar_entries()
{
    std::vector<const CatalogEntry*> out;
    for (const auto& e : catalog())
        if (e.problem.dimension() <= 2) out.push_back(&e);
    return out;
}

struct Check {
    bool pass = true;
    std::ostringstream log;

    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            log << "    " << what << "\n";
        }
    }
};

using Criterion = std::function<void(Check&)>;

// 1 ---------------------------------------------------------------------------

void closed_forms(Check& c)
{
    const auto& sq = catalog_lookup("sqrt_escape_1d").problem;
    for (int k = 4; k <= 12; ++k) {
        const double eps = std::ldexp(1.0, -k);
        const auto pts = find_critical_points(sq, eps).points;
        c.expect(pts.size() == 1, "f=y: expected one critical point at eps 2^-" + std::to_string(k));
        if (pts.size() != 1) continue;
        c.expect(std::abs(pts[0].coordinates[0] - std::sqrt(eps)) < 1e-8, "f=y: location at 2^-" + std::to_string(k));
        c.expect(std::abs(pts[0].value - 2 * std::sqrt(eps)) < 1e-8, "f=y: value at 2^-" + std::to_string(k));
    }

    const std::vector<double> grid = parse_eps_grid("2^-4..2^-9");
    auto diverging = [&](const std::string& name, int n, double value_of_eps_scale) {
        const auto& p = catalog_lookup(name).problem;
        for (double eps : grid) {
            const auto pts = find_critical_points(p, eps).points;
            c.expect(pts.size() == 1, name + ": expected one critical point");
            if (pts.size() != 1) continue;
            for (int i = 0; i < n; ++i)
                c.expect(std::abs(pts[0].coordinates[i] - eps) < 1e-8, name + ": location");
            c.expect(std::abs(pts[0].value + value_of_eps_scale / eps) < 1e-6, name + ": value");
        }
        const SweepReport s = sweep_epsilon(p, grid);
        c.expect(!s.clusters.empty(), name + ": no clusters");
        for (const auto& cl : s.clusters) c.expect(!cl.bounded, name + ": cluster not flagged unbounded");
    };
    diverging("higher_order_1d", 1, 0.5);
    diverging("corner_2d", 2, 1.0);
}

// 2 ---------------------------------------------------------------------------

ProblemSpec random_problem(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto coef = [&] {
        std::ostringstream s;
        s.precision(3);
        s << std::fixed << "(" << u(rng) << ")";
        return s.str();
    };
    ProblemSpec p;
    p.window = WindowSpec::symmetric(40.0);
    p.window.Lambda = 80.0;
    if (n == 1) {
        p.variables = {"x"};
        p.domain = DomainModel::real_space(1, 4.0);
        p.f = parse_expression("x^4+" + coef() + "*x^3-2*x^2+" + coef() + "*x", p.variables);
        p.tau = parse_expression("(1+x^2)^(-1)", p.variables);
    } else {
        p.variables = {"x", "y"};
        p.domain = DomainModel::real_space(2, 4.0);
        p.f = parse_expression("x^4+y^4-2*x^2+" + coef() + "*y^2+" + coef() + "*x*y+" + coef() + "*x+" +
                                   coef() + "*y",
                               p.variables);
        p.tau = parse_expression("(1+x^2+y^2)^(-1)", p.variables);
    }
    p.name = "random_" + std::to_string(n) + "d";
    return p;
}

void d_squared_everywhere(Check& c)
{
    for (const auto& e : catalog()) {
        if (e.problem.dimension() > 3) continue;
        auto& p = pipeline(e.name);
        const DSquaredReport r = verify_d_squared(p.complex(p.eps()));
        c.expect(r.pass, e.name + ": d^2 != 0");
    }
    std::mt19937_64 rng(20260101);
    int generators = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const ProblemSpec prob = random_problem(rng, trial % 2 == 0 ? 1 : 2);
        const double eps = 0.01;
        const auto pts = find_critical_points(prob, eps).points;
        const auto counts = compute_boundaries(prob, eps, pts).counts;
        const MorseComplex m = assemble_complex(pts, counts, eps, prob.window);
        for (const auto& g : m.generators) generators += static_cast<int>(g.size());
        c.expect(verify_d_squared(m).pass, "random problem " + std::to_string(trial) + ": d^2 != 0");
    }
    c.log << "    (50 random problems, " << generators << " generators)\n";
}

// 3, 4 ------------------------------------------------------------------------

// HM against the oracle and the catalog; exact equality of Betti numbers and torsion.
bool homology_agrees(Check& c, const CatalogEntry& e)
{
    auto& p = pipeline(e.name);
    const HomologyResult hm = homology(p.complex(p.eps()));
    const OracleResult o = p.oracle(p.eps());
    bool ok = true;
    auto expect = [&](bool b, const std::string& what) {
        ok = ok && b;
        c.expect(b, e.name + ": " + what);
    };
    expect(o.homology.has_value(), "oracle gave no homology");
    if (o.homology) expect(hm == *o.homology, "HM " + to_string(hm) + " vs oracle " + to_string(*o.homology));
    expect(hm == e.expected, "HM " + to_string(hm) + " vs catalog " + to_string(e.expected));
    expect(o.refinement_checked, "oracle refinement not checked");
    return ok;
}

void vanishing_cycles(Check& c)
{
    for (int d = 2; d <= 4; ++d) {
        const auto& e = catalog_lookup("z^" + std::to_string(d));
        homology_agrees(c, e);
        const HomologyResult hm = homology(pipeline(e.name).complex(pipeline(e.name).eps()));
        c.expect(hm.betti(1) == d - 1, e.name + ": rank of HM_1");
        for (int k = 0; k < static_cast<int>(hm.groups.size()); ++k)
            if (k != 1) c.expect(hm.betti(k) == 0 && hm.torsion(k).empty(), e.name + ": degree " + std::to_string(k));
    }
}

void morse_equals_oracle(Check& c)
{
    int compared = 0;
    for (const auto* e : planar_entries()) {
        if (!e->homology_comparable) continue;
        homology_agrees(c, *e);
        ++compared;
    }
    c.log << "    (" << compared << " catalog problems)\n";
}

// 5 ---------------------------------------------------------------------------

void flagship(Check& c)
{
    auto& p = pipeline("x_plus_x2y");
    const auto grid = parse_eps_grid(p.config().eps_grid);
    CriticalOptions o;
    o.starts_per_axis = p.config().starts_per_axis;
    const SweepReport s = sweep_epsilon(p.problem(), grid, o);
    bool bounded = false;
    for (const auto& cl : s.clusters)
        if (cl.bounded) bounded = true;
    c.expect(bounded, "no bounded critical value cluster");

    const auto& pts = p.critical_points(p.eps());
    const OracleResult oracle = p.oracle(p.eps());
    const EulerCheck e = euler_check(pts, oracle);
    c.log << "    (morse chi " << e.morse << ", oracle chi " << e.oracle << " at " << oracle.resolution << "^4)\n";
    c.expect(e.morse == 1, "morse Euler characteristic " + std::to_string(e.morse));
    c.expect(e.oracle == 1, "oracle Euler characteristic " + std::to_string(e.oracle));
    c.expect(catalog_lookup("x_plus_x2y").expected.euler_characteristic() == 1, "catalog Euler characteristic");
}

// 6, 7 ------------------------------------------------------------------------

bool has_generators(cli::Pipeline& p, double eps)
{
    for (const auto& g : p.complex(eps).generators)
        if (!g.empty()) return true;
    return false;
}

void continuation_maps(Check& c)
{
    int chains = 0;
    for (const auto* e : planar_entries()) {
        auto& p = pipeline(e->name);
        const double eps = p.eps();
        if (!has_generators(p, eps)) continue;
        const MorseComplex c0 = p.complex(eps), c1 = p.complex(eps / 2), c2 = p.complex(eps / 4);
        try {
            const auto m1 = continuation_chain_map(c0, c1, p.continuation(eps, eps / 2).counts);
            const auto m2 = continuation_chain_map(c1, c2, p.continuation(eps / 2, eps / 4).counts);
            const auto m3 = continuation_chain_map(c0, c2, p.continuation(eps, eps / 4).counts);
            c.expect(m1.induced.isomorphism && m2.induced.isomorphism && m3.induced.isomorphism,
                     e->name + ": continuation is not an isomorphism");
            const InducedMap composite = induced_map(c0.chain, c2.chain, compose(m2.map, m1.map));
            c.expect(composite.free_part == m3.induced.free_part, e->name + ": composite differs from direct");
            ++chains;
        } catch (const NotChainMap& x) {
            c.expect(false, e->name + ": " + x.what());
        }
    }
    c.log << "    (" << chains << " three-term chains)\n";
}

void confinement(Check& c)
{
    int runs = 0;
    for (const auto* e : planar_entries()) {
        auto& p = pipeline(e->name);
        const double eps = p.eps();
        if (!has_generators(p, eps)) continue;
        const WindowSpec& w = p.problem().window;
        for (auto [from, to] : {std::pair{eps, eps / 2}, {eps / 2, eps / 4}, {eps, eps / 4}}) {
            const auto& r = p.continuation(from, to);
            c.expect(r.confined, e->name + ": not confined");
            c.expect(r.max_excursion <= w.b + w.sigma, e->name + ": rose above b + sigma");
            c.expect(r.min_excursion >= w.a - w.sigma, e->name + ": dropped below a - sigma");
            ++runs;
        }
    }
    c.log << "    (" << runs << " continuations)\n";
}

// 8 ---------------------------------------------------------------------------

void energy_identity(Check& c)
{
    int converged = 0;
    for (const auto* e : planar_entries()) {
        auto& p = pipeline(e->name);
        const BoundaryReport r = compute_boundaries(p.problem(), p.eps(), p.critical_points(p.eps()));
        for (const auto& t : r.trajectories) {
            if (!t.converged()) continue;
            const Energy en = energy(t);
            c.expect(std::abs(en.analytic - en.topological) < 1e-6 * (1 + std::abs(en.topological)),
                     e->name + ": energy identity off by " + std::to_string(en.analytic - en.topological));
            ++converged;
        }
    }
    c.log << "    (" << converged << " converged trajectories)\n";

    // straight and wiggling paths between random points are never flowlines
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const char* names[] = {"double_well_1d", "single_well_1d", "z^2", "z^3"};
    for (int k = 0; k < 20; ++k) {
        const ProblemSpec& prob = catalog_lookup(names[k % 4]).problem;
        const int n = prob.dimension();
        FlowField field(prob, 0.01);
        VectorXd a(n), b(n), wiggle(n);
        for (int i = 0; i < n; ++i) {
            a(i) = u(rng);
            b(i) = u(rng);
            wiggle(i) = 0.3 * u(rng);
        }
        const double speed = 0.5 + 0.5 * (k % 3);
        auto pos = [&](double s) -> VectorXd { return a + (b - a) * (s / speed) + wiggle * std::sin(3.0 * s); };
        auto vel = [&](double s) -> VectorXd { return (b - a) / speed + 3.0 * wiggle * std::cos(3.0 * s); };
        const Energy en = path_energy(field, pos, vel, 0.0, speed);
        c.expect(en.analytic > en.topological, "path " + std::to_string(k) + " on " + names[k % 4]);
    }
}

// 9 ---------------------------------------------------------------------------

void autodiff_vs_differences(Check& c)
{
    double worst = 0.0;
    for (const auto& e : catalog()) {
        const ProblemSpec& prob = e.problem;
        const ProblemEvaluator eval(prob);
        const int n = prob.dimension();
        const Box box = prob.domain.clip(prob.domain.box());
        std::mt19937_64 rng(99);
        int tested = 0;
        for (int attempt = 0; tested < 100 && attempt < 10000; ++attempt) {
            std::vector<double> x(n);
            for (int i = 0; i < n; ++i) x[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
            const double wall = prob.domain.distance_to_boundary(x);
            if (!prob.domain.contains(x) || wall < 0.05) continue;
            PerturbedJet jet;
            try {
                eval.jet(x, e.eps, jet);
            } catch (const DomainViolation&) {
                continue;
            }
            ++tested;
            // second differences lose digits like 1/h^2, so they get the wider step
            const double h = 1e-3 * std::min(1.0, wall), hh2 = 1e-2 * std::min(1.0, wall);
            auto f = [&](std::vector<double> y, int i, double di, int j, double dj) {
                y[i] += di;
                y[j] += dj;
                return eval.value(y, e.eps);
            };
            auto grad = [&](int i, double s) { return (f(x, i, s, i, 0) - f(x, i, -s, i, 0)) / (2 * s); };
            auto hess = [&](int i, int j, double s) {
                if (i == j) return (f(x, i, s, i, 0) - 2 * eval.value(x, e.eps) + f(x, i, -s, i, 0)) / (s * s);
                return (f(x, i, s, j, s) - f(x, i, s, j, -s) - f(x, i, -s, j, s) + f(x, i, -s, j, -s)) / (4 * s * s);
            };
            for (int i = 0; i < n; ++i) {
                const double g = (4 * grad(i, h / 2) - grad(i, h)) / 3;
                const double ad = jet.total.gradient(i);
                const double err = std::abs(ad - g) / (1 + std::abs(ad));
                worst = std::max(worst, err);
                c.expect(err < 1e-6, e.name + ": gradient");
                for (int j = 0; j < n; ++j) {
                    const double hh = (4 * hess(i, j, hh2 / 2) - hess(i, j, hh2)) / 3;
                    const double adh = jet.total.hessian(i, j);
                    const double herr = std::abs(adh - hh) / (1 + std::abs(adh));
                    worst = std::max(worst, herr);
                    c.expect(herr < 1e-6, e.name + ": hessian");
                }
            }
        }
        c.expect(tested == 100, e.name + ": only " + std::to_string(tested) + " points sampled");
    }
    c.log << "    (worst relative error " << worst << ")\n";
}

// 10 --------------------------------------------------------------------------

void theta_uniformity(Check& c)
{
    const auto& z2 = catalog_lookup("z^2");
    const double eps = z2.eps;
    for (double theta : theta_grid(16)) {
        const auto pts = find_critical_points(realify(*z2.algebraic, theta), eps).points;
        c.expect(pts.size() == 1, "z^2: one critical point at theta " + std::to_string(theta));
        if (pts.size() == 1)
            c.expect(std::abs(pts[0].value - eps) < 1e-9, "z^2: value " + std::to_string(pts[0].value));
    }

    const auto& flag = catalog_lookup("x_plus_x2y");
    CriticalOptions o;
    o.starts_per_axis = 7;
    const std::vector<double> grid{std::ldexp(1.0, -5), std::ldexp(1.0, -6)};
    const ThetaSweepReport r = sweep_theta(*flag.algebraic, theta_grid(4), grid, o);
    c.expect(r.experimental, "x + x^2 y: theta sweep must be labeled experimental");
    c.expect(r.per_theta.size() == 4, "x + x^2 y: theta sweep incomplete");
    c.log << "    (x + x^2 y theta sweep, experimental: uniform lambda " << (r.uniform_lambda ? "yes" : "no")
          << ")\n";
}

// 11 --------------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void determinism(Check& c)
{
    std::vector<std::string> reports;
    for (int k = 0; k < 2; ++k) {
        const fs::path out = scratch() / ("determinism_" + std::to_string(k));
        cli::Flags f;
        f.problem = "z^3";
        f.out = out;
        std::ostringstream o, e;
        const int code = cli::run("compare", f, o, e);
        c.expect(code == 0, "compare exited with " + std::to_string(code) + ": " + e.str());
        for (const auto& d : fs::directory_iterator(out))
            if (d.path().filename() != "cache") reports.push_back(slurp(d.path() / "compare.json"));
    }
    c.expect(reports.size() == 2 && !reports[0].empty() && reports[0] == reports[1], "compare reports differ");
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, Criterion>> criteria{
        {"closed-form critical points", closed_forms},
        {"d^2 = 0 on catalog and random problems", d_squared_everywhere},
        {"vanishing cycles of z^d", vanishing_cycles},
        {"Morse homology equals sublevel pair homology", morse_equals_oracle},
        {"x + x^2 y: bounded cluster and Euler characteristic", flagship},
        {"continuation chain maps", continuation_maps},
        {"window confinement", confinement},
        {"energy identity", energy_identity},
        {"autodiff versus finite differences", autodiff_vs_differences},
        {"theta uniformity", theta_uniformity},
        {"determinism of compare", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.pass = false;
            c.log << "    threw: " << e.what() << "\n";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (c.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
                  << static_cast<int>(secs) << " s)\n"
                  << c.log.str() << std::flush;
        if (!c.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
