#include "morsevanish/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "morsevanish/errors.hpp"
#include "morsevanish/parallel.hpp"

namespace morsevanish {

CubicalPair build_cubical_pair(const ProblemSpec& problem, double eps, double lambda,
                               double Lambda, const Box& box, int resolution, int jobs)
{
    const int n = problem.dimension();
    if (resolution < 1) throw ValidationError("oracle resolution must be positive");
    if (!(-lambda < Lambda))
        throw ValidationError("need -lambda < Lambda for a sublevel pair");
    CubicalPair pair;
    pair.box = box;
    pair.resolution.assign(n, resolution);
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(resolution);
    pair.in_X.assign(total, 0);
    pair.in_A.assign(total, 0);

    ProblemEvaluator eval(problem);
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) h[i] = (box.hi[i] - box.lo[i]) / resolution;

    // one task per slab of the first axis
    parallel_for(static_cast<std::size_t>(resolution), jobs, [&](std::size_t slab) {
        const std::size_t per_slab = total / resolution;
        std::vector<double> x(n);
        std::vector<int> idx(n, 0);
        idx[0] = static_cast<int>(slab);
        for (std::size_t k = 0; k < per_slab; ++k) {
            std::size_t rest = k;
            for (int i = n - 1; i >= 1; --i) {
                idx[i] = static_cast<int>(rest % resolution);
                rest /= resolution;
            }
            for (int i = 0; i < n; ++i) x[i] = box.lo[i] + (idx[i] + 0.5) * h[i];
            const std::size_t cell = slab * per_slab + k;
            if (!problem.domain.contains(x)) continue;
            double v;
            try {
                v = eval.value(x, eps);
            } catch (const DomainViolation&) {
                continue;
            }
            if (!std::isfinite(v)) continue;
            pair.in_X[cell] = v <= Lambda;
            pair.in_A[cell] = v <= -lambda;
        }
    });
    return pair;
}

// ---------------------------------------------------------------------------
// cubical chain complex of the pair

namespace {

struct SparseComplex {
    std::vector<int> dim;
    std::vector<std::vector<std::pair<int, std::int64_t>>> bd;  // faces with coefficients
    std::vector<std::vector<int>> cobd;
    std::vector<char> alive;

    std::int64_t coefficient(int cell, int face) const
    {
        for (const auto& [f, c] : bd[cell])
            if (f == face) return c;
        return 0;
    }

    // bd[cell][face] += delta
    void add(int cell, int face, std::int64_t delta)
    {
        auto& row = bd[cell];
        for (auto it = row.begin(); it != row.end(); ++it) {
            if (it->first != face) continue;
            std::int64_t sum;
            if (__builtin_add_overflow(it->second, delta, &sum))
                throw CoefficientOverflow("cubical reduction exceeded 64-bit coefficients");
            if (sum == 0) {
                row.erase(it);
                auto& co = cobd[face];
                co.erase(std::find(co.begin(), co.end(), cell));
            } else {
                it->second = sum;
            }
            return;
        }
        row.emplace_back(face, delta);
        cobd[face].push_back(cell);
    }

    // Cancels the pair (face sigma, cell tau) with a unit incidence.
    void eliminate(int sigma, int tau, std::vector<int>& touched)
    {
        const std::int64_t c = coefficient(tau, sigma);
        const auto tau_faces = bd[tau];
        const auto others = cobd[sigma];
        for (int t2 : others) {
            if (t2 == tau) continue;
            const std::int64_t a = coefficient(t2, sigma);
            for (const auto& [rho, b] : tau_faces) {
                std::int64_t ab, abc;
                if (__builtin_mul_overflow(a, b, &ab) || __builtin_mul_overflow(ab, c, &abc))
                    throw CoefficientOverflow("cubical reduction exceeded 64-bit coefficients");
                add(t2, rho, -abc);
            }
            touched.push_back(t2);
        }
        for (const auto& [rho, b] : bd[tau]) {
            auto& co = cobd[rho];
            co.erase(std::find(co.begin(), co.end(), tau));
            touched.push_back(rho);
        }
        for (int eta : cobd[tau]) {
            auto& row = bd[eta];
            row.erase(std::find_if(row.begin(), row.end(),
                                   [&](const auto& e) { return e.first == tau; }));
            touched.push_back(eta);
        }
        for (const auto& [rho, b] : bd[sigma]) {
            auto& co = cobd[rho];
            co.erase(std::find(co.begin(), co.end(), sigma));
            touched.push_back(rho);
        }
        for (int cell : {sigma, tau}) {
            alive[cell] = 0;
            bd[cell].clear();
            cobd[cell].clear();
        }
    }

    // Free pairs first (no fill-in), then unit pivots by Markowitz cost.
    void reduce()
    {
        std::deque<int> work;
        for (int i = 0; i < static_cast<int>(alive.size()); ++i) work.push_back(i);
        std::vector<int> touched;
        auto drain = [&]() {
            while (!work.empty()) {
                int cell = work.front();
                work.pop_front();
                if (!alive[cell]) continue;
                touched.clear();
                if (cobd[cell].size() == 1 && std::abs(coefficient(cobd[cell][0], cell)) == 1)
                    eliminate(cell, cobd[cell][0], touched);
                else if (bd[cell].size() == 1 && std::abs(bd[cell][0].second) == 1)
                    eliminate(bd[cell][0].first, cell, touched);
                for (int t : touched) work.push_back(t);
            }
        };
        drain();
        while (true) {
            int best_sigma = -1, best_tau = -1;
            std::size_t best_cost = 0;
            for (int tau = 0; tau < static_cast<int>(alive.size()); ++tau) {
                if (!alive[tau]) continue;
                for (const auto& [sigma, c] : bd[tau]) {
                    if (std::abs(c) != 1) continue;
                    std::size_t cost = (cobd[sigma].size() - 1) * (bd[tau].size() - 1);
                    if (best_tau < 0 || cost < best_cost) {
                        best_cost = cost;
                        best_sigma = sigma;
                        best_tau = tau;
                    }
                }
            }
            if (best_tau < 0) break;
            touched.clear();
            eliminate(best_sigma, best_tau, touched);
            for (int t : touched) work.push_back(t);
            drain();
        }
    }
};

SparseComplex relative_cubical_complex(const CubicalPair& pair)
{
    const int n = pair.dimension();
    std::vector<int> ext(n);  // doubled grid extent per axis
    std::vector<std::size_t> stride(n), top_stride(n);
    std::size_t cells = 1;
    for (int i = n - 1; i >= 0; --i) {
        ext[i] = 2 * pair.resolution[i] + 1;
        stride[i] = cells;
        cells *= ext[i];
    }
    std::size_t ts = 1;
    for (int i = n - 1; i >= 0; --i) {
        top_stride[i] = ts;
        ts *= pair.resolution[i];
    }

    // membership: 0 none, 1 in X only (relative cell), 2 in A
    std::vector<std::uint8_t> member(cells, 0);
    std::vector<int> c(n);
    for (std::size_t id = 0; id < cells; ++id) {
        std::size_t rest = id;
        for (int i = 0; i < n; ++i) {
            c[i] = static_cast<int>(rest / stride[i]);
            rest %= stride[i];
        }
        std::vector<int> even;
        std::size_t base = 0;
        bool valid = true;
        for (int i = 0; i < n; ++i) {
            if (c[i] % 2 == 1)
                base += static_cast<std::size_t>((c[i] - 1) / 2) * top_stride[i];
            else
                even.push_back(i);
        }
        std::uint8_t m = 0;
        for (int mask = 0; mask < (1 << even.size()) && valid; ++mask) {
            std::size_t top = base;
            bool inside = true;
            for (std::size_t e = 0; e < even.size(); ++e) {
                int i = even[e];
                int t = (mask >> e & 1) ? c[i] / 2 : c[i] / 2 - 1;
                if (t < 0 || t >= pair.resolution[i]) {
                    inside = false;
                    break;
                }
                top += static_cast<std::size_t>(t) * top_stride[i];
            }
            if (!inside) continue;
            if (pair.in_A[top]) {
                m = 2;
                break;
            }
            if (pair.in_X[top]) m = 1;
        }
        member[id] = m;
    }

    std::vector<int> compact(cells, -1);
    SparseComplex sc;
    for (std::size_t id = 0; id < cells; ++id) {
        if (member[id] != 1) continue;
        compact[id] = static_cast<int>(sc.dim.size());
        std::size_t rest = id;
        int d = 0;
        for (int i = 0; i < n; ++i) {
            d += static_cast<int>(rest / stride[i]) % 2;
            rest %= stride[i];
        }
        sc.dim.push_back(d);
    }
    const std::size_t count = sc.dim.size();
    sc.bd.resize(count);
    sc.cobd.resize(count);
    sc.alive.assign(count, 1);
    for (std::size_t id = 0; id < cells; ++id) {
        const int cell = compact[id];
        if (cell < 0) continue;
        std::size_t rest = id;
        for (int i = 0; i < n; ++i) {
            c[i] = static_cast<int>(rest / stride[i]);
            rest %= stride[i];
        }
        int odd_seen = 0;
        for (int i = 0; i < n; ++i) {
            if (c[i] % 2 == 0) continue;
            const std::int64_t sign = odd_seen % 2 ? -1 : 1;
            ++odd_seen;
            for (int side : {-1, 1}) {
                const int face = compact[id + side * static_cast<std::ptrdiff_t>(stride[i])];
                if (face < 0) continue;  // quotiented into A
                sc.bd[cell].emplace_back(face, side * sign);
                sc.cobd[face].push_back(cell);
            }
        }
    }
    return sc;
}

}  // namespace

HomologyResult pair_homology(const CubicalPair& pair)
{
    const int n = pair.dimension();
    if (n > 3) throw Unsupported("cubical homology needs dimension <= 3");
    SparseComplex sc = relative_cubical_complex(pair);
    sc.reduce();

    std::vector<std::vector<int>> by_dim(n + 1);
    std::vector<int> position(sc.dim.size(), -1);
    for (std::size_t i = 0; i < sc.dim.size(); ++i)
        if (sc.alive[i]) {
            position[i] = static_cast<int>(by_dim[sc.dim[i]].size());
            by_dim[sc.dim[i]].push_back(static_cast<int>(i));
        }
    ChainComplex ch;
    for (int k = 0; k <= n; ++k) ch.ranks.push_back(static_cast<int>(by_dim[k].size()));
    ch.boundary.resize(n + 1);
    ch.boundary[0] = IntMatrix(0, ch.rank(0));
    for (int k = 1; k <= n; ++k) {
        IntMatrix d(ch.rank(k - 1), ch.rank(k));
        for (int j = 0; j < ch.rank(k); ++j)
            for (const auto& [face, coef] : sc.bd[by_dim[k][j]]) d(position[face], j) = coef;
        ch.boundary[k] = std::move(d);
    }
    HomologyResult h = homology(ch);
    h.trim();
    return h;
}

long pair_euler_characteristic(const CubicalPair& pair)
{
    const int n = pair.dimension();
    if (n > 4) throw Unsupported("cubical Euler characteristic needs dimension <= 4");
    const int orthants = 1 << n;
    // table[pattern]: signed count of cells whose lowest corner is the vertex
    std::vector<int> table(std::size_t(1) << orthants, 0);
    for (std::size_t pattern = 0; pattern < table.size(); ++pattern) {
        int sum = 0;
        for (int S = 0; S < orthants; ++S) {
            bool covered = false;
            for (int o = 0; o < orthants && !covered; ++o)
                covered = (pattern >> o & 1) && (o & S) == S;
            if (covered) sum += (__builtin_popcount(S) % 2) ? -1 : 1;
        }
        table[pattern] = sum;
    }

    std::vector<std::size_t> top_stride(n);
    std::size_t ts = 1, vertices = 1;
    for (int i = n - 1; i >= 0; --i) {
        top_stride[i] = ts;
        ts *= pair.resolution[i];
        vertices *= pair.resolution[i] + 1;
    }
    long chi_x = 0, chi_a = 0;
    std::vector<int> v(n);
    for (std::size_t id = 0; id < vertices; ++id) {
        std::size_t rest = id;
        for (int i = n - 1; i >= 0; --i) {
            v[i] = static_cast<int>(rest % (pair.resolution[i] + 1));
            rest /= pair.resolution[i] + 1;
        }
        unsigned px = 0, pa = 0;
        for (int o = 0; o < orthants; ++o) {
            std::size_t top = 0;
            bool inside = true;
            for (int i = 0; i < n; ++i) {
                int t = v[i] - 1 + (o >> i & 1);
                if (t < 0 || t >= pair.resolution[i]) {
                    inside = false;
                    break;
                }
                top += static_cast<std::size_t>(t) * top_stride[i];
            }
            if (!inside) continue;
            if (pair.in_X[top]) px |= 1u << o;
            if (pair.in_A[top]) pa |= 1u << o;
        }
        chi_x += table[px];
        chi_a += table[pa];
    }
    return chi_x - chi_a;
}

// ---------------------------------------------------------------------------

namespace {

Box grow(const Box& box, const DomainModel& domain)
{
    Box out = box;
    for (int i = 0; i < box.dimension(); ++i) {
        const auto& ax = domain.axes()[i];
        const bool lo_open = std::isinf(ax.lo), hi_open = std::isinf(ax.hi);
        const double width = box.hi[i] - box.lo[i];
        if (lo_open && hi_open) {
            const double c = 0.5 * (box.lo[i] + box.hi[i]);
            out.lo[i] = c - width;
            out.hi[i] = c + width;
        } else if (hi_open) {
            out.hi[i] = box.lo[i] + 2.0 * width;
        } else if (lo_open) {
            out.lo[i] = box.hi[i] - 2.0 * width;
        }
    }
    return out;
}

struct Snapshot {
    std::optional<HomologyResult> homology;
    long euler = 0;
    bool operator==(const Snapshot& o) const
    {
        return euler == o.euler && homology.has_value() == o.homology.has_value() &&
               (!homology || *homology == *o.homology);
    }
};

}  // namespace

OracleResult sublevel_pair_homology(const ProblemSpec& problem, double eps, double lambda,
                                    double Lambda, const OracleOptions& options)
{
    const int n = problem.dimension();
    if (n > 4) throw Unsupported("the oracle handles dimension <= 4, got " + std::to_string(n));
    auto snapshot = [&](const Box& box, int res) {
        CubicalPair pair = build_cubical_pair(problem, eps, lambda, Lambda, box, res, options.jobs);
        Snapshot s;
        if (n <= 3) {
            s.homology = pair_homology(pair);
            s.euler = s.homology->euler_characteristic();
        } else {
            s.euler = pair_euler_characteristic(pair);
        }
        return s;
    };

    OracleResult out;
    Box box = options.box.value_or(problem.domain.box());
    int res = options.resolution;
    Snapshot current = snapshot(box, res);
    bool stable = false;
    for (int k = 0; k < options.max_box_doublings; ++k) {
        Box bigger = grow(box, problem.domain);
        if (bigger.lo == box.lo && bigger.hi == box.hi) {
            stable = true;
            break;
        }
        // low dimensions keep the cell size; higher ones keep the cell count
        const int bigger_res = n <= 2 ? 2 * res : res;
        Snapshot next = snapshot(bigger, bigger_res);
        if (next == current) {
            stable = true;
            break;
        }
        box = bigger;
        res = bigger_res;
        current = std::move(next);
        ++out.box_doublings;
    }
    if (!stable && options.max_box_doublings > 0)
        throw ResolutionTooCoarse("sublevel pair still changes after " +
                                  std::to_string(options.max_box_doublings) + " box doublings");
    if (options.check_refinement) {
        if (!(snapshot(box, 2 * res) == current))
            throw ResolutionTooCoarse("sublevel pair changes under 2x refinement at resolution " +
                                      std::to_string(res));
        out.refinement_checked = true;
    }
    out.homology = current.homology;
    out.euler_characteristic = current.euler;
    out.box = box;
    out.resolution = res;
    return out;
}

EulerCheck euler_check(const std::vector<CriticalPoint>& points, const OracleResult& oracle)
{
    EulerCheck e;
    for (const auto& p : points)
        if (p.in_window() && !p.degenerate) e.morse += p.index % 2 ? -1 : 1;
    e.oracle = oracle.euler_characteristic;
    e.pass = e.morse == e.oracle;
    return e;
}

// ---------------------------------------------------------------------------
// catalog

namespace {

HomologyResult free_in(int degree, long rank)
{
    HomologyResult h;
    h.groups.resize(degree + 1);
    h.groups[degree].betti = rank;
    return h;
}

ProblemSpec line_problem(const std::string& name, const std::string& f, const std::string& tau,
                         double half_width, double lambda, double Lambda)
{
    ProblemSpec p;
    p.name = name;
    p.variables = {"x"};
    p.domain = DomainModel::real_space(1, half_width);
    p.f = parse_expression(f, p.variables);
    p.tau = parse_expression(tau, p.variables);
    p.window = WindowSpec::symmetric(lambda);
    p.window.Lambda = Lambda;
    return p;
}

ProblemSpec interval_problem(const std::string& name, const std::string& f,
                             const std::string& tau, bool hi_is_end, double lambda,
                             double Lambda)
{
    ProblemSpec p;
    p.name = name;
    p.variables = {"y"};
    p.domain = DomainModel({Interval{0.0, 1.0, true, hi_is_end}}, Box{{0.0}, {1.0}});
    p.f = parse_expression(f, p.variables);
    p.tau = parse_expression(tau, p.variables);
    p.window = WindowSpec::symmetric(lambda);
    p.window.Lambda = Lambda;
    return p;
}

CatalogEntry algebraic_entry(const std::string& name, const ComplexPolynomial& F,
                             HomologyResult expected, double eps, int resolution,
                             const std::string& note)
{
    AlgebraicProblem a;
    a.name = name;
    a.F = F;
    a.window = WindowSpec::symmetric(1.0);
    a.window.Lambda = 10.0;
    CatalogEntry e;
    e.name = name;
    e.note = note;
    e.problem = realify(a, 0.0);
    e.algebraic = a;
    e.expected = std::move(expected);
    e.eps = eps;
    e.oracle_resolution = resolution;
    return e;
}

std::vector<CatalogEntry> build_catalog()
{
    std::vector<CatalogEntry> c;
    auto add = [&](std::string name, ProblemSpec p, HomologyResult expected, double eps,
                   std::string note) {
        CatalogEntry e;
        e.name = std::move(name);
        e.note = std::move(note);
        e.problem = std::move(p);
        e.expected = std::move(expected);
        e.eps = eps;
        e.oracle_resolution = 256;
        c.push_back(std::move(e));
    };

    add("single_well_1d", line_problem("single_well_1d", "x^2", "(1+x^2)^(-1)", 4.0, 1.0, 10.0),
        free_in(0, 1), 0.01, "pair (interval, empty)");
    add("double_well_1d",
        line_problem("double_well_1d", "x^4-x^2", "(1+x^2)^(-2)", 4.0, 1.0, 10.0),
        free_in(0, 1), 0.01, "pair (interval, empty)");
    add("linear_1d", line_problem("linear_1d", "x", "(1+x^2)^(-1/2)", 16.0, 1.0, 10.0),
        HomologyResult{}, 0.1, "pair (half-line, smaller half-line) is acyclic");
    add("inverted_well_1d",
        line_problem("inverted_well_1d", "-x^2", "(1+x^2)^(-1)", 4.0, 1.0, 10.0),
        free_in(1, 1), 0.01, "pair (line, two rays)");
    add("interval_1d", interval_problem("interval_1d", "y", "y*(1-y)", true, 1.0, 10.0),
        free_in(0, 1), 0.01, "f_eps blows up at both ends; pair (interval, empty)");
    add("sqrt_escape_1d", interval_problem("sqrt_escape_1d", "y", "y", false, 1.0, 10.0),
        free_in(0, 1), 0.01, "critical point sqrt(eps) with value 2 sqrt(eps)");
    add("higher_order_1d",
        interval_problem("higher_order_1d", "-1/y", "2*y^2", false, 2.0, 10.0),
        HomologyResult{}, 0.01, "only critical value -1/(2 eps) leaves the window; pair acyclic");

    {
        CatalogEntry e;
        e.name = "corner_2d";
        e.note = "critical point (eps, eps) with value -1/eps";
        ProblemSpec& p = e.problem;
        p.name = e.name;
        p.variables = {"y1", "y2"};
        p.domain = DomainModel({Interval{0.0, 1.0, true, false}, Interval{0.0, 1.0, true, false}},
                               Box{{0.0, 0.0}, {1.0, 1.0}});
        p.f = parse_expression("-(1/y1+1/y2)", p.variables);
        p.tau = parse_expression("y1*y2", p.variables);
        p.window = WindowSpec::symmetric(1.0);
        p.window.Lambda = 10.0;
        e.eps = 0.01;
        c.push_back(std::move(e));
    }

    for (int d = 2; d <= 4; ++d)
        c.push_back(algebraic_entry("z^" + std::to_string(d), ComplexPolynomial::monomial(1, {d}),
                                    free_in(1, d - 1), 0.05, 128,
                                    "generic fiber of z^d is d points; H_1(C, d points)"));
    c.push_back(algebraic_entry(
        "x_plus_x2y",
        ComplexPolynomial::monomial(2, {1, 0}) + ComplexPolynomial::monomial(2, {2, 1}),
        free_in(2, 1), 0.01, 64, "vanishing cycles of x + x^2 y: Z in degree 2"));
    return c;
}

}  // namespace

const std::vector<CatalogEntry>& catalog()
{
    static const std::vector<CatalogEntry> entries = build_catalog();
    return entries;
}

const CatalogEntry& catalog_lookup(const std::string& name)
{
    for (const auto& e : catalog())
        if (e.name == name) return e;
    throw UnknownEntry("no catalog entry named '" + name + "'");
}

}  // namespace morsevanish
