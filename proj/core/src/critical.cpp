#include "morsevanish/critical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "morsevanish/errors.hpp"
#include "morsevanish/parallel.hpp"
#include "morsevanish/sampling.hpp"

namespace morsevanish {

std::string to_string(WindowStatus status)
{
    switch (status) {
    case WindowStatus::inside: return "inside";
    case WindowStatus::below: return "below";
    case WindowStatus::above: return "above";
    }
    return "inside";
}

double scaled_residual(const PerturbedJet& jet)
{
    return jet.total.gradient.norm() /
           (1.0 + jet.f.gradient.norm() + std::abs(jet.eps) * jet.inv_tau.gradient.norm());
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::span<const double> as_span(const VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

bool inside_box(const Box& box, const VectorXd& x, double slack = 0.0)
{
    for (int i = 0; i < x.size(); ++i) {
        double pad = slack * (box.hi[i] - box.lo[i]);
        if (x[i] < box.lo[i] - pad || x[i] > box.hi[i] + pad) return false;
    }
    return true;
}

// Evaluates the jet, reporting false outside the domain.
bool try_jet(const ProblemEvaluator& eval, const VectorXd& x, double eps, PerturbedJet& out)
{
    if (!eval.problem().domain.contains(as_span(x))) return false;
    try {
        eval.jet(as_span(x), eps, out);
    } catch (const DomainViolation&) {
        return false;
    }
    return std::isfinite(out.total.value) && out.total.gradient.allFinite() &&
           out.total.hessian.allFinite();
}

VectorXd newton_direction(const MatrixXd& H, const VectorXd& g)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    const VectorXd& mu = es.eigenvalues();
    const MatrixXd& V = es.eigenvectors();
    double scale = mu.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) return -g;
    double floor = 1e-12 * scale;
    VectorXd c = V.transpose() * g;
    for (int i = 0; i < c.size(); ++i) {
        double m = mu[i];
        if (std::abs(m) < floor) m = m < 0 ? -floor : floor;
        c[i] /= m;
    }
    return -(V * c);
}

enum class NewtonStatus { converged, drifted, failed };

struct NewtonOutcome {
    NewtonStatus status = NewtonStatus::failed;
    VectorXd x;
    int iterations = 0;
};

NewtonOutcome run_newton(const ProblemEvaluator& eval, double eps, VectorXd x,
                         const CriticalOptions& options, const Box& box)
{
    NewtonOutcome out;
    PerturbedJet j, trial;
    if (!try_jet(eval, x, eps, j)) return out;
    const double tau0 = j.tau.value;
    const Box far = box.scaled(8.0);
    double diag = 0.0;
    for (int i = 0; i < x.size(); ++i) diag += std::pow(box.hi[i] - box.lo[i], 2);
    const double max_step = std::sqrt(diag);

    auto accept_polished = [&]() {
        for (int k = 0; k < 3; ++k) {
            VectorXd d = newton_direction(j.total.hessian, j.total.gradient);
            VectorXd y = x + d;
            if (!try_jet(eval, y, eps, trial)) break;
            if (!(trial.total.gradient.norm() < j.total.gradient.norm())) break;
            x = y;
            std::swap(j, trial);
        }
        out.status = NewtonStatus::converged;
        out.x = x;
    };

    for (int it = 0; it < options.max_newton_iterations; ++it) {
        out.iterations = it + 1;
        if (scaled_residual(j) < options.residual_tolerance) {
            accept_polished();
            return out;
        }
        if (j.tau.value < 1e-10 * tau0 || !inside_box(far, x)) {
            out.status = NewtonStatus::drifted;
            out.x = x;
            return out;
        }
        const double gnorm = j.total.gradient.norm();
        VectorXd d = newton_direction(j.total.hessian, j.total.gradient);
        if (double len = d.norm(); len > max_step) d *= max_step / len;

        bool moved = false;
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            VectorXd y = x + t * d;
            if (!try_jet(eval, y, eps, trial)) continue;
            if (trial.total.gradient.norm() <= (1.0 - 1e-4 * t) * gnorm) {
                x = y;
                std::swap(j, trial);
                moved = true;
                break;
            }
        }
        if (!moved) {
            // descend on |d f_eps|^2 / 2 instead
            VectorXd h = j.total.hessian * j.total.gradient;
            double hn = h.squaredNorm();
            if (!(hn > 0.0)) break;
            VectorXd dd = -h * (gnorm * gnorm / hn);
            if (double len = dd.norm(); len > max_step) dd *= max_step / len;
            for (double t = 1.0; t > 1e-12; t *= 0.5) {
                VectorXd y = x + t * dd;
                if (!try_jet(eval, y, eps, trial)) continue;
                if (trial.total.gradient.norm() < gnorm) {
                    x = y;
                    std::swap(j, trial);
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) break;
    }
    if (scaled_residual(j) < options.residual_tolerance) {
        accept_polished();
        return out;
    }
    out.x = x;
    out.status = (j.tau.value < 1e-6 * tau0 || !inside_box(box.scaled(2.0), x))
                     ? NewtonStatus::drifted
                     : NewtonStatus::failed;
    return out;
}

double max_abs_eigen(const MatrixXd& S)
{
    if (S.rows() == 1) return std::abs(S(0, 0));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Radius of a ball about p where |H(x) - H(p)| stays below min|eig H(p)| / 2,
// so d f_eps has no second zero there.
double certification_radius(const ProblemEvaluator& eval, double eps, const VectorXd& p,
                            const MatrixXd& H, double min_abs_eig)
{
    if (!(min_abs_eig > 0.0)) return 0.0;
    const int n = static_cast<int>(p.size());
    double rho = std::min(1.0, 0.5 * eval.problem().domain.distance_to_boundary(as_span(p)));
    PerturbedJet q;
    for (int round = 0; round < 3; ++round) {
        double L = 0.0;
        for (int i = 0; i < n; ++i)
            for (double s : {-1.0, 1.0}) {
                VectorXd y = p;
                y[i] += s * rho;
                if (!try_jet(eval, y, eps, q)) {
                    L = kInfinity;
                    continue;
                }
                L = std::max(L, max_abs_eigen(q.total.hessian - H) / rho);
            }
        double r = std::isinf(L) ? 0.5 * rho : (L > 0.0 ? 0.5 * min_abs_eig / L : rho);
        if (r >= rho) break;
        rho = r;
    }
    return rho;
}

double coordinate_from_unit(const Interval& axis, double lo, double hi, double u)
{
    const bool lo_wall = axis.lo_is_end && std::isfinite(axis.lo) && lo <= axis.lo;
    const bool hi_wall = axis.hi_is_end && std::isfinite(axis.hi) && hi >= axis.hi;
    const double width = hi - lo;
    const double ratio = 1e6;
    // geometric spacing toward finite ends, where critical points crowd
    if (lo_wall && hi_wall) {
        double half = 0.5 * width;
        if (u < 0.5) return lo + half * std::pow(ratio, 2.0 * u - 1.0);
        return hi - half * std::pow(ratio, 1.0 - 2.0 * u);
    }
    if (lo_wall) return lo + width * std::pow(ratio, u - 1.0);
    if (hi_wall) return hi - width * std::pow(ratio, -u);
    return lo + width * u;
}

}  // namespace

std::optional<CriticalPoint> refine_critical_point(const ProblemEvaluator& eval, double eps,
                                                   std::span<const double> start,
                                                   const CriticalOptions& options)
{
    const Box box = options.box ? eval.problem().domain.clip(*options.box)
                                : eval.problem().domain.box();
    VectorXd x0 = Eigen::Map<const VectorXd>(start.data(), static_cast<Eigen::Index>(start.size()));
    NewtonOutcome res = run_newton(eval, eps, x0, options, box);
    if (res.status != NewtonStatus::converged) return std::nullopt;

    PerturbedJet j;
    if (!try_jet(eval, res.x, eps, j)) return std::nullopt;
    CriticalPoint cp;
    cp.coordinates.assign(res.x.data(), res.x.data() + res.x.size());
    cp.value = j.total.value;
    cp.residual = scaled_residual(j);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(j.total.hessian, Eigen::EigenvaluesOnly);
    const VectorXd& mu = es.eigenvalues();
    cp.hessian_eigenvalues.assign(mu.data(), mu.data() + mu.size());
    const double max_abs = mu.cwiseAbs().maxCoeff();
    const double min_abs = mu.cwiseAbs().minCoeff();
    cp.degenerate = min_abs < std::max(options.degeneracy_ratio * max_abs, options.degeneracy_floor);
    cp.index = static_cast<int>((mu.array() < 0.0).count());
    cp.certification_radius =
        cp.degenerate ? 0.0 : certification_radius(eval, eps, res.x, j.total.hessian, min_abs);
    const auto& w = eval.problem().window;
    cp.window = cp.value <= w.a ? WindowStatus::below
                                : (cp.value >= w.b ? WindowStatus::above : WindowStatus::inside);
    return cp;
}

int morse_index(const CriticalPoint& cp)
{
    const bool zero = std::any_of(cp.hessian_eigenvalues.begin(), cp.hessian_eigenvalues.end(),
                                  [](double m) { return m == 0.0; });
    if (cp.degenerate || zero)
        throw DegenerateCriticalPoint("critical point " + std::to_string(cp.id) +
                                      " has a near-zero Hessian eigenvalue");
    return static_cast<int>(std::count_if(cp.hessian_eigenvalues.begin(),
                                          cp.hessian_eigenvalues.end(),
                                          [](double m) { return m < 0.0; }));
}

void canonical_sort(std::vector<CriticalPoint>& points)
{
    double scale = 1.0;
    for (const auto& p : points) scale = std::max(scale, std::abs(p.value));
    const double grid = 1e-9 * scale;
    auto key = [grid](const CriticalPoint& p) { return std::llround(p.value / grid); };
    std::sort(points.begin(), points.end(), [&](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.index != b.index) return a.index < b.index;
        auto ka = key(a), kb = key(b);
        if (ka != kb) return ka < kb;
        return a.coordinates < b.coordinates;
    });
    for (std::size_t i = 0; i < points.size(); ++i) points[i].id = static_cast<int>(i);
}

CriticalSearch find_critical_points(const ProblemSpec& problem, double eps,
                                    const CriticalOptions& options)
{
    const int n = problem.dimension();
    const ProblemEvaluator eval(problem);
    const Box box = options.box ? problem.domain.clip(*options.box) : problem.domain.box();

    std::size_t starts = 1;
    for (int i = 0; i < n; ++i) starts *= static_cast<std::size_t>(options.starts_per_axis);
    starts = std::max<std::size_t>(starts, 256);

    struct Slot {
        std::optional<CriticalPoint> point;
        bool drifted = false;
        double start_residual = kInfinity;
    };
    std::vector<Slot> slots(starts);
    std::atomic<long> iterations{0};

    parallel_for(starts, options.jobs, [&](std::size_t s) {
        auto u = halton_point(s + 1, n);
        VectorXd x(n);
        for (int i = 0; i < n; ++i)
            x[i] = coordinate_from_unit(problem.domain.axes()[i], box.lo[i], box.hi[i], u[i]);
        PerturbedJet j;
        if (!try_jet(eval, x, eps, j)) return;
        slots[s].start_residual = scaled_residual(j);
        NewtonOutcome res = run_newton(eval, eps, x, options, box);
        if (iterations.fetch_add(res.iterations) + res.iterations > options.max_total_iterations)
            throw SolverBudgetExceeded("Newton iteration budget of " +
                                       std::to_string(options.max_total_iterations) + " exhausted");
        if (res.status == NewtonStatus::drifted) {
            slots[s].drifted = true;
            return;
        }
        if (res.status != NewtonStatus::converged || !inside_box(box, res.x, 1e-9)) return;
        slots[s].point = refine_critical_point(eval, eps, as_span(res.x), options);
    });

    CriticalSearch search;
    search.starts = static_cast<int>(starts);
    search.coverage_min_residual = kInfinity;
    std::vector<CriticalPoint> found;
    for (auto& slot : slots) {
        search.coverage_min_residual = std::min(search.coverage_min_residual, slot.start_residual);
        if (slot.drifted) ++search.drifting_to_end;
        if (!slot.point) continue;
        ++search.converged_starts;
        const CriticalPoint& cp = *slot.point;
        const VectorXd x = Eigen::Map<const VectorXd>(cp.coordinates.data(), n);
        bool duplicate = false;
        for (auto& other : found) {
            const VectorXd y = Eigen::Map<const VectorXd>(other.coordinates.data(), n);
            double tol = std::max({cp.certification_radius, other.certification_radius,
                                   1e-9 * (1.0 + x.norm())});
            if ((x - y).norm() <= tol) {
                duplicate = true;
                if (cp.residual < other.residual) other = cp;
                break;
            }
        }
        if (!duplicate) found.push_back(cp);
    }
    canonical_sort(found);
    search.points = std::move(found);
    return search;
}

MorsifyResult morsify(const ProblemSpec& problem, double eps, std::uint64_t seed,
                      const CriticalOptions& options)
{
    auto is_morse = [&](const ProblemSpec& p) {
        auto search = find_critical_points(p, eps, options);
        return std::none_of(search.points.begin(), search.points.end(),
                            [](const CriticalPoint& c) { return c.in_window() && c.degenerate; });
    };
    MorsifyResult result{problem, 0.0, std::vector<double>(problem.dimension(), 0.0), 0};
    if (is_morse(problem)) return result;

    std::mt19937_64 rng(seed);
    const VectorXd ell = random_unit_vector(problem.dimension(), rng);
    std::optional<MorsifyResult> best;
    for (int k = 0; k <= 20; ++k) {
        const double delta = 1e-3 * std::ldexp(1.0, -k);
        bool ok = false;
        for (double sign : {1.0, -1.0}) {
            std::vector<double> c(ell.size());
            for (int i = 0; i < ell.size(); ++i) c[i] = sign * delta * ell[i];
            ProblemSpec tilted = with_linear_tilt(problem, c);
            if (!is_morse(tilted)) continue;
            std::vector<double> l(ell.size());
            for (int i = 0; i < ell.size(); ++i) l[i] = sign * ell[i];
            best = MorsifyResult{std::move(tilted), delta, std::move(l), k};
            ok = true;
            break;
        }
        if (!ok && best) break;
    }
    if (!best)
        throw MorsificationFailed("no tilt in 1e-3 * 2^-k, k <= 20, removed the degeneracy");
    return *best;
}

// ---------------------------------------------------------------------------

std::vector<double> parse_eps_grid(const std::string& spec)
{
    auto parse_number = [&](std::string s) -> double {
        s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
                s.end());
        if (auto caret = s.find('^'); caret != std::string::npos) {
            try {
                double base = std::stod(s.substr(0, caret));
                double exponent = std::stod(s.substr(caret + 1));
                return std::pow(base, exponent);
            } catch (const std::exception&) {
                throw ConfigError("bad epsilon '" + s + "'");
            }
        }
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw ConfigError("bad epsilon '" + s + "'");
            return v;
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad epsilon '" + s + "'");
        } catch (const std::out_of_range&) {
            throw ConfigError("bad epsilon '" + s + "'");
        }
    };

    std::vector<double> grid;
    if (auto dots = spec.find(".."); dots != std::string::npos) {
        std::string a = spec.substr(0, dots), b = spec.substr(dots + 2);
        auto ca = a.find('^'), cb = b.find('^');
        if (ca == std::string::npos || cb == std::string::npos)
            throw ConfigError("range grids take the form base^k1..base^k2");
        double base_a = parse_number(a.substr(0, ca)), base_b = parse_number(b.substr(0, cb));
        if (base_a != base_b || !(base_a > 0.0) || base_a == 1.0)
            throw ConfigError("range grid endpoints need one common base");
        double ka = parse_number(a.substr(ca + 1)), kb = parse_number(b.substr(cb + 1));
        if (ka != std::round(ka) || kb != std::round(kb))
            throw ConfigError("range grid exponents must be integers");
        int step = ka <= kb ? 1 : -1;
        for (int k = static_cast<int>(ka);; k += step) {
            grid.push_back(std::pow(base_a, k));
            if (k == static_cast<int>(kb)) break;
        }
    } else {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) grid.push_back(parse_number(item));
    }
    if (grid.empty()) throw ConfigError("empty epsilon grid");
    return grid;
}

namespace {

struct Level {
    int index;
    double value;
    int multiplicity;
};

// Points of equal index and (relatively) equal value collapse into one level.
std::vector<Level> levels_of(const std::vector<CriticalPoint>& points)
{
    std::vector<Level> levels;
    for (const auto& p : points) {
        auto it = std::find_if(levels.begin(), levels.end(), [&](const Level& l) {
            return l.index == p.index &&
                   std::abs(l.value - p.value) <= 1e-7 * (1.0 + std::abs(p.value));
        });
        if (it == levels.end())
            levels.push_back({p.index, p.value, 1});
        else
            ++it->multiplicity;
    }
    return levels;
}

void fit_divergence(ValueCluster& c)
{
    const auto& t = c.trail;
    c.limit_estimate = t.back().second;
    if (t.size() < 3) {
        c.bounded = true;
        return;
    }
    std::size_t first = t.size() > 4 ? t.size() - 4 : 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    bool zero = false;
    for (std::size_t i = first; i < t.size(); ++i) {
        double v = std::abs(t[i].second);
        if (!(v > 0.0)) {
            zero = true;
            continue;
        }
        double lx = std::log(t[i].first), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2 || zero) {
        c.bounded = true;
        return;
    }
    double denom = m * sxx - sx * sx;
    double k = std::abs(denom) > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    c.exponent = k;
    c.coefficient = std::exp((sy - k * sx) / m);
    bool growing = std::abs(t.back().second) > std::abs(t[first].second);
    c.bounded = !(k <= -0.25 && growing);
}

bool trichotomy(const std::vector<CriticalPoint>& points, double lambda, double Lambda)
{
    return std::all_of(points.begin(), points.end(), [&](const CriticalPoint& p) {
        double v = p.value;
        return v < -Lambda || (-lambda < v && v < lambda) || v > Lambda;
    });
}

}  // namespace

SweepReport sweep_epsilon(const ProblemSpec& problem, std::span<const double> eps_grid,
                          const CriticalOptions& options)
{
    SweepReport report;
    report.eps_grid.assign(eps_grid.begin(), eps_grid.end());
    std::sort(report.eps_grid.begin(), report.eps_grid.end(), std::greater<>());
    for (double e : report.eps_grid)
        if (!(e > 0.0)) throw ConfigError("epsilon grid must be positive");

    struct Track {
        ValueCluster cluster;
        int multiplicity;
        bool active;
    };
    std::vector<Track> tracks;

    for (double eps : report.eps_grid) {
        auto search = find_critical_points(problem, eps, options);
        report.samples.push_back({eps, search.points, search.drifting_to_end});

        auto levels = levels_of(search.points);
        struct Pair {
            double distance;
            std::size_t level, track;
        };
        std::vector<Pair> pairs;
        for (std::size_t l = 0; l < levels.size(); ++l)
            for (std::size_t t = 0; t < tracks.size(); ++t)
                if (tracks[t].active && tracks[t].cluster.index == levels[l].index)
                    pairs.push_back(
                        {std::abs(levels[l].value - tracks[t].cluster.trail.back().second), l, t});
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            return std::tie(a.distance, a.level, a.track) < std::tie(b.distance, b.level, b.track);
        });

        std::vector<int> match(levels.size(), -1);
        std::vector<bool> taken(tracks.size(), false);
        for (const auto& p : pairs) {
            if (match[p.level] >= 0 || taken[p.track]) continue;
            // ambiguous when another free track is nearly as close
            bool ambiguous = false;
            for (const auto& q : pairs)
                if (q.level == p.level && q.track != p.track && !taken[q.track] &&
                    p.distance > 0.25 * q.distance) {
                    ambiguous = true;
                    break;
                }
            if (ambiguous) continue;
            match[p.level] = static_cast<int>(p.track);
            taken[p.track] = true;
        }
        for (auto& t : tracks) t.active = false;
        for (std::size_t l = 0; l < levels.size(); ++l) {
            if (match[l] >= 0) {
                auto& t = tracks[match[l]];
                t.cluster.trail.emplace_back(eps, levels[l].value);
                t.active = true;
            } else {
                Track t{ValueCluster{}, levels[l].multiplicity, true};
                t.cluster.index = levels[l].index;
                t.cluster.trail.emplace_back(eps, levels[l].value);
                tracks.push_back(std::move(t));
            }
        }
    }

    double sup = 0.0;
    for (auto& t : tracks) {
        fit_divergence(t.cluster);
        if (t.cluster.bounded)
            for (const auto& [e, v] : t.cluster.trail) sup = std::max(sup, std::abs(v));
        report.clusters.push_back(t.cluster);
    }
    report.lambda = 1.0;
    while (report.lambda <= 1.25 * sup) report.lambda *= 2.0;
    report.Lambda = 2.0 * report.lambda;

    // largest grid eps below which every sample obeys the trichotomy
    for (auto it = report.samples.rbegin(); it != report.samples.rend(); ++it) {
        if (!trichotomy(it->points, report.lambda, report.Lambda)) break;
        report.eps0 = it->eps;
    }
    report.trichotomy_holds = report.eps0.has_value();
    return report;
}

std::vector<double> theta_grid(int count)
{
    if (count < 1) throw ConfigError("theta count must be positive");
    std::vector<double> thetas(count);
    for (int k = 0; k < count; ++k) thetas[k] = 2.0 * std::numbers::pi * k / count;
    return thetas;
}

ThetaSweepReport sweep_theta(const AlgebraicProblem& problem, std::span<const double> thetas,
                             std::span<const double> eps_grid, const CriticalOptions& options)
{
    ThetaSweepReport report;
    report.thetas.assign(thetas.begin(), thetas.end());
    bool all_hold = true;
    double smallest_eps0 = kInfinity;
    for (double theta : thetas) {
        report.per_theta.push_back(sweep_epsilon(realify(problem, theta), eps_grid, options));
        const auto& r = report.per_theta.back();
        report.lambda_uniform = std::max(report.lambda_uniform, r.lambda);
        if (!r.eps0)
            all_hold = false;
        else
            smallest_eps0 = std::min(smallest_eps0, *r.eps0);
    }
    report.uniform_lambda = all_hold && !report.per_theta.empty();
    if (report.uniform_lambda)
        for (const auto& r : report.per_theta)
            for (const auto& s : r.samples)
                if (s.eps <= smallest_eps0 &&
                    !trichotomy(s.points, report.lambda_uniform, 2.0 * report.lambda_uniform))
                    report.uniform_lambda = false;
    return report;
}

}  // namespace morsevanish
