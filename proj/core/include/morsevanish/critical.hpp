#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morsevanish/compactify.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish {

enum class WindowStatus { inside, below, above };
std::string to_string(WindowStatus status);

struct CriticalPoint {
    int id = -1;
    std::vector<double> coordinates;
    double value = 0.0;
    double residual = 0.0;  // |d f_eps| scaled by the size of its two summands
    std::vector<double> hessian_eigenvalues;  // ascending
    int index = 0;
    bool degenerate = false;
    double certification_radius = 0.0;
    WindowStatus window = WindowStatus::inside;

    [[nodiscard]] bool in_window() const { return window == WindowStatus::inside; }
};

struct CriticalOptions {
    int starts_per_axis = 17;      // starts = starts_per_axis ^ n
    std::optional<Box> box;        // defaults to the domain's search box
    double residual_tolerance = 1e-10;
    double degeneracy_ratio = 1e-6;   // min|eig| < ratio * max|eig| is degenerate
    double degeneracy_floor = 1e-10;  // ... as is min|eig| below this
    int max_newton_iterations = 100;
    long max_total_iterations = 50'000'000;
    int jobs = 0;
};

struct CriticalSearch {
    std::vector<CriticalPoint> points;  // canonical order, id = position
    int starts = 0;
    int converged_starts = 0;
    int drifting_to_end = 0;      // Newton runs escaping toward tau -> 0
    double coverage_min_residual = 0.0;  // smallest start residual on the grid
};

/// Multi-start damped Newton for d f_eps = 0 from a Halton grid in the box.
/// Solutions are certified (Kantorovich-style uniqueness radius), deduplicated
/// inside those radii and sorted by (index, value, coordinates).
CriticalSearch find_critical_points(const ProblemSpec& problem, double eps,
                                    const CriticalOptions& options = {});

/// Certifies one approximate zero by polishing it with Newton steps.
/// Returns nullopt when it does not converge.
std::optional<CriticalPoint> refine_critical_point(const ProblemEvaluator& eval, double eps,
                                                   std::span<const double> start,
                                                   const CriticalOptions& options = {});

/// Number of negative Hessian eigenvalues; throws DegenerateCriticalPoint.
int morse_index(const CriticalPoint& cp);

/// Sorts by (index, value, coordinates) with values compared on a grid of
/// 1e-9 * max(1, max |value|), then renumbers ids.
void canonical_sort(std::vector<CriticalPoint>& points);

/// |d f_eps| / (1 + |d f| + |eps| |d(1/tau)|).
double scaled_residual(const PerturbedJet& jet);

struct MorsifyResult {
    ProblemSpec problem;
    double delta = 0.0;  // 0 when the input was already Morse
    std::vector<double> functional;  // unit linear functional (signed)
    int halvings = 0;
};

/// Adds delta * l(x) for a seeded random unit functional l, with delta the
/// smallest of 1e-3 * 2^-k (k < 20) leaving every window critical point
/// nondegenerate. Throws MorsificationFailed.
MorsifyResult morsify(const ProblemSpec& problem, double eps, std::uint64_t seed,
                      const CriticalOptions& options = {});

// ---------------------------------------------------------------------------
// epsilon and theta sweeps

struct ValueCluster {
    int index = 0;
    std::vector<std::pair<double, double>> trail;  // (eps, critical value), eps decreasing
    bool bounded = true;
    double exponent = 0.0;     // |value| ~ coefficient * eps^exponent
    double coefficient = 0.0;
    double limit_estimate = 0.0;
};

struct SweepSample {
    double eps = 0.0;
    std::vector<CriticalPoint> points;
    int drifting_to_end = 0;
};

struct SweepReport {
    std::vector<double> eps_grid;  // decreasing
    std::vector<SweepSample> samples;
    std::vector<ValueCluster> clusters;
    double lambda = 1.0;
    double Lambda = 2.0;
    std::optional<double> eps0;  // largest grid eps from which the trichotomy holds
    bool trichotomy_holds = false;
};

/// Parses "2^-3..2^-12" (every integer power in between), "a,b,c" lists or
/// a single number.
std::vector<double> parse_eps_grid(const std::string& spec);

SweepReport sweep_epsilon(const ProblemSpec& problem, std::span<const double> eps_grid,
                          const CriticalOptions& options = {});

struct ThetaSweepReport {
    std::vector<double> thetas;
    std::vector<SweepReport> per_theta;
    double lambda_uniform = 0.0;
    bool uniform_lambda = false;
    bool experimental = true;  // empirical evidence only
};

/// thetas = 2 pi k / count.
std::vector<double> theta_grid(int count);

ThetaSweepReport sweep_theta(const AlgebraicProblem& problem, std::span<const double> thetas,
                             std::span<const double> eps_grid, const CriticalOptions& options = {});

}  // namespace morsevanish
