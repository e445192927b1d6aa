#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morsevanish/compactify.hpp"
#include "morsevanish/critical.hpp"
#include "morsevanish/homology.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish {

/// Top-dimensional cells of a regular grid on a box, flagged by whether
/// f_eps at the cell centre lies in {f <= Lambda} and {f <= -lambda}.
struct CubicalPair {
    Box box;
    std::vector<int> resolution;  // cells per axis
    std::vector<std::uint8_t> in_X;  // row-major, last axis fastest
    std::vector<std::uint8_t> in_A;

    [[nodiscard]] int dimension() const { return static_cast<int>(resolution.size()); }
    [[nodiscard]] std::size_t cells() const { return in_X.size(); }
};

CubicalPair build_cubical_pair(const ProblemSpec& problem, double eps, double lambda,
                               double Lambda, const Box& box, int resolution, int jobs = 0);

/// Integer homology of the pair; dimension <= 3.
HomologyResult pair_homology(const CubicalPair& pair);

/// chi(X) - chi(A) by vertex patterns; dimension <= 4.
long pair_euler_characteristic(const CubicalPair& pair);

struct OracleOptions {
    int resolution = 64;
    std::optional<Box> box;  // defaults to the domain box
    int max_box_doublings = 3;
    bool check_refinement = true;
    int jobs = 0;
};

struct OracleResult {
    std::optional<HomologyResult> homology;  // dimension <= 3
    long euler_characteristic = 0;
    Box box;                // after growth
    int resolution = 0;     // cells per axis at that box
    int box_doublings = 0;
    bool refinement_checked = false;
};

/// Relative homology of ({f_eps <= Lambda}, {f_eps <= -lambda}) inside a box
/// grown until the answer survives doubling, then checked against 2x
/// refinement. Dimension 4 yields the Euler characteristic only.
/// Throws ResolutionTooCoarse, Unsupported.
OracleResult sublevel_pair_homology(const ProblemSpec& problem, double eps, double lambda,
                                    double Lambda, const OracleOptions& options = {});

struct EulerCheck {
    long morse = 0;   // sum of (-1)^index over window points
    long oracle = 0;
    bool pass = false;
};

EulerCheck euler_check(const std::vector<CriticalPoint>& points, const OracleResult& oracle);

// ---------------------------------------------------------------------------
// catalog

struct CatalogEntry {
    std::string name;
    std::string note;
    ProblemSpec problem;
    std::optional<AlgebraicProblem> algebraic;
    HomologyResult expected;
    double eps = 0.01;
    int oracle_resolution = 64;
    bool homology_comparable = true;  // false: only used for critical point checks
};

const std::vector<CatalogEntry>& catalog();

/// Throws UnknownEntry.
const CatalogEntry& catalog_lookup(const std::string& name);

}  // namespace morsevanish
