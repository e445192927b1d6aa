#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "morsevanish/errors.hpp"
#include "morsevanish/flow.hpp"
#include "morsevanish/homology.hpp"
#include "morsevanish/oracle.hpp"

using namespace morsevanish;

namespace {

IntMatrix from_rows(const std::vector<std::vector<long>>& rows)
{
    const int r = static_cast<int>(rows.size());
    const int c = r ? static_cast<int>(rows[0].size()) : 0;
    IntMatrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
    return m;
}

// Fraction-free elimination on a small square matrix.
std::int64_t bareiss_det(std::vector<std::vector<std::int64_t>> a)
{
    const int n = static_cast<int>(a.size());
    std::int64_t sign = 1, prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (a[k][k] == 0) {
            int swap = -1;
            for (int i = k + 1; i < n; ++i)
                if (a[i][k] != 0) swap = i;
            if (swap < 0) return 0;
            std::swap(a[k], a[swap]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

void subsets(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out)
{
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < n; ++i) {
        cur.push_back(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

// Invariant factors as ratios of gcds of k x k minors.
std::vector<std::int64_t> minors_invariant_factors(const std::vector<std::vector<std::int64_t>>& a)
{
    const int r = static_cast<int>(a.size()), c = static_cast<int>(a[0].size());
    std::vector<std::int64_t> out;
    std::int64_t prev = 1;
    for (int k = 1; k <= std::min(r, c); ++k) {
        std::vector<std::vector<int>> rs, cs;
        std::vector<int> cur;
        subsets(r, k, 0, cur, rs);
        subsets(c, k, 0, cur, cs);
        std::int64_t g = 0;
        for (const auto& ri : rs)
            for (const auto& ci : cs) {
                std::vector<std::vector<std::int64_t>> m(k, std::vector<std::int64_t>(k));
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j) m[i][j] = a[ri[i]][ci[j]];
                g = std::gcd(g, bareiss_det(m));
            }
        if (g == 0) break;
        out.push_back(g / prev);
        prev = g;
    }
    return out;
}

HomologyResult free_in(int degree, long rank)
{
    HomologyResult h;
    h.groups.resize(degree + 1);
    h.groups[degree].betti = rank;
    return h;
}

CriticalPoint point(int id, int index, double value)
{
    CriticalPoint p;
    p.id = id;
    p.index = index;
    p.value = value;
    p.coordinates = {static_cast<double>(id), 0.0};
    p.hessian_eigenvalues = {index >= 1 ? -1.0 : 1.0, index >= 2 ? -1.0 : 1.0};
    return p;
}

HomologyResult morse_homology(const ProblemSpec& problem, double eps)
{
    const auto pts = find_critical_points(problem, eps).points;
    const auto counts = compute_boundaries(problem, eps, pts).counts;
    return homology(assemble_complex(pts, counts, eps, problem.window));
}

}  // namespace

TEST(Smith, MatchesMinorsOracle)
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> entry(-4, 4), size(1, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const int r = size(rng), c = size(rng);
        std::vector<std::vector<std::int64_t>> a(r, std::vector<std::int64_t>(c));
        IntMatrix m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = a[i][j] = entry(rng) * (trial % 3 == 0 ? 2 : 1);
        const SmithForm s = smith_normal_form(m);
        const auto expected = minors_invariant_factors(a);
        ASSERT_EQ(s.rank(), static_cast<int>(expected.size()));
        for (int k = 0; k < s.rank(); ++k) EXPECT_EQ(s.diagonal[k], Integer(expected[k]));
        EXPECT_EQ(invariant_factors(m), s.diagonal);

        IntMatrix d(r, c);
        for (int k = 0; k < s.rank(); ++k) d(k, k) = s.diagonal[k];
        EXPECT_EQ(s.U * m * s.V, d);
        EXPECT_EQ(s.U * s.U_inv, IntMatrix::identity(r));
        EXPECT_EQ(s.V * s.V_inv, IntMatrix::identity(c));
    }
}

TEST(Smith, LargeEntriesStayExact)
{
    IntMatrix m(2, 2);
    m(0, 0) = Integer("123456789012345678901234567890");
    m(0, 1) = 6;
    m(1, 0) = 4;
    m(1, 1) = 10;
    const SmithForm s = smith_normal_form(m);
    ASSERT_EQ(s.rank(), 2);
    EXPECT_EQ(s.diagonal[0], 2);
    EXPECT_EQ(s.diagonal[0] * s.diagonal[1], m(0, 0) * 10 - 24);
}

TEST(Homology, Examples)
{
    ChainComplex dw;
    dw.ranks = {2, 1};
    dw.boundary = {IntMatrix(0, 2), from_rows({{1}, {-1}})};
    EXPECT_EQ(homology(dw), free_in(0, 1));

    ChainComplex zero;
    zero.ranks = {0, 0};
    zero.boundary = {IntMatrix(0, 0), IntMatrix(0, 0)};
    EXPECT_TRUE(homology(zero).is_zero());

    ChainComplex two;
    two.ranks = {1, 1};
    two.boundary = {IntMatrix(0, 1), from_rows({{2}})};
    const HomologyResult h = homology(two);
    EXPECT_EQ(h.betti(0), 0);
    ASSERT_EQ(h.torsion(0).size(), 1u);
    EXPECT_EQ(h.torsion(0)[0], 2);
    EXPECT_EQ(h.betti(1), 0);
    EXPECT_TRUE(h.torsion(1).empty());
    EXPECT_EQ(to_string(h), "H0=Z/2");

    const HomologyResult co = cohomology_from_homology(h);
    EXPECT_EQ(co.betti(0), 0);
    EXPECT_TRUE(co.torsion(0).empty());
    ASSERT_EQ(co.torsion(1).size(), 1u);
}

TEST(Homology, EulerCharacteristicMatchesRanks)
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coin(-1, 1);
    for (int trial = 0; trial < 30; ++trial) {
        // d1 d2 = 0 by construction: d2 spans a subspace of ker d1
        ChainComplex c;
        c.ranks = {3, 4, 2};
        IntMatrix d1(3, 4), k(4, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) d1(i, j) = coin(rng);
        for (int i = 0; i < 3; ++i) d1(i, 3) = d1(i, 0) + d1(i, 1);
        for (int j = 0; j < 2; ++j) {
            k(0, j) = (j + 1);
            k(1, j) = (j + 1);
            k(3, j) = -(j + 1);
        }
        c.boundary = {IntMatrix(0, 3), d1, k};
        ASSERT_FALSE(d_squared_witness(c));
        EXPECT_EQ(homology(c).euler_characteristic(), 3 - 4 + 2);
    }
}

TEST(DSquared, CorruptedCountHasWitness)
{
    std::vector<CriticalPoint> pts{point(0, 0, -0.5), point(1, 1, 0.0), point(2, 2, 0.5)};
    WindowSpec w = WindowSpec::symmetric(1.0);
    CountTable counts{{{1, 0}, 1}, {{2, 1}, 1}};
    const MorseComplex bad = assemble_complex(pts, counts, 0.01, w);
    const DSquaredReport r = verify_d_squared(bad);
    EXPECT_FALSE(r.pass);
    ASSERT_TRUE(r.witness);
    EXPECT_EQ(r.source_id, 2);
    EXPECT_EQ(r.target_id, 0);
    EXPECT_EQ(r.witness->value, 1);

    counts[{2, 1}] = 0;
    EXPECT_TRUE(verify_d_squared(assemble_complex(pts, counts, 0.01, w)).pass);
    EXPECT_THROW((void)assemble_complex(pts, CountTable{{{1, 0}, 1}}, 0.01, w), MissingCount);
}

TEST(DSquared, TwoDegreesAreVacuous)
{
    std::vector<CriticalPoint> pts{point(0, 0, -0.5), point(1, 0, -0.4), point(2, 1, 0.0)};
    const MorseComplex c =
        assemble_complex(pts, {{{2, 0}, 1}, {{2, 1}, -1}}, 0.01, WindowSpec::symmetric(1.0));
    EXPECT_TRUE(verify_d_squared(c).pass);
    EXPECT_EQ(homology(c), free_in(0, 1));
}

TEST(Complex, WindowSelectsGenerators)
{
    std::vector<CriticalPoint> pts{point(0, 0, -5.0), point(1, 0, 0.1), point(2, 1, 0.2)};
    pts[0].window = WindowStatus::below;
    const MorseComplex c = assemble_complex(pts, {{{2, 1}, 1}}, 0.01, WindowSpec::symmetric(1.0));
    EXPECT_EQ(c.generators[0], (std::vector<int>{1}));
    EXPECT_EQ(c.position(0, 0), -1);
    EXPECT_EQ(c.position(1, 2), 0);
    EXPECT_TRUE(homology(c).is_zero());
}

TEST(ChainMaps, IdentityIsIso)
{
    std::vector<CriticalPoint> pts{point(0, 0, -0.5), point(1, 0, -0.4), point(2, 1, 0.0)};
    const CountTable d{{{2, 0}, 1}, {{2, 1}, -1}};
    const MorseComplex c = assemble_complex(pts, d, 0.01, WindowSpec::symmetric(1.0));
    const CountTable id{{{0, 0}, 1}, {{1, 1}, 1}, {{2, 2}, 1}};
    const ContinuationMap m = continuation_chain_map(c, c, id);
    EXPECT_TRUE(m.induced.isomorphism);
    EXPECT_TRUE(m.induced.cone.is_zero());
    ASSERT_GE(m.induced.free_part.size(), 1u);
    EXPECT_EQ(m.induced.free_part[0], IntMatrix::identity(1));
    for (std::size_t k = 1; k < m.induced.free_part.size(); ++k) EXPECT_EQ(m.induced.free_part[k].rows(), 0);
    EXPECT_THROW((void)continuation_chain_map(c, c, {{{0, 0}, 1}, {{1, 1}, 0}, {{2, 2}, 1}}), NotChainMap);
}

TEST(ChainMaps, ComposeAndCone)
{
    ChainComplex c;
    c.ranks = {2, 1};
    c.boundary = {IntMatrix(0, 2), from_rows({{1}, {-1}})};
    ChainMap swap{{from_rows({{0, 1}, {1, 0}}), from_rows({{-1}})}};
    EXPECT_FALSE(chain_map_witness(c, c, swap));
    const ChainMap twice = compose(swap, swap);
    EXPECT_EQ(twice.maps[0], IntMatrix::identity(2));
    EXPECT_EQ(twice.maps[1], IntMatrix::identity(1));
    EXPECT_TRUE(induced_map(c, c, swap).isomorphism);

    ChainMap zero{{IntMatrix(2, 2), IntMatrix(1, 1)}};
    const InducedMap z = induced_map(c, c, zero);
    EXPECT_FALSE(z.isomorphism);
    EXPECT_EQ(mapping_cone(c, c, zero).ranks, (std::vector<int>{2, 3, 1}));
}

TEST(Duality, NegativeEpsMatchesNegatedFunction)
{
    for (const auto& e : catalog()) {
        if (e.problem.dimension() != 1) continue;
        ProblemSpec neg = e.problem;
        neg.f = -e.problem.f;
        const HomologyResult lhs = morse_homology(e.problem, -e.eps);
        const HomologyResult rhs = morse_homology(neg, e.eps);
        for (int k = 0; k <= 1; ++k) EXPECT_EQ(lhs.betti(k), rhs.betti(1 - k)) << e.name << " degree " << k;
    }
}
