#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "morsevanish/critical.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish {

using Integer = boost::multiprecision::cpp_int;

/// Dense row-major matrix of arbitrary-precision integers.
class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols) {}

    static IntMatrix identity(int n);

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    Integer& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
    const Integer& operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }

    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] IntMatrix transpose() const;
    bool operator==(const IntMatrix& o) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Integer> data_;
};

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
IntMatrix operator-(const IntMatrix& a, const IntMatrix& b);
std::string to_string(const IntMatrix& m);

/// U A V = D with U, V unimodular and D diagonal, d_1 | d_2 | ..., d_i > 0.
struct SmithForm {
    IntMatrix U, U_inv, V, V_inv;
    std::vector<Integer> diagonal;  // the rank many nonzero entries
    [[nodiscard]] int rank() const { return static_cast<int>(diagonal.size()); }
};

SmithForm smith_normal_form(const IntMatrix& a);

/// Nonzero invariant factors only; cheaper than the full form.
std::vector<Integer> invariant_factors(IntMatrix a);

// ---------------------------------------------------------------------------

struct HomologyGroup {
    long betti = 0;
    std::vector<Integer> torsion;  // invariant factors > 1
    bool operator==(const HomologyGroup& o) const = default;
};

/// Groups by degree; degrees past the end are zero.
struct HomologyResult {
    std::vector<HomologyGroup> groups;

    [[nodiscard]] long betti(int k) const;
    [[nodiscard]] std::vector<Integer> torsion(int k) const;
    [[nodiscard]] long euler_characteristic() const;
    [[nodiscard]] bool is_zero() const;
    void trim();  // drops trailing zero groups
    bool operator==(const HomologyResult& o) const;
};

std::string to_string(const HomologyResult& h);

/// Chain complex given by its ranks and boundary maps d_k: C_k -> C_{k-1}
/// (d_0 is the zero map to nothing).
struct ChainComplex {
    std::vector<int> ranks;
    std::vector<IntMatrix> boundary;  // boundary[k] is ranks[k-1] x ranks[k]; boundary[0] is 0 x ranks[0]

    [[nodiscard]] int top_degree() const { return static_cast<int>(ranks.size()) - 1; }
    [[nodiscard]] int rank(int k) const;
    [[nodiscard]] IntMatrix d(int k) const;  // zero matrix outside the stored range
};

struct DSquaredWitness {
    int degree = 0;  // d_{degree-1} d_degree != 0
    int source = 0;  // generator position in degree
    int target = 0;  // generator position in degree - 2
    Integer value;
};

/// Exact check of d d = 0; returns the first offending entry.
std::optional<DSquaredWitness> d_squared_witness(const ChainComplex& c);

HomologyResult homology(const ChainComplex& c);

/// Universal coefficients: H^k = Z^{b_k} + T_{k-1}.
HomologyResult cohomology_from_homology(const HomologyResult& h);

// ---------------------------------------------------------------------------
// Morse complexes

struct MorseComplex {
    std::vector<std::vector<int>> generators;  // critical point ids per degree
    std::vector<std::vector<double>> values;
    ChainComplex chain;
    double a = 0.0;
    double b = 0.0;
    double eps = 0.0;

    [[nodiscard]] int position(int degree, int id) const;  // -1 when absent
};

using CountTable = std::map<std::pair<int, int>, int>;

/// Generators are the nondegenerate window points, in canonical order.
/// Every index-difference-one pair needs an entry in counts. Throws MissingCount.
MorseComplex assemble_complex(const std::vector<CriticalPoint>& points, const CountTable& counts,
                              double eps, const WindowSpec& window);

struct DSquaredReport {
    bool pass = true;
    std::optional<DSquaredWitness> witness;
    int source_id = -1;  // critical point ids of the witness
    int target_id = -1;
};

DSquaredReport verify_d_squared(const MorseComplex& complex);

HomologyResult homology(const MorseComplex& complex);

// ---------------------------------------------------------------------------
// chain maps

struct ChainMap {
    std::vector<IntMatrix> maps;  // maps[k]: target rank k x source rank k
};

struct ChainMapWitness {
    int degree = 0;
    int row = 0;
    int col = 0;
    Integer residual;  // entry of d c - c d in degree - 1
};

std::optional<ChainMapWitness> chain_map_witness(const ChainComplex& source,
                                                 const ChainComplex& target, const ChainMap& map);

ChainMap compose(const ChainMap& second, const ChainMap& first);

/// Map on the free parts of homology in the canonical SNF bases, plus the
/// quasi-isomorphism verdict from the homology of the mapping cone.
struct InducedMap {
    std::vector<IntMatrix> free_part;  // per degree: betti_target x betti_source
    bool isomorphism = false;
    HomologyResult cone;
};

InducedMap induced_map(const ChainComplex& source, const ChainComplex& target, const ChainMap& map);

/// Mapping cone with Cone_k = S_{k-1} + T_k.
ChainComplex mapping_cone(const ChainComplex& source, const ChainComplex& target,
                          const ChainMap& map);

struct ContinuationMap {
    ChainMap map;
    InducedMap induced;
};

/// Builds c from counts keyed by (source id, target id) and checks
/// d c = c d exactly. Throws NotChainMap.
ContinuationMap continuation_chain_map(const MorseComplex& source, const MorseComplex& target,
                                       const CountTable& counts);

}  // namespace morsevanish
