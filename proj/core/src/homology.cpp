#include "morsevanish/homology.hpp"

#include <algorithm>
#include <sstream>

#include "morsevanish/errors.hpp"

namespace morsevanish {

IntMatrix IntMatrix::identity(int n)
{
    IntMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

bool IntMatrix::is_zero() const
{
    return std::all_of(data_.begin(), data_.end(), [](const Integer& v) { return v.is_zero(); });
}

IntMatrix IntMatrix::transpose() const
{
    IntMatrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b)
{
    if (a.cols() != b.rows()) throw ValidationError("matrix product with mismatched shapes");
    IntMatrix p(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const Integer& x = a(i, k);
            if (x.is_zero()) continue;
            for (int j = 0; j < b.cols(); ++j)
                if (!b(k, j).is_zero()) p(i, j) += x * b(k, j);
        }
    return p;
}

IntMatrix operator-(const IntMatrix& a, const IntMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("matrix difference with mismatched shapes");
    IntMatrix d(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) d(i, j) = a(i, j) - b(i, j);
    return d;
}

std::string to_string(const IntMatrix& m)
{
    std::ostringstream out;
    out << '[';
    for (int i = 0; i < m.rows(); ++i) {
        out << (i ? "; " : "");
        for (int j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    }
    out << ']';
    return out.str();
}

// ---------------------------------------------------------------------------
// Smith normal form

namespace {

// Elimination on D with optional bookkeeping of U, U^-1, V, V^-1.
class Smith {
public:
    Smith(IntMatrix d, bool track) : d_(std::move(d)), track_(track)
    {
        if (track_) {
            u_ = ui_ = IntMatrix::identity(d_.rows());
            v_ = vi_ = IntMatrix::identity(d_.cols());
        }
    }

    std::vector<Integer> run()
    {
        const int m = d_.rows(), n = d_.cols();
        std::vector<Integer> diag;
        for (int t = 0; t < std::min(m, n); ++t) {
            if (!move_smallest(t, t, m, t, n)) break;
            while (true) {
                bool clean = true;
                for (int i = t + 1; i < m; ++i) {
                    if (d_(i, t).is_zero()) continue;
                    Integer q = d_(i, t) / d_(t, t);
                    if (!q.is_zero()) row_add(i, t, -q);
                    if (!d_(i, t).is_zero()) clean = false;
                }
                for (int j = t + 1; j < n; ++j) {
                    if (d_(t, j).is_zero()) continue;
                    Integer q = d_(t, j) / d_(t, t);
                    if (!q.is_zero()) col_add(j, t, -q);
                    if (!d_(t, j).is_zero()) clean = false;
                }
                if (!clean) {
                    move_smallest_cross(t);
                    continue;
                }
                bool divisible = true;
                for (int i = t + 1; i < m && divisible; ++i)
                    for (int j = t + 1; j < n; ++j)
                        if (!Integer(d_(i, j) % d_(t, t)).is_zero()) {
                            row_add(t, i, 1);
                            divisible = false;
                            break;
                        }
                if (divisible) break;
            }
            if (d_(t, t) < 0) row_neg(t);
            diag.push_back(d_(t, t));
        }
        return diag;
    }

    IntMatrix u_, ui_, v_, vi_;

private:
    // Moves the smallest nonzero |entry| of the block to (t, t).
    bool move_smallest(int t, int r0, int r1, int c0, int c1)
    {
        int bi = -1, bj = -1;
        Integer best;
        for (int i = r0; i < r1 && best != 1; ++i)
            for (int j = c0; j < c1; ++j) {
                const Integer& x = d_(i, j);
                if (x.is_zero()) continue;
                Integer ax = abs(x);
                if (bi < 0 || ax < best) {
                    best = ax;
                    bi = i;
                    bj = j;
                    if (best == 1) break;
                }
            }
        if (bi < 0) return false;
        if (bi != t) row_swap(bi, t);
        if (bj != t) col_swap(bj, t);
        return true;
    }

    void move_smallest_cross(int t)
    {
        int bi = t, bj = t;
        Integer best = abs(d_(t, t));
        for (int i = t + 1; i < d_.rows(); ++i)
            if (!d_(i, t).is_zero() && abs(d_(i, t)) < best) {
                best = abs(d_(i, t));
                bi = i;
                bj = t;
            }
        for (int j = t + 1; j < d_.cols(); ++j)
            if (!d_(t, j).is_zero() && abs(d_(t, j)) < best) {
                best = abs(d_(t, j));
                bi = t;
                bj = j;
            }
        if (bi != t) row_swap(bi, t);
        if (bj != t) col_swap(bj, t);
    }

    void row_swap(int i, int j)
    {
        for (int c = 0; c < d_.cols(); ++c) std::swap(d_(i, c), d_(j, c));
        if (!track_) return;
        for (int c = 0; c < u_.cols(); ++c) std::swap(u_(i, c), u_(j, c));
        for (int r = 0; r < ui_.rows(); ++r) std::swap(ui_(r, i), ui_(r, j));
    }

    // row i += q row j
    void row_add(int i, int j, const Integer& q)
    {
        for (int c = 0; c < d_.cols(); ++c)
            if (!d_(j, c).is_zero()) d_(i, c) += q * d_(j, c);
        if (!track_) return;
        for (int c = 0; c < u_.cols(); ++c)
            if (!u_(j, c).is_zero()) u_(i, c) += q * u_(j, c);
        for (int r = 0; r < ui_.rows(); ++r)
            if (!ui_(r, i).is_zero()) ui_(r, j) -= q * ui_(r, i);
    }

    void row_neg(int i)
    {
        for (int c = 0; c < d_.cols(); ++c) d_(i, c) = -d_(i, c);
        if (!track_) return;
        for (int c = 0; c < u_.cols(); ++c) u_(i, c) = -u_(i, c);
        for (int r = 0; r < ui_.rows(); ++r) ui_(r, i) = -ui_(r, i);
    }

    void col_swap(int i, int j)
    {
        for (int r = 0; r < d_.rows(); ++r) std::swap(d_(r, i), d_(r, j));
        if (!track_) return;
        for (int r = 0; r < v_.rows(); ++r) std::swap(v_(r, i), v_(r, j));
        for (int c = 0; c < vi_.cols(); ++c) std::swap(vi_(i, c), vi_(j, c));
    }

    // column i += q column j
    void col_add(int i, int j, const Integer& q)
    {
        for (int r = 0; r < d_.rows(); ++r)
            if (!d_(r, j).is_zero()) d_(r, i) += q * d_(r, j);
        if (!track_) return;
        for (int r = 0; r < v_.rows(); ++r)
            if (!v_(r, j).is_zero()) v_(r, i) += q * v_(r, j);
        for (int c = 0; c < vi_.cols(); ++c)
            if (!vi_(i, c).is_zero()) vi_(j, c) -= q * vi_(i, c);
    }

    IntMatrix d_;
    bool track_;
};

}  // namespace

SmithForm smith_normal_form(const IntMatrix& a)
{
    Smith s(a, true);
    SmithForm out;
    out.diagonal = s.run();
    out.U = std::move(s.u_);
    out.U_inv = std::move(s.ui_);
    out.V = std::move(s.v_);
    out.V_inv = std::move(s.vi_);
    return out;
}

std::vector<Integer> invariant_factors(IntMatrix a)
{
    return Smith(std::move(a), false).run();
}

// ---------------------------------------------------------------------------
// homology results

long HomologyResult::betti(int k) const
{
    return k >= 0 && k < static_cast<int>(groups.size()) ? groups[k].betti : 0;
}

std::vector<Integer> HomologyResult::torsion(int k) const
{
    return k >= 0 && k < static_cast<int>(groups.size()) ? groups[k].torsion
                                                         : std::vector<Integer>{};
}

long HomologyResult::euler_characteristic() const
{
    long chi = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) chi += (k % 2 ? -1 : 1) * groups[k].betti;
    return chi;
}

bool HomologyResult::is_zero() const
{
    return std::all_of(groups.begin(), groups.end(),
                       [](const HomologyGroup& g) { return g.betti == 0 && g.torsion.empty(); });
}

void HomologyResult::trim()
{
    while (!groups.empty() && groups.back().betti == 0 && groups.back().torsion.empty())
        groups.pop_back();
}

bool HomologyResult::operator==(const HomologyResult& o) const
{
    HomologyResult a = *this, b = o;
    a.trim();
    b.trim();
    return a.groups == b.groups;
}

std::string to_string(const HomologyResult& h)
{
    if (h.is_zero()) return "0";
    std::ostringstream out;
    bool first = true;
    for (std::size_t k = 0; k < h.groups.size(); ++k) {
        const auto& g = h.groups[k];
        if (g.betti == 0 && g.torsion.empty()) continue;
        out << (first ? "" : ", ") << 'H' << k << '=';
        first = false;
        bool any = false;
        if (g.betti > 0) {
            out << 'Z';
            if (g.betti > 1) out << '^' << g.betti;
            any = true;
        }
        for (const auto& t : g.torsion) {
            out << (any ? "+" : "") << "Z/" << t;
            any = true;
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// chain complexes

int ChainComplex::rank(int k) const
{
    return k >= 0 && k < static_cast<int>(ranks.size()) ? ranks[k] : 0;
}

IntMatrix ChainComplex::d(int k) const
{
    if (k >= 1 && k < static_cast<int>(boundary.size())) return boundary[k];
    return IntMatrix(rank(k - 1), rank(k));
}

std::optional<DSquaredWitness> d_squared_witness(const ChainComplex& c)
{
    for (int k = 2; k <= c.top_degree(); ++k) {
        IntMatrix dd = c.d(k - 1) * c.d(k);
        for (int i = 0; i < dd.rows(); ++i)
            for (int j = 0; j < dd.cols(); ++j)
                if (!dd(i, j).is_zero()) return DSquaredWitness{k, j, i, dd(i, j)};
    }
    return std::nullopt;
}

HomologyResult homology(const ChainComplex& c)
{
    const int top = c.top_degree();
    std::vector<std::vector<Integer>> factors(top + 2);
    for (int k = 1; k <= top; ++k) factors[k] = invariant_factors(c.d(k));
    HomologyResult h;
    for (int k = 0; k <= top; ++k) {
        HomologyGroup g;
        g.betti = c.rank(k) - static_cast<long>(factors[k].size()) -
                  static_cast<long>(factors[k + 1].size());
        for (const auto& f : factors[k + 1])
            if (f > 1) g.torsion.push_back(f);
        h.groups.push_back(std::move(g));
    }
    return h;
}

HomologyResult cohomology_from_homology(const HomologyResult& h)
{
    HomologyResult out;
    for (std::size_t k = 0; k < h.groups.size() + 1; ++k) {
        HomologyGroup g;
        g.betti = h.betti(static_cast<int>(k));
        if (k > 0) g.torsion = h.torsion(static_cast<int>(k) - 1);
        out.groups.push_back(std::move(g));
    }
    out.trim();
    return out;
}

// ---------------------------------------------------------------------------
// Morse complexes

int MorseComplex::position(int degree, int id) const
{
    if (degree < 0 || degree >= static_cast<int>(generators.size())) return -1;
    const auto& g = generators[degree];
    auto it = std::find(g.begin(), g.end(), id);
    return it == g.end() ? -1 : static_cast<int>(it - g.begin());
}

MorseComplex assemble_complex(const std::vector<CriticalPoint>& points, const CountTable& counts,
                              double eps, const WindowSpec& window)
{
    MorseComplex mc;
    mc.a = window.a;
    mc.b = window.b;
    mc.eps = eps;
    const int n = points.empty() ? 0 : static_cast<int>(points.front().coordinates.size());
    mc.generators.resize(n + 1);
    mc.values.resize(n + 1);
    for (const auto& p : points) {
        if (!p.in_window()) continue;
        if (p.index < 0 || p.index > n)
            throw ValidationError("critical point " + std::to_string(p.id) + " has index " +
                                  std::to_string(p.index) + " in dimension " + std::to_string(n));
        if (p.degenerate)
            throw DegenerateCriticalPoint("window point " + std::to_string(p.id) +
                                          " is degenerate");
        mc.generators[p.index].push_back(p.id);
        mc.values[p.index].push_back(p.value);
    }
    auto& ch = mc.chain;
    for (const auto& g : mc.generators) ch.ranks.push_back(static_cast<int>(g.size()));
    ch.boundary.resize(n + 1);
    ch.boundary[0] = IntMatrix(0, ch.rank(0));
    for (int k = 1; k <= n; ++k) {
        IntMatrix d(ch.rank(k - 1), ch.rank(k));
        for (int j = 0; j < ch.rank(k); ++j)
            for (int i = 0; i < ch.rank(k - 1); ++i) {
                const int p = mc.generators[k][j], q = mc.generators[k - 1][i];
                auto it = counts.find({p, q});
                if (it == counts.end())
                    throw MissingCount("no trajectory count for " + std::to_string(p) + " -> " +
                                       std::to_string(q));
                d(i, j) = it->second;
            }
        ch.boundary[k] = std::move(d);
    }
    return mc;
}

DSquaredReport verify_d_squared(const MorseComplex& complex)
{
    DSquaredReport r;
    r.witness = d_squared_witness(complex.chain);
    if (r.witness) {
        r.pass = false;
        r.source_id = complex.generators[r.witness->degree][r.witness->source];
        r.target_id = complex.generators[r.witness->degree - 2][r.witness->target];
    }
    return r;
}

HomologyResult homology(const MorseComplex& complex)
{
    return homology(complex.chain);
}

// ---------------------------------------------------------------------------
// chain maps

namespace {

IntMatrix map_at(const ChainMap& m, const ChainComplex& source, const ChainComplex& target, int k)
{
    if (k >= 0 && k < static_cast<int>(m.maps.size())) return m.maps[k];
    return IntMatrix(target.rank(k), source.rank(k));
}

// Canonical bases of H_k from Smith forms: cycles Z_k = V_k[:, r_k:], and
// H_k = coker(M_k) with M_k the boundary d_{k+1} in cycle coordinates.
struct HomologyBasis {
    int r = 0;                  // rank d_k
    IntMatrix V, V_inv;         // from d_k
    SmithForm M;                // of d_{k+1} in cycle coordinates
    int cycles = 0;
    [[nodiscard]] int betti() const { return cycles - M.rank(); }

    // free coordinates of the class of a cycle y in C_k
    [[nodiscard]] std::vector<Integer> classify(const IntMatrix& y) const
    {
        IntMatrix z = V_inv * y;
        IntMatrix zc(cycles, 1);
        for (int i = 0; i < cycles; ++i) zc(i, 0) = z(r + i, 0);
        IntMatrix w = M.U * zc;
        std::vector<Integer> out;
        for (int i = M.rank(); i < cycles; ++i) out.push_back(w(i, 0));
        return out;
    }

    // chain representing the i-th free generator
    [[nodiscard]] IntMatrix generator(int i) const
    {
        IntMatrix e(cycles, 1);
        for (int j = 0; j < cycles; ++j) e(j, 0) = M.U_inv(j, M.rank() + i);
        IntMatrix chain(V.rows(), 1);
        for (int row = 0; row < V.rows(); ++row)
            for (int j = 0; j < cycles; ++j)
                if (!e(j, 0).is_zero()) chain(row, 0) += V(row, r + j) * e(j, 0);
        return chain;
    }
};

HomologyBasis basis_of(const ChainComplex& c, int k)
{
    HomologyBasis b;
    SmithForm dk = smith_normal_form(c.d(k));
    b.r = dk.rank();
    b.V = std::move(dk.V);
    b.V_inv = std::move(dk.V_inv);
    b.cycles = c.rank(k) - b.r;
    IntMatrix full = b.V_inv * c.d(k + 1);
    IntMatrix m(b.cycles, full.cols());
    for (int i = 0; i < b.cycles; ++i)
        for (int j = 0; j < full.cols(); ++j) m(i, j) = full(b.r + i, j);
    b.M = smith_normal_form(m);
    return b;
}

}  // namespace

std::optional<ChainMapWitness> chain_map_witness(const ChainComplex& source,
                                                 const ChainComplex& target, const ChainMap& map)
{
    const int top = std::max(source.top_degree(), target.top_degree());
    for (int k = 0; k <= top; ++k) {
        IntMatrix c = map_at(map, source, target, k);
        if (c.rows() != target.rank(k) || c.cols() != source.rank(k))
            throw ValidationError("chain map has the wrong shape in degree " + std::to_string(k));
    }
    for (int k = 1; k <= top; ++k) {
        IntMatrix lhs = target.d(k) * map_at(map, source, target, k);
        IntMatrix rhs = map_at(map, source, target, k - 1) * source.d(k);
        IntMatrix diff = lhs - rhs;
        for (int i = 0; i < diff.rows(); ++i)
            for (int j = 0; j < diff.cols(); ++j)
                if (!diff(i, j).is_zero()) return ChainMapWitness{k, i, j, diff(i, j)};
    }
    return std::nullopt;
}

ChainMap compose(const ChainMap& second, const ChainMap& first)
{
    ChainMap out;
    const std::size_t top = std::min(second.maps.size(), first.maps.size());
    for (std::size_t k = 0; k < top; ++k) out.maps.push_back(second.maps[k] * first.maps[k]);
    return out;
}

ChainComplex mapping_cone(const ChainComplex& source, const ChainComplex& target,
                          const ChainMap& map)
{
    const int top = std::max(source.top_degree() + 1, target.top_degree());
    ChainComplex cone;
    for (int k = 0; k <= top; ++k) cone.ranks.push_back(source.rank(k - 1) + target.rank(k));
    cone.boundary.resize(top + 1);
    cone.boundary[0] = IntMatrix(0, cone.rank(0));
    for (int k = 1; k <= top; ++k) {
        IntMatrix d(cone.rank(k - 1), cone.rank(k));
        const int s2 = source.rank(k - 2), s1 = source.rank(k - 1);
        IntMatrix ds = source.d(k - 1), dt = target.d(k);
        IntMatrix c = map_at(map, source, target, k - 1);
        for (int i = 0; i < s2; ++i)
            for (int j = 0; j < s1; ++j) d(i, j) = -ds(i, j);
        for (int i = 0; i < target.rank(k - 1); ++i) {
            for (int j = 0; j < s1; ++j) d(s2 + i, j) = c(i, j);
            for (int j = 0; j < target.rank(k); ++j) d(s2 + i, s1 + j) = dt(i, j);
        }
        cone.boundary[k] = std::move(d);
    }
    return cone;
}

InducedMap induced_map(const ChainComplex& source, const ChainComplex& target, const ChainMap& map)
{
    InducedMap out;
    const int top = std::max(source.top_degree(), target.top_degree());
    for (int k = 0; k <= top; ++k) {
        HomologyBasis bs = basis_of(source, k), bt = basis_of(target, k);
        IntMatrix f(bt.betti(), bs.betti());
        IntMatrix c = map_at(map, source, target, k);
        for (int j = 0; j < bs.betti(); ++j) {
            auto coords = bt.classify(c * bs.generator(j));
            for (int i = 0; i < bt.betti(); ++i) f(i, j) = coords[i];
        }
        out.free_part.push_back(std::move(f));
    }
    out.cone = homology(mapping_cone(source, target, map));
    out.isomorphism = out.cone.is_zero();
    return out;
}

ContinuationMap continuation_chain_map(const MorseComplex& source, const MorseComplex& target,
                                       const CountTable& counts)
{
    ContinuationMap out;
    const int top = std::max(source.chain.top_degree(), target.chain.top_degree());
    for (int k = 0; k <= top; ++k) {
        IntMatrix c(target.chain.rank(k), source.chain.rank(k));
        for (int j = 0; j < source.chain.rank(k); ++j)
            for (int i = 0; i < target.chain.rank(k); ++i) {
                auto it = counts.find({source.generators[k][j], target.generators[k][i]});
                if (it != counts.end()) c(i, j) = it->second;
            }
        out.map.maps.push_back(std::move(c));
    }
    if (auto w = chain_map_witness(source.chain, target.chain, out.map)) {
        const int src = source.generators[w->degree][w->col];
        const int tgt = target.generators[w->degree - 1][w->row];
        throw NotChainMap("d c - c d has entry " + w->residual.str() + " at source generator " +
                          std::to_string(src) + " (degree " + std::to_string(w->degree) +
                          "), target generator " + std::to_string(tgt));
    }
    out.induced = induced_map(source.chain, target.chain, out.map);
    return out;
}

}  // namespace morsevanish
