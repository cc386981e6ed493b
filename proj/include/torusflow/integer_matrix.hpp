// Exact integer matrix algebra: Hermite and Smith normal forms, kernels,
// saturation and fraction-free determinants. All arithmetic is on int64
// entries with 128-bit intermediates; nothing here touches floating point.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace torusflow {

using Int = std::int64_t;

/// Dense row-major integer matrix. Rows are the natural unit (lattice
/// generators, covectors), so storage is a vector of rows.
struct IntMat {
    std::vector<std::vector<Int>> rows;

    IntMat() = default;
    IntMat(std::size_t r, std::size_t c) : rows(r, std::vector<Int>(c, 0)) {}
    explicit IntMat(std::vector<std::vector<Int>> rs) : rows(std::move(rs)) {}

    static IntMat identity(std::size_t n) {
        IntMat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.rows[i][i] = 1;
        return m;
    }

    std::size_t row_count() const { return rows.size(); }
    std::size_t col_count() const { return rows.empty() ? 0 : rows[0].size(); }

    Int& at(std::size_t i, std::size_t j) { return rows[i][j]; }
    Int at(std::size_t i, std::size_t j) const { return rows[i][j]; }

    bool operator==(const IntMat& o) const { return rows == o.rows; }
};

/// Extended gcd: returns g = gcd(a,b) >= 0 with x*a + y*b = g.
inline Int xgcd(Int a, Int b, Int& x, Int& y) {
    Int x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        Int q = a / b;
        Int t = a - q * b;
        a = b;
        b = t;
        t = x0 - q * x1;
        x0 = x1;
        x1 = t;
        t = y0 - q * y1;
        y0 = y1;
        y1 = t;
    }
    if (a < 0) {
        a = -a;
        x0 = -x0;
        y0 = -y0;
    }
    x = x0;
    y = y0;
    return a;
}

namespace detail {

inline void check_rectangular(const IntMat& m) {
    for (const auto& r : m.rows)
        if (r.size() != m.col_count())
            throw std::invalid_argument("IntMat: ragged rows");
}

// row(i) <- x*row(i) + y*row(j);  row(j) <- u*row(i) + v*row(j).
// Caller guarantees x*v - y*u = +-1 so the operation is unimodular.
inline void combine_rows(IntMat& m, std::size_t i, std::size_t j, Int x, Int y,
                         Int u, Int v) {
    for (std::size_t c = 0; c < m.col_count(); ++c) {
        __int128 a = m.rows[i][c], b = m.rows[j][c];
        __int128 ni = (__int128)x * a + (__int128)y * b;
        __int128 nj = (__int128)u * a + (__int128)v * b;
        m.rows[i][c] = static_cast<Int>(ni);
        m.rows[j][c] = static_cast<Int>(nj);
    }
}

}  // namespace detail

/// Canonical row-style Hermite normal form of the lattice generated by the
/// rows of `m`. Zero rows are dropped; pivots are positive; entries above a
/// pivot are reduced into [0, pivot). Two row sets generate the same
/// sublattice of Z^c iff their HNFs are identical.
inline IntMat hermite_normal_form(const IntMat& m_in) {
    detail::check_rectangular(m_in);
    IntMat m = m_in;
    const std::size_t nr = m.row_count(), nc = m.col_count();
    std::size_t pivot_row = 0;
    std::vector<std::size_t> pivot_cols;
    for (std::size_t c = 0; c < nc && pivot_row < nr; ++c) {
        // Fold every nonzero entry below the pivot into the pivot row.
        for (std::size_t r = pivot_row + 1; r < nr; ++r) {
            if (m.rows[r][c] == 0) continue;
            Int a = m.rows[pivot_row][c], b = m.rows[r][c];
            Int x, y;
            Int g = xgcd(a, b, x, y);
            detail::combine_rows(m, pivot_row, r, x, y, -(b / g), a / g);
        }
        if (m.rows[pivot_row][c] == 0) continue;
        if (m.rows[pivot_row][c] < 0)
            for (auto& v : m.rows[pivot_row]) v = -v;
        // Reduce the entries above the pivot into [0, pivot).
        Int p = m.rows[pivot_row][c];
        for (std::size_t r = 0; r < pivot_row; ++r) {
            Int q = m.rows[r][c] / p;
            if (m.rows[r][c] - q * p < 0) q -= 1;  // floor division
            if (q != 0)
                for (std::size_t k = 0; k < nc; ++k)
                    m.rows[r][k] -= q * m.rows[pivot_row][k];
        }
        pivot_cols.push_back(c);
        ++pivot_row;
    }
    m.rows.resize(pivot_row);
    return m;
}

/// Rank of the row space over Q.
inline std::size_t rational_rank(const IntMat& m) {
    return hermite_normal_form(m).row_count();
}

/// Smith normal form with transforms: u * m * v = d, where u and v are
/// unimodular and d is diagonal with d1 | d2 | ... >= 0. `vinv` is v^{-1},
/// tracked alongside because saturation and basis completion read it.
struct SmithResult {
    IntMat d;
    IntMat u;     // row transform, r x r
    IntMat v;     // column transform, c x c
    IntMat vinv;  // v^{-1}
    std::size_t rank = 0;
    /// The nonzero diagonal entries d1 | d2 | ... | d_rank.
    std::vector<Int> elementary_divisors() const {
        std::vector<Int> out;
        for (std::size_t i = 0; i < rank; ++i) out.push_back(d.at(i, i));
        return out;
    }
};

inline SmithResult smith_normal_form(const IntMat& m_in) {
    detail::check_rectangular(m_in);
    SmithResult res;
    IntMat& a = res.d;
    a = m_in;
    const std::size_t nr = a.row_count(), nc = a.col_count();
    res.u = IntMat::identity(nr);
    res.v = IntMat::identity(nc);
    res.vinv = IntMat::identity(nc);

    auto swap_rows = [&](std::size_t i, std::size_t j) {
        std::swap(a.rows[i], a.rows[j]);
        std::swap(res.u.rows[i], res.u.rows[j]);
    };
    auto swap_cols = [&](std::size_t i, std::size_t j) {
        for (auto& r : a.rows) std::swap(r[i], r[j]);
        for (auto& r : res.v.rows) std::swap(r[i], r[j]);
        std::swap(res.vinv.rows[i], res.vinv.rows[j]);
    };
    auto add_row = [&](std::size_t dst, std::size_t src, Int q) {
        // row(dst) += q * row(src)
        for (std::size_t c = 0; c < nc; ++c) a.rows[dst][c] += q * a.rows[src][c];
        for (std::size_t c = 0; c < nr; ++c)
            res.u.rows[dst][c] += q * res.u.rows[src][c];
    };
    auto add_col = [&](std::size_t dst, std::size_t src, Int q) {
        // col(dst) += q * col(src); vinv gets the inverse op on rows.
        for (auto& r : a.rows) r[dst] += q * r[src];
        for (auto& r : res.v.rows) r[dst] += q * r[src];
        for (std::size_t c = 0; c < nc; ++c)
            res.vinv.rows[src][c] -= q * res.vinv.rows[dst][c];
    };
    auto negate_row = [&](std::size_t i) {
        for (auto& v : a.rows[i]) v = -v;
        for (auto& v : res.u.rows[i]) v = -v;
    };

    const std::size_t steps = std::min(nr, nc);
    std::size_t t = 0;
    for (; t < steps; ++t) {
        // Pivot: smallest nonzero |entry| in the trailing submatrix.
        std::size_t pi = t, pj = t;
        Int best = 0;
        for (std::size_t i = t; i < nr; ++i)
            for (std::size_t j = t; j < nc; ++j) {
                Int v = std::abs(a.rows[i][j]);
                if (v != 0 && (best == 0 || v < best)) {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        if (best == 0) break;
        if (pi != t) swap_rows(t, pi);
        if (pj != t) swap_cols(t, pj);

        bool clean = false;
        while (!clean) {
            clean = true;
            for (std::size_t i = t + 1; i < nr; ++i) {
                if (a.rows[i][t] == 0) continue;
                Int q = a.rows[i][t] / a.rows[t][t];
                add_row(i, t, -q);
                if (a.rows[i][t] != 0) {
                    swap_rows(t, i);  // remainder becomes the smaller pivot
                    clean = false;
                }
            }
            for (std::size_t j = t + 1; j < nc; ++j) {
                if (a.rows[t][j] == 0) continue;
                Int q = a.rows[t][j] / a.rows[t][t];
                add_col(j, t, -q);
                if (a.rows[t][j] != 0) {
                    swap_cols(t, j);
                    clean = false;
                }
            }
            if (!clean) continue;
            // Divisibility fix: the pivot must divide the whole submatrix.
            for (std::size_t i = t + 1; i < nr && clean; ++i)
                for (std::size_t j = t + 1; j < nc && clean; ++j)
                    if (a.rows[i][j] % a.rows[t][t] != 0) {
                        add_row(t, i, 1);
                        clean = false;
                    }
        }
        if (a.rows[t][t] < 0) negate_row(t);
    }
    res.rank = t;
    return res;
}

/// Determinant of a square integer matrix, exact (Bareiss fraction-free
/// elimination with 128-bit intermediates).
inline Int determinant(const IntMat& m_in) {
    detail::check_rectangular(m_in);
    const std::size_t n = m_in.row_count();
    if (n != m_in.col_count())
        throw std::invalid_argument("determinant: matrix not square");
    if (n == 0) return 1;
    std::vector<std::vector<__int128>> a(n, std::vector<__int128>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = m_in.at(i, j);
    __int128 prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t s = k + 1;
            while (s < n && a[s][k] == 0) ++s;
            if (s == n) return 0;
            std::swap(a[k], a[s]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return static_cast<Int>(sign * a[n - 1][n - 1]);
}

/// Basis of the right kernel {x in Z^c : m x = 0}, returned as rows in
/// canonical HNF. Kernels of integer matrices are saturated by construction.
inline IntMat integer_kernel(const IntMat& m) {
    SmithResult s = smith_normal_form(m);
    const std::size_t nc = m.col_count();
    IntMat ker(nc - s.rank, nc);
    for (std::size_t k = s.rank; k < nc; ++k)
        for (std::size_t i = 0; i < nc; ++i)
            ker.rows[k - s.rank][i] = s.v.at(i, k);  // column k of v
    return hermite_normal_form(ker);
}

/// Saturation of the row lattice: the largest sublattice of Z^c with the
/// same rational span. Requires the rows to be rationally independent.
/// Result is the canonical HNF basis; its elementary divisors are all 1.
inline IntMat saturate_rows(const IntMat& m) {
    const std::size_t k = m.row_count();
    SmithResult s = smith_normal_form(m);
    if (s.rank != k)
        throw std::invalid_argument("saturate_rows: rows are rationally dependent");
    IntMat sat(k, m.col_count());
    for (std::size_t i = 0; i < k; ++i) sat.rows[i] = s.vinv.rows[i];
    return hermite_normal_form(sat);
}

/// Stack the rows of b under the rows of a.
inline IntMat vstack(const IntMat& a, const IntMat& b) {
    IntMat out = a;
    out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
    return out;
}

}  // namespace torusflow
