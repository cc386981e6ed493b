// Lattice-basis reduction used to propose integer relations. Classic
// size-reduction + Lovasz exchange with floating Gram-Schmidt data; bases
// here are small (dimension <= ~20, entries <= ~1e6 after scaling), so
// int64 rows with long double orthogonalization are comfortably exact.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "torusflow/constants.hpp"
#include "torusflow/integer_matrix.hpp"
#include "torusflow/lattice.hpp"

namespace torusflow {

inline IntMat lll_reduce(IntMat basis, double delta = 0.99) {
    const std::size_t m = basis.row_count();
    if (m == 0) return basis;
    const std::size_t d = basis.col_count();
    std::vector<std::vector<long double>> mu(m, std::vector<long double>(m, 0));
    std::vector<long double> bstar_sq(m, 0);
    std::vector<std::vector<long double>> bstar(m, std::vector<long double>(d, 0));
    auto gso = [&]() {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t c = 0; c < d; ++c)
                bstar[i][c] = static_cast<long double>(basis.rows[i][c]);
            for (std::size_t j = 0; j < i; ++j) {
                long double num = 0;
                for (std::size_t c = 0; c < d; ++c)
                    num += static_cast<long double>(basis.rows[i][c]) * bstar[j][c];
                mu[i][j] = bstar_sq[j] > 0 ? num / bstar_sq[j] : 0;
                for (std::size_t c = 0; c < d; ++c) bstar[i][c] -= mu[i][j] * bstar[j][c];
            }
            long double s = 0;
            for (std::size_t c = 0; c < d; ++c) s += bstar[i][c] * bstar[i][c];
            bstar_sq[i] = s;
        }
    };
    gso();
    std::size_t k = 1;
    std::uint64_t guard = 0;
    while (k < m) {
        if (++guard > 2'000'000) throw std::runtime_error("lll_reduce: iteration guard");
        for (std::size_t j = k; j-- > 0;) {
            long double q = std::roundl(mu[k][j]);
            if (q != 0) {
                for (std::size_t c = 0; c < d; ++c) {
                    __int128 v = static_cast<__int128>(basis.rows[k][c]) -
                                 static_cast<__int128>(static_cast<Int>(q)) * basis.rows[j][c];
                    if (v > INT64_MAX || v < INT64_MIN)
                        throw std::overflow_error("lll_reduce: entry overflow");
                    basis.rows[k][c] = static_cast<Int>(v);
                }
            }
        }
        gso();
        if (bstar_sq[k] >=
            (static_cast<long double>(delta) - mu[k][k - 1] * mu[k][k - 1]) * bstar_sq[k - 1]) {
            ++k;
        } else {
            std::swap(basis.rows[k], basis.rows[k - 1]);
            gso();
            k = k > 1 ? k - 1 : 1;
        }
    }
    return basis;
}

/// Candidate relation covectors for sample differences on the torus: rows m
/// with |m|_inf <= bound such that m . diff is nearly integral for the pilot
/// differences. Each candidate still needs confirmation against the full
/// sample set. Construction: reduce the rows of
///   [ I_d | round(K d_1) ... round(K d_J) ]
///   [ 0   |      K I_J              ]
/// whose short vectors have small m and small K(m . d_j - n_j).
inline std::vector<std::vector<Int>> propose_relations(const std::vector<Vec>& diffs, int dim,
                                                       int bound) {
    std::vector<std::vector<Int>> out;
    if (diffs.empty()) return out;
    const std::size_t J = std::min<std::size_t>(diffs.size(), 8);
    const std::size_t n = dim + J;
    IntMat b(n, n);
    for (int i = 0; i < dim; ++i) {
        b.rows[i][i] = 1;
        for (std::size_t j = 0; j < J; ++j) {
            const Vec& d = diffs[j * diffs.size() / J];
            b.rows[i][dim + j] = static_cast<Int>(std::llround(kRelationScale * d[i]));
        }
    }
    for (std::size_t j = 0; j < J; ++j)
        b.rows[dim + j][dim + j] = static_cast<Int>(kRelationScale);
    IntMat red = lll_reduce(std::move(b));
    std::set<std::vector<Int>> seen;
    for (const auto& row : red.rows) {
        std::vector<Int> m(row.begin(), row.begin() + dim);
        Int g = 0, h = 0;
        int lead = 0;
        for (Int v : m) {
            Int av = v < 0 ? -v : v;
            g = std::gcd(g, av);
            h = std::max(h, av);
            if (lead == 0 && v != 0) lead = v > 0 ? 1 : -1;
        }
        if (h == 0 || h > bound) continue;
        if (lead < 0)
            for (Int& v : m) v = -v;
        seen.insert(m);
        if (g > 1) {
            std::vector<Int> prim = m;
            for (Int& v : prim) v /= g;
            seen.insert(prim);
        }
    }
    out.assign(seen.begin(), seen.end());
    return out;
}

}  // namespace torusflow
